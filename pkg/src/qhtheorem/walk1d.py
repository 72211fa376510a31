"""Discrete-time walk of a particle through scatterers that carry spins.

Geometry: scatterer boundaries sit at integer positions ``k``; cell ``i`` lies
between boundaries ``i`` and ``i + 1``. At integer times the particle occupies
cell centres, scattering happens at half-integer times. A right-mover in cell
``i`` hits boundary ``i + 1``; a left-mover hits boundary ``i``.

Transmission through a boundary that carries a spin rotates that spin (a full
flip by default); reflection leaves it alone. In ``PERSISTENT`` mode the same
spins are revisited, which lets the particle disentangle and the entropy
drop. In ``FRESH`` mode every step talks to a new register of spins, the
reservoir never gets revisited, and the reduced density matrix stays diagonal.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .decoherence import reversal_beta
from .entropy import shannon, von_neumann
from .errors import InvalidParameter, NoDropFound, StateExplosion
from .qstate import (
    PRUNE_THRESHOLD,
    BasisLabel,
    DensityMatrix,
    Direction,
    GrandState,
    fidelity,
    partial_trace,
)

R, L = Direction.RIGHT, Direction.LEFT
DEFAULT_MAX_TERMS = 5_000_000
DROP_TOL = 1e-10

# t = exp(i pi/4)/sqrt(2), r = exp(-i pi/4)/sqrt(2)
INTERFERENCE_PHASES = dict(phase_ll=-3 * math.pi / 4, phase_lr=math.pi / 4)


class SpinMode(enum.Enum):
    FRESH = "fresh"
    PERSISTENT = "persistent"


@dataclass(frozen=True)
class ScattererSpec:
    position: int
    transparency: float
    phase_ll: float = 0.0
    phase_lr: float = 0.0
    has_spin: bool = True
    flip_angle: float = math.pi

    def __post_init__(self):
        if not 0.0 <= self.transparency <= 1.0:
            raise InvalidParameter(f"transparency {self.transparency} outside [0, 1]")


def build_scattering_matrix(spec: ScattererSpec) -> np.ndarray:
    """Two-port scattering matrix ``[[r_LL, t_RL], [t_LR, r_RR]]``.

    Columns are the incoming waves (from the left, from the right), rows the
    outgoing ones (to the left, to the right). ``t_RL = t_LR`` and ``r_RR`` is
    fixed by unitarity.
    """
    T = spec.transparency
    rho = math.sqrt(1.0 - T)
    r_ll = 1j * rho * np.exp(1j * spec.phase_ll)
    t = math.sqrt(T) * np.exp(1j * spec.phase_lr)
    r_rr = 1j * rho * np.exp(1j * (2 * spec.phase_lr - spec.phase_ll))
    return np.array([[r_ll, t], [t, r_rr]], dtype=complex)


def flip_operator(angle: float) -> np.ndarray:
    """Spin rotation applied on transmission, ``V[bit_out, bit_in]``.

    ``V = |+><+| + exp(i angle) |-><-|``; ``angle = pi`` is an exact bit flip.
    Left-movers get the adjoint, which keeps the combined step unitary.
    """
    e = np.exp(1j * angle)
    v = np.array([[(1 + e) / 2, (1 - e) / 2], [(1 - e) / 2, (1 + e) / 2]])
    v[np.abs(v) < 1e-15] = 0.0
    v[np.abs(v - 1.0) < 1e-15] = 1.0
    return v


class _Boundary(NamedTuple):
    r_ll: complex
    t: complex
    r_rr: complex
    spin_index: int | None
    v: np.ndarray
    v_dag: np.ndarray


@dataclass(frozen=True)
class WalkScenario:
    scatterers: tuple
    spin_mode: SpinMode = SpinMode.PERSISTENT
    horizon: int = 8
    initial: GrandState | None = None
    max_terms: int = DEFAULT_MAX_TERMS

    def __post_init__(self):
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        object.__setattr__(self, "spin_mode", SpinMode(self.spin_mode))
        positions = [s.position for s in self.scatterers]
        if len(set(positions)) != len(positions):
            raise InvalidParameter("scatterer positions must be unique")
        if self.horizon < 0:
            raise InvalidParameter("horizon must be non-negative")
        if self.spin_mode is SpinMode.FRESH:
            sites = [lab.site for lab in self.initial_state().terms]
            lo, hi = min(sites) - self.horizon + 1, max(sites) + self.horizon
            for s in self.scatterers:
                if lo <= s.position <= hi and not s.has_spin:
                    raise InvalidParameter(f"fresh-spin mode needs a spin at boundary {s.position}")

    @cached_property
    def spin_sites(self) -> tuple[int, ...]:
        return tuple(sorted(s.position for s in self.scatterers if s.has_spin))

    @property
    def n_spins(self) -> int:
        n = len(self.spin_sites)
        return n * max(self.horizon, 1) if self.spin_mode is SpinMode.FRESH else n

    @cached_property
    def table(self) -> dict[int, _Boundary]:
        index = {k: i for i, k in enumerate(self.spin_sites)}
        out = {}
        for s in self.scatterers:
            m = build_scattering_matrix(s)
            v = flip_operator(s.flip_angle)
            out[s.position] = _Boundary(m[0, 0], m[1, 0], m[1, 1], index.get(s.position), v, v.conj().T)
        return out

    def initial_state(self) -> GrandState:
        if self.initial is None:
            return GrandState.single(0, R, 0, n_spins=self.n_spins)
        if self.initial.n_spins != self.n_spins:
            return self.initial.replace(n_spins=self.n_spins)
        return self.initial

    def spin_bit(self, spin_index: int, clock: int) -> int:
        """Bit position of a boundary spin for the step leaving ``clock``."""
        if self.spin_mode is SpinMode.PERSISTENT:
            return spin_index
        register = clock if clock >= 0 else -clock - 1
        if register >= max(self.horizon, 1):
            raise InvalidParameter(f"fresh spin registers exhausted at clock {clock}")
        return register * len(self.spin_sites) + spin_index


def regular_scenario(
    transparency: float = 0.5,
    horizon: int = 8,
    phase_ll: float = 0.0,
    phase_lr: float = 0.0,
    spin_mode: SpinMode = SpinMode.PERSISTENT,
    has_spin: bool = True,
    extent: int | None = None,
    **kwargs,
) -> WalkScenario:
    """Identical scatterers at boundaries ``-extent + 1 .. extent``.

    The default extent covers everything the particle can reach from cell 0
    within ``horizon`` steps in either time direction.
    """
    extent = horizon + 1 if extent is None else extent
    scatterers = tuple(
        ScattererSpec(k, transparency, phase_ll, phase_lr, has_spin) for k in range(-extent + 1, extent + 1)
    )
    return WalkScenario(scatterers, spin_mode, horizon, **kwargs)


def _set_bit(spins: int, bit: int, value: int) -> int:
    return spins | (1 << bit) if value else spins & ~(1 << bit)


def _prune(out: dict, state: GrandState, clock: int) -> GrandState:
    dropped = 0.0
    terms = {}
    for label, amp in out.items():
        if abs(amp) < PRUNE_THRESHOLD:
            dropped += abs(amp) ** 2
        else:
            terms[label] = amp
    return state.replace(terms, clock=clock, pruned=state.pruned + dropped)


def step(state: GrandState, scenario: WalkScenario) -> GrandState:
    """Advance one unit of time: every component scatters once."""
    table = scenario.table
    clock = state.clock
    out: dict[BasisLabel, complex] = {}
    get = out.get
    for (site, d, spins), amp in state.terms.items():
        k = site + 1 if d == R else site
        b = table.get(k)
        if b is None:
            lab = BasisLabel(site + d, d, spins)
            out[lab] = get(lab, 0) + amp
            continue
        if d == R:
            refl, r, t, v, t_site = BasisLabel(site, L, spins), b.r_ll, b.t, b.v, site + 1
        else:
            refl, r, t, v, t_site = BasisLabel(site, R, spins), b.r_rr, b.t, b.v_dag, site - 1
        if r != 0:
            out[refl] = get(refl, 0) + amp * r
        if t == 0:
            continue
        if b.spin_index is None:
            lab = BasisLabel(t_site, d, spins)
            out[lab] = get(lab, 0) + amp * t
            continue
        bit = scenario.spin_bit(b.spin_index, clock)
        b_in = (spins >> bit) & 1
        for b_out in (0, 1):
            c = v[b_out, b_in]
            if c != 0:
                lab = BasisLabel(t_site, d, _set_bit(spins, bit, b_out))
                out[lab] = get(lab, 0) + amp * t * c
    return _prune(out, state, clock + 1)


def step_inverse(state: GrandState, scenario: WalkScenario) -> GrandState:
    """Exact inverse of :func:`step` (adjoint of the scattering unitary)."""
    table = scenario.table
    clock = state.clock - 1
    out: dict[BasisLabel, complex] = {}
    get = out.get
    for (site, d, spins), amp in state.terms.items():
        # a right-mover in cell i left boundary i; a left-mover left boundary i + 1
        k = site if d == R else site + 1
        b = table.get(k)
        if b is None:
            lab = BasisLabel(site - d, d, spins)
            out[lab] = get(lab, 0) + amp
            continue
        if d == R:
            refl, r, v, t_site = BasisLabel(k, L, spins), b.r_rr, b.v, k - 1
        else:
            refl, r, v, t_site = BasisLabel(k - 1, R, spins), b.r_ll, b.v_dag, k
        if r != 0:
            out[refl] = get(refl, 0) + amp * np.conj(r)
        if b.t == 0:
            continue
        tc = np.conj(b.t)
        if b.spin_index is None:
            lab = BasisLabel(t_site, d, spins)
            out[lab] = get(lab, 0) + amp * tc
            continue
        bit = scenario.spin_bit(b.spin_index, clock)
        b_out = (spins >> bit) & 1
        for b_in in (0, 1):
            c = v[b_out, b_in]
            if c != 0:
                lab = BasisLabel(t_site, d, _set_bit(spins, bit, b_in))
                out[lab] = get(lab, 0) + amp * tc * np.conj(c)
    return _prune(out, state, clock)


def evolve(state: GrandState, scenario: WalkScenario, steps: int) -> GrandState:
    for _ in range(steps):
        state = step(state, scenario)
        _check_size(state, scenario)
    return state


def evolve_backward(state: GrandState, scenario: WalkScenario, steps: int) -> GrandState:
    for _ in range(steps):
        state = step_inverse(state, scenario)
        _check_size(state, scenario)
    return state


def _check_size(state: GrandState, scenario: WalkScenario, partial=None) -> None:
    if len(state) > scenario.max_terms:
        raise StateExplosion(state.clock, len(state), scenario.max_terms, partial)


def _reverse(state: GrandState, conjugate: bool) -> GrandState:
    mask = (1 << state.n_spins) - 1
    terms = {
        BasisLabel(site, d.flipped(), spins ^ mask): (np.conj(a) if conjugate else a)
        for (site, d, spins), a in state.terms.items()
    }
    return state.replace(terms, clock=-state.clock)


def reverse_incomplete(state: GrandState) -> GrandState:
    """Reverse every basis vector (direction and all spins); keep amplitudes."""
    return _reverse(state, conjugate=False)


def reverse_complete(state: GrandState) -> GrandState:
    """Basis reversal plus complex conjugation of every amplitude."""
    return _reverse(state, conjugate=True)


@dataclass(frozen=True)
class EntropySeries:
    times: list
    entropy_bits: list
    drop_steps: list = field(default_factory=list)

    @classmethod
    def from_values(cls, times, entropy_bits, tol: float = DROP_TOL) -> "EntropySeries":
        times, s = list(times), [float(x) for x in entropy_bits]
        drops = [times[i] for i in range(1, len(s)) if s[i] < s[i - 1] - tol]
        return cls(times, s, drops)

    def rows(self):
        drops = set(self.drop_steps)
        return [(t, s, t in drops) for t, s in zip(self.times, self.entropy_bits)]


def state_entropy(state: GrandState) -> float:
    return von_neumann(partial_trace(state)).bits


def iter_states(scenario: WalkScenario, steps: int | None = None) -> Iterator[GrandState]:
    state = scenario.initial_state()
    yield state
    for _ in range(scenario.horizon if steps is None else steps):
        state = step(state, scenario)
        yield state


def fresh_probabilities(scenario: WalkScenario, steps: int | None = None) -> Iterator[np.ndarray]:
    """Classical populations of a fresh-spin walk from a single-term start.

    Every path leaves a distinct record in the fresh registers, so the reduced
    state is diagonal and its populations follow a persistent random walk.
    Yields the concatenated (right-mover, left-mover) population vector.
    """
    (start,) = scenario.initial_state().terms
    steps = scenario.horizon if steps is None else steps
    lo = start.site - steps - 1
    n = 2 * steps + 3
    # transparency of boundary lo + j, boundaries without scatterers are transparent
    trans = np.ones(n + 1)
    for s in scenario.scatterers:
        j = s.position - lo
        if 0 <= j <= n:
            trans[j] = s.transparency
    t_right = trans[1 : n + 1]  # boundary hit by a right-mover in each cell
    t_left = trans[:n]
    pr, pl = np.zeros(n), np.zeros(n)
    (pr if start.direction == R else pl)[start.site - lo] = 1.0
    yield np.concatenate([pr, pl])
    for _ in range(steps):
        nr, nl = np.zeros(n), np.zeros(n)
        nr[1:] += (t_right * pr)[:-1]
        nl += (1 - t_right) * pr
        nl[:-1] += (t_left * pl)[1:]
        nr += (1 - t_left) * pl
        pr, pl = nr, nl
        yield np.concatenate([pr, pl])


def evolve_entropy(scenario: WalkScenario) -> EntropySeries:
    """Entropy ``S(tau)`` in bits at ``tau = 0 .. horizon``.

    Fresh mode from a single-term start uses the classical populations
    (the reduced state is diagonal), which reaches thousands of steps cheaply.
    Everything else reduces the grand state explicitly.
    """
    times, values = [], []
    if scenario.spin_mode is SpinMode.FRESH and len(scenario.initial_state()) == 1:
        for tau, p in enumerate(fresh_probabilities(scenario)):
            times.append(tau)
            values.append(shannon(p[p > 0] / p.sum()).bits)
        return EntropySeries.from_values(times, values)
    state = scenario.initial_state()
    for tau in range(scenario.horizon + 1):
        if tau:
            state = step(state, scenario)
            if len(state) > scenario.max_terms:
                partial = EntropySeries.from_values(times, values)
                raise StateExplosion(tau - 1, len(state), scenario.max_terms, partial)
        times.append(tau)
        values.append(state_entropy(state))
    return EntropySeries.from_values(times, values)


def backward_entropy(scenario: WalkScenario) -> EntropySeries:
    """``S(-tau)`` for ``tau = 0 .. horizon`` (times reported as ``-tau``)."""
    state = scenario.initial_state()
    times, values = [0], [state_entropy(state)]
    for tau in range(1, scenario.horizon + 1):
        state = step_inverse(state, scenario)
        _check_size(state, scenario)
        times.append(-tau)
        values.append(state_entropy(state))
    return EntropySeries.from_values(times, values)


def first_drop(series: EntropySeries) -> int:
    """Earliest ``tau`` with ``S(tau + 1) < S(tau)``."""
    if not series.drop_steps:
        raise NoDropFound("entropy never decreased within the horizon")
    return series.drop_steps[0] - 1


class DropResult(NamedTuple):
    transparency: float
    first_drop_step: int | None


def drop_for_transparency(transparency: float, horizon: int = 8, phase_ll: float = 0.0, phase_lr: float = 0.0):
    scenario = regular_scenario(transparency, horizon, phase_ll, phase_lr)
    try:
        return DropResult(transparency, first_drop(evolve_entropy(scenario)))
    except NoDropFound:
        return DropResult(transparency, None)


def sweep_transparency(T_values: Sequence[float], horizon: int = 8, phase_ll: float = 0.0, phase_lr: float = 0.0):
    """First entropy drop per transparency, persistent spins, regular array.

    ``first_drop_step`` is ``tau`` for a drop between steps ``tau`` and
    ``tau + 1``; ``None`` when no drop occurs within the horizon.
    """
    for T in T_values:
        if not 0.0 < T < 1.0:
            raise InvalidParameter(f"transparency {T} outside (0, 1)")
    return [drop_for_transparency(T, horizon, phase_ll, phase_lr) for T in T_values]


class RoundTrip(NamedTuple):
    final: GrandState
    target: GrandState
    fidelity: float


def reversal_round_trip(scenario: WalkScenario, steps: int, complete: bool = True) -> RoundTrip:
    """Evolve ``steps``, reverse, evolve ``steps`` again; compare to the reversed start."""
    reverse = reverse_complete if complete else reverse_incomplete
    psi0 = scenario.initial_state()
    final = evolve(reverse(evolve(psi0, scenario, steps)), scenario, steps)
    target = reverse(psi0)
    return RoundTrip(final, target, fidelity(final, target))


@dataclass(frozen=True)
class HalfSpaceRun:
    series: EntropySeries
    phases: list
    reversal_step: int
    exit_step: int | None


def half_space_scenario(
    depth: int, horizon: int, transparency: float = 0.5, phase_ll: float = 0.0, phase_lr: float = 0.0
) -> HalfSpaceRun:
    """Scatterers on boundaries ``0 .. depth - 1``; the particle comes from cell -1.

    Each scattering emits into a fresh spin register (the reservoir carries the
    record away). After ``horizon`` steps the grand state is completely
    reversed and evolved for ``2 * horizon`` more steps. ``exit_step`` is the
    first step of the reversed phase at which the whole particle sits in the
    empty half moving away from the scatterers.
    """
    scatterers = [ScattererSpec(k, transparency, phase_ll, phase_lr) for k in range(depth)]
    scenario = WalkScenario(
        scatterers, SpinMode.FRESH, horizon, initial=GrandState.single(-1, R)
    )
    state = scenario.initial_state()
    times, values, phases = [0], [state_entropy(state)], ["forward"]
    for tau in range(1, horizon + 1):
        state = step(state, scenario)
        times.append(tau)
        values.append(state_entropy(state))
        phases.append("forward")
    state = reverse_complete(state)
    exit_step = None
    for tau in range(horizon + 1, 3 * horizon + 1):
        state = step(state, scenario)
        times.append(tau)
        values.append(state_entropy(state))
        phases.append("reversed")
        if exit_step is None and all(lab.site < 0 and lab.direction == L for lab in state.terms):
            exit_step = tau
    return HalfSpaceRun(EntropySeries.from_values(times, values), phases, horizon, exit_step)


@dataclass(frozen=True)
class SingleScattering:
    rho_coherent: DensityMatrix
    rho_entangled: DensityMatrix
    S_coherent: float
    S_entangled: float

    def forward_beta(self):
        return reversal_beta(self.rho_coherent, self.rho_entangled)

    def backward_beta(self):
        """Raises :class:`DivergentElement`: no finite beta undoes dephasing."""
        return reversal_beta(self.rho_entangled, self.rho_coherent)


def single_scattering(transparency: float = 0.5, phase_ll: float = 0.0, phase_lr: float = 0.0) -> SingleScattering:
    """One scattering event with and without a spin on the scatterer.

    The basis is (transmitted, reflected). Without the spin the particle stays
    coherent; with it the two outgoing parts carry orthogonal spin states.
    """
    basis = [(1, R), (0, L)]
    rhos = []
    for has_spin in (False, True):
        sc = WalkScenario([ScattererSpec(1, transparency, phase_ll, phase_lr, has_spin)], horizon=1)
        rhos.append(partial_trace(step(sc.initial_state(), sc), basis))
    coherent, entangled = rhos
    return SingleScattering(coherent, entangled, von_neumann(coherent).bits, von_neumann(entangled).bits)
