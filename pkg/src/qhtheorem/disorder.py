"""Disordered walks: random scattering amplitudes and random scatterer positions.

Random amplitudes reuse the discrete engine of :mod:`walk1d`. Random
positions break the common clock, so that case runs an event-driven
simulation in continuous time: point-like components move at unit speed,
split at every scatterer they reach, and merge only when two of them leave
the same scatterer in the same direction at the same instant (within
``MERGE_TOL``). Alongside the entropy we count Feynman trajectories ``N_t``,
stored components ``N_wf`` and the components carrying 99 % of the
probability ``N_swf``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from ._rng import task_rng
from .entropy import von_neumann
from .errors import InsufficientData, InvalidParameter, StateExplosion
from .walk1d import EntropySeries, ScattererSpec, SpinMode, WalkScenario, evolve_entropy

MERGE_TOL = 1e-9
DEFAULT_MAX_COMPONENTS = 5_000_000
START_POSITION = 0.5


@dataclass(frozen=True)
class DisorderSpec:
    """Disorder parameters.

    Per boundary ``k`` a uniform ``g_k`` in ``[-0.5, 0.5]`` shifts the
    transparency and both phases (``T_k = base_T + g_k delta_T`` and so on)
    and an independent uniform ``h_k`` shifts the position,
    ``x_k = k + eta h_k``.
    """

    base_T: float = 0.5
    delta_T: float = 0.0
    chi_ll: float = 0.0
    chi_lr: float = 0.0
    delta_chi_ll: float = 0.0
    delta_chi_lr: float = 0.0
    eta: float = 0.0
    seed: int = 0
    n_scatterers_window: int = 64

    def __post_init__(self):
        lo, hi = self.base_T - 0.5 * abs(self.delta_T), self.base_T + 0.5 * abs(self.delta_T)
        if not (0.0 < lo and hi < 1.0):
            raise InvalidParameter(f"transparency range [{lo:g}, {hi:g}] leaves (0, 1)")
        if not 0.0 <= self.eta < 1.0:
            raise InvalidParameter("eta must lie in [0, 1) to keep scatterers ordered")
        if self.n_scatterers_window < 2:
            raise InvalidParameter("n_scatterers_window must be at least 2")


@dataclass(frozen=True)
class Realization:
    """One draw of the disorder on boundaries ``-W + 1 .. W``."""

    boundaries: np.ndarray
    positions: np.ndarray
    transparency: np.ndarray
    chi_ll: np.ndarray
    chi_lr: np.ndarray

    def scatterer_specs(self, has_spin: bool = True) -> list[ScattererSpec]:
        return [
            ScattererSpec(int(k), float(T), float(a), float(b), has_spin)
            for k, T, a, b in zip(self.boundaries, self.transparency, self.chi_ll, self.chi_lr)
        ]


def realize(spec: DisorderSpec, realization: int = 0) -> Realization:
    rng = task_rng(spec.seed, realization)
    w = spec.n_scatterers_window
    k = np.arange(-w + 1, w + 1)
    g = rng.uniform(-0.5, 0.5, k.size)
    h = rng.uniform(-0.5, 0.5, k.size)
    return Realization(
        boundaries=k,
        positions=k + spec.eta * h,
        transparency=spec.base_T + g * spec.delta_T,
        chi_ll=spec.chi_ll + g * spec.delta_chi_ll,
        chi_lr=spec.chi_lr + g * spec.delta_chi_lr,
    )


def run_random_amplitudes(spec: DisorderSpec, horizon: int, realization: int = 0) -> EntropySeries:
    """Persistent-spin walk on the regular lattice with per-site random amplitudes."""
    if spec.eta != 0.0:
        raise InvalidParameter("random-amplitude runs use regular positions (eta = 0)")
    if spec.n_scatterers_window < horizon + 1:
        raise InvalidParameter("n_scatterers_window must exceed the horizon")
    real = realize(spec, realization)
    scenario = WalkScenario(real.scatterer_specs(), SpinMode.PERSISTENT, horizon)
    return evolve_entropy(scenario)


@dataclass
class ComponentCensus:
    times: list = field(default_factory=list)
    n_trajectories: list = field(default_factory=list)
    n_components: list = field(default_factory=list)
    n_significant: list = field(default_factory=list)
    spread: list = field(default_factory=list)

    def rows(self):
        return list(zip(self.times, self.n_trajectories, self.n_components, self.n_significant))


def census_significant(probabilities, coverage: float = 0.99) -> int:
    """Smallest number of components whose largest weights reach ``coverage``."""
    if not 0.0 < coverage <= 1.0:
        raise InvalidParameter("coverage must lie in (0, 1]")
    p = np.sort(np.asarray(probabilities, dtype=float))[::-1]
    if p.size == 0:
        return 0
    cum = np.cumsum(p)
    target = coverage * cum[-1] * (1.0 - 1e-12)
    return int(min(np.searchsorted(cum, target) + 1, p.size))


def effective_component_count(n_components: float, spread: float, k_max: float) -> float:
    """Component count once finite packets of size ``1 / k_max`` overlap."""
    return min(float(n_components), spread * k_max)


class _Component:
    __slots__ = ("amp", "mult", "direction", "spins", "x0", "t0", "label")

    def __init__(self, amp, mult, direction, spins, x0, t0, label):
        self.amp = amp
        self.mult = mult
        self.direction = direction
        self.spins = spins
        self.x0 = x0
        self.t0 = t0
        self.label = label


def run_random_positions(
    spec: DisorderSpec,
    horizon: float,
    sample_times: Sequence[float] | None = None,
    with_spins: bool = False,
    realization: int = 0,
    coverage: float = 0.99,
    max_components: int = DEFAULT_MAX_COMPONENTS,
) -> tuple[EntropySeries, ComponentCensus]:
    """Continuous-time evolution with scatterers at ``x_k = k + eta h_k``.

    The particle starts at ``x = 0.5`` moving right. Without spins the state
    stays pure and the entropy is identically zero; with spins every
    transmission flips the spin of the crossed scatterer (persistent). Sample
    times default to ``1, 2, ..., floor(horizon)``.
    """
    if sample_times is None:
        sample_times = list(range(1, int(math.floor(horizon)) + 1))
    samples = sorted(float(t) for t in sample_times)
    real = realize(spec, realization)
    x = real.positions
    n_b = x.size
    if x[0] > START_POSITION - horizon or x[-1] < START_POSITION + horizon:
        raise InvalidParameter("scatterer window too small for the horizon; raise n_scatterers_window")
    rho = np.sqrt(1.0 - real.transparency)
    r_ll = 1j * rho * np.exp(1j * real.chi_ll)
    t_tr = np.sqrt(real.transparency) * np.exp(1j * real.chi_lr)
    r_rr = 1j * rho * np.exp(1j * (2 * real.chi_lr - real.chi_ll))

    comps: dict[int, _Component] = {}
    heap: list = []
    next_id = 0

    def launch(amp, mult, direction, spins, b_index, x0, t0, label):
        nonlocal next_id
        cid = next_id
        next_id += 1
        comps[cid] = _Component(amp, mult, direction, spins, x0, t0, label)
        target = b_index + 1 if direction > 0 else b_index - 1
        if 0 <= target < n_b:
            heapq.heappush(heap, (t0 + abs(x[target] - x0), target, cid))

    first = int(np.searchsorted(x, START_POSITION))
    launch(1.0 + 0j, 1, 1, 0, first - 1, START_POSITION, 0.0, (-1, 1))

    census = ComponentCensus()
    entropies = []

    def record(t):
        census.times.append(t)
        census.n_trajectories.append(sum(c.mult for c in comps.values()))
        census.n_components.append(len(comps))
        probs = [abs(c.amp) ** 2 for c in comps.values()]
        census.n_significant.append(census_significant(probs, coverage))
        pos = [c.x0 + c.direction * (t - c.t0) for c in comps.values()]
        census.spread.append(max(pos) - min(pos))
        entropies.append(_entropy(comps) if with_spins else 0.0)

    event = 0
    while samples:
        if not heap or heap[0][0] > samples[0]:
            record(samples.pop(0))
            continue
        t0, b, cid = heapq.heappop(heap)
        batch, deferred = [cid], []
        while heap and heap[0][0] <= t0 + MERGE_TOL:
            item = heapq.heappop(heap)
            if item[1] == b:
                batch.append(item[2])
            else:
                deferred.append(item)
        for item in deferred:
            heapq.heappush(heap, item)
        out: dict[tuple[int, int], list] = {}
        bit = 1 << b if with_spins else 0
        for c in (comps.pop(i) for i in batch):
            if c.direction > 0:
                moves = ((1, c.spins ^ bit, t_tr[b]), (-1, c.spins, r_ll[b]))
            else:
                moves = ((-1, c.spins ^ bit, t_tr[b]), (1, c.spins, r_rr[b]))
            for direction, spins, coeff in moves:
                acc = out.setdefault((direction, spins), [0j, 0])
                acc[0] += c.amp * coeff
                acc[1] += c.mult
        for (direction, spins), (amp, mult) in out.items():
            launch(amp, mult, direction, spins, b, x[b], t0, (event, direction))
        event += 1
        if len(comps) > max_components:
            partial = (EntropySeries.from_values(census.times, entropies), census)
            raise StateExplosion(t0, len(comps), max_components, partial)
    return EntropySeries.from_values(census.times, entropies), census


def _entropy(comps: dict) -> float:
    rows: dict = {}
    cols: dict = {}
    r, c, v = [], [], []
    for comp in comps.values():
        r.append(rows.setdefault(comp.label, len(rows)))
        c.append(cols.setdefault(comp.spins, len(cols)))
        v.append(comp.amp)
    m = sp.csr_matrix((np.asarray(v, dtype=complex), (r, c)), shape=(len(rows), len(cols)))
    rho = (m @ m.conj().T).toarray()
    rho = 0.5 * (rho + rho.conj().T)
    return von_neumann(rho / np.trace(rho).real).bits


def ensemble_census(spec: DisorderSpec, horizon: float, realizations: int, **kwargs) -> list[ComponentCensus]:
    """Independent realizations ``0 .. realizations - 1`` of the same spec."""
    return [run_random_positions(spec, horizon, realization=k, **kwargs)[1] for k in range(realizations)]


def ensemble_mean(censuses: Sequence[ComponentCensus]) -> ComponentCensus:
    def mean(attr):
        return list(np.mean([getattr(c, attr) for c in censuses], axis=0))

    return ComponentCensus(
        list(censuses[0].times),
        mean("n_trajectories"),
        mean("n_components"),
        mean("n_significant"),
        mean("spread"),
    )


class GrowthFit(NamedTuple):
    a: float
    b: float
    residual: float
    n_points: int


def fit_growth_values(times, counts, t_min: float = 0.0) -> GrowthFit:
    """Fit ``N = 2**(a * tau**b)`` by least squares on ``log2 log2 N`` vs ``log2 tau``.

    ``residual`` is the root-mean-square deviation in the linearized variables.
    """
    t = np.asarray(times, dtype=float)
    n = np.asarray(counts, dtype=float)
    keep = (t >= t_min) & (t > 0) & (n > 1)
    if keep.sum() < 6:
        raise InsufficientData(f"need at least 6 usable samples, got {int(keep.sum())}")
    X = np.log2(t[keep])
    Y = np.log2(np.log2(n[keep]))
    A = np.vstack([X, np.ones_like(X)]).T
    (b, log_a), *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([b, log_a]) - Y) ** 2)))
    return GrowthFit(float(2.0**log_a), float(b), resid, int(keep.sum()))


def fit_growth(census: ComponentCensus, t_min: float = 3.0) -> dict[str, GrowthFit]:
    """Growth-law fits for ``N_t``, ``N_wf`` and ``N_swf`` past ``t_min``."""
    return {
        name: fit_growth_values(census.times, getattr(census, attr), t_min)
        for name, attr in (("N_t", "n_trajectories"), ("N_wf", "n_components"), ("N_swf", "n_significant"))
    }
