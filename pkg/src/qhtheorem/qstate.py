"""Sparse grand-system states (particle x spin reservoir) and their reduction.

A grand state is a map from basis labels ``(site, direction, spins)`` to
complex amplitudes. ``spins`` is an integer bitmask relative to the all-up
reservoir: bit ``j`` set means reservoir spin ``j`` is flipped. Only labels
with non-negligible amplitude are stored, so states whose path count grows
exponentially stay cheap as long as interference keeps the support small.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParameter, NotHermitian, NotPSD, TraceNotOne, ZeroNorm

PRUNE_THRESHOLD = 1e-14
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10


class Direction(enum.IntEnum):
    LEFT = -1
    RIGHT = 1

    def flipped(self) -> "Direction":
        return Direction(-self.value)

    def __repr__(self):
        return "R" if self is Direction.RIGHT else "L"


class BasisLabel(NamedTuple):
    site: int
    direction: Direction
    spins: int = 0

    @property
    def system(self) -> tuple[int, Direction]:
        return (self.site, self.direction)


@dataclass(frozen=True)
class GrandState:
    """Amplitudes of the grand system over ``BasisLabel`` keys.

    Args:
        terms: label -> amplitude.
        n_spins: number of reservoir spin sites; every ``spins`` mask must fit in it.
        clock: integer time of the state. Time reversal negates it.
        pruned: total probability dropped by amplitude pruning so far.
    """

    terms: Mapping[BasisLabel, complex]
    n_spins: int = 0
    clock: int = 0
    pruned: float = 0.0
    norm_tolerance: float = 1e-10

    def __post_init__(self):
        if self.n_spins < 0:
            raise InvalidParameter("n_spins must be non-negative")
        limit = 1 << self.n_spins
        for label in self.terms:
            if not 0 <= label.spins < limit:
                raise InvalidParameter(f"spin mask {label.spins:#x} does not fit in {self.n_spins} sites")

    @classmethod
    def single(cls, site: int = 0, direction: Direction = Direction.RIGHT, spins: int = 0, n_spins: int = 0):
        return cls({BasisLabel(site, Direction(direction), spins): 1.0 + 0j}, n_spins=n_spins)

    def __len__(self):
        return len(self.terms)

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def is_normalized(self) -> bool:
        return abs(self.norm_squared() - 1.0) <= self.norm_tolerance

    def replace(self, terms=None, **changes) -> "GrandState":
        kwargs = dict(
            terms=self.terms if terms is None else terms,
            n_spins=self.n_spins,
            clock=self.clock,
            pruned=self.pruned,
            norm_tolerance=self.norm_tolerance,
        )
        kwargs.update(changes)
        return GrandState(**kwargs)

    def system_labels(self) -> list[tuple[int, Direction]]:
        return sorted({label.system for label in self.terms})

    def marginal(self) -> dict[tuple[int, Direction], float]:
        """Probability of each system label, summed over spin configurations."""
        out: dict[tuple[int, Direction], float] = {}
        for label, amp in self.terms.items():
            out[label.system] = out.get(label.system, 0.0) + abs(amp) ** 2
        return out


def normalize(state: GrandState) -> GrandState:
    total = state.norm_squared()
    if total == 0.0:
        raise ZeroNorm("cannot normalize a state whose amplitudes all vanish")
    scale = 1.0 / np.sqrt(total)
    return state.replace({k: a * scale for k, a in state.terms.items()})


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace matrix over an ordered system basis.

    Hermiticity and trace are checked on construction. Positivity is checked
    where eigenvalues are computed anyway (entropy, channel application) or on
    demand with :meth:`check_psd`.
    """

    basis: tuple
    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.elements, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidParameter(f"density matrix must be square, got shape {m.shape}")
        if len(self.basis) != m.shape[0]:
            raise InvalidParameter("basis length does not match matrix dimension")
        check_hermitian_trace(m)
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "elements", m)

    @classmethod
    def from_matrix(cls, m) -> "DensityMatrix":
        m = np.asarray(m, dtype=complex)
        return cls(tuple(range(m.shape[0])), m)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.elements)

    def check_psd(self, tol: float = PSD_TOL) -> "DensityMatrix":
        lam = self.eigenvalues()
        if lam[0] < -tol:
            raise NotPSD(f"eigenvalue {lam[0]:.3e} below -{tol:g}")
        return self

    def is_pure(self, tol: float = 1e-10) -> bool:
        m = self.elements
        return bool(np.max(np.abs(m @ m - m)) <= tol)


def check_hermitian_trace(m: np.ndarray) -> None:
    if m.size and np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
        raise NotHermitian("matrix is not Hermitian within 1e-12")
    tr = np.trace(m)
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceNotOne(f"trace {tr.real:.12g} differs from 1")


def amplitude_matrix(state: GrandState, basis: Sequence | None = None):
    """Arrange amplitudes as a sparse (system label x spin configuration) matrix.

    Returns ``(basis, M)`` with ``rho = M @ M^H``.
    """
    labels = state.system_labels()
    if basis is None:
        basis = labels
    else:
        basis = list(basis)
        missing = set(labels) - set(basis)
        if missing:
            raise InvalidParameter(f"basis lacks labels carrying amplitude: {sorted(missing)[:5]}")
    row_of = {lab: i for i, lab in enumerate(basis)}
    col_of: dict[int, int] = {}
    rows, cols, vals = [], [], []
    for label, amp in state.terms.items():
        rows.append(row_of[label.system])
        cols.append(col_of.setdefault(label.spins, len(col_of)))
        vals.append(amp)
    m = sp.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)), shape=(len(basis), max(len(col_of), 1))
    )
    return list(basis), m


def partial_trace(state: GrandState, basis: Iterable | None = None) -> DensityMatrix:
    """Trace out the spin reservoir.

    ``rho[a, b] = sum_s psi(a, s) conj(psi(b, s))``. The basis defaults to the
    system labels present in the state; pass ``basis`` to pad or reorder it.
    """
    basis, m = amplitude_matrix(state, basis)
    rho = (m @ m.conj().T).toarray()
    # exact Hermitian symmetrisation; M M^H is Hermitian up to rounding
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(tuple(basis), rho)


def fidelity(a: GrandState, b: GrandState) -> float:
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    overlap = sum(np.conj(amp) * large.terms.get(label, 0.0) for label, amp in small.terms.items())
    return float(abs(overlap) ** 2)
