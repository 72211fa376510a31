"""Decoherence-matrix channels.

A reservoir interaction that leaves the classical populations ``rho_ii`` alone
acts on the system density matrix as an element-wise (Schur) product with a
unit-diagonal matrix ``beta``. When ``beta`` is the Gram matrix of the
reservoir states it is positive semidefinite and the channel can only raise
the von Neumann entropy. This module builds such matrices, applies them, and
provides a randomized harness that checks the entropy inequality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._rng import task_rng
from .entropy import von_neumann
from .errors import (
    DimensionMismatch,
    DivergentElement,
    InvalidParameter,
    NotHermitian,
    NotPSDResult,
    NotUnitNorm,
)
from .qstate import HERMITIAN_TOL, PSD_TOL, DensityMatrix

GRAMIAN_TOL = 1e-10
ZERO_RATIO_TOL = 1e-13


@dataclass(frozen=True)
class DecoherenceMatrix:
    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.elements, dtype=complex)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise InvalidParameter(f"decoherence matrix must be square, got {b.shape}")
        if b.size and np.max(np.abs(b - b.conj().T)) > HERMITIAN_TOL:
            raise NotHermitian("decoherence matrix is not Hermitian")
        if b.size and np.max(np.abs(np.diag(b) - 1.0)) > HERMITIAN_TOL:
            raise InvalidParameter("decoherence matrix must have unit diagonal")
        object.__setattr__(self, "elements", b)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @classmethod
    def ones(cls, dim: int) -> "DecoherenceMatrix":
        return cls(np.ones((dim, dim), dtype=complex))

    @classmethod
    def identity(cls, dim: int) -> "DecoherenceMatrix":
        return cls(np.eye(dim, dtype=complex))


class GramianCheck(NamedTuple):
    is_gramian: bool
    min_eigenvalue: float


@dataclass(frozen=True)
class PhaseKickSpec:
    """Reservoir weights ``|f(q_n)|^2`` and phases ``phi(q_n, s)``.

    ``phases`` has shape ``(n_reservoir, n_system)``.
    """

    weights: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        ph = np.asarray(self.phases, dtype=float)
        if w.ndim != 1 or ph.ndim != 2 or ph.shape[0] != w.size:
            raise InvalidParameter("phases must have shape (len(weights), n_system)")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise InvalidParameter("weights must be non-negative and sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "phases", ph)

    @classmethod
    def random(cls, rng: np.random.Generator, n_reservoir: int, n_system: int) -> "PhaseKickSpec":
        w = rng.random(n_reservoir)
        return cls(w / w.sum(), rng.uniform(-np.pi, np.pi, size=(n_reservoir, n_system)))


def _matrix(rho) -> tuple[tuple, np.ndarray]:
    if isinstance(rho, DensityMatrix):
        return rho.basis, rho.elements
    m = np.asarray(rho, dtype=complex)
    return tuple(range(m.shape[0])), m


def schur_apply(beta: DecoherenceMatrix, rho, check: bool = True) -> DensityMatrix:
    """Return ``beta o rho`` (element-wise product).

    The diagonal of the result is copied from ``rho`` so populations are
    preserved bit-for-bit. With ``check`` the result is tested for positivity;
    a failure means ``beta`` was not a Gram matrix.
    """
    basis, m = _matrix(rho)
    if beta.elements.shape != m.shape:
        raise DimensionMismatch(f"beta {beta.elements.shape} vs rho {m.shape}")
    out = beta.elements * m
    np.fill_diagonal(out, np.diag(m))
    if check and out.size:
        lam_min = float(np.linalg.eigvalsh(out)[0])
        if lam_min < -PSD_TOL:
            raise NotPSDResult(lam_min)
    return DensityMatrix(basis, out)


def is_gramian(beta: DecoherenceMatrix, tol: float = GRAMIAN_TOL) -> GramianCheck:
    """PSD test with tolerance relative to the largest eigenvalue magnitude."""
    lam = np.linalg.eigvalsh(beta.elements)
    scale = max(float(np.max(np.abs(lam))), 1.0) if lam.size else 1.0
    return GramianCheck(bool(lam[0] >= -tol * scale), float(lam[0]))


def gramian_from_vectors(vectors) -> DecoherenceMatrix:
    """``beta_ij = <v_i|v_j>`` for unit vectors given as rows."""
    v = np.atleast_2d(np.asarray(vectors, dtype=complex))
    norms = np.linalg.norm(v, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise NotUnitNorm("all vectors must have unit norm")
    b = v.conj() @ v.T
    b = 0.5 * (b + b.conj().T)
    np.fill_diagonal(b, 1.0)
    return DecoherenceMatrix(b)


def phase_kick_beta(spec: PhaseKickSpec) -> DecoherenceMatrix:
    """``beta(s, s') = sum_n w_n exp(i (phi(n, s) - phi(n, s')))``."""
    u = np.exp(1j * spec.phases)
    b = (u.T * spec.weights) @ u.conj()
    b = 0.5 * (b + b.conj().T)
    np.fill_diagonal(b, 1.0)
    return DecoherenceMatrix(b)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Normalized ``A A^H`` with complex standard-normal ``A`` of shape (dim, rank)."""
    rank = dim if rank is None else rank
    a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = a @ a.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix.from_matrix(m / np.trace(m).real)


def random_unit_vectors(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_gramian(dim: int, rng: np.random.Generator, vector_dim: int | None = None) -> DecoherenceMatrix:
    vector_dim = dim if vector_dim is None else vector_dim
    return gramian_from_vectors(random_unit_vectors(dim, vector_dim, rng))


class LemmaTrial(NamedTuple):
    S_before: float
    S_after: float

    @property
    def holds(self) -> bool:
        return self.S_after >= self.S_before - 1e-9


def lemma_check(beta: DecoherenceMatrix, rho) -> LemmaTrial:
    before = von_neumann(rho).bits
    after = von_neumann(schur_apply(beta, rho)).bits
    return LemmaTrial(before, after)


def lemma_trial(dim: int, seed: int, task: int = 0) -> LemmaTrial:
    """One random (Gram matrix, density matrix) pair.

    The reservoir vectors live in a space of random dimension ``1..dim`` so the
    sample covers everything from unitary phase kicks (rank 1) to full
    dephasing-like channels.
    """
    if dim < 2:
        raise InvalidParameter("dim must be at least 2")
    rng = task_rng(seed, task)
    rho = random_density_matrix(dim, rng)
    beta = random_gramian(dim, rng, vector_dim=int(rng.integers(1, dim + 1)))
    return lemma_check(beta, rho)


def lemma_batch(dim: int, trials: int, seed: int) -> list[LemmaTrial]:
    return [lemma_trial(dim, seed, k) for k in range(trials)]


def reversal_beta(rho_before, rho_after, zero_tol: float = ZERO_RATIO_TOL) -> DecoherenceMatrix:
    """Infer ``beta`` from ``rho_after = beta o rho_before``.

    Entries where both matrices vanish are undetermined; they are set to 1 on
    the diagonal and 0 off it. A vanishing ``rho_before`` entry paired with a
    nonzero ``rho_after`` entry means no finite ``beta`` exists, and
    :class:`DivergentElement` lists every such index pair.
    """
    _, b = _matrix(rho_before)
    _, a = _matrix(rho_after)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{b.shape} vs {a.shape}")
    zero_b = np.abs(b) < zero_tol
    zero_a = np.abs(a) < zero_tol
    bad = np.argwhere(zero_b & ~zero_a)
    if bad.size:
        raise DivergentElement(bad)
    out = np.zeros_like(b)
    np.divide(a, b, out=out, where=~zero_b)
    undetermined = zero_b & zero_a
    out[undetermined] = 0.0
    np.fill_diagonal(out, np.where(np.diag(undetermined), 1.0, np.diag(out)))
    return DecoherenceMatrix(out)
