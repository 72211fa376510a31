"""Von Neumann and Shannon entropies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotNormalized, NotPSD
from .qstate import PSD_TOL, DensityMatrix, check_hermitian_trace

LN2 = math.log(2.0)


@dataclass(frozen=True)
class EntropyValue:
    bits: float
    nats: float

    @classmethod
    def from_nats(cls, nats: float) -> "EntropyValue":
        return cls(bits=nats / LN2, nats=nats)

    def __float__(self):
        return self.bits


def _entropy_nats(p: np.ndarray) -> float:
    p = p[p > 0]
    # rounding can push a zero entropy to -1e-16
    return max(float(-np.sum(p * np.log(p))), 0.0)


def von_neumann(rho) -> EntropyValue:
    """``S = -tr(rho log rho)`` with ``0 log 0 = 0``.

    Eigenvalues in ``[-1e-10, 0)`` are rounding noise and are clamped; anything
    more negative raises :class:`NotPSD`.
    """
    if isinstance(rho, DensityMatrix):
        m = rho.elements
    else:
        m = np.asarray(rho, dtype=complex)
        check_hermitian_trace(m)
    lam = np.linalg.eigvalsh(m)
    if lam.size and lam[0] < -PSD_TOL:
        raise NotPSD(f"eigenvalue {lam[0]:.3e} below -{PSD_TOL:g}")
    return EntropyValue.from_nats(_entropy_nats(np.clip(lam, 0.0, None)))


def shannon(p) -> EntropyValue:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise NotNormalized("probabilities must be non-negative and sum to 1")
    return EntropyValue.from_nats(_entropy_nats(p))
