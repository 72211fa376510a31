"""Photon-emission dephasing of an electron wave packet in coordinate space.

After a scattering event the electron density matrix picks up the factor
``exp(-Phi(x - x'))`` with

    Phi(x) = pref * int_0^Omega dw (1 - exp(i w x / v_F)) / w
           = pref * [Cin(u) - i sign(x) Si(u)],   u = Omega |x| / v_F,

where ``pref = (8 alpha0 / 3 pi) (v / c)^2``. The diagonal is untouched, the
off-diagonal elements shrink, and the kernel is a Gram matrix, so the
entropy can only grow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import sici

from .decoherence import DecoherenceMatrix, schur_apply
from .entropy import von_neumann
from .errors import InvalidParameter
from .qstate import check_hermitian_trace

EULER_GAMMA = 0.5772156649015329
_SERIES_LIMIT = 0.5


@dataclass(frozen=True)
class BremsParams:
    """Kernel parameters.

    ``prefactor`` overrides ``(8 alpha0 / 3 pi) (v / c)^2`` when given; the
    physical value is tiny, so tests and demos usually set it directly.
    """

    alpha0: float = 1 / 137.036
    v_over_c: float = 0.01
    omega_cutoff: float = 1.0
    v_fermi: float = 1.0
    prefactor_override: float | None = None

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise InvalidParameter("alpha0 must be positive")
        if not 0.0 <= self.v_over_c < 1.0:
            raise InvalidParameter("v_over_c must lie in [0, 1)")
        if self.omega_cutoff <= 0 or self.v_fermi <= 0:
            raise InvalidParameter("omega_cutoff and v_fermi must be positive")
        if self.prefactor_override is not None and self.prefactor_override < 0:
            raise InvalidParameter("prefactor must be non-negative")

    @property
    def prefactor(self) -> float:
        if self.prefactor_override is not None:
            return float(self.prefactor_override)
        return 8.0 * self.alpha0 / (3.0 * math.pi) * self.v_over_c**2

    @classmethod
    def dimensionless(cls, prefactor: float) -> "BremsParams":
        """Lengths measured in ``v_F / Omega``."""
        return cls(prefactor_override=prefactor)


def cin(u):
    """Entire cosine integral ``int_0^u (1 - cos t) / t dt``.

    A power series is used below ``u = 0.5`` where ``gamma + ln u - Ci(u)``
    cancels badly.
    """
    u = np.abs(np.asarray(u, dtype=float))
    out = np.empty_like(u)
    small = u < _SERIES_LIMIT
    us = u[small]
    term = us**2 / 4.0  # n = 1 term of sum (-1)^(n+1) u^(2n) / (2n (2n)!)
    acc = term.copy()
    for n in range(2, 12):
        term = -term * us**2 * (2 * n - 2) / ((2 * n) * (2 * n - 1) * (2 * n))
        acc += term
    out[small] = acc
    ub = u[~small]
    _, ci = sici(ub)
    out[~small] = EULER_GAMMA + np.log(ub) - ci
    return out


def kernel_phi(x, params: BremsParams):
    """``Phi(x)``; vectorized over ``x``. ``Phi(0) = 0`` and ``Phi(-x) = conj(Phi(x))``."""
    x = np.asarray(x, dtype=float)
    u = params.omega_cutoff * np.abs(x) / params.v_fermi
    si, _ = sici(u)
    phi = params.prefactor * (cin(u) - 1j * np.sign(x) * si)
    return phi if phi.ndim else complex(phi)


@dataclass(frozen=True)
class GridDensityMatrix:
    """``rho(x, x') dx`` on a uniform grid; Hermitian with unit trace."""

    x_grid: np.ndarray
    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        x = np.asarray(self.x_grid, dtype=float)
        m = np.asarray(self.elements, dtype=complex)
        if x.ndim != 1 or x.size < 2:
            raise InvalidParameter("x_grid must be a 1-D grid with at least two points")
        steps = np.diff(x)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * abs(steps[0]):
            raise InvalidParameter("x_grid must be uniform and increasing")
        if m.shape != (x.size, x.size):
            raise InvalidParameter(f"elements shape {m.shape} does not match grid of {x.size}")
        check_hermitian_trace(m)
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "elements", m)

    @property
    def dx(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])

    def entropy_bits(self) -> float:
        return von_neumann(self.elements).bits


def gaussian_packet(
    n_points: int = 256, width: float = 4.0, k0: float = 0.0, extent: float | None = None
) -> GridDensityMatrix:
    """Pure-state density matrix of a Gaussian ``exp(-x^2 / 4 width^2 + i k0 x)``."""
    if n_points < 2 or width <= 0:
        raise InvalidParameter("need n_points >= 2 and width > 0")
    extent = 12.0 * width if extent is None else extent
    x = np.linspace(-extent / 2, extent / 2, n_points)
    dx = x[1] - x[0]
    psi = np.exp(-(x**2) / (4 * width**2) + 1j * k0 * x)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    m = np.outer(psi, psi.conj()) * dx
    return GridDensityMatrix(x, 0.5 * (m + m.conj().T))


def kernel_matrix(x_grid, params: BremsParams) -> DecoherenceMatrix:
    """``beta[x, x'] = exp(-Phi(x - x'))`` on the grid."""
    x = np.asarray(x_grid, dtype=float)
    beta = np.exp(-kernel_phi(x[:, None] - x[None, :], params))
    beta = 0.5 * (beta + beta.conj().T)
    np.fill_diagonal(beta, 1.0)
    return DecoherenceMatrix(beta)


def apply_brems(rho: GridDensityMatrix, params: BremsParams) -> GridDensityMatrix:
    out = schur_apply(kernel_matrix(rho.x_grid, params), rho.elements)
    return GridDensityMatrix(rho.x_grid, out.elements)


def iterate_brems(rho: GridDensityMatrix, params: BremsParams, n: int) -> list[GridDensityMatrix]:
    """``[rho, K rho, K^2 rho, ..., K^n rho]`` for repeated scattering events."""
    if n < 0:
        raise InvalidParameter("n must be non-negative")
    beta = kernel_matrix(rho.x_grid, params)
    out = [rho]
    for _ in range(n):
        out.append(GridDensityMatrix(rho.x_grid, schur_apply(beta, out[-1].elements).elements))
    return out


def brems_entropy_series(rho: GridDensityMatrix, params: BremsParams, n: int) -> list[float]:
    return [r.entropy_bits() for r in iterate_brems(rho, params, n)]


def momentum_diagonal(rho: GridDensityMatrix) -> np.ndarray:
    """Momentum-space populations ``diag(F rho F^H)`` (unitary DFT), normalized."""
    n = rho.x_grid.size
    f = np.fft.fft(np.eye(n), axis=0, norm="ortho")
    p = np.real(np.einsum("ij,jk,ik->i", f, rho.elements, f.conj()))
    p = np.clip(p, 0.0, None)
    return np.fft.fftshift(p / p.sum())
