"""Reversing a freely spread wave packet with an array of switched mirrors.

A packet ``psi(x) = int dk/2pi f(k) exp(ikx)`` spreads under free evolution
and at late times looks like ``f(xm / hbar tau) exp(i m x^2 / 2 hbar tau)``.
A mirror at ``x_n`` maps ``x_n + d`` to ``x_n - d``, which conjugates the
constant and linear parts of the phase around ``x_n`` but leaves the
quadratic part ``q d^2`` with ``q = m / 2 hbar tau``. Keeping that residual
below ``epsilon`` needs intervals of half-width ``sqrt(epsilon / q)`` and
therefore ``N ~ sqrt(tau / epsilon)`` mirrors.

Free evolution is done exactly on a Fourier grid. The mirror array is
applied as a single operator: exact conjugation times ``exp(i alpha(x))``
with the residual ``alpha(x) = q (x - x_n)^2`` of the interval ``x`` falls in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridAliasing, InvalidParameter

NORM_TOL = 1e-10
DEFAULT_COVERAGE = 0.999
SPECTRUM_FLOOR = 1e-14


@dataclass(frozen=True)
class WavePacket:
    """Momentum amplitudes ``f(k)`` on a centred uniform grid of even length.

    Normalization is ``sum |f|^2 dk / 2 pi = 1``.
    """

    k_grid: np.ndarray
    f_k: np.ndarray = field(repr=False)
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        k = np.asarray(self.k_grid, dtype=float)
        f = np.asarray(self.f_k, dtype=complex)
        if k.ndim != 1 or k.size < 4 or k.size % 2:
            raise InvalidParameter("k_grid must be 1-D with an even number (>= 4) of points")
        if f.shape != k.shape:
            raise InvalidParameter("f_k must match k_grid")
        dk = k[1] - k[0]
        if dk <= 0 or np.max(np.abs(np.diff(k) - dk)) > 1e-9 * dk:
            raise InvalidParameter("k_grid must be uniform and increasing")
        if abs(k[k.size // 2]) > 1e-9 * dk:
            raise InvalidParameter("k_grid must be centred: k[N/2] = 0")
        if self.mass <= 0 or self.hbar <= 0:
            raise InvalidParameter("mass and hbar must be positive")
        norm = float(np.sum(np.abs(f) ** 2) * dk / (2 * np.pi))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidParameter(f"packet norm {norm:.12g} is not 1")
        object.__setattr__(self, "k_grid", k)
        object.__setattr__(self, "f_k", f)

    @property
    def n(self) -> int:
        return self.k_grid.size

    @property
    def dk(self) -> float:
        return float(self.k_grid[1] - self.k_grid[0])

    @property
    def dx(self) -> float:
        return 2 * np.pi / (self.n * self.dk)

    @property
    def x_grid(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx

    def k_max(self) -> float:
        w = np.abs(self.f_k) ** 2
        return float(np.max(np.abs(self.k_grid[w >= SPECTRUM_FLOOR * w.max()])))


def gaussian_packet(
    sigma_k: float = 1.0, k0: float = 0.0, n_points: int = 4096, dk: float | None = None, mass=1.0, hbar=1.0
) -> WavePacket:
    """Gaussian ``f(k) ~ exp(-(k - k0)^2 / 4 sigma_k^2)``; ``dk`` defaults to ``sigma_k / 16``."""
    if sigma_k <= 0:
        raise InvalidParameter("sigma_k must be positive")
    dk = sigma_k / 16 if dk is None else dk
    k = (np.arange(n_points) - n_points // 2) * dk
    f = np.exp(-((k - k0) ** 2) / (4 * sigma_k**2)).astype(complex)
    f *= np.sqrt(2 * np.pi / (np.sum(np.abs(f) ** 2) * dk))
    return WavePacket(k, f, mass, hbar)


def _to_x(packet: WavePacket, f: np.ndarray) -> np.ndarray:
    return packet.dk / (2 * np.pi) * packet.n * np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(f)))


def _to_k(packet: WavePacket, psi: np.ndarray) -> np.ndarray:
    return packet.dx * np.fft.fftshift(np.fft.fft(np.fft.ifftshift(psi)))


def _check_aliasing(packet: WavePacket, tau: float, f: np.ndarray) -> None:
    w = np.abs(f) ** 2
    k_max = float(np.max(np.abs(packet.k_grid[w >= SPECTRUM_FLOOR * w.max()])))
    travel = packet.hbar * k_max * tau / packet.mass
    if travel * packet.dk > np.pi:
        # the box is 2 pi / dk long; the fastest component must stay inside half of it
        needed = int(2 ** math.ceil(math.log2(packet.n * travel * packet.dk / np.pi)))
        raise GridAliasing(
            f"packet travels {travel:.4g} beyond the half box {np.pi / packet.dk:.4g} at the same dx",
            needed,
        )


def _propagate(packet: WavePacket, f: np.ndarray, tau: float, check: bool = True) -> np.ndarray:
    if tau < 0:
        raise InvalidParameter("tau must be non-negative")
    if check:
        _check_aliasing(packet, tau, f)
    phase = np.exp(-1j * packet.hbar * packet.k_grid**2 * tau / (2 * packet.mass))
    return _to_x(packet, f * phase)


def evolve_free(packet: WavePacket, tau: float) -> np.ndarray:
    """``psi(x, tau)`` on ``packet.x_grid``."""
    return _propagate(packet, packet.f_k, tau)


def evolve_wavefunction(packet: WavePacket, psi_x: np.ndarray, tau: float, check: bool = True) -> np.ndarray:
    """Free evolution of an arbitrary wave function on the packet's x grid.

    With ``check=False`` the aliasing test is skipped; :func:`refocus` does
    that after testing the packet itself, because the phase steps left by a
    mirror plan give the spectrum a faint power-law tail that reaches the
    grid edge without carrying measurable weight.
    """
    return _propagate(packet, _to_k(packet, np.asarray(psi_x, dtype=complex)), tau, check)


def norm_x(packet: WavePacket, psi_x) -> float:
    return float(np.sum(np.abs(psi_x) ** 2) * packet.dx)


@dataclass(frozen=True)
class MirrorPlan:
    """Mirror positions at the centres of equal intervals of width ``2 * half_width``."""

    positions: np.ndarray
    epsilon: float
    tau: float
    half_width: float
    curvature: float  # q = m / (2 hbar tau)

    @property
    def N(self) -> int:
        return int(self.positions.size)

    @property
    def lower(self) -> float:
        return float(self.positions[0] - self.half_width)

    @property
    def upper(self) -> float:
        return float(self.positions[-1] + self.half_width)

    def max_residual(self) -> float:
        return self.curvature * self.half_width**2


def coverage_interval(x: np.ndarray, density: np.ndarray, tail: float) -> tuple[float, float]:
    """Smallest central-quantile interval leaving ``tail / 2`` weight on each side."""
    cdf = np.cumsum(density)
    cdf /= cdf[-1]
    lo = x[min(np.searchsorted(cdf, tail / 2), x.size - 1)]
    hi = x[min(np.searchsorted(cdf, 1 - tail / 2), x.size - 1)]
    return float(lo), float(hi)


def plan_mirrors(packet: WavePacket, tau: float, epsilon: float, coverage: float | None = None) -> MirrorPlan:
    """Cover the bulk of ``|psi(x, tau)|^2`` with intervals whose quadratic residual is ``<= epsilon``.

    The covered weight is at least 99.9 %. For small ``epsilon`` the uncovered
    tail is shrunk to ``epsilon^2 / 16`` so that it cannot spoil the norm bound.
    """
    if epsilon <= 0:
        raise InvalidParameter("epsilon must be positive")
    if tau <= 0:
        raise InvalidParameter("tau must be positive")
    tail = min(1 - DEFAULT_COVERAGE, epsilon**2 / 16) if coverage is None else 1 - coverage
    if not 0 <= tail < 1:
        raise InvalidParameter("coverage must lie in (0, 1]")
    psi = evolve_free(packet, tau)
    lo, hi = coverage_interval(packet.x_grid, np.abs(psi) ** 2, tail)
    q = packet.mass / (2 * packet.hbar * tau)
    h = math.sqrt(epsilon / q)
    n = max(1, math.ceil((hi - lo) / (2 * h)))
    centre = 0.5 * (lo + hi)
    positions = centre + (np.arange(n) - (n - 1) / 2) * 2 * h
    return MirrorPlan(positions, float(epsilon), float(tau), h, q)


def residual_phase(x, plan: MirrorPlan) -> np.ndarray:
    """``alpha(x) = q (x - x_n)^2`` for the nearest mirror ``x_n``."""
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.rint((x - plan.positions[0]) / (2 * plan.half_width)), 0, plan.N - 1).astype(int)
    return plan.curvature * (x - plan.positions[idx]) ** 2


def apply_approximate_conjugation(psi_x, x_grid, plan: MirrorPlan | None) -> np.ndarray:
    """``conj(psi) exp(i alpha)``; ``plan=None`` is exact conjugation."""
    psi = np.asarray(psi_x, dtype=complex)
    if plan is None:
        return psi.conj()
    return psi.conj() * np.exp(1j * residual_phase(x_grid, plan))


def conjugation_error(packet: WavePacket, psi_x, plan: MirrorPlan) -> float:
    """``|| psi~ - conj(psi) ||`` in the L2 norm."""
    diff = apply_approximate_conjugation(psi_x, packet.x_grid, plan) - np.conj(psi_x)
    return math.sqrt(norm_x(packet, diff))


@dataclass(frozen=True)
class RefocusResult:
    tau: float
    epsilon: float
    N: int
    fidelity: float
    conjugation_error: float

    @property
    def deficit_ratio(self) -> float:
        """``(1 - fidelity) / epsilon^2``, the constant ``C`` of the quadratic bound."""
        return (1 - self.fidelity) / self.epsilon**2 if self.epsilon > 0 else float("nan")


def refocus(packet: WavePacket, tau: float, epsilon: float) -> RefocusResult:
    """Spread for ``tau``, conjugate with a mirror plan, spread again, compare with ``conj(psi_0)``.

    ``epsilon = 0`` means exact conjugation (``N = 0``).
    """
    psi0 = evolve_free(packet, 0.0)
    psi = evolve_free(packet, tau)
    plan = plan_mirrors(packet, tau, epsilon) if epsilon > 0 else None
    flipped = apply_approximate_conjugation(psi, packet.x_grid, plan)
    final = evolve_wavefunction(packet, flipped, tau, check=False)
    fid = abs(np.sum(psi0 * final) * packet.dx) ** 2
    err = conjugation_error(packet, psi, plan) if plan is not None else 0.0
    return RefocusResult(float(tau), float(epsilon), plan.N if plan else 0, float(fid), err)


def refocus_fidelity(packet: WavePacket, tau: float, epsilon: float) -> float:
    return refocus(packet, tau, epsilon).fidelity


def scaling_exponent(xs, ns) -> float:
    """Least-squares slope of ``log N`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ns, float)), 1)[0])
