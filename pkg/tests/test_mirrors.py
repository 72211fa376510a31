import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhtheorem.errors import GridAliasing, InvalidParameter
from qhtheorem.mirrors import (
    WavePacket,
    apply_approximate_conjugation,
    conjugation_error,
    evolve_free,
    evolve_wavefunction,
    gaussian_packet,
    norm_x,
    plan_mirrors,
    refocus,
    residual_phase,
    scaling_exponent,
)


@pytest.fixture(scope="module")
def packet():
    return gaussian_packet(1.0, 0.0, n_points=16384, dk=0.002)


@pytest.fixture(scope="module")
def moving_packet():
    return gaussian_packet(0.8, 2.0, n_points=16384, dk=0.002)


def test_packet_validation():
    k = (np.arange(8) - 4) * 0.5
    with pytest.raises(InvalidParameter):
        WavePacket(k, np.ones(8))
    with pytest.raises(InvalidParameter):
        WavePacket(k + 0.1, np.ones(8) * math.sqrt(2 * math.pi / 4))
    with pytest.raises(InvalidParameter):
        WavePacket(k[:7], np.ones(7))


def test_initial_wavefunction_is_fourier_transform():
    sigma = 1.3
    p = gaussian_packet(sigma, n_points=2048, dk=sigma / 32)
    x = p.x_grid
    amp = p.f_k[p.n // 2].real  # f(0)
    expected = amp * sigma / math.sqrt(math.pi) * np.exp(-(sigma**2) * x**2)
    assert np.max(np.abs(evolve_free(p, 0.0) - expected)) < 1e-10


@pytest.mark.parametrize("tau", [0.0, 10.0, 100.0, 150.0])
def test_norm_preserved(packet, tau):
    assert norm_x(packet, evolve_free(packet, tau)) == pytest.approx(1.0, abs=1e-10)


def test_inner_products_preserved(packet, moving_packet):
    def overlap(tau):
        return np.sum(np.conj(evolve_free(packet, tau)) * evolve_free(moving_packet, tau)) * packet.dx

    assert overlap(80.0) == pytest.approx(overlap(0.0), abs=1e-10)


def test_long_time_envelope(packet):
    def deviation(tau):
        x = packet.x_grid
        env = np.abs(np.interp(x / tau, packet.k_grid, np.abs(packet.f_k))) / math.sqrt(2 * math.pi * tau)
        return math.sqrt(np.sum((np.abs(evolve_free(packet, tau)) - env) ** 2) * packet.dx)

    devs = [deviation(t) for t in (5.0, 20.0, 80.0)]
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] < 0.01


def test_aliasing_is_reported(packet):
    with pytest.raises(GridAliasing) as info:
        evolve_free(packet, 1000.0)
    assert info.value.suggested_points > packet.n
    with pytest.raises(InvalidParameter):
        evolve_free(packet, -1.0)


def test_plan_invariants(packet):
    plan = plan_mirrors(packet, 100.0, 0.1)
    assert np.all(np.diff(plan.positions) > 0)
    assert plan.max_residual() == pytest.approx(0.1)
    x = packet.x_grid
    inside = (x >= plan.lower) & (x <= plan.upper)
    assert residual_phase(x[inside], plan).max() <= 0.1 + 1e-12
    density = np.abs(evolve_free(packet, 100.0)) ** 2 * packet.dx
    assert density[inside].sum() >= 0.999


def test_plan_validation(packet):
    with pytest.raises(InvalidParameter):
        plan_mirrors(packet, 10.0, 0.0)
    with pytest.raises(InvalidParameter):
        plan_mirrors(packet, 0.0, 0.1)


def test_mirror_count_scaling(packet):
    n = lambda tau, eps: plan_mirrors(packet, tau, eps).N  # noqa: E731
    assert n(120.0, 0.1) / n(30.0, 0.1) == pytest.approx(2.0, rel=0.2)
    assert n(60.0, 0.025) / n(60.0, 0.1) == pytest.approx(2.0, rel=0.2)
    taus = [15.0, 30.0, 60.0, 120.0, 150.0]
    assert scaling_exponent(taus, [n(t, 0.1) for t in taus]) == pytest.approx(0.5, abs=0.1)
    eps = [0.4, 0.2, 0.1, 0.05]
    assert scaling_exponent(eps, [n(60.0, e) for e in eps]) == pytest.approx(-0.5, abs=0.1)


def test_huge_epsilon_needs_one_mirror(packet):
    assert plan_mirrors(packet, 50.0, 1e5).N == 1


def test_single_interval_residual_is_full_quadratic(packet):
    plan = plan_mirrors(packet, 50.0, 1e5)
    x = packet.x_grid
    q = 1.0 / (2 * 50.0)
    assert np.allclose(residual_phase(x, plan), q * (x - plan.positions[0]) ** 2)


def test_exact_conjugation_without_plan(packet):
    psi = evolve_free(packet, 30.0)
    assert np.array_equal(apply_approximate_conjugation(psi, packet.x_grid, None), psi.conj())


@settings(max_examples=15, deadline=None)
@given(st.floats(5.0, 140.0), st.floats(0.01, 2.0))
def test_norm_bound(tau, eps):
    p = gaussian_packet(1.0, 0.0, n_points=16384, dk=0.002)
    plan = plan_mirrors(p, tau, eps)
    assert conjugation_error(p, evolve_free(p, tau), plan) <= eps


def test_refocus_exact(packet, moving_packet):
    assert refocus(packet, 100.0, 0.0).fidelity >= 1 - 1e-8
    assert refocus(moving_packet, 60.0, 0.0).fidelity >= 1 - 1e-8


def test_refocus_deficit_is_quadratic(moving_packet):
    results = [refocus(moving_packet, 60.0, e) for e in (0.4, 0.2, 0.1, 0.05)]
    deficits = [1 - r.fidelity for r in results]
    assert all(b <= a for a, b in zip(deficits, deficits[1:]))
    assert all(r.deficit_ratio <= 1.0 for r in results)
    assert 1 - refocus(moving_packet, 60.0, 0.1).fidelity <= 0.01


def test_no_conjugation_does_not_refocus(packet):
    psi0 = evolve_free(packet, 0.0)
    final = evolve_wavefunction(packet, evolve_free(packet, 50.0), 50.0)
    assert abs(np.sum(psi0 * final) * packet.dx) ** 2 < 0.05
