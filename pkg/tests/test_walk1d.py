import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import classical_fresh_entropy, enumerate_paths, walk_terms_as_sets
from qhtheorem.errors import InvalidParameter, NoDropFound, StateExplosion
from qhtheorem.qstate import BasisLabel, Direction, GrandState, fidelity
from qhtheorem.walk1d import (
    INTERFERENCE_PHASES,
    EntropySeries,
    ScattererSpec,
    SpinMode,
    WalkScenario,
    backward_entropy,
    build_scattering_matrix,
    evolve,
    evolve_backward,
    evolve_entropy,
    first_drop,
    flip_operator,
    half_space_scenario,
    iter_states,
    regular_scenario,
    reversal_round_trip,
    reverse_complete,
    single_scattering,
    state_entropy,
    step,
    sweep_transparency,
)

R, L = Direction.RIGHT, Direction.LEFT
angles = st.floats(-2 * math.pi, 2 * math.pi)


@settings(max_examples=80, deadline=None)
@given(st.floats(0, 1), angles, angles)
def test_scattering_matrix_is_unitary(T, a, b):
    m = build_scattering_matrix(ScattererSpec(0, T, a, b))
    assert np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12)
    assert abs(m[1, 0]) ** 2 == pytest.approx(T, abs=1e-12)


def test_interference_phase_amplitudes():
    m = build_scattering_matrix(ScattererSpec(0, 0.5, **INTERFERENCE_PHASES))
    t, r = np.exp(1j * math.pi / 4) / math.sqrt(2), np.exp(-1j * math.pi / 4) / math.sqrt(2)
    assert m[1, 0] == pytest.approx(t, abs=1e-15)
    assert m[0, 0] == pytest.approx(r, abs=1e-15)
    assert m[1, 1] == pytest.approx(r, abs=1e-15)


def test_flip_operator():
    assert np.array_equal(flip_operator(math.pi), np.array([[0, 1], [1, 0]]))
    assert np.array_equal(flip_operator(0.0), np.eye(2))
    v = flip_operator(1.3)
    assert np.allclose(v.conj().T @ v, np.eye(2))


def test_first_step_amplitudes():
    sc = regular_scenario(0.36, 1)
    s1 = step(sc.initial_state(), sc)
    bit = sc.spin_sites.index(1)
    assert s1.terms[BasisLabel(1, R, 1 << bit)] == pytest.approx(0.6)
    assert s1.terms[BasisLabel(0, L, 0)] == pytest.approx(0.8j)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), angles, angles, st.sampled_from(list(SpinMode)), st.integers(1, 5))
def test_step_is_unitary_and_invertible(T, a, b, mode, n):
    sc = regular_scenario(T, 6, a, b, spin_mode=mode)
    psi = evolve(sc.initial_state(), sc, n)
    assert psi.norm_squared() == pytest.approx(1.0, abs=1e-12)
    back = evolve_backward(psi, sc, n)
    assert fidelity(back, sc.initial_state()) == pytest.approx(1.0, abs=1e-10)


def test_step_inverse_then_step():
    sc = regular_scenario(0.3, 6, 0.2, -0.7)
    psi = evolve_backward(sc.initial_state(), sc, 3)
    assert fidelity(evolve(psi, sc, 3), sc.initial_state()) == pytest.approx(1.0, abs=1e-12)


def test_unscattered_boundaries_are_transparent():
    sc = WalkScenario([ScattererSpec(5, 0.5)], horizon=3)
    psi = evolve(sc.initial_state(), sc, 3)
    assert psi.terms == {BasisLabel(3, R, 0): 1.0}


def test_persistent_walk_matches_path_sum():
    sc = regular_scenario(0.3, 4, 0.4, 1.1)
    psi = evolve(sc.initial_state(), sc, 4)
    oracle = enumerate_paths(0.3, 0.4, 1.1, 4, None, 0, sc.spin_sites)
    got = walk_terms_as_sets(psi, sc.spin_sites)
    for key in set(oracle) | set(got):
        assert got.get(key, 0) == pytest.approx(oracle.get(key, 0), abs=1e-12)


@pytest.mark.parametrize("complete", [True, False])
def test_round_trip_matches_path_sum(complete):
    sc = regular_scenario(0.5, 2, **INTERFERENCE_PHASES)
    trip = reversal_round_trip(sc, 2, complete)
    oracle = enumerate_paths(0.5, *INTERFERENCE_PHASES.values(), 2, "complete" if complete else "incomplete", 2, sc.spin_sites)
    got = walk_terms_as_sets(trip.final, sc.spin_sites)
    for key in set(oracle) | set(got):
        assert (abs(got.get(key, 0)) > 1e-12) == (abs(oracle[key]) > 1e-12)
        assert got.get(key, 0) == pytest.approx(oracle[key], abs=1e-12)


def test_round_trip_fidelities():
    sc = regular_scenario(0.5, 2, **INTERFERENCE_PHASES)
    assert reversal_round_trip(sc, 2, True).fidelity == pytest.approx(1.0, abs=1e-12)
    incomplete = reversal_round_trip(sc, 2, False)
    assert incomplete.fidelity < 1.0
    assert sorted(abs(a) for a in incomplete.final.terms.values()) == pytest.approx([0.5] * 4)


def test_complete_reversal_retraces_in_fresh_mode():
    sc = regular_scenario(0.4, 5, 0.3, 0.9, spin_mode=SpinMode.FRESH)
    psi = evolve(sc.initial_state(), sc, 5)
    back = evolve(reverse_complete(psi), sc, 5)
    assert fidelity(back, reverse_complete(sc.initial_state())) == pytest.approx(1.0, abs=1e-12)


def test_regular_entropy_sequence():
    s = evolve_entropy(regular_scenario(0.5, 6)).entropy_bits
    assert s[:4] == pytest.approx([0, 1, 2, 2], abs=1e-12)
    assert s[5] == pytest.approx(2.25, abs=1e-12)


def test_time_symmetry():
    sc = regular_scenario(0.5, 6)
    fwd = evolve_entropy(sc).entropy_bits
    bwd = backward_entropy(sc)
    assert bwd.times == [0, -1, -2, -3, -4, -5, -6]
    assert bwd.entropy_bits == pytest.approx(fwd, abs=1e-9)


@pytest.mark.parametrize("T,expected", [(0.36, 2), (0.48, 2), (0.6, 3), (0.7, 3), (0.73, 4), (0.78, 4)])
def test_first_drop(T, expected):
    assert first_drop(evolve_entropy(regular_scenario(T, 8))) == expected


def test_no_drop_at_half():
    with pytest.raises(NoDropFound):
        first_drop(evolve_entropy(regular_scenario(0.5, 8)))
    assert sweep_transparency([0.5])[0].first_drop_step is None


def test_sweep_rejects_bad_transparency():
    with pytest.raises(InvalidParameter):
        sweep_transparency([1.2])


def test_entropy_series_drops():
    es = EntropySeries.from_values([0, 1, 2, 3], [0, 1, 0.5, 0.5])
    assert es.drop_steps == [2]
    assert es.rows()[2] == (2, 0.5, True)


@pytest.mark.parametrize("T", [0.2, 0.5, 0.77])
def test_fresh_entropy_is_classical(T):
    sc = regular_scenario(T, 8, spin_mode=SpinMode.FRESH)
    fast = evolve_entropy(sc).entropy_bits
    explicit = [state_entropy(s) for s in iter_states(sc)]
    assert fast == pytest.approx(explicit, abs=1e-10)
    assert fast[-1] == pytest.approx(classical_fresh_entropy(T, 8), abs=1e-10)


def test_fresh_entropy_never_drops():
    assert evolve_entropy(regular_scenario(0.6, 200, spin_mode=SpinMode.FRESH)).drop_steps == []


def test_fresh_registers_exhaust():
    sc = regular_scenario(0.5, 2, spin_mode=SpinMode.FRESH)
    with pytest.raises(InvalidParameter):
        evolve(sc.initial_state(), sc, 3)


def test_explicit_superposition_start_uses_full_reduction():
    h = 1 / math.sqrt(2)
    init = GrandState({BasisLabel(0, R): h, BasisLabel(0, L): h})
    sc = regular_scenario(0.5, 4, initial=init)
    s = evolve_entropy(sc).entropy_bits
    assert s[0] == pytest.approx(0.0, abs=1e-12)
    assert all(0 <= v <= 4 for v in s)


def test_state_explosion_keeps_partial_series():
    sc = regular_scenario(0.5, 12, max_terms=10)
    with pytest.raises(StateExplosion) as info:
        evolve_entropy(sc)
    partial = info.value.partial
    assert partial.times == list(range(len(partial.times)))
    assert len(partial.times) >= 3


def test_half_space_reversal():
    run = half_space_scenario(depth=4, horizon=6)
    s = run.series.entropy_bits
    assert run.reversal_step == 6
    assert s[0] == pytest.approx(0.0)
    assert max(s) > 1.0
    for j in range(7):
        assert s[6 + j] == pytest.approx(s[6 - j], abs=1e-10)
    assert run.exit_step == 12
    assert s[12:] == pytest.approx([0.0] * len(s[12:]), abs=1e-10)


def test_single_scattering():
    res = single_scattering()
    assert res.S_coherent == pytest.approx(0.0, abs=1e-12)
    assert res.S_entangled == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(res.rho_coherent.elements, [[0.5, -0.5j], [0.5j, 0.5]])
    assert np.allclose(res.forward_beta().elements, np.eye(2))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95), angles, angles)
def test_regular_array_entropy_ignores_phases(T, a, b):
    plain = evolve_entropy(regular_scenario(T, 7)).entropy_bits
    assert evolve_entropy(regular_scenario(T, 7, a, b)).entropy_bits == pytest.approx(plain, abs=1e-9)
