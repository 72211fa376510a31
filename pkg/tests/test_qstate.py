import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhtheorem.errors import InvalidParameter, NotHermitian, TraceNotOne, ZeroNorm
from qhtheorem.qstate import (
    BasisLabel,
    DensityMatrix,
    Direction,
    GrandState,
    fidelity,
    normalize,
    partial_trace,
)

R, L = Direction.RIGHT, Direction.LEFT


def test_direction_flip():
    assert R.flipped() is L
    assert L.flipped() is R


def test_single_state_is_normalized():
    s = GrandState.single(3, L, 0b10, n_spins=2)
    assert s.is_normalized()
    assert s.system_labels() == [(3, L)]


def test_spin_mask_must_fit():
    with pytest.raises(InvalidParameter):
        GrandState({BasisLabel(0, R, 0b100): 1.0}, n_spins=2)


def test_normalize_rejects_zero():
    with pytest.raises(ZeroNorm):
        normalize(GrandState({BasisLabel(0, R, 0): 0.0}))


def test_product_state_reduces_to_pure():
    # (a|0,R> + b|1,L>) x |spins=1>
    a, b = 0.6, 0.8j
    s = GrandState({BasisLabel(0, R, 1): a, BasisLabel(1, L, 1): b}, n_spins=1)
    rho = partial_trace(s)
    expected = np.array([[abs(a) ** 2, a * np.conj(b)], [b * np.conj(a), abs(b) ** 2]])
    assert np.allclose(rho.elements, expected, atol=1e-15)
    assert rho.is_pure()


def test_orthogonal_records_dephase():
    h = 1 / np.sqrt(2)
    s = GrandState({BasisLabel(0, R, 0): h, BasisLabel(1, L, 1): h}, n_spins=1)
    rho = partial_trace(s)
    assert np.allclose(rho.elements, np.diag([0.5, 0.5]), atol=1e-15)
    assert not rho.is_pure()


def test_partial_trace_pads_basis():
    s = GrandState.single(0, R)
    rho = partial_trace(s, basis=[(-1, L), (0, R)])
    assert np.allclose(rho.elements, np.diag([0.0, 1.0]))
    with pytest.raises(InvalidParameter):
        partial_trace(s, basis=[(5, R)])


def test_density_matrix_validation():
    with pytest.raises(NotHermitian):
        DensityMatrix.from_matrix([[0.5, 0.1], [0.2, 0.5]])
    with pytest.raises(TraceNotOne):
        DensityMatrix.from_matrix(np.eye(2))


def test_fidelity_is_symmetric_overlap():
    h = 1 / np.sqrt(2)
    a = GrandState({BasisLabel(0, R): h, BasisLabel(1, R): h})
    b = GrandState({BasisLabel(0, R): 1.0})
    assert fidelity(a, b) == pytest.approx(0.5)
    assert fidelity(b, a) == pytest.approx(0.5)


amplitudes = st.lists(
    st.tuples(st.floats(-1, 1), st.floats(-1, 1)).filter(lambda z: abs(complex(*z)) > 1e-3), min_size=1, max_size=12
)


@settings(max_examples=60, deadline=None)
@given(amplitudes, st.integers(0, 2**16))
def test_partial_trace_is_a_density_matrix(amps, salt):
    rng = np.random.default_rng(salt)
    terms = {}
    for re, im in amps:
        label = BasisLabel(int(rng.integers(-3, 3)), Direction(rng.choice([-1, 1])), int(rng.integers(0, 8)))
        terms[label] = terms.get(label, 0) + complex(re, im)
    terms = {k: v for k, v in terms.items() if abs(v) > 1e-6}
    if not terms:
        return
    state = normalize(GrandState(terms, n_spins=3))
    rho = partial_trace(state)
    rho.check_psd()
    assert np.trace(rho.elements).real == pytest.approx(1.0, abs=1e-12)
    marginal = state.marginal()
    assert np.allclose(np.diag(rho.elements).real, [marginal[b] for b in rho.basis], atol=1e-13)
