import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian_unit_trace, random_state
from oracles import naive_gell_mann, psd_projection_distance
from tomoregions.errors import DimensionMismatch, InvalidDimension, InvalidInput
from tomoregions.statespace import (BlochVector, DensityOperator, PureStateVector, build_basis,
                                    from_bloch, is_psd, mineig, psd_distance_lower_bound,
                                    pure_bloch_coords, to_bloch)

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


@pytest.mark.parametrize("d", range(2, 7))
def test_basis_invariants(d):
    b = build_basis(d)
    m = b.matrices
    assert m.shape == (d * d - 1, d, d)
    assert np.max(np.abs(m - np.conj(np.swapaxes(m, 1, 2)))) <= 1e-12
    assert np.max(np.abs(np.trace(m, axis1=1, axis2=2))) <= 1e-12
    gram = np.einsum("aij,bji->ab", m, m)
    assert np.max(np.abs(gram - 2 * np.eye(d * d - 1))) <= 1e-12
    assert b.block_boundaries == (d * (d - 1) // 2, d * (d - 1))


@pytest.mark.parametrize("d", range(2, 7))
def test_basis_matches_direct_construction(d):
    assert np.array_equal(build_basis(d).matrices, naive_gell_mann(d))


def test_qubit_basis_is_pauli():
    assert np.array_equal(build_basis(2).matrices, PAULI)


def test_qutrit_diagonal_generator():
    m = build_basis(3).matrices
    assert len(m) == 8
    np.testing.assert_allclose(np.diag(m[7]).real, np.array([1, 1, -2]) / math.sqrt(3), atol=1e-15)


def test_block_order_is_lexicographic():
    m = build_basis(4).matrices
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    for i, (j, k) in enumerate(pairs):
        assert m[i][j, k] == 1 and m[6 + i][j, k] == -1j


def test_invalid_dimension():
    with pytest.raises(InvalidDimension):
        build_basis(1)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_coefficients_and_combine_match_dense(d, rng):
    b = build_basis(d)
    rho = random_hermitian_unit_trace(rng, d)
    dense = np.einsum("kij,ji->k", b.matrices, rho).real
    np.testing.assert_allclose(b.coefficients(rho).real, dense, atol=1e-13)
    w = rng.standard_normal(b.size)
    np.testing.assert_allclose(b.combine(w), np.einsum("k,kij->ij", w, b.matrices), atol=1e-13)


def test_bloch_examples():
    assert np.allclose(to_bloch(DensityOperator.maximally_mixed(4)).coords, 0)
    np.testing.assert_allclose(to_bloch(DensityOperator(np.diag([1.0, 0.0]))).coords, [0, 0, 0.5])
    np.testing.assert_allclose(from_bloch(np.zeros(8)).matrix, np.eye(3) / 3)
    out = from_bloch([0.0, 0.0, 1.0])
    np.testing.assert_allclose(out.matrix, np.diag([1.5, -0.5]))
    assert not out.is_psd()
    plus = from_bloch([0.5, 0.0, 0.0]).matrix
    np.testing.assert_allclose(plus, np.full((2, 2), 0.5))


@pytest.mark.parametrize("d", range(2, 7))
def test_round_trips(d, rng):
    b = build_basis(d)
    for _ in range(100):
        rho = random_hermitian_unit_trace(rng, d)
        back = from_bloch(to_bloch(DensityOperator(rho), b), b).matrix
        assert np.max(np.abs(back - rho)) <= 1e-12
        w = rng.standard_normal(b.size)
        assert np.max(np.abs(to_bloch(from_bloch(w, b), b).coords - w)) <= 1e-12


def test_from_bloch_length_checked():
    with pytest.raises(DimensionMismatch):
        from_bloch([0.1, 0.2], build_basis(2))
    with pytest.raises(DimensionMismatch):
        BlochVector(2, [0.0, 0.0])


def test_to_bloch_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        to_bloch(DensityOperator.maximally_mixed(3), build_basis(2))


@pytest.mark.parametrize("d", range(2, 6))
def test_pure_state_bloch_norms(d, rng):
    b = build_basis(d)
    for _ in range(100):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        unit = pure_bloch_coords(PureStateVector.normalized(v), b)
        assert abs(unit @ unit - 2 * (d - 1) / d) <= 1e-10
        big = pure_bloch_coords(PureStateVector.normalized(v, "sqrt_d"), b)
        assert abs(big @ big - 2 * d * (d - 1)) <= 1e-9


def test_pure_coords_example():
    np.testing.assert_allclose(pure_bloch_coords(PureStateVector(np.array([1.0, 0.0]))), [0, 0, 1])


def test_pure_state_norm_checked():
    with pytest.raises(InvalidInput):
        PureStateVector(np.array([1.0, 1.0]))
    PureStateVector(np.array([1.0, 1.0]), "sqrt_d")


def test_density_validation():
    with pytest.raises(InvalidInput):
        DensityOperator(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(InvalidInput):
        DensityOperator(np.eye(2))


def test_mineig_examples(rng):
    for d in range(2, 7):
        assert abs(mineig(DensityOperator.maximally_mixed(d)) - 1 / d) <= 1e-12
    assert abs(mineig(np.diag([1.5, -0.5])) + 0.5) <= 1e-12
    diag = np.diag([0.1, 0.2, 0.3, 0.4])
    assert abs(mineig(diag) - 0.1) <= 1e-12
    for _ in range(50):
        assert mineig(random_state(rng, 4)) >= -1e-12
    with pytest.raises(InvalidInput):
        mineig(np.array([[1.0, 2.0], [0.0, 0.0]]))


def test_psd_distance_bound(rng):
    assert psd_distance_lower_bound(DensityOperator.maximally_mixed(3)) == 0.0
    assert psd_distance_lower_bound(np.diag([1.5, -0.5])) == 0.5
    for _ in range(200):
        d = int(rng.integers(2, 6))
        h = random_hermitian_unit_trace(rng, d)
        assert psd_distance_lower_bound(h) <= psd_projection_distance(h) + 1e-12


def test_psd_tolerance_policy():
    eps = 1e-11
    assert is_psd(np.diag([1 + eps, -eps]))
    assert not is_psd(np.diag([1 + 1e-8, -1e-8]))


def test_density_is_immutable():
    rho = DensityOperator.maximally_mixed(2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 32 - 1))
def test_round_trip_property(d, seed):
    h = random_hermitian_unit_trace(np.random.default_rng(seed), d)
    w = to_bloch(h)
    assert np.allclose(from_bloch(w).matrix, h, atol=1e-12)
