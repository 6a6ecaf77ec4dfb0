import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from tomoregions.ellipsoid import (CONTAINED, UNDECIDED, VIOLATED, StateEllipsoid,
                                   check_containment, optimal_direction, point_at,
                                   positivity_functional, sphere_contained_in_psd,
                                   sphere_threshold, truncate_and_sample_volume)
from tomoregions.errors import (DegenerateEllipsoid, DimensionMismatch, InvalidInput,
                                InvalidOption, InvalidRadius, OutOfEllipsoid)
from tomoregions.statespace import DensityOperator, PureStateVector, mineig

SZ = np.diag([1.0, -1.0])


def mixed(d):
    return DensityOperator.maximally_mixed(d)


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def test_point_at_examples(rng):
    e = StateEllipsoid(mixed(2), 0.3)
    np.testing.assert_allclose(point_at(e, np.zeros(3)).matrix, np.eye(2) / 2)
    np.testing.assert_allclose(point_at(e, [0, 0, 1]).matrix, np.eye(2) / 2 + 0.3 * SZ)
    e3 = StateEllipsoid(DensityOperator(random_state(rng, 3)), rng.uniform(0.05, 0.3, 8),
                        random_orthogonal(rng, 8))
    for _ in range(100):
        u = rng.standard_normal(8)
        u *= rng.random() / np.linalg.norm(u)
        rho = point_at(e3, u)
        assert abs(np.trace(rho.matrix).real - 1) <= 1e-12
        np.testing.assert_allclose(e3.coordinates_of(rho), u, atol=1e-12)
    with pytest.raises(OutOfEllipsoid):
        point_at(e, [0, 0, 1.01])
    with pytest.raises(DimensionMismatch):
        point_at(e, [0, 1])


def test_ellipsoid_validation(rng):
    with pytest.raises(DegenerateEllipsoid):
        StateEllipsoid(mixed(2), [0.1, 0.0, 0.1])
    with pytest.raises(DimensionMismatch):
        StateEllipsoid(mixed(2), [0.1, 0.1])
    with pytest.raises(InvalidInput):
        StateEllipsoid(mixed(2), 0.1, np.ones((3, 3)))


def test_sphere_examples():
    assert sphere_contained_in_psd(mixed(2), 0.5)
    assert not sphere_contained_in_psd(mixed(2), 0.5 + 1e-6)
    assert abs(sphere_threshold(mixed(3)) - math.sqrt(1 / 12)) <= 1e-12
    with pytest.raises(InvalidRadius):
        sphere_contained_in_psd(mixed(2), 0.0)


@pytest.mark.parametrize("d", range(2, 7))
def test_sphere_threshold_at_mixed_state(d):
    assert abs(sphere_threshold(mixed(d)) - math.sqrt(1 / (2 * d * (d - 1)))) <= 1e-12


@pytest.mark.parametrize("d", [2, 3, 4])
def test_functional_isotropic_closed_form(d, rng):
    R = 0.1
    e = StateEllipsoid(mixed(d), R)
    want = 1 / d - R * math.sqrt(2 * (d - 1) / d)
    for _ in range(20):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        assert abs(positivity_functional(e, v) - want) <= 1e-12


def test_functional_zero_on_maximal_ball():
    e = StateEllipsoid(mixed(2), 0.5)
    assert positivity_functional(e, PureStateVector(np.array([1.0, 0.0]))) == pytest.approx(0, abs=1e-15)


def test_functional_equals_expectation_at_optimal_u(rng):
    for _ in range(50):
        d = int(rng.integers(2, 5))
        n = d * d - 1
        e = StateEllipsoid(DensityOperator(random_state(rng, d)), rng.uniform(0.01, 0.4, n),
                           random_orthogonal(rng, n))
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v /= np.linalg.norm(v)
        u = optimal_direction(e, v)
        expect = (np.conj(v) @ point_at(e, u).matrix @ v).real
        assert abs(positivity_functional(e, v) - expect) <= 1e-12
        # no other boundary direction does better
        for _ in range(20):
            w = rng.standard_normal(n)
            w /= np.linalg.norm(w)
            assert (np.conj(v) @ point_at(e, w).matrix @ v).real >= expect - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 2 * math.pi))
def test_functional_phase_invariance(seed, phase):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    e = StateEllipsoid(DensityOperator(random_state(rng, d)), rng.uniform(0.01, 0.4, d * d - 1))
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    g = positivity_functional(e, v)
    assert abs(positivity_functional(e, np.exp(1j * phase) * v) - g) <= 1e-12
    assert abs(positivity_functional(e, -v) - g) <= 1e-12


def test_containment_examples():
    v = check_containment(StateEllipsoid(mixed(2), 0.4))
    assert v.status == CONTAINED and v.margin > v.certify_margin
    v = check_containment(StateEllipsoid(mixed(2), 0.6))
    assert v.status == VIOLATED
    psi, state = v.witness
    assert mineig(state) < 0
    assert (np.conj(psi.amplitudes) @ state.matrix @ psi.amplitudes).real < 0


def _assert_valid_witness(e, v):
    psi, state = v.witness
    # independent re-verification of the witness
    assert np.linalg.norm(e.coordinates_of(state)) <= 1 + 1e-9
    assert np.linalg.eigvalsh(state.matrix)[0] < 0
    a = psi.amplitudes / np.linalg.norm(psi.amplitudes)
    assert (np.conj(a) @ state.matrix @ a).real < 0


def test_sphere_agreement_random_centers(rng):
    disagree = undecided = 0
    for i in range(200):
        d = 2 if i % 2 == 0 else 3
        c = DensityOperator(random_state(rng, d))
        R = sphere_threshold(c) * rng.uniform(0.5, 1.5)
        v = check_containment(StateEllipsoid(c, R), seed=i)
        if v.status == UNDECIDED:
            undecided += 1
            continue
        if v.status == VIOLATED:
            _assert_valid_witness(StateEllipsoid(c, R), v)
        disagree += (v.status == CONTAINED) != sphere_contained_in_psd(c, R)
    assert disagree == 0 and undecided == 0


def test_general_ellipsoid_witnesses(rng):
    seen = 0
    for i in range(40):
        d = int(rng.integers(2, 5))
        n = d * d - 1
        e = StateEllipsoid(DensityOperator(random_state(rng, d)), rng.uniform(0.02, 0.4, n),
                           random_orthogonal(rng, n))
        v = check_containment(e, seed=i)
        if v.status == VIOLATED:
            seen += 1
            _assert_valid_witness(e, v)
        elif v.status == CONTAINED:
            # no sampled boundary point may be non-PSD
            u = rng.standard_normal((500, n))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            mats = e.center.matrix + e.basis.combine(e.displacement(u))
            assert np.linalg.eigvalsh(mats)[:, 0].min() >= -1e-12
    assert seen > 0


def test_real_restriction_matches_complex(rng):
    for d in (2, 3, 4):
        n = d * d - 1
        p = d * (d - 1) // 2
        for _ in range(5):
            g = rng.standard_normal((d, d))
            c = g @ g.T + 0.2 * np.eye(d)
            c /= np.trace(c)
            r2 = rng.uniform(0.02, 0.1)
            radii = np.full(n, r2)
            radii[:p] = r2 * rng.uniform(1.0, 2.0)
            e = StateEllipsoid(DensityOperator(c), radii)
            real = check_containment(e, restrict_real=True)
            cplx = check_containment(e)
            assert abs(real.margin - cplx.margin) <= 1e-8


def test_real_restriction_hypotheses(rng):
    with pytest.raises(InvalidOption):
        check_containment(StateEllipsoid(mixed(2), [0.1, 0.2, 0.3]), restrict_real=True)
    c = DensityOperator(np.array([[0.5, 0.1j], [-0.1j, 0.5]]))
    with pytest.raises(InvalidOption):
        check_containment(StateEllipsoid(c, 0.1), restrict_real=True)
    with pytest.raises(InvalidOption):
        check_containment(StateEllipsoid(mixed(2), [0.1, 0.2, 0.2]), restrict_real=True)


def test_containment_is_deterministic(rng):
    e = StateEllipsoid(DensityOperator(random_state(rng, 3)), rng.uniform(0.05, 0.2, 8))
    a, b = check_containment(e, seed=7), check_containment(e, seed=7)
    assert a.status == b.status and a.margin == b.margin


def test_volume_examples():
    inside = truncate_and_sample_volume(StateEllipsoid(mixed(2), 0.3), 20000, seed=1)
    assert inside.psd_fraction == 1.0
    est = truncate_and_sample_volume(StateEllipsoid(mixed(2), 1.0), 100000, seed=3)
    assert abs(est.psd_fraction - 1 / 8) <= 3 * est.stderr
    assert est.psd_fraction <= 1 and est.volume_estimate <= est.ellipsoid_volume
    with pytest.raises(InvalidInput):
        truncate_and_sample_volume(StateEllipsoid(mixed(2), 1.0), 0)


def test_volume_deterministic():
    e = StateEllipsoid(mixed(3), 0.4)
    assert truncate_and_sample_volume(e, 5000, seed=11) == truncate_and_sample_volume(e, 5000, seed=11)


def test_hs_volume_d2():
    # HS radius of the ball is sqrt(2) R
    R = 0.3
    vol = StateEllipsoid(mixed(2), R).hs_volume()
    assert abs(vol - 4 / 3 * math.pi * (math.sqrt(2) * R) ** 3) <= 1e-12
