import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gamma_p_quadrature
from tomoregions.errors import InvalidInput, PrecisionUnreachable
from tomoregions.specialfn import (chi_pdf, gamma_difference_bound, mvcr_radius, reg_inc_gamma,
                                   series_sum)


def test_closed_form_examples():
    assert abs(reg_inc_gamma(1, 1).value - (1 - math.exp(-1))) <= 1e-12
    assert abs(reg_inc_gamma(0.5, 1).value - math.erf(1)) <= 1e-12
    for a in (0.5, 1, 3.5, 40):
        g = reg_inc_gamma(a, 0)
        assert g.value == 0 and g.error_bound == 0


@pytest.mark.parametrize("a", [0.5, 1.0, 1.5, 2.0, 5.0, 10.0, 20.0, 35.5, 50.0])
def test_grid_against_quadrature(a):
    for x in np.linspace(0, 100, 26):
        g = reg_inc_gamma(a, float(x))
        ref = gamma_p_quadrature(a, float(x))
        assert abs(g.value - ref) <= 1e-12
        assert abs(g.value - ref) <= g.error_bound
        assert g.error_bound <= 1e-12
        assert 0 <= g.value <= 1


def test_complement_is_accurate_in_the_tail():
    g = reg_inc_gamma(2.0, 60.0)
    ref = float(mpmath.gammainc(2, 60, mpmath.inf, regularized=True))
    assert abs(g.complement - ref) <= 1e-12 * ref + 1e-300


def test_series_bounds_are_honest():
    for a, x in [(0.5, 0.3), (3.0, 1.0), (20.0, 5.0), (50.0, 30.0)]:
        s = series_sum(a, x, target_err=1e-13)
        ref = float(mpmath.gammainc(a, 0, x, regularized=True))
        assert abs(s.value - ref) <= s.error_bound
        assert s.truncation_bound <= 1e-13 / 8


def test_series_fixed_k0_reports_infinite_tail_before_regime():
    s = series_sum(2.0, 10.0, k0=3)
    assert s.truncation_bound == math.inf


def test_precision_unreachable():
    with pytest.raises(PrecisionUnreachable):
        reg_inc_gamma(1.0, 1.0, 1e-16)


def test_invalid_arguments():
    with pytest.raises(InvalidInput):
        reg_inc_gamma(0.0, 1.0)
    with pytest.raises(InvalidInput):
        reg_inc_gamma(1.0, -1.0)


def test_mvcr_examples():
    assert abs(mvcr_radius(2, 1 - math.exp(-1)).radius - math.sqrt(2)) <= 1e-8
    sol = mvcr_radius(2, 0.95)
    assert abs(sol.radius - math.sqrt(-2 * math.log(0.05))) <= 1e-7
    assert sol.used_complement


def test_mvcr_evaluation_budget(rng):
    for _ in range(50):
        N = int(rng.integers(1, 41))
        alpha = float(rng.uniform(0.001, 0.999))
        sol = mvcr_radius(N, alpha, 1e-9)
        assert sol.evaluations <= 64 + math.ceil(math.log2(sol.t_max / 1e-9))
        lo, hi = sol.radius_interval
        assert lo <= sol.radius <= hi


def test_mvcr_monotone(rng):
    for _ in range(100):
        N = int(rng.integers(1, 21))
        a1, a2 = sorted(rng.uniform(0.01, 0.99, 2))
        assert mvcr_radius(N, a1, 1e-10).radius <= mvcr_radius(N, a2, 1e-10).radius


def test_mvcr_rejects_bad_input():
    with pytest.raises(InvalidInput):
        mvcr_radius(3, 1.0)
    with pytest.raises(InvalidInput):
        mvcr_radius(3, 0.5, 0.3)
    with pytest.raises(InvalidInput):
        mvcr_radius(0, 0.5)


def test_difference_bound_examples(rng):
    assert gamma_difference_bound(2.0, 1.5, 1.5) == 0.0
    assert 1 - math.exp(-1) <= gamma_difference_bound(1.0, 0.0, 1.0)
    with pytest.raises(InvalidInput):
        gamma_difference_bound(1.0, 2.0, 1.0)
    for _ in range(300):
        a = float(rng.uniform(0.1, 20))
        lo, hi = sorted(rng.uniform(0, 30, 2))
        diff = reg_inc_gamma(a, hi).value - reg_inc_gamma(a, lo).value
        assert diff <= gamma_difference_bound(a, lo, hi) + 1e-12


def test_chi_pdf_integrates_to_one():
    from scipy.integrate import quad
    for N in (1, 3, 8, 15):
        total, _ = quad(lambda r: chi_pdf(N, r), 0, 50, limit=200)
        assert abs(total - 1) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 50), st.floats(0, 100))
def test_error_bound_property(a, x):
    g = reg_inc_gamma(a, x)
    ref = float(mpmath.gammainc(a, 0, x, regularized=True))
    assert abs(g.value - ref) <= g.error_bound + 1e-17
