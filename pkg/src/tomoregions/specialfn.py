"""Regularized incomplete gamma with certified error bounds, and its inverse.

``P(a, x) = gamma(a, x) / Gamma(a)`` is the CDF of ``r^2/2`` for the radius
``r`` of an ``N = 2a`` dimensional standard Gaussian, so credible radii of
Gaussian posteriors come from inverting ``P``.

Below ``x = a`` the power series is summed until a rigorous tail bound
drops under the target.  Above it the complement ``Q`` comes from a Lentz
continued fraction; since the continued fraction has no cheap a-priori
remainder, its reported bound is certified against the series evaluated at
the same point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

from .errors import InvalidInput, NumericalFailure, PrecisionUnreachable

EPS = 2.0 ** -52
SAFETY = 4.0
MIN_TARGET = 1e-15
DEFAULT_TARGET = 1e-12
_RESCALE = 1e250
_LOG_RESCALE = math.log(_RESCALE)


@dataclass(frozen=True)
class GammaEval:
    a: float
    x: float
    value: float  # P(a, x)
    complement: float  # Q(a, x) = 1 - P(a, x), computed without cancellation
    error_bound: float
    terms_used: int
    method: str


@dataclass(frozen=True)
class SeriesSum:
    """Partial series ``P_k0`` with separate truncation and rounding bounds."""

    a: float
    x: float
    k0: int
    value: float
    truncation_bound: float
    rounding_bound: float

    @property
    def error_bound(self) -> float:
        return self.truncation_bound + self.rounding_bound


@dataclass(frozen=True)
class RadiusSolution:
    alpha: float
    N: int
    radius: float
    accuracy: float
    error_bound: float  # certified bound on |P(N/2, radius^2/2) - alpha|
    radius_interval: tuple[float, float]
    evaluations: int
    bracket_evaluations: int
    t_max: float
    used_complement: bool


def _check_args(a, x):
    if not (a > 0 and math.isfinite(a)):
        raise InvalidInput(f"shape parameter must be positive, got {a}")
    if not (x >= 0 and math.isfinite(x)):
        raise InvalidInput(f"argument must be finite and >= 0, got {x}")


def _log_prefactor(a, x):
    # log of x^a e^-x / Gamma(a+1) and a bound on its relative rounding error
    lg = math.lgamma(a + 1.0)
    la = a * math.log(x)
    logp = la - x - lg
    rel = SAFETY * EPS * (abs(la) + x + abs(lg) + 4.0)
    return logp, rel


def series_sum(a: float, x: float, k0: int | None = None, target_err: float = DEFAULT_TARGET) -> SeriesSum:
    """Sum ``x^a e^-x / Gamma(a+1) * sum_{k<=k0} x^k / (a+1)_k``.

    With ``k0=None`` the sum runs until the tail bound is at most
    ``target_err/8``.  The tail bound is
    ``t_k0 (a+k0)/(a+k0-x-1)`` times the prefactor (it includes term k0 itself,
    so it dominates the terms beyond k0); it only applies once ``a+k0 > x+1``
    and is reported as infinite before that.
    """
    _check_args(a, x)
    if x == 0.0:
        return SeriesSum(a, x, 0 if k0 is None else k0, 0.0, 0.0, 0.0)
    logp, pref_rel = _log_prefactor(a, x)
    terms = [1.0]
    weighted = 2.0  # sum_k t_k (3k + 2): per-term recursion plus fsum rounding
    t = 1.0
    k = 0
    while True:
        if k0 is not None and k >= k0:
            break
        k += 1
        t *= x / (a + k)
        terms.append(t)
        weighted += t * (3 * k + 2)
        if t > _RESCALE:
            # keep partial sums finite for large x; shift the scale into logp
            terms = [u / _RESCALE for u in terms]
            t /= _RESCALE
            weighted /= _RESCALE
            logp += _LOG_RESCALE
        if k0 is None and a + k > x + 1.0:
            tail = t * (a + k) / (a + k - x - 1.0) * math.exp(logp)
            if tail <= target_err / 8.0:
                break
        if k > 10_000_000:
            raise NumericalFailure("series did not converge")
    pref = math.exp(logp)
    s = math.fsum(terms)
    value = pref * s
    if a + k > x + 1.0:
        trunc = pref * t * (a + k) / (a + k - x - 1.0)
    else:
        trunc = math.inf
    rounding = value * pref_rel + pref * weighted * SAFETY * EPS
    return SeriesSum(a, x, k, value, trunc, rounding)


def _continued_fraction_q(a, x):
    # modified Lentz for Q(a,x), x > 0
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, 100_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= EPS:
            return math.exp(a * math.log(x) - x - math.lgamma(a)) * h, i
    raise NumericalFailure("continued fraction did not converge")


def reg_inc_gamma(a: float, x: float, target_err: float = DEFAULT_TARGET) -> GammaEval:
    """Certified regularized lower incomplete gamma ``P(a, x)``.

    Raises PrecisionUnreachable when ``target_err`` is below 1e-15 or when the
    rounding floor at ``(a, x)`` exceeds the target.
    """
    _check_args(a, x)
    if not (target_err > 0):
        raise InvalidInput("target_err must be positive")
    if target_err < MIN_TARGET:
        raise PrecisionUnreachable(
            f"target {target_err:.1e} is below attainable double precision")
    if x == 0.0:
        return GammaEval(a, x, 0.0, 1.0, 0.0, 0, "exact")

    ser = series_sum(a, x, target_err=target_err)
    if ser.rounding_bound > target_err:
        raise PrecisionUnreachable(
            f"rounding floor {ser.rounding_bound:.2e} exceeds target {target_err:.1e}",
            a=a, x=x)
    p_ser = min(ser.value, 1.0)
    if x < a:
        value, comp = p_ser, 1.0 - p_ser
        err, method, terms = ser.error_bound, "series", ser.k0
    else:
        q_cf, n_cf = _continued_fraction_q(a, x)
        q_cf = min(max(q_cf, 0.0), 1.0)
        value, comp = 1.0 - q_cf, q_cf
        # certify via the series: |P_cf - P| <= |P_cf - P_ser| + |P_ser - P|
        err = abs(value - p_ser) + ser.error_bound + SAFETY * EPS
        method, terms = "continued-fraction", n_cf
        if err > target_err:
            raise PrecisionUnreachable(
                f"certified bound {err:.2e} exceeds target {target_err:.1e}", a=a, x=x)
    value = min(max(value, 0.0), 1.0)
    return GammaEval(a, x, value, comp, err, terms, method)


def chi_pdf(N: int, r: float) -> float:
    """Density of the radius of an N-dimensional standard Gaussian."""
    if r <= 0:
        return 0.0 if N > 1 else math.sqrt(2.0 / math.pi)
    a = N / 2.0
    return math.exp((N - 1) * math.log(r) - r * r / 2.0 - (a - 1.0) * math.log(2.0) - math.lgamma(a))


def _initial_tmax(N, alpha):
    # Wilson-Hilferty approximation of the chi-square quantile, padded
    z = NormalDist().inv_cdf(alpha)
    h = 2.0 / (9.0 * N)
    chi2 = N * max(1.0 - h + z * math.sqrt(h), 0.1) ** 3
    return max(1.5 * chi2 / 2.0, 1.0)


def _check_delta(delta):
    if not (delta > 0 and delta <= 1 and math.isfinite(delta)):
        raise InvalidInput(f"delta must lie in (0, 1], got {delta}")
    inv = 1.0 / delta
    if abs(inv - round(inv)) > 1e-9 * inv:
        raise InvalidInput(f"1/delta must be a positive integer, got 1/{inv:.12g}")


def mvcr_radius(N: int, alpha: float, delta: float = 1e-9) -> RadiusSolution:
    """Radius ``r`` with ``|P(N/2, r^2/2) - alpha| <= delta`` by certified bisection.

    For ``alpha > 0.9`` the search runs on the complement ``Q = 1 - P`` so the
    target ``1 - alpha`` keeps full relative precision.
    """
    if int(N) != N or N < 1:
        raise InvalidInput(f"N must be a positive integer, got {N}")
    N = int(N)
    if not (0.0 < alpha < 1.0):
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    _check_delta(delta)
    if delta < 4 * MIN_TARGET:
        raise PrecisionUnreachable(f"delta {delta:.1e} is below attainable precision")
    a = N / 2.0
    use_q = alpha > 0.9
    tol = delta / 4.0

    def excess(t):
        # signed distance from the target, oriented so it increases with t
        g = reg_inc_gamma(a, t, tol)
        if use_q:
            return (1.0 - alpha) - g.complement, g.error_bound
        return g.value - alpha, g.error_bound

    t_hi = _initial_tmax(N, alpha)
    bracket = 0
    while True:
        val, err = excess(t_hi)
        bracket += 1
        if val - err > 0 or abs(val) + err <= delta:
            break
        t_hi *= 2.0
        if bracket > 200:
            raise NumericalFailure("could not bracket the credible radius")
    t_max = t_hi
    lo, hi = 0.0, t_hi
    best = (t_hi, val, err) if abs(val) + err <= delta else None
    budget = 64 + math.ceil(math.log2(max(t_max / delta, 2.0)))
    evals = 0
    while best is None:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or evals >= budget:
            raise NumericalFailure(
                f"bisection exhausted after {evals} evaluations without meeting delta")
        val, err = excess(mid)
        evals += 1
        if abs(val) + err <= delta:
            best = (mid, val, err)
            break
        if val < 0:
            lo = mid
        else:
            hi = mid
    t, val, err = best
    return RadiusSolution(
        alpha=alpha, N=N, radius=math.sqrt(2.0 * t), accuracy=delta,
        error_bound=abs(val) + err,
        radius_interval=(math.sqrt(2.0 * lo), math.sqrt(2.0 * hi)),
        evaluations=evals, bracket_evaluations=bracket, t_max=t_max,
        used_complement=use_q)


def gamma_difference_bound(a: float, x_lo: float, x_hi: float) -> float:
    """Upper bound on ``P(a, x_hi) - P(a, x_lo)`` for ``0 <= x_lo <= x_hi``.

    For ``a >= 1`` the integrand ``t^(a-1) e^-t / Gamma(a)`` is at most 1, so
    the bound is ``x_hi - x_lo``.  For ``a < 1`` the integrand is unbounded at
    0 and ``(x_hi^a - x_lo^a)/Gamma(a+1)`` is used instead (drop ``e^-t``).
    """
    if not (0.0 <= x_lo <= x_hi):
        raise InvalidInput(f"need 0 <= x_lo <= x_hi, got ({x_lo}, {x_hi})")
    if a <= 0:
        raise InvalidInput("shape parameter must be positive")
    if a >= 1.0:
        return x_hi - x_lo
    return (x_hi ** a - x_lo ** a) / math.gamma(a + 1.0)
