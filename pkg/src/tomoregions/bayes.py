"""Gaussian posteriors truncated to the PSD states.

Coordinates
-----------
Posteriors live in Hilbert-Schmidt orthonormal coordinates ``x = sqrt(2) w``
where ``w`` are Bloch coordinates (``rho = I/d + sum w_i s_i``).  In these
coordinates the Euclidean norm is the Hilbert-Schmidt norm, the flat
reference measure is Lebesgue, and an ellipsoid with radii ``R_i`` and
covariance ``diag(R_i^2)`` has its boundary at Mahalanobis distance sqrt(2).

Two Monte Carlo estimators are available.  ``rejection`` draws Gaussian
samples and eigen-checks them; ``radial`` draws only directions and
integrates the radial chi law exactly up to the point where each ray leaves
the PSD cone, which resolves very thin violations that rejection sampling
would need astronomically many samples to hit.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc

from .ellipsoid import StateEllipsoid, sphere_contained_in_psd
from .errors import (DimensionMismatch, InsufficientSamples, InvalidInput, InvalidOption,
                     LemmaInapplicable, NormalizationUnresolvable)
from .specialfn import (chi_pdf, gamma_difference_bound, mvcr_radius, reg_inc_gamma,
                        series_sum)
from .statespace import PSD_RTOL, DensityOperator, build_basis, to_bloch

CHUNK = 1 << 16
DEFAULT_SAMPLES = 10 ** 6
BOOTSTRAP = 200
MIN_SAMPLES = 1000
METHODS = ("rejection", "radial")
EQUAL, GREATER, UNRESOLVED = "equal", "strictly-greater", "unresolved"


@dataclass(frozen=True, eq=False)
class GaussianPosterior:
    """Gaussian with mean ``mean`` and covariance ``cov`` in HS-orthonormal coordinates."""

    mean: DensityOperator
    cov: np.ndarray

    def __post_init__(self):
        if not isinstance(self.mean, DensityOperator):
            object.__setattr__(self, "mean", DensityOperator(self.mean))
        n = self.mean.dim ** 2 - 1
        c = np.array(self.cov, dtype=float)
        if c.shape != (n, n):
            raise DimensionMismatch(f"covariance must be {n}x{n}")
        if np.max(np.abs(c - c.T)) > 1e-12 * max(1.0, float(np.max(np.abs(c)))):
            raise InvalidInput("covariance must be symmetric")
        c = 0.5 * (c + c.T)
        ev = np.linalg.eigvalsh(c)
        if ev[0] <= 1e-12 * ev[-1] or ev[-1] <= 0:
            raise InvalidInput("covariance must be positive definite")
        c.setflags(write=False)
        object.__setattr__(self, "cov", c)

    @property
    def dim(self) -> int:
        return self.mean.dim

    @property
    def N(self) -> int:
        return self.dim ** 2 - 1

    @functools.cached_property
    def chol(self) -> np.ndarray:
        return np.linalg.cholesky(self.cov)

    @functools.cached_property
    def mean_coords(self) -> np.ndarray:
        return math.sqrt(2.0) * to_bloch(self.mean).coords

    def coords(self, rho) -> np.ndarray:
        return math.sqrt(2.0) * to_bloch(rho).coords

    def matrices(self, dx) -> np.ndarray:
        """States ``mean + dx`` for HS-coordinate displacements (batched)."""
        return self.mean.matrix + build_basis(self.dim).combine(np.asarray(dx) / math.sqrt(2.0))


def mahalanobis(post: GaussianPosterior, rho) -> float:
    """``sqrt((x - x_mean)^T cov^-1 (x - x_mean))`` in HS-orthonormal coordinates."""
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    if m.shape != (post.dim, post.dim):
        raise DimensionMismatch("state and posterior dimensions differ")
    dx = post.coords(rho) - post.mean_coords
    y = np.linalg.solve(post.chol, dx)
    return float(np.linalg.norm(y))


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _chunks(n):
    for i, start in enumerate(range(0, n, CHUNK)):
        yield i, min(CHUNK, n - start)


def _rejection_pass(post: GaussianPosterior, n: int, seed: int):
    radii = np.empty(n)
    accept = np.empty(n, dtype=bool)
    pos = 0
    for i, m in _chunks(n):
        z = chunk_rng(seed, i).standard_normal((m, post.N))
        ev = np.linalg.eigvalsh(post.matrices(z @ post.chol.T))
        tol = PSD_RTOL * (1.0 + np.max(np.abs(ev), axis=1))
        radii[pos:pos + m] = np.linalg.norm(z, axis=1)
        accept[pos:pos + m] = ev[:, 0] >= -tol
        pos += m
    return radii, accept


@functools.lru_cache(maxsize=8)
def _inv_sqrt(mat_bytes, d):
    mat = np.frombuffer(mat_bytes, dtype=complex).reshape(d, d)
    ev, vec = np.linalg.eigh(mat)
    return (vec / np.sqrt(ev)) @ vec.conj().T


def _exit_radii(post: GaussianPosterior, n: int, seed: int):
    """Distance along each sampled direction at which the ray leaves the PSD cone.

    For direction s the state is ``mean + rho M_s``; it stays PSD up to
    ``1/lambda_max(-mean^-1/2 M_s mean^-1/2)``.
    """
    if post.mean.mineig() <= 0:
        raise LemmaInapplicable("the radial estimator needs a strictly positive definite mean")
    d = post.dim
    k = _inv_sqrt(np.ascontiguousarray(post.mean.matrix).tobytes(), d)
    basis = build_basis(d)
    out = np.empty(n)
    pos = 0
    for i, m in _chunks(n):
        z = chunk_rng(seed, i).standard_normal((m, post.N))
        s = z / np.linalg.norm(z, axis=1, keepdims=True)
        ms = basis.combine((s @ post.chol.T) / math.sqrt(2.0))
        lam = np.linalg.eigvalsh(-(k @ ms @ k))[:, -1]
        with np.errstate(divide="ignore"):
            out[pos:pos + m] = np.where(lam > 0, 1.0 / np.where(lam > 0, lam, 1.0), np.inf)
        pos += m
    return out


def chi_cdf(N: int, r):
    """Vectorized ``P(N/2, r^2/2)``; used for bulk Monte Carlo weights."""
    r = np.asarray(r, dtype=float)
    with np.errstate(invalid="ignore"):
        out = gammainc(N / 2.0, np.where(np.isfinite(r), r * r / 2.0, 0.0))
    return np.where(np.isfinite(r), out, 1.0)


@dataclass(frozen=True, eq=False)
class TruncatedGaussianPosterior:
    base: GaussianPosterior
    C: float
    C_stderr: float
    estimator: str
    n: int
    seed: int
    psd_mass: float
    psd_mass_stderr: float
    n_accepted: int | None = None
    _radii: np.ndarray | None = field(default=None, repr=False)
    _accept: np.ndarray | None = field(default=None, repr=False)
    _exit: np.ndarray | None = field(default=None, repr=False)
    _weights: np.ndarray | None = field(default=None, repr=False)


def estimate_normalization(post: GaussianPosterior, n: int = DEFAULT_SAMPLES, seed: int = 0,
                           method: str = "rejection") -> TruncatedGaussianPosterior:
    """Monte Carlo estimate of ``C = 1 / P(PSD)`` with its standard error."""
    if method not in METHODS:
        raise InvalidOption(f"unknown method {method!r}; expected one of {METHODS}")
    if int(n) != n or n < MIN_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_SAMPLES} samples, got {n}")
    n = int(n)
    if method == "rejection":
        radii, accept = _rejection_pass(post, n, seed)
        k = int(np.count_nonzero(accept))
        if k == 0:
            raise NormalizationUnresolvable(
                "no PSD samples drawn", lower_bound=n / 3.0, samples=n)
        p = k / n
        se_p = math.sqrt(p * (1.0 - p) / n)
        return TruncatedGaussianPosterior(post, 1.0 / p, se_p / p ** 2, method, n, seed, p, se_p,
                                          n_accepted=k, _radii=radii, _accept=accept)
    rho = _exit_radii(post, n, seed)
    f = chi_cdf(post.N, rho)
    p = float(np.mean(f))
    if p <= 0:
        raise NormalizationUnresolvable("PSD mass underflowed", lower_bound=None, samples=n)
    se_p = float(np.std(f, ddof=1)) / math.sqrt(n)
    return TruncatedGaussianPosterior(post, 1.0 / p, se_p / p ** 2, method, n, seed, p, se_p,
                                      _exit=rho, _weights=f)


@dataclass(frozen=True)
class CredibleRadiusPair:
    alpha: float
    r_unconstrained: float  # r_{alpha/C}
    r_unconstrained_stderr: float
    r_truncated: float  # r+_alpha
    r_truncated_stderr: float
    difference: float
    difference_stderr: float
    criterion_holds: str
    witnesses: int  # certificates that E(r_{alpha/C}) leaves the PSD states
    method: str
    n: int
    C: float
    C_stderr: float


def _tri_state(diff, se, witnesses, z):
    if witnesses > 0 or diff > z * se:
        return GREATER
    if abs(diff) <= z * se:
        return EQUAL
    return UNRESOLVED


def _poisson_bootstrap(sorted_r, alpha, seed, reps):
    rng = chunk_rng(seed, 2 ** 31)
    out = np.empty(reps)
    for b in range(reps):
        w = rng.poisson(1.0, size=sorted_r.size)
        cw = np.cumsum(w)
        k = max(1, math.ceil(alpha * cw[-1]))
        out[b] = sorted_r[min(int(np.searchsorted(cw, k)), sorted_r.size - 1)]
    return out


def _solve_clipped_mean(f_sorted, target):
    """Solve ``mean(min(y, F)) = target`` for y; the left side is piecewise linear."""
    n = f_sorted.size
    cs = np.concatenate([[0.0], np.cumsum(f_sorted)])
    j = np.arange(n)
    # candidate with exactly j values below y
    y = (n * target - cs[:-1]) / (n - j)
    lo = np.concatenate([[-np.inf], f_sorted[:-1]])
    ok = (y >= lo) & (y <= f_sorted)
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return float(f_sorted[-1])
    return float(y[idx[0]])


def truncated_mvcr_radius(tpost: TruncatedGaussianPosterior, alpha: float, n: int | None = None,
                          seed: int | None = None, bootstrap: int = BOOTSTRAP, z: float = 3.0,
                          delta: float = 1e-12) -> CredibleRadiusPair:
    """PSD-truncated credible radius ``r+_alpha`` next to ``r_{alpha/C}``.

    When ``n`` and ``seed`` match the normalization run the stored samples are
    reused, so C and r+ come from one paired sample.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    n = tpost.n if n is None else int(n)
    seed = tpost.seed if seed is None else seed
    if (n, seed) != (tpost.n, tpost.seed):
        tpost = estimate_normalization(tpost.base, n, seed, tpost.estimator)
    N = tpost.base.N
    if tpost.estimator == "radial":
        return _radial_pair(tpost, alpha, z, delta)
    if tpost.estimator != "rejection":
        raise InvalidOption(f"estimator {tpost.estimator!r} carries no samples")

    target = alpha / tpost.C
    if not (0.0 < target < 1.0):
        raise InvalidInput("alpha/C must lie in (0, 1)")
    acc = np.sort(tpost._radii[tpost._accept])
    if acc.size < 10:
        raise InsufficientSamples(f"only {acc.size} PSD samples")
    k = max(1, math.ceil(alpha * acc.size))
    r_plus = float(acc[k - 1])
    boot = _poisson_bootstrap(acc, alpha, seed, bootstrap)
    se_plus = float(np.std(boot, ddof=1))

    r_u = mvcr_radius(N, target, delta).radius
    dens = chi_pdf(N, r_u)
    se_u = alpha * tpost.C_stderr / tpost.C ** 2 / dens if dens > 0 else math.inf
    diff = r_plus - r_u
    se = math.hypot(se_plus, se_u)
    rejected = tpost._radii[~tpost._accept]
    witnesses = int(np.count_nonzero(rejected < r_u - z * se_u))
    return CredibleRadiusPair(alpha, r_u, se_u, r_plus, se_plus, diff, se,
                              _tri_state(diff, se, witnesses, z), witnesses, "rejection", n,
                              tpost.C, tpost.C_stderr)


def _radial_pair(tpost, alpha, z, delta):
    N = tpost.base.N
    f = tpost._weights
    n = f.size
    mean_f = float(np.mean(f))
    y0 = alpha * mean_f
    fs = np.sort(f)
    y = y0 if fs[0] >= y0 else _solve_clipped_mean(fs, y0)
    y = min(max(y, y0), 1.0 - 1e-16)

    r_u = mvcr_radius(N, y0, delta).radius
    r_plus = r_u if y == y0 else mvcr_radius(N, y, delta).radius

    # sandwich standard errors of the estimating equation mean(min(y,F) - alpha F) = 0
    slope = float(np.mean(f > y))
    phi = np.minimum(y, f) - alpha * f
    se_y = float(np.std(phi, ddof=1)) / math.sqrt(n) / max(slope, 1.0 / n)
    # influence of y_hat is -phi/slope, of y0 it is alpha (F - mean F)
    infl_d = -phi / max(slope, 1.0 / n) - alpha * (f - mean_f)
    se_d = float(np.std(infl_d, ddof=1)) / math.sqrt(n)
    se_y0 = alpha * tpost.psd_mass_stderr
    dens_p = chi_pdf(N, r_plus)
    dens_u = chi_pdf(N, r_u)
    se_plus = se_y / dens_p
    se_u = se_y0 / dens_u
    diff = r_plus - r_u
    se = se_d / dens_p
    # every direction exiting before r_u certifies that E(r_{alpha/C}) leaves the PSD states
    rho = tpost._exit
    witnesses = int(np.count_nonzero(rho < r_u * (1.0 - 1e-9)))
    borderline = int(np.count_nonzero(rho < r_u * (1.0 + 1e-9)))
    if witnesses:
        state = GREATER
    elif borderline:
        state = UNRESOLVED
    else:
        state = EQUAL
    return CredibleRadiusPair(alpha, r_u, se_u, r_plus, se_plus, diff, se, state, witnesses,
                              "radial", n, tpost.C, tpost.C_stderr)


@dataclass(frozen=True)
class EncodedPosterior:
    post: GaussianPosterior
    alpha_over_C: float
    alpha_over_C_error: float


def encode_ellipsoid_as_posterior(e: StateEllipsoid) -> EncodedPosterior:
    """Posterior whose sqrt(2) Mahalanobis ellipsoid is exactly ``e``."""
    o = e.orientation_matrix()
    cov = (o * e.radii ** 2) @ o.T
    g = reg_inc_gamma(e.size / 2.0, 1.0)
    return EncodedPosterior(GaussianPosterior(e.center, cov), g.value, g.error_bound)


@dataclass(frozen=True)
class CriterionVerdict:
    status: str  # contained | violated | unresolved
    criterion: str  # equal | strictly-greater | unresolved
    pair: CredibleRadiusPair
    threshold: float
    alpha: float
    alpha_over_C: float


def criterion_decides_containment(e, n: int = DEFAULT_SAMPLES, seed: int = 0,
                                  method: str = "radial", gap: float | None = None,
                                  z: float = 3.0) -> CriterionVerdict:
    """Decide containment from the credible-radius criterion.

    ``e`` is a hardness encoding (its radius gap is used) or a plain
    ellipsoid together with an explicit ``gap``.  Violated needs
    ``r+ - r_{alpha/C} - z se > gap/2``; contained needs
    ``|r+ - r_{alpha/C}| + z se < gap/2``.
    """
    from .hardness import BalancedSumEncoding
    if isinstance(e, BalancedSumEncoding):
        ell = e.ellipsoid
        gap = e.radius_gap if gap is None else gap
    else:
        ell = e
        gap = 0.0 if gap is None else gap
    enc = encode_ellipsoid_as_posterior(ell)
    tpost = estimate_normalization(enc.post, n, seed, method)
    alpha = tpost.C * enc.alpha_over_C
    thr = gap / 2.0
    if not (0.0 < alpha < 1.0):
        raise InvalidInput("encoded credibility C P(N/2, 1) is not below 1")
    pair = truncated_mvcr_radius(tpost, alpha, z=z)
    if pair.criterion_holds == GREATER and pair.difference - z * pair.difference_stderr > thr:
        status = "violated"
    elif pair.criterion_holds == EQUAL and abs(pair.difference) + z * pair.difference_stderr < thr:
        status = "contained"
    elif pair.criterion_holds == EQUAL and thr == 0.0 and pair.difference == 0.0:
        status = "contained"
    else:
        status = "unresolved"
    return CriterionVerdict(status, pair.criterion_holds, pair, thr, alpha, enc.alpha_over_C)


@dataclass(frozen=True)
class SeriesNormalization:
    value: float
    error_bound: float
    ball_radius: float  # Mahalanobis radius of the contained credible ball
    ball_radius_bloch: float  # the same ball's radius in Bloch coordinates
    alpha_tilde: float
    r_plus: float
    r_plus_error: float
    series_terms: int


def ball_radius(post: GaussianPosterior) -> float:
    """Mahalanobis radius whose credible ellipsoid is guaranteed PSD."""
    d = post.dim
    lam = post.mean.mineig()
    if lam <= 0:
        raise LemmaInapplicable("mean must be strictly positive definite")
    return math.sqrt(d / (2.0 * (d - 1))) * lam / math.sqrt(float(np.linalg.eigvalsh(post.cov)[-1]))


def ball_series_normalization(post: GaussianPosterior, oracle, delta: float = 1e-12,
                          k0: int | None = None) -> SeriesNormalization:
    """Normalization constant through a credible ball known to be PSD.

    ``oracle(alpha)`` returns ``(r_plus, error)`` for the truncated credible
    radius at credibility alpha.  The credibility of the contained ball comes
    from a certified truncated series and C is the ratio of two series values.
    """
    r = ball_radius(post)
    N = post.N
    a = N / 2.0
    s_ball = series_sum(a, r * r / 2.0, k0=k0, target_err=delta)
    # shade alpha down by its error so the credible ball stays inside radius r
    alpha_t = s_ball.value - s_ball.error_bound
    if not (0.0 < alpha_t < 1.0):
        raise LemmaInapplicable("contained ball carries no resolvable credibility")
    r_plus, r_err = oracle(alpha_t)
    r_err = abs(float(r_err))
    s_plus = series_sum(a, r_plus * r_plus / 2.0, k0=k0, target_err=delta)
    lo = max(r_plus - r_err, 0.0) ** 2 / 2.0
    hi = (r_plus + r_err) ** 2 / 2.0
    e = s_plus.error_bound + gamma_difference_bound(a, lo, hi)
    p = s_plus.value
    value = alpha_t / p
    bound = alpha_t * e / (p * (p - e)) if p > e else math.inf
    return SeriesNormalization(value, bound, r, r * math.sqrt(float(np.linalg.eigvalsh(post.cov)[-1]) / 2.0),
                               alpha_t, r_plus, r_err, s_plus.k0)


def quantile_oracle(tpost: TruncatedGaussianPosterior, z: float = 3.0):
    """Wrap the Monte Carlo truncated radius as an oracle for ball_series_normalization."""
    def oracle(alpha):
        pair = truncated_mvcr_radius(tpost, alpha)
        return pair.r_truncated, z * pair.r_truncated_stderr
    return oracle


def contained_ball_check(post: GaussianPosterior) -> bool:
    """True when the ball of radius ``ball_radius`` passes the sphere criterion."""
    return sphere_contained_in_psd(post.mean, ball_radius(post) * math.sqrt(
        float(np.linalg.eigvalsh(post.cov)[-1]) / 2.0))
