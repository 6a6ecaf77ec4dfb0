"""Independent reference computations used only by the tests."""

import itertools
import math

import mpmath
import numpy as np
from scipy import integrate, optimize, stats


def gamma_p_quadrature(a, x, dps=40):
    """P(a, x) by tanh-sinh quadrature of the integrand at high precision."""
    if x == 0:
        return 0.0
    with mpmath.workdps(dps):
        a_ = mpmath.mpf(a)
        val = mpmath.quad(lambda t: t ** (a_ - 1) * mpmath.exp(-t), [0, min(x, a_), x] if x > a_ else [0, x])
        return float(val / mpmath.gamma(a_))


def psd_projection_distance(m):
    """Frobenius distance to the PSD cone by clipping eigenvalues."""
    ev, vec = np.linalg.eigh(m)
    proj = (vec * np.clip(ev, 0, None)) @ vec.conj().T
    return float(np.linalg.norm(m - proj))


def has_partition(a):
    a = list(a)
    for signs in itertools.product([1, -1], repeat=len(a)):
        if sum(s * v for s, v in zip(signs, a)) == 0:
            return True
    return False


def naive_gell_mann(d):
    mats = []
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    for j, k in pairs:
        m = np.zeros((d, d), complex)
        m[j, k] = m[k, j] = 1
        mats.append(m)
    for j, k in pairs:
        m = np.zeros((d, d), complex)
        m[j, k], m[k, j] = -1j, 1j
        mats.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), complex)
        m[range(l), range(l)] = 1
        m[l, l] = -l
        mats.append(math.sqrt(2 / (l * (l + 1))) * m)
    return np.array(mats)


class QubitBallOracle:
    """Isotropic Gaussian in HS coordinates truncated to the qubit Bloch ball.

    The mean sits at HS distance ``offset`` from the maximally mixed state and
    the covariance is ``s^2 Id``.  In whitened coordinates the PSD states form
    a ball of radius ``R0 = (1/sqrt2)/s`` whose center is ``b = offset/s``
    away, so the sphere of radius t meets it in a spherical cap of area
    fraction ``(R0^2 - (t-b)^2) / (4 t b)``.
    """

    N = 3

    def __init__(self, offset, s):
        self.R0 = (1.0 / math.sqrt(2.0)) / s
        self.b = offset / s

    def cap(self, t):
        R0, b = self.R0, self.b
        if b == 0:
            return 1.0 if t <= R0 else 0.0
        if t <= R0 - b:
            return 1.0
        if t >= R0 + b or t <= b - R0:
            return 0.0
        return (R0 * R0 - (t - b) ** 2) / (4.0 * t * b)

    def _mass(self, r):
        pdf = stats.chi(self.N).pdf
        pts = [p for p in (abs(self.R0 - self.b), self.R0 + self.b) if 0 < p < r]
        val, _ = integrate.quad(lambda t: pdf(t) * self.cap(t), 0, r, points=pts or None,
                                limit=400, epsabs=1e-14, epsrel=1e-12)
        return val

    def psd_mass(self):
        return self._mass(self.R0 + self.b + 1.0)

    def C(self):
        return 1.0 / self.psd_mass()

    def r_plus(self, alpha):
        target = alpha * self.psd_mass()
        hi = self.R0 + self.b + 1.0
        return optimize.brentq(lambda r: self._mass(r) - target, 1e-12, hi, xtol=1e-13)
