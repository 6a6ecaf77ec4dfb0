"""Balanced-sum instances encoded as state-space ellipsoids.

An instance ``a`` has a balanced partition iff the encoded ellipsoid leaves
the PSD states.  ``encode`` computes every constant of the construction so
each can be audited; ``solve_balanced_sum`` is the brute-force ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ellipsoid import VIOLATED, UNDECIDED, StateEllipsoid, check_containment, point_at
from .errors import InstanceTooLarge, InvalidInput, InvalidWitnessInput, ResolutionFailure
from .statespace import DensityOperator, build_basis, pure_bloch_coords, PureStateVector

EXHAUSTIVE_MAX = 24
MITM_MAX = 30


@dataclass(frozen=True)
class BalancedSumInstance:
    a: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(self.a)
        if len(vals) < 2:
            raise InvalidInput("an instance needs at least two entries")
        out = []
        for v in vals:
            if isinstance(v, float) and not v.is_integer():
                raise InvalidInput(f"entries must be integers, got {v}")
            v = int(v)
            if v < 1:
                raise InvalidInput(f"entries must be positive, got {v}")
            out.append(v)
        object.__setattr__(self, "a", tuple(out))

    @property
    def d(self) -> int:
        return len(self.a)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.a, dtype=float)


def _as_instance(inst) -> BalancedSumInstance:
    return inst if isinstance(inst, BalancedSumInstance) else BalancedSumInstance(tuple(inst))


def _signed_sums(vals):
    # sums of vals[0] + sum_{k>=1} +-vals[k]; bit k-1 of the index set means minus
    s = np.array([vals[0]], dtype=np.int64)
    for v in vals[1:]:
        s = np.concatenate([s + v, s - v])
    return s


def _all_signed_sums(vals):
    s = np.zeros(1, dtype=np.int64)
    for v in vals:
        s = np.concatenate([s + v, s - v])
    return s


def _signs(index, count):
    return [(-1 if (index >> k) & 1 else 1) for k in range(count)]


def solve_balanced_sum(inst) -> tuple[int, ...] | None:
    """Return a sign vector psi with ``a . psi = 0`` and ``psi_0 = +1``, or None."""
    inst = _as_instance(inst)
    a, d = inst.a, inst.d
    if d > MITM_MAX:
        raise InstanceTooLarge(f"d = {d} exceeds the enumeration budget of {MITM_MAX}")
    if sum(a) % 2:
        return None
    if d <= EXHAUSTIVE_MAX:
        hit = np.flatnonzero(_signed_sums(a) == 0)
        if hit.size == 0:
            return None
        return tuple([1] + _signs(int(hit[0]), d - 1))
    h = d // 2
    left = _signed_sums(a[:h])
    right = _all_signed_sums(a[h:])
    order = np.argsort(right, kind="stable")
    rs = right[order]
    pos = np.searchsorted(rs, -left)
    ok = (pos < rs.size) & (rs[np.minimum(pos, rs.size - 1)] == -left)
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return None
    li = int(idx[0])
    ri = int(order[pos[li]])
    return tuple([1] + _signs(li, h - 1) + _signs(ri, d - h))


def poly_p(x: float) -> float:
    return 2.0 * x ** 4


@dataclass(frozen=True, eq=False)
class BalancedSumEncoding:
    instance: BalancedSumInstance
    eps_sq: float
    B1: float
    B2: float
    R1: float
    R2: float
    q: float
    q_plus: float
    q_minus: float
    C1: float
    C2: float
    p_value: float  # p(||a|| d)
    gap: float  # objective gap 2/p(||a|| d)
    functional_gap: float  # same gap in units of the unit-norm positivity functional
    violation_bound: float
    violation_bound_literal: float
    radius_gap: float  # lower bound on r+ - r_{alpha/C} when a partition exists
    log10_radius_gap: float  # radius_gap underflows for d >= 4
    equiv_lhs: float
    equiv_residual: float
    ellipsoid: StateEllipsoid

    @property
    def d(self) -> int:
        return self.instance.d


def _radius_gap(R, violation_bound):
    """Lower bound on the credible-radius gap for a violating encoding.

    The squared-radius gap is twice the Gaussian mass bound
    ``e^-4 pi^(N/2) |S|^(1/2) / (2^(N/2) Gamma(N/2+1)) (2 p maxeig S)^-N``
    with ``p = 1/violation_bound``; it converts to radii through
    ``r+ + r <= 4 sqrt(2)``.
    """
    n = R.size
    var = R ** 2
    log_mass = (-4.0 + 0.5 * n * math.log(math.pi) + 0.5 * float(np.sum(np.log(var)))
                - 0.5 * n * math.log(2.0) - math.lgamma(0.5 * n + 1.0)
                - n * math.log(2.0 * float(np.max(var)) / violation_bound))
    log_gap = math.log(2.0) + log_mass - math.log(4.0 * math.sqrt(2.0))
    return math.exp(log_gap), log_gap / math.log(10.0)


def encode(inst) -> BalancedSumEncoding:
    """Encode an instance; all constants follow from ``a`` with ``eps^2 = 1/(2d-1)``."""
    inst = _as_instance(inst)
    a = inst.vector
    d = inst.d
    a2 = float(a @ a)
    p_val = poly_p(math.sqrt(a2) * d)
    B1 = 1.0 / p_val
    B2 = d * a2 / (1.0 + a2)
    eps_sq = 1.0 / (2 * d - 1)
    top = d * (d - 1) - B1 * (1.0 - eps_sq)
    den = d * (d - 1) - (B1 - B2) * (1.0 - eps_sq)
    R1 = math.sqrt(top) / den / math.sqrt(2.0)
    q = top / den
    R2 = math.sqrt(eps_sq) * R1
    dl = R1 * R1 - R2 * R2
    disc = 1.0 - 8.0 * d * dl * a2 / (1.0 + a2)
    root = math.sqrt(max(disc, 0.0))
    q_plus, q_minus = 0.5 * (1.0 + root), 0.5 * (1.0 - root)
    C1 = 2.0 * d * d - d - B1
    C2 = (1.0 - q) ** 2 / (2.0 * a2 * a2 * dl)
    lhs = math.sqrt(2.0) * math.sqrt((d * d - d - B1) * (1.0 - eps_sq) + d * (d - 1) * eps_sq) * R1
    resid = min(abs(lhs - q_plus), abs(lhs - q_minus))

    n = d * d - 1
    i_d = d * (d - 1) // 2
    radii = np.full(n, R2)
    radii[:i_d] = R1
    center = (q / d) * np.eye(d) + ((1.0 - q) / a2) * np.outer(a, a)
    ell = StateEllipsoid(DensityOperator(center / np.trace(center)), radii)

    vb = min(dl / (2.0 * q * d * p_val), 2.0 * q / d)
    vb_lit = min(dl / (2.0 * q * poly_p(math.sqrt(a2))), 2.0 * q / d)
    rgap, log_rgap = _radius_gap(radii, vb)
    return BalancedSumEncoding(
        instance=inst, eps_sq=eps_sq, B1=B1, B2=B2, R1=R1, R2=R2, q=q,
        q_plus=q_plus, q_minus=q_minus, C1=C1, C2=C2, p_value=p_val, gap=2.0 / p_val,
        functional_gap=dl / (p_val * d * d), violation_bound=vb, violation_bound_literal=vb_lit,
        radius_gap=rgap, log10_radius_gap=log_rgap, equiv_lhs=lhs, equiv_residual=resid, ellipsoid=ell)


def _as_encoding(x) -> BalancedSumEncoding:
    return x if isinstance(x, BalancedSumEncoding) else encode(x)


def objective(enc, psi) -> float:
    """``f(psi) - C2 (a.psi)^4`` for real psi with ``||psi||^2 = d``."""
    enc = _as_encoding(enc)
    psi = np.asarray(psi, dtype=float)
    d = enc.d
    if psi.shape != (d,):
        raise InvalidInput(f"expected a vector of length {d}")
    if abs(float(psi @ psi) - d) > 1e-9 * d:
        raise InvalidInput("psi must satisfy ||psi||^2 = d")
    a = enc.instance.vector
    s = float(a @ psi)
    a2 = float(a @ a)
    f = 2.0 * d * d - float(np.sum(psi ** 4)) - 2.0 * d * s * s / (1.0 + a2)
    return f - enc.C2 * s ** 4


def is_partition(inst, psi) -> bool:
    inst = _as_instance(inst)
    psi = np.asarray(psi)
    return (psi.shape == (inst.d,) and bool(np.all(np.abs(psi) == 1))
            and int(np.dot(np.array(inst.a, dtype=np.int64), psi.astype(np.int64))) == 0)


def violation_witness(enc, psi) -> DensityOperator:
    """Boundary state of the encoded ellipsoid that is negative along psi/sqrt(d)."""
    enc = _as_encoding(enc)
    if not is_partition(enc.instance, psi):
        raise InvalidWitnessInput("psi is not a balanced partition of the instance")
    return point_at(enc.ellipsoid, witness_coordinates(enc, psi))


def witness_coordinates(enc, psi) -> np.ndarray:
    enc = _as_encoding(enc)
    unit = PureStateVector.normalized(np.asarray(psi, dtype=float))
    v = pure_bloch_coords(unit, build_basis(enc.d))
    rv = enc.ellipsoid.radii * v
    return -rv / np.linalg.norm(rv)


def decide_via_geometry(enc, restarts: int = 16, grid_depth: int = 8, seed: int = 0) -> bool:
    """True iff the encoded ellipsoid is found to leave the PSD states.

    Containment is only accepted when the smallest probed functional value
    exceeds half the functional gap; otherwise ResolutionFailure is raised.
    """
    enc = _as_encoding(enc)
    verdict = check_containment(enc.ellipsoid, restarts=restarts, grid_depth=grid_depth,
                                certify_margin=enc.functional_gap / 2.0, restrict_real=True,
                                seed=seed)
    if verdict.status == UNDECIDED:
        raise ResolutionFailure("geometric check did not resolve the gap", verdict=verdict)
    return verdict.status == VIOLATED


def exhaustive_instances(max_d: int, max_entry: int):
    """All instances with 2 <= d <= max_d and entries in 1..max_entry."""
    import itertools
    for d in range(2, max_d + 1):
        for a in itertools.product(range(1, max_entry + 1), repeat=d):
            yield BalancedSumInstance(a)


def random_instance(rng, max_d: int, max_entry: int) -> BalancedSumInstance:
    d = int(rng.integers(2, max_d + 1))
    return BalancedSumInstance(tuple(int(x) for x in rng.integers(1, max_entry + 1, size=d)))
