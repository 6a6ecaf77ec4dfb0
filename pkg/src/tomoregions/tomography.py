"""Measurement designs, linear inversion and confidence ellipsoids.

Outcomes are modelled as ``y = Q w + offsets`` with ``Q_ki = Tr(E_k s_i)`` and
``offsets_k = Tr(E_k)/d``, where ``w`` are the Bloch coordinates of the state.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .ellipsoid import StateEllipsoid
from .errors import DegenerateEllipsoid, DimensionMismatch, IncompleteDesign, InvalidInput
from .specialfn import mvcr_radius
from .statespace import DensityOperator, build_basis, from_bloch, is_psd


@dataclass(frozen=True, eq=False)
class MeasurementDesign:
    operators: np.ndarray  # (m, d, d)

    def __post_init__(self):
        ops = np.array(self.operators, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise InvalidInput("operators must be a list of square matrices")
        d = ops.shape[1]
        if d < 2:
            raise InvalidInput("operators must be at least 2x2")
        dev = np.max(np.abs(ops - np.conj(np.swapaxes(ops, 1, 2))))
        if dev > 1e-12 * max(1.0, float(np.max(np.abs(ops)))):
            raise InvalidInput("measurement operators must be Hermitian")
        ops = 0.5 * (ops + np.conj(np.swapaxes(ops, 1, 2)))
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        n = d * d - 1
        if ops.shape[0] < n:
            raise IncompleteDesign(f"need at least {n} operators, got {ops.shape[0]}")
        if np.linalg.matrix_rank(self.design_matrix) < n:
            raise IncompleteDesign("design matrix does not have full column rank")

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    @property
    def m(self) -> int:
        return self.operators.shape[0]

    @functools.cached_property
    def design_matrix(self) -> np.ndarray:
        q = build_basis(self.dim).coefficients(self.operators).real
        q.setflags(write=False)
        return q

    @functools.cached_property
    def offsets(self) -> np.ndarray:
        off = np.trace(self.operators, axis1=1, axis2=2).real / self.dim
        off.setflags(write=False)
        return off


@dataclass(frozen=True, eq=False)
class OutcomeEllipsoid:
    """``{y : (y - center)^T shape (y - center) <= 1}``."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        c = np.array(self.center, dtype=float)
        b = np.array(self.shape, dtype=float)
        if c.ndim != 1 or b.shape != (c.size, c.size):
            raise DimensionMismatch("shape must be an m x m matrix for an m-vector center")
        if np.max(np.abs(b - b.T)) > 1e-10 * max(1.0, float(np.max(np.abs(b)))):
            raise InvalidInput("shape matrix must be symmetric")
        b = 0.5 * (b + b.T)
        if np.linalg.eigvalsh(b)[0] < -1e-10 * max(1.0, float(np.max(np.abs(b)))):
            raise InvalidInput("shape matrix must be positive semidefinite")
        c.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", b)


def pauli_design(d: int) -> MeasurementDesign:
    """Minimal design whose operators are the basis generators themselves."""
    return MeasurementDesign(build_basis(d).matrices)


def projector_design(d: int, overcomplete: bool = False) -> MeasurementDesign:
    """Rank-one projectors onto |j>, (|j>+|k>)/sqrt2 and (|j>+i|k>)/sqrt2.

    With ``overcomplete`` the ``-`` and ``-i`` superpositions are added too.
    """
    vecs = [np.eye(d)[j] for j in range(d)]
    phases = (1, 1j, -1, -1j) if overcomplete else (1, 1j)
    for j in range(d):
        for k in range(j + 1, d):
            for ph in phases:
                v = np.zeros(d, dtype=complex)
                v[j], v[k] = 1.0, ph
                vecs.append(v / math.sqrt(2.0))
    return MeasurementDesign(np.array([np.outer(v, np.conj(v)) for v in vecs]))


def forward(design: MeasurementDesign, rho) -> np.ndarray:
    """Noiseless outcome vector ``Tr(E_k rho)``."""
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    if m.shape != (design.dim, design.dim):
        raise DimensionMismatch("state and design dimensions differ")
    return np.einsum("kij,ji->k", design.operators, m).real


def linear_inversion(design: MeasurementDesign, y_hat) -> DensityOperator:
    """Least-squares state estimate ``w = (Q^T Q)^-1 Q^T (y - offsets)``; may be non-PSD."""
    y = np.asarray(y_hat, dtype=float)
    if y.shape != (design.m,):
        raise DimensionMismatch(f"expected {design.m} outcomes, got shape {y.shape}")
    w, *_ = np.linalg.lstsq(design.design_matrix, y - design.offsets, rcond=None)
    return from_bloch(w, build_basis(design.dim))


def confidence_ellipsoid(design: MeasurementDesign, oe: OutcomeEllipsoid) -> StateEllipsoid:
    """Pull an outcome ellipsoid back to state space via ``B' = Q^T B Q = O D O^T``."""
    if oe.center.size != design.m:
        raise DimensionMismatch("outcome ellipsoid and design sizes differ")
    q = design.design_matrix
    bp = q.T @ oe.shape @ q
    bp = 0.5 * (bp + bp.T)
    dvals, o = np.linalg.eigh(bp)
    if dvals[0] <= 1e-12 * max(1.0, float(dvals[-1])):
        raise DegenerateEllipsoid("pulled-back shape matrix is singular")
    # fix column signs so the orientation is deterministic
    flip = np.sign(o[np.argmax(np.abs(o), axis=0), np.arange(o.shape[1])])
    o = o * flip
    return StateEllipsoid(linear_inversion(design, oe.center), 1.0 / np.sqrt(dvals), o)


def gaussian_outcome_ellipsoid(y_hat, cov, alpha: float, delta: float = 1e-9) -> OutcomeEllipsoid:
    """Outcome region ``(y-y_hat)^T cov^-1 (y-y_hat) <= r_alpha^2`` at credibility alpha."""
    y = np.asarray(y_hat, dtype=float)
    c = np.asarray(cov, dtype=float)
    if np.linalg.eigvalsh(c)[0] <= 0:
        raise DegenerateEllipsoid("covariance must be positive definite")
    r = mvcr_radius(y.size, alpha, delta).radius
    return OutcomeEllipsoid(y, np.linalg.inv(c) / r ** 2)


@dataclass(frozen=True, eq=False)
class SimulatedData:
    y_hat: np.ndarray
    gaussian_cov: np.ndarray
    shots: int


def setting_rng(seed: int, k: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, setting index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))


def simulate_counts(design: MeasurementDesign, rho0: DensityOperator, shots_per_setting: int,
                    seed: int) -> SimulatedData:
    """Two-outcome sampling of each effect; plug-in variance ``p(1-p)/shots``."""
    if int(shots_per_setting) != shots_per_setting or shots_per_setting <= 0:
        raise InvalidInput("shots per setting must be a positive integer")
    if not is_psd(rho0):
        raise InvalidInput("simulation needs a PSD state")
    ev = np.linalg.eigvalsh(design.operators)
    if ev.min() < -1e-12 or ev.max() > 1 + 1e-12:
        raise InvalidInput("effect spectra must lie in [0, 1]")
    shots = int(shots_per_setting)
    p = np.clip(forward(design, rho0), 0.0, 1.0)
    counts = np.array([setting_rng(seed, k).binomial(shots, pk) for k, pk in enumerate(p)])
    y = counts / shots
    return SimulatedData(y, np.diag(y * (1.0 - y) / shots), shots)
