"""Generalized Gell-Mann basis, density operators and Bloch coordinates.

Conventions
-----------
The basis is ordered as the real off-diagonal block (pairs j < k in
lexicographic order), then the imaginary off-diagonal block in the same pair
order, then the diagonal generators l = 1..d-1.  All generators satisfy
``Tr(s_i s_j) = 2 delta_ij`` and a state is written ``rho = I/d + sum_i w_i s_i``.

Conversions use the index structure of the basis directly, so they never
materialize the ``(d^2-1, d, d)`` stack unless ``GellMannBasis.matrices`` is
requested.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidDimension, InvalidInput

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_RTOL = 1e-10


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _scale(m):
    return max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0


@dataclass(frozen=True, eq=False)
class GellMannBasis:
    """Ordered generalized Gell-Mann basis of dimension ``dim``."""

    dim: int
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    # (d-1, d) real coefficients: diagonal of generator l
    diag: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.dim * self.dim - 1

    @property
    def n_pairs(self) -> int:
        return self.dim * (self.dim - 1) // 2

    @property
    def block_boundaries(self) -> tuple[int, int]:
        i_d = self.n_pairs
        return (i_d, 2 * i_d)

    def __len__(self):
        return self.size

    @functools.cached_property
    def matrices(self) -> np.ndarray:
        """Dense stack of shape ``(d^2-1, d, d)``."""
        d, p = self.dim, self.n_pairs
        out = np.zeros((self.size, d, d), dtype=complex)
        idx = np.arange(p)
        out[idx, self.rows, self.cols] = 1.0
        out[idx, self.cols, self.rows] = 1.0
        out[p + idx, self.rows, self.cols] = -1j
        out[p + idx, self.cols, self.rows] = 1j
        diag_idx = np.arange(d)
        for l in range(d - 1):
            out[2 * p + l, diag_idx, diag_idx] = self.diag[l]
        out.setflags(write=False)
        return out

    def coefficients(self, m) -> np.ndarray:
        """Return ``Tr(m s_i)`` for a (batched) matrix ``m`` of shape (..., d, d).

        The result is complex for non-Hermitian input; callers take the real
        part when ``m`` is Hermitian.
        """
        m = np.asarray(m)
        jk = m[..., self.rows, self.cols]
        kj = m[..., self.cols, self.rows]
        x = jk + kj
        y = 1j * (jk - kj)
        z = np.einsum("...j,lj->...l", np.diagonal(m, axis1=-2, axis2=-1), self.diag)
        return np.concatenate([x, y, z], axis=-1)

    def combine(self, w) -> np.ndarray:
        """Return ``sum_i w_i s_i`` for real coefficients of shape (..., d^2-1)."""
        w = np.asarray(w, dtype=float)
        d, p = self.dim, self.n_pairs
        out = np.zeros(w.shape[:-1] + (d, d), dtype=complex)
        off = w[..., :p] - 1j * w[..., p:2 * p]
        out[..., self.rows, self.cols] = off
        out[..., self.cols, self.rows] = np.conj(off)
        dg = w[..., 2 * p:] @ self.diag
        idx = np.arange(d)
        out[..., idx, idx] = dg
        return out


@functools.lru_cache(maxsize=64)
def build_basis(d: int) -> GellMannBasis:
    """Build the generalized Gell-Mann basis for dimension ``d >= 2``."""
    if int(d) != d or d < 2:
        raise InvalidDimension(f"dimension must be an integer >= 2, got {d}")
    d = int(d)
    rows, cols = np.triu_indices(d, k=1)
    diag = np.zeros((d - 1, d))
    for l in range(1, d):
        c = np.sqrt(2.0 / (l * (l + 1)))
        diag[l - 1, :l] = c
        diag[l - 1, l] = -l * c
    return GellMannBasis(d, _readonly(rows), _readonly(cols), _readonly(diag))


def _check_hermitian(m, tol=HERMITIAN_TOL):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if dev > tol * _scale(m):
        raise InvalidInput(f"matrix is not Hermitian (deviation {dev:.3e})")


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian unit-trace matrix. Positivity is a derived property."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        _check_hermitian(m)
        if m.shape[0] < 2:
            raise InvalidDimension("dimension must be >= 2")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL * _scale(m):
            raise InvalidInput(f"trace must be 1, got {tr.real:.15g}")
        object.__setattr__(self, "matrix", _readonly(0.5 * (m + m.conj().T)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityOperator":
        return cls(np.eye(d) / d)

    @classmethod
    def from_pure(cls, psi) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @functools.cached_property
    def eigenvalues(self) -> np.ndarray:
        return _readonly(np.linalg.eigvalsh(self.matrix))

    def mineig(self) -> float:
        return float(self.eigenvalues[0])

    def is_psd(self) -> bool:
        return is_psd(self)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class BlochVector:
    dim: int
    coords: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.coords, dtype=float)
        if w.ndim != 1 or w.size != self.dim * self.dim - 1:
            raise DimensionMismatch(
                f"expected {self.dim * self.dim - 1} coordinates, got {w.size}")
        object.__setattr__(self, "coords", _readonly(w))


NORM_CONVENTIONS = ("unit", "sqrt_d")


@dataclass(frozen=True, eq=False)
class PureStateVector:
    """State vector with an explicit normalization convention.

    ``unit`` means ``<psi|psi> = 1``; ``sqrt_d`` means ``<psi|psi> = d``.
    """

    amplitudes: np.ndarray
    norm_convention: str = "unit"

    def __post_init__(self):
        if self.norm_convention not in NORM_CONVENTIONS:
            raise InvalidInput(f"unknown norm convention {self.norm_convention!r}")
        psi = np.asarray(self.amplitudes, dtype=complex)
        if psi.ndim != 1 or psi.size < 2:
            raise InvalidDimension("amplitudes must be a vector of length >= 2")
        target = 1.0 if self.norm_convention == "unit" else float(psi.size)
        if abs(np.vdot(psi, psi).real - target) > 1e-9 * target:
            raise InvalidInput(
                f"squared norm must be {target} under the {self.norm_convention} convention")
        object.__setattr__(self, "amplitudes", _readonly(psi))

    @classmethod
    def normalized(cls, vec, norm_convention="unit") -> "PureStateVector":
        v = np.asarray(vec, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise InvalidInput("zero vector cannot be normalized")
        scale = 1.0 if norm_convention == "unit" else np.sqrt(v.size)
        return cls(v * (scale / nrm), norm_convention)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def unit(self) -> np.ndarray:
        return self.amplitudes / np.linalg.norm(self.amplitudes)


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityOperator):
        return rho.matrix
    m = np.asarray(rho, dtype=complex)
    _check_hermitian(m)
    return 0.5 * (m + m.conj().T)


def to_bloch(rho: DensityOperator, basis: GellMannBasis | None = None) -> BlochVector:
    """Coordinates ``w_i = Tr(rho s_i)/2``."""
    m = _as_matrix(rho)
    basis = basis or build_basis(m.shape[0])
    if m.shape[0] != basis.dim:
        raise DimensionMismatch(f"state has dim {m.shape[0]}, basis has dim {basis.dim}")
    return BlochVector(basis.dim, basis.coefficients(m).real / 2.0)


def from_bloch(w, basis: GellMannBasis | None = None) -> DensityOperator:
    """Build ``I/d + sum_i w_i s_i``; the result need not be PSD."""
    if isinstance(w, BlochVector):
        coords, d = w.coords, w.dim
    else:
        coords = np.asarray(w, dtype=float)
        d = basis.dim if basis is not None else int(round(np.sqrt(coords.size + 1)))
    basis = basis or build_basis(d)
    if coords.ndim != 1 or coords.size != basis.size:
        raise DimensionMismatch(f"expected {basis.size} coordinates, got {coords.size}")
    return DensityOperator(np.eye(basis.dim) / basis.dim + basis.combine(coords))


def pure_bloch_coords(psi: PureStateVector, basis: GellMannBasis | None = None) -> np.ndarray:
    """``v_i = <psi|s_i|psi>`` under the vector's own normalization."""
    if not isinstance(psi, PureStateVector):
        psi = PureStateVector.normalized(psi)
    basis = basis or build_basis(psi.dim)
    if psi.dim != basis.dim:
        raise DimensionMismatch(f"vector has dim {psi.dim}, basis has dim {basis.dim}")
    a = psi.amplitudes
    return basis.coefficients(np.outer(a, a.conj())).real


def pure_bloch_batch(psis, basis: GellMannBasis) -> np.ndarray:
    """Vectorized ``v_i`` for rows of ``psis`` with shape (m, d)."""
    psis = np.asarray(psis)
    outer = psis[:, :, None] * psis.conj()[:, None, :]
    return basis.coefficients(outer).real


def mineig(rho) -> float:
    """Smallest eigenvalue of a Hermitian matrix or DensityOperator."""
    if isinstance(rho, DensityOperator):
        return rho.mineig()
    return float(np.linalg.eigvalsh(_as_matrix(rho))[0])


def psd_tolerance(rho) -> float:
    m = _as_matrix(rho)
    ev = np.linalg.eigvalsh(m)
    return PSD_RTOL * (1.0 + float(np.max(np.abs(ev))))


def is_psd(rho) -> bool:
    """PSD iff ``mineig >= -1e-10 (1 + ||rho||_inf)``."""
    m = _as_matrix(rho)
    ev = np.linalg.eigvalsh(m)
    return bool(ev[0] >= -PSD_RTOL * (1.0 + float(np.max(np.abs(ev)))))


def psd_distance_lower_bound(rho) -> float:
    """Lower bound ``max(0, -mineig)`` on the Frobenius distance to the PSD cone."""
    return max(0.0, -mineig(rho))
