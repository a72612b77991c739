"""Dense numerical primitives shared by every other app.

A "dense matrix" here is a two-dimensional float64 ``numpy.ndarray`` with
finite entries. All functions are pure.
"""
from dataclasses import dataclass
import logging

import numpy as np
import scipy.linalg as la

from tlscond.tlscond import InvalidInput, SingularSystem

logger = logging.getLogger(__name__)

EPS = np.finfo(np.float64).eps

# smallest admissible sigma_min / sigma_max for solve_square
SINGULAR_RTOL = 1e-14


def as_dense(M, name: str = "matrix") -> np.ndarray:
    """Return M as a finite 2-D float64 array or raise InvalidInput"""
    try:
        arr = np.asarray(M, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InvalidInput(f"{name} is not numeric: {e}")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidInput(f"{name} must be two-dimensional, got {arr.ndim} dimensions")
    if arr.size == 0:
        raise InvalidInput(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def frozen(arr: np.ndarray) -> np.ndarray:
    """Read-only copy of arr"""
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ThinSvd:
    """M = U diag(s) V^T with U (m x k), s nonincreasing, V (p x k)"""
    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    @property
    def U(self) -> np.ndarray:
        return self.left_vectors

    @property
    def s(self) -> np.ndarray:
        return self.singular_values

    @property
    def V(self) -> np.ndarray:
        return self.right_vectors

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T

    def flip_columns(self, columns) -> 'ThinSvd':
        """Negate the given singular-vector pairs; the product is unchanged"""
        signs = np.ones(self.singular_values.shape[0])
        signs[list(columns)] = -1.0
        return ThinSvd(
            left_vectors=frozen(self.left_vectors * signs),
            singular_values=self.singular_values,
            right_vectors=frozen(self.right_vectors * signs),
        )


def thin_svd(M) -> ThinSvd:
    """Thin SVD of a tall (or square) dense matrix"""
    arr = as_dense(M)
    rows, cols = arr.shape
    if rows < cols:
        raise InvalidInput(f"thin_svd expects rows >= cols, got {rows}x{cols}")
    try:
        U, s, Vt = la.svd(arr, full_matrices=False, lapack_driver='gesdd', check_finite=False)
    except la.LinAlgError:
        # gesdd occasionally fails to converge where gesvd does not
        logger.debug(f"gesdd did not converge on {rows}x{cols} input, retrying with gesvd")
        U, s, Vt = la.svd(arr, full_matrices=False, lapack_driver='gesvd', check_finite=False)
    return ThinSvd(left_vectors=frozen(U), singular_values=frozen(s), right_vectors=frozen(Vt.T))


def spectral_norm(M) -> float:
    """2-norm, i.e. the largest singular value"""
    arr = as_dense(M)
    return float(la.svdvals(arr, check_finite=False)[0])


def solve_square(M, RHS) -> np.ndarray:
    """Solve M X = RHS by LU with partial pivoting.

    Raises SingularSystem when sigma_min(M) <= 1e-14 * sigma_max(M).
    """
    A = as_dense(M, "M")
    B = as_dense(RHS, "RHS")
    k = A.shape[0]
    if A.shape[1] != k:
        raise InvalidInput(f"solve_square needs a square matrix, got {A.shape[0]}x{A.shape[1]}")
    if B.shape[0] != k:
        raise InvalidInput(f"RHS has {B.shape[0]} rows, expected {k}")

    s = la.svdvals(A, check_finite=False)
    ratio = s[-1] / s[0] if s[0] > 0.0 else 0.0
    if ratio <= SINGULAR_RTOL:
        raise SingularSystem(f"matrix is singular within tolerance (sigma_min/sigma_max = {ratio:.3e})")
    lu, piv = la.lu_factor(A, check_finite=False)
    return la.lu_solve((lu, piv), B, check_finite=False)


def orthonormality_residual(Q) -> float:
    """||Q^T Q - I||_2"""
    arr = as_dense(Q)
    return spectral_norm(arr.T @ arr - np.eye(arr.shape[1]))
