"""TLS problem definition, genericity checks and the SVD-based solution."""
from dataclasses import dataclass
from typing import Optional
import logging

import numpy as np

from kernel.kernel import ThinSvd, as_dense, frozen, solve_square, thin_svd
from tlscond.tlscond import (
    DegenerateSolution,
    InvalidInput,
    NoSolutionDirection,
    NonGeneric,
    RankDeficient,
    SingularSystem,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL_GAP = 1e-12

# |v_{n+1}(n+1)| at or below this means no solution direction
DIRECTION_TOL = 1e-14

# agreement required between the SVD and normal-equation solution routes
CROSS_CHECK_RTOL = 1e-8


@dataclass(frozen=True)
class TlsProblem:
    """min ||[E, f]||_F subject to b + f in R(A + E), A is m x n with m > n"""
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = as_dense(self.A, "A")
        b = np.asarray(self.b, dtype=np.float64)
        if b.ndim == 2 and 1 in b.shape:
            b = b.ravel()
        if b.ndim != 1:
            raise InvalidInput(f"b must be a vector, got shape {b.shape}")
        m, n = A.shape
        if not m > n >= 1:
            raise InvalidInput(f"TLS needs m > n >= 1, got A of shape {m}x{n}")
        if b.shape[0] != m:
            raise InvalidInput(f"b has length {b.shape[0]}, A has {m} rows")
        if not np.all(np.isfinite(b)):
            raise InvalidInput("b has non-finite entries")
        object.__setattr__(self, 'A', frozen(A))
        object.__setattr__(self, 'b', frozen(b))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def augmented(self) -> np.ndarray:
        """[A, b]"""
        return np.column_stack([self.A, self.b])

    @property
    def frobenius_norm(self) -> float:
        """||[A, b]||_F"""
        return float(np.sqrt(np.sum(self.A ** 2) + np.sum(self.b ** 2)))

    def data_vector(self) -> np.ndarray:
        """[vec(A); b] with vec stacking columns"""
        return np.concatenate([self.A.ravel(order='F'), self.b])

    @classmethod
    def from_data_vector(cls, data: np.ndarray, m: int, n: int) -> 'TlsProblem':
        """Inverse of data_vector"""
        return cls(A=data[:m * n].reshape((m, n), order='F'), b=data[m * n:])


@dataclass(frozen=True)
class SpectralData:
    """Both thin SVDs plus the quantities extracted from the sign-fixed V.

    ``svd_augmented`` already carries the sign fix, so ``V[:, -1] == v_last``.
    """
    svd_augmented: ThinSvd
    svd_A: ThinSvd
    v_last: np.ndarray
    alpha: float
    beta: np.ndarray
    V11: np.ndarray

    @property
    def n(self) -> int:
        return self.V11.shape[0]

    @property
    def V(self) -> np.ndarray:
        return self.svd_augmented.right_vectors

    @property
    def sigmas(self) -> np.ndarray:
        """sigma_1 >= ... >= sigma_{n+1} of [A, b]"""
        return self.svd_augmented.singular_values

    @property
    def sigma_hats(self) -> np.ndarray:
        """sigma_hat_1 >= ... >= sigma_hat_n of A"""
        return self.svd_A.singular_values

    @property
    def sigma_1(self) -> float:
        return float(self.sigmas[0])

    @property
    def sigma_n(self) -> float:
        return float(self.sigmas[-2])

    @property
    def sigma_np1(self) -> float:
        return float(self.sigmas[-1])

    @property
    def sigma_hat_n(self) -> float:
        return float(self.sigma_hats[-1])

    @property
    def sigma_hat_nm1(self) -> Optional[float]:
        """None when n = 1"""
        if self.n < 2:
            return None
        return float(self.sigma_hats[-2])

    @property
    def x_norm(self) -> float:
        """||x_TLS|| = sqrt(1 - alpha^2) / alpha"""
        return float(np.linalg.norm(self.v_last[:-1]) / self.alpha)


@dataclass(frozen=True)
class TlsSolution:
    x_tls: np.ndarray
    residual: np.ndarray
    sigma_np1: float
    alpha: float
    gap: float
    consistent: bool = False

    @property
    def x_norm(self) -> float:
        return float(np.linalg.norm(self.x_tls))

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residual))


def spectral_data(p: TlsProblem) -> SpectralData:
    """SVDs of [A, b] and A, with v_{n+1} normalized to a negative last entry"""
    n = p.n
    svd_aug = thin_svd(p.augmented)
    svd_A = thin_svd(p.A)

    last = svd_aug.right_vectors[n, n]
    if abs(last) <= DIRECTION_TOL:
        raise NoSolutionDirection(
            f"last entry of v_{n + 1} is {last:.3e}; the TLS solution formula is undefined"
        )
    if last > 0.0:
        svd_aug = svd_aug.flip_columns([n])

    V = svd_aug.right_vectors
    return SpectralData(
        svd_augmented=svd_aug,
        svd_A=svd_A,
        v_last=frozen(V[:, n]),
        alpha=float(-V[n, n]),
        beta=frozen(V[n, :n]),
        V11=frozen(V[:n, :n]),
    )


def check_genericity(sd: SpectralData, tol_gap: float = DEFAULT_TOL_GAP) -> float:
    """Return the genericity gap sigma_hat_n - sigma_{n+1}.

    Checks full column rank, a gap above tol_gap * sigma_1 and a nonzero
    solution (A^T b != 0).
    """
    scale = sd.sigma_1
    if sd.sigma_hat_n <= tol_gap * scale:
        raise RankDeficient(
            f"sigma_hat_n = {sd.sigma_hat_n:.3e} is below {tol_gap:.1e} * sigma_1; A is rank deficient"
        )
    gap = sd.sigma_hat_n - sd.sigma_np1
    if gap <= tol_gap * scale:
        raise NonGeneric(
            f"genericity gap sigma_hat_n - sigma_(n+1) = {gap:.3e} is below {tol_gap:.1e} * sigma_1"
        )
    if sd.x_norm <= tol_gap:
        raise DegenerateSolution(f"||x_TLS|| = {sd.x_norm:.3e}; A^T b vanishes")
    return float(gap)


def normal_equations_solution(p: TlsProblem, sigma_np1: float) -> np.ndarray:
    """x = (A^T A - sigma_{n+1}^2 I)^{-1} A^T b"""
    P = p.A.T @ p.A - sigma_np1 ** 2 * np.eye(p.n)
    return solve_square(P, (p.A.T @ p.b).reshape(-1, 1)).ravel()


def solve_tls(
    p: TlsProblem,
    tol_gap: float = DEFAULT_TOL_GAP,
    spectral: Optional[SpectralData] = None,
) -> TlsSolution:
    """TLS solution from the last right singular vector of [A, b]"""
    sd = spectral if spectral is not None else spectral_data(p)
    gap = check_genericity(sd, tol_gap)

    v = sd.v_last
    x = -v[:-1] / v[-1]
    residual = p.A @ x - p.b
    consistent = sd.sigma_np1 <= tol_gap * sd.sigma_1
    if consistent:
        logger.info("b lies in R(A) within tolerance; the TLS problem is consistent")

    try:
        x_ne = normal_equations_solution(p, sd.sigma_np1)
        mismatch = np.linalg.norm(x_ne - x) / np.linalg.norm(x)
        if mismatch > CROSS_CHECK_RTOL:
            logger.warning(
                f"normal-equation cross-check differs by {mismatch:.2e} relative "
                f"(gap {gap:.2e}); keeping the SVD solution"
            )
    except SingularSystem as e:
        logger.warning(f"normal-equation cross-check skipped: {e}")

    return TlsSolution(
        x_tls=frozen(x),
        residual=frozen(residual),
        sigma_np1=sd.sigma_np1,
        alpha=sd.alpha,
        gap=gap,
        consistent=bool(consistent),
    )
