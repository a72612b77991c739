"""Cheap lower and upper bounds for the absolute TLS condition number.

Every bound is a function of scalars (singular values, alpha, beta, norms)
so that values obtained elsewhere, e.g. from an iterative partial SVD, can
be passed in directly. ``bound_report`` assembles all of them for a problem
whose SVDs are at hand.

The ladder, from what each bound needs:
    alpha_bounds        sigma_n, sigma_{n+1}, alpha            ratio exactly 1/alpha
    last_row_bounds     all sigma_i and the last row of V      ratio < 4 when alpha <= 1/2
    a_spectrum_bounds   sigma_hat_{n-1}, sigma_hat_n, ...
    gap_lower_bound     sigma_hat_n, sigma_{n+1}, alpha
    gap_upper_bound     adds rho = sigma_{n+1} / sigma_n, needs alpha <= 1/2
    bg_upper            Baboulin-Gratton upper bound (absolute and relative)
    gvl_rel_bound       Golub-Van Loan relative upper bound
"""
from enum import Enum
from typing import Dict, Optional, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from conditioning.conditioning import s_weights
from kernel.kernel import as_dense, orthonormality_residual, solve_square, spectral_norm
from tls.tls import SpectralData, TlsSolution
from tlscond.tlscond import (
    AlphaNearOne,
    InvalidInput,
    NonGeneric,
    NotApplicable,
    NotAvailable,
    TlsError,
)

logger = logging.getLogger(__name__)

# 1 - alpha below this makes sqrt(1 - alpha^2) useless as a divisor
ALPHA_ONE_TOL = 1e-14

ORTHOGONALITY_TOL = 1e-10


class BoundStatus(str, Enum):
    APPLICABLE = "applicable"
    NOT_APPLICABLE = "not_applicable"
    NOT_AVAILABLE = "not_available"
    FAILED = "failed"


class BoundSet(BaseModel):
    """All bounds for one problem with their applicability.

    Absolute bounds unless the name ends in ``_rel``. A field is None
    exactly when its status is not ``applicable``.
    """
    model_config = ConfigDict(frozen=True)

    alpha_lower: Optional[float] = None
    alpha_upper: Optional[float] = None
    last_row_lower: Optional[float] = None
    last_row_upper: Optional[float] = None
    a_spectrum_lower: Optional[float] = None
    a_spectrum_upper: Optional[float] = None
    gap_lower: Optional[float] = None
    gap_upper: Optional[float] = None
    bg_upper_abs: Optional[float] = None
    bg_upper_rel: Optional[float] = None
    gvl_rel: Optional[float] = None
    rho: float
    alpha: float
    a_spectrum_lower_dominated: Optional[bool] = None
    status: Dict[str, BoundStatus]
    provenance: Dict[str, str]

    def lowers(self) -> Dict[str, float]:
        """Applicable absolute lower bounds"""
        names = ('alpha_lower', 'last_row_lower', 'a_spectrum_lower', 'gap_lower')
        return {k: getattr(self, k) for k in names if getattr(self, k) is not None}

    def uppers(self) -> Dict[str, float]:
        """Applicable absolute upper bounds"""
        names = ('alpha_upper', 'last_row_upper', 'a_spectrum_upper', 'gap_upper', 'bg_upper_abs')
        return {k: getattr(self, k) for k in names if getattr(self, k) is not None}


def _require_gap(upper: float, lower: float, what: str) -> None:
    if not upper > lower:
        raise NonGeneric(f"{what}: need {upper:.6e} > sigma_(n+1) = {lower:.6e}")


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise InvalidInput(f"alpha must lie in (0, 1], got {alpha}")


def alpha_bounds(sigma_n: float, sigma_np1: float, alpha: float) -> Tuple[float, float]:
    """alpha^-1 s_n <= kappa <= alpha^-2 s_n"""
    _require_gap(sigma_n, sigma_np1, "alpha_bounds")
    _check_alpha(alpha)
    s_n = np.sqrt(sigma_n ** 2 + sigma_np1 ** 2) / (sigma_n ** 2 - sigma_np1 ** 2)
    lower = s_n / alpha
    return float(lower), float(lower / alpha)


def _row_terms(weights: np.ndarray, beta: np.ndarray, alpha: float) -> Tuple[float, float, float]:
    """(sqrt(sum beta_i^2 w_i^2) / sqrt(1 - alpha^2), sqrt(1 - alpha^2 - beta_n^2) / sqrt(1 - alpha^2), w_n)"""
    if alpha >= 1.0 - ALPHA_ONE_TOL:
        raise AlphaNearOne(f"alpha = {alpha!r} leaves no room for sqrt(1 - alpha^2)")
    root = np.sqrt(1.0 - alpha ** 2)
    weighted = float(np.sqrt(np.sum((beta * weights) ** 2))) / root
    # rounding can push 1 - alpha^2 - beta_n^2 slightly negative when n = 1
    tail = float(np.sqrt(max(1.0 - alpha ** 2 - beta[-1] ** 2, 0.0))) / root
    return weighted, tail, float(weights[-1])


def sandwich_bounds(W, sbar) -> Tuple[float, float]:
    """Bracket ||W11^{-T} diag(sbar)|| for orthogonal W with W(n+1, n+1) = -alpha.

    sbar must be positive and nondecreasing. The upper bound is below four
    times the lower bound whenever alpha <= 1/2.
    """
    W = as_dense(W, "W")
    k = W.shape[0]
    if W.shape[1] != k or k < 2:
        raise InvalidInput(f"W must be square of order >= 2, got {W.shape}")
    if orthonormality_residual(W) > ORTHOGONALITY_TOL:
        raise InvalidInput("W is not orthogonal within 1e-10")
    sbar = np.asarray(sbar, dtype=np.float64).ravel()
    if sbar.shape[0] != k - 1:
        raise InvalidInput(f"sbar needs {k - 1} entries, got {sbar.shape[0]}")
    if np.any(sbar <= 0.0) or np.any(np.diff(sbar) < 0.0):
        raise InvalidInput("sbar must be positive and nondecreasing")
    alpha = float(-W[-1, -1])
    if not 0.0 < alpha < 1.0:
        raise InvalidInput(f"W(n+1, n+1) must equal -alpha with 0 < alpha < 1, got {W[-1, -1]}")

    weighted, tail, s_n = _row_terms(sbar, W[-1, :-1], alpha)
    lower = 0.5 * (weighted / alpha + tail * s_n)
    upper = weighted / alpha + s_n
    return float(lower), float(upper)


def sandwich_exact(W, sbar) -> float:
    """||W11^{-T} diag(sbar)|| by dense solve"""
    W = as_dense(W, "W")
    n = W.shape[0] - 1
    return spectral_norm(solve_square(W[:n, :n].T, np.diag(np.asarray(sbar, dtype=np.float64))))


def last_row_bounds(sigmas, beta, alpha: float) -> Tuple[float, float]:
    """Bounds from all singular values of [A, b] and the last row [beta, -alpha] of V"""
    _check_alpha(alpha)
    s = s_weights(np.asarray(sigmas, dtype=np.float64))
    beta = np.asarray(beta, dtype=np.float64).ravel()
    if beta.shape != s.shape:
        raise InvalidInput(f"beta has {beta.shape[0]} entries, expected {s.shape[0]}")
    weighted, tail, s_n = _row_terms(s, beta, alpha)
    lower = 0.5 * (weighted / alpha ** 2 + tail * s_n / alpha)
    upper = weighted / alpha ** 2 + s_n / alpha
    return float(lower), float(upper)


def a_spectrum_bounds(
    sigma_hat_nm1: Optional[float],
    sigma_hat_n: float,
    sigma_np1: float,
    alpha: float,
) -> Tuple[Optional[float], float]:
    """Bounds from the two smallest singular values of A.

    The lower bound needs sigma_hat_{n-1} and is None when n = 1.
    """
    _require_gap(sigma_hat_n, sigma_np1, "a_spectrum_bounds")
    _check_alpha(alpha)
    t2 = sigma_np1 ** 2
    upper = np.sqrt(sigma_hat_n ** 2 + t2) / (sigma_hat_n ** 2 - t2) / alpha
    lower = None
    if sigma_hat_nm1 is not None:
        if sigma_hat_nm1 < sigma_hat_n:
            raise InvalidInput("sigma_hat_(n-1) must not be smaller than sigma_hat_n")
        lower = float(np.sqrt(sigma_hat_nm1 ** 2 + t2) / (sigma_hat_nm1 ** 2 - t2) / alpha)
    return lower, float(upper)


def gap_lower_bound(sigma_hat_n: float, sigma_np1: float, alpha: float) -> float:
    """1 / (alpha sqrt(sigma_hat_n^2 - sigma_{n+1}^2))"""
    _require_gap(sigma_hat_n, sigma_np1, "gap_lower_bound")
    _check_alpha(alpha)
    return float(1.0 / (alpha * np.sqrt(sigma_hat_n ** 2 - sigma_np1 ** 2)))


def rho_factor(rho: float) -> float:
    """sqrt((1 + 31 rho^2) / (1 - rho^2))"""
    return float(np.sqrt((1.0 + 31.0 * rho ** 2) / (1.0 - rho ** 2)))


def gap_upper_bound(sigma_hat_n: float, sigma_n: float, sigma_np1: float, alpha: float) -> float:
    """Strict upper bound valid for 0 < alpha <= 1/2"""
    if not 0.0 < alpha <= 0.5:
        raise NotApplicable(f"gap upper bound needs 0 < alpha <= 1/2, got alpha = {alpha:.4g}")
    _require_gap(sigma_n, sigma_np1, "gap_upper_bound")
    rho = sigma_np1 / sigma_n
    return rho_factor(rho) * gap_lower_bound(sigma_hat_n, sigma_np1, alpha)


def gvl_rel_bound(
    sigma_1: float,
    sigma_n: float,
    sigma_np1: float,
    sigma_hat_n: float,
    norm_b: float,
    frob_Ab: float,
) -> float:
    """Golub-Van Loan upper bound for the relative condition number"""
    _require_gap(sigma_n, sigma_np1, "gvl_rel_bound")
    _require_gap(sigma_hat_n, sigma_np1, "gvl_rel_bound")
    if not norm_b > sigma_np1:
        raise NotApplicable(f"||b|| = {norm_b:.4g} does not exceed sigma_(n+1) = {sigma_np1:.4g}")
    return float(
        9.0 * sigma_1 / (sigma_n - sigma_np1)
        * (1.0 + norm_b / (sigma_hat_n - sigma_np1))
        * frob_Ab / (norm_b - sigma_np1)
    )


def bg_upper(
    sigma_1: float,
    sigma_np1: float,
    sigma_hat_n: float,
    alpha: float,
    frob_Ab: float,
    norm_x: float,
) -> Tuple[float, float]:
    """Baboulin-Gratton upper bounds (absolute, relative)"""
    _require_gap(sigma_hat_n, sigma_np1, "bg_upper")
    _check_alpha(alpha)
    ratio = np.sqrt(sigma_1 ** 2 + sigma_np1 ** 2) / (sigma_hat_n ** 2 - sigma_np1 ** 2)
    absolute = ratio / alpha
    relative = np.sqrt(1.0 + norm_x ** 2) / norm_x * ratio * frob_Ab
    return float(absolute), float(relative)


def m_eigen_bounds(
    sigma_hat_nm1: Optional[float],
    sigma_hat_n: float,
    sigma_np1: float,
    norm_x: float,
    norm_r: float,
) -> Tuple[Optional[float], float]:
    """sqrt(lambda_2(M)) <= kappa <= sqrt(lambda_1(M)) with
    lambda_j(M) = ((1 + ||x||^2) sigma_hat_j^2 + ||r||^2) / (sigma_hat_j^2 - sigma_{n+1}^2)^2.

    Same pair as a_spectrum_bounds, written with ||x|| and ||r||.
    """
    _require_gap(sigma_hat_n, sigma_np1, "m_eigen_bounds")

    def root_lambda(sh: float) -> float:
        return float(np.sqrt((1.0 + norm_x ** 2) * sh ** 2 + norm_r ** 2) / (sh ** 2 - sigma_np1 ** 2))

    lower = root_lambda(sigma_hat_nm1) if sigma_hat_nm1 is not None else None
    return lower, root_lambda(sigma_hat_n)


def gap_interval(u_hat_n_dot_b: float, norm_b: float, norm_x: float) -> Tuple[float, float]:
    """Interval |u_hat_n^T b| / (2||x||) <= sigma_hat_n - sigma_{n+1} <= ||b|| / ||x||"""
    if norm_x <= 0.0:
        raise InvalidInput("gap interval needs x_TLS != 0")
    return float(abs(u_hat_n_dot_b) / (2.0 * norm_x)), float(norm_b / norm_x)


def bound_report(sd: SpectralData, sol: TlsSolution, frob_Ab: Optional[float] = None, norm_b: Optional[float] = None) -> BoundSet:
    """Evaluate every bound for a solved problem.

    ``frob_Ab`` and ``norm_b`` are needed only for the relative competitor
    bounds; when omitted they are recovered from the SVD of [A, b] and
    the residual.
    """
    if frob_Ab is None:
        frob_Ab = float(np.sqrt(np.sum(sd.sigmas ** 2)))
    if norm_b is None:
        # b = A x - r, with A recovered from the SVD
        A = sd.svd_augmented.reconstruct()[:, :-1]
        norm_b = float(np.linalg.norm(A @ sol.x_tls - sol.residual))

    values: Dict[str, Optional[float]] = {}
    status: Dict[str, BoundStatus] = {}
    provenance: Dict[str, str] = {}
    alpha = sd.alpha
    x_norm = sol.x_norm

    def record(names, source: str, compute) -> None:
        try:
            result = compute()
        except NotApplicable as e:
            logger.debug(f"{source}: {e}")
            for name in names:
                values[name] = None
                status[name] = BoundStatus.NOT_APPLICABLE
                provenance[name] = source
            return
        except TlsError as e:
            logger.warning(f"{source} failed: {e}")
            for name in names:
                values[name] = None
                status[name] = BoundStatus.FAILED
                provenance[name] = source
            return
        if len(names) == 1:
            result = (result,)
        for name, value in zip(names, result):
            values[name] = value
            status[name] = BoundStatus.APPLICABLE if value is not None else BoundStatus.NOT_AVAILABLE
            provenance[name] = source

    record(('alpha_lower', 'alpha_upper'), 'alpha_bounds',
           lambda: alpha_bounds(sd.sigma_n, sd.sigma_np1, alpha))
    record(('last_row_lower', 'last_row_upper'), 'last_row_bounds',
           lambda: last_row_bounds(sd.sigmas, sd.beta, alpha))
    record(('a_spectrum_lower', 'a_spectrum_upper'), 'a_spectrum_bounds',
           lambda: a_spectrum_bounds(sd.sigma_hat_nm1, sd.sigma_hat_n, sd.sigma_np1, alpha))
    record(('gap_lower',), 'gap_lower_bound',
           lambda: gap_lower_bound(sd.sigma_hat_n, sd.sigma_np1, alpha))
    record(('gap_upper',), 'gap_upper_bound',
           lambda: gap_upper_bound(sd.sigma_hat_n, sd.sigma_n, sd.sigma_np1, alpha))
    record(('bg_upper_abs', 'bg_upper_rel'), 'bg_upper',
           lambda: bg_upper(sd.sigma_1, sd.sigma_np1, sd.sigma_hat_n, alpha, frob_Ab, x_norm))
    record(('gvl_rel',), 'gvl_rel_bound',
           lambda: gvl_rel_bound(sd.sigma_1, sd.sigma_n, sd.sigma_np1, sd.sigma_hat_n, norm_b, frob_Ab))

    dominated = None
    if sd.sigma_hat_nm1 is not None:
        dominated = sd.sigma_hat_nm1 >= sd.sigma_np1 + np.sqrt(sd.sigma_hat_n ** 2 - sd.sigma_np1 ** 2)

    return BoundSet(
        **values,
        rho=sd.sigma_np1 / sd.sigma_n,
        alpha=alpha,
        a_spectrum_lower_dominated=None if dominated is None else bool(dominated),
        status=status,
        provenance=provenance,
    )
