"""Absolute and relative TLS condition numbers by independent exact routes.

Routes:
    closed            sqrt(1 + ||x||^2) ||V11^{-T} S||, SVD of [A, b] only
    kronecker         ||K|| with the Jacobian K materialized explicitly
    baboulin_gratton  closed formula using the SVDs of both A and [A, b]
    gram              largest eigenvalue of K K^T written as an n x n matrix
"""
from typing import Literal
import logging

import numpy as np
import scipy.linalg as la
from pydantic import BaseModel, ConfigDict, model_validator

from kernel.kernel import solve_square, spectral_norm
from tls.tls import SpectralData, TlsProblem, TlsSolution
from tlscond.tlscond import ConsistentSystem, DegenerateSolution, NonGeneric, TooLarge

logger = logging.getLogger(__name__)

DEFAULT_SIZE_CAP_K = 4_000_000

# kappa(V11) = 1/alpha above this is reported as a conditioning warning
V11_CONDITION_WARNING = 1e8

Route = Literal['closed', 'kronecker', 'baboulin_gratton', 'gram']


class ConditionReport(BaseModel):
    """Absolute and relative condition number from one route"""
    model_config = ConfigDict(frozen=True)

    kappa_abs: float
    kappa_rel: float
    route: Route
    scale_factor: float

    @model_validator(mode='after')
    def _check_scaling(self) -> 'ConditionReport':
        expected = self.kappa_abs * self.scale_factor
        if abs(self.kappa_rel - expected) > 1e-12 * max(abs(expected), np.finfo(float).tiny):
            raise ValueError("kappa_rel must equal kappa_abs * scale_factor")
        return self


def s_weights(sigmas: np.ndarray) -> np.ndarray:
    """s_i = sqrt(sigma_i^2 + sigma_{n+1}^2) / (sigma_i^2 - sigma_{n+1}^2), i = 1..n"""
    head = np.asarray(sigmas[:-1], dtype=np.float64)
    tail2 = float(sigmas[-1]) ** 2
    denom = head ** 2 - tail2
    if np.any(denom <= 0.0):
        raise NonGeneric("sigma_n must exceed sigma_(n+1) for the condition number to be finite")
    return np.sqrt(head ** 2 + tail2) / denom


def kappa_closed(sd: SpectralData) -> float:
    """kappa = sqrt(1 + ||x||^2) ||V11^{-T} S||, with 1 + ||x||^2 = 1 / alpha^2"""
    s = s_weights(sd.sigmas)
    if 1.0 / sd.alpha > V11_CONDITION_WARNING:
        logger.warning(
            f"V11 has condition number {1.0 / sd.alpha:.2e}; the closed-route solve loses accuracy"
        )
    W = solve_square(sd.V11.T, np.diag(s))
    return spectral_norm(W) / sd.alpha


def build_K(
    p: TlsProblem,
    sol: TlsSolution,
    size_cap: int = DEFAULT_SIZE_CAP_K,
) -> np.ndarray:
    """First-order sensitivity K (n x (mn + m)) of x_TLS w.r.t. [vec(dA); db]"""
    m, n = p.m, p.n
    entries = m * (n + 1) * n
    if entries > size_cap:
        raise TooLarge(f"K would have {entries} entries, above the cap of {size_cap}")

    r = sol.residual
    r_norm = float(np.linalg.norm(r))
    if sol.consistent or r_norm == 0.0:
        raise ConsistentSystem("residual is zero; the Kronecker Jacobian divides by ||r||")

    x = sol.x_tls
    G = np.kron(np.append(x, -1.0)[None, :], np.eye(m))
    AtG = p.A.T @ G
    rank_one = 2.0 * np.outer(p.A.T @ r, r @ G) / r_norm ** 2
    lifted = np.hstack([np.kron(np.eye(n), r[None, :]), np.zeros((n, m))])

    P = p.A.T @ p.A - sol.sigma_np1 ** 2 * np.eye(n)
    return solve_square(P, rank_one - AtG - lifted)


def kappa_kronecker(
    p: TlsProblem,
    sol: TlsSolution,
    size_cap: int = DEFAULT_SIZE_CAP_K,
) -> float:
    """kappa = ||K||"""
    return spectral_norm(build_K(p, sol, size_cap))


def kappa_bg_closed(sd: SpectralData) -> float:
    """sqrt(1 + ||x||^2) ||D_hat [V_hat^T, 0] V [D, 0]^T||.

    [D, 0]^T selects the first n columns of V, so the product is
    D_hat V_hat^T V11 D.
    """
    tail2 = sd.sigma_np1 ** 2
    hat_denom = sd.sigma_hats ** 2 - tail2
    if np.any(hat_denom <= 0.0):
        raise NonGeneric("some sigma_hat_i does not exceed sigma_(n+1)")
    d_hat = 1.0 / hat_denom
    d = np.sqrt(sd.sigmas[:-1] ** 2 + tail2)
    core = (d_hat[:, None] * (sd.svd_A.right_vectors.T @ sd.V11)) * d[None, :]
    return spectral_norm(core) / sd.alpha


def kappa_gram(sd: SpectralData, sol: TlsSolution) -> float:
    """sqrt((1 + ||x||^2) lambda_max(P^-1 + 2 sigma^2 P^-1 (I - x x^T / (1 + ||x||^2)) P^-1))

    P^-1 = V_hat diag(1 / (sigma_hat_i^2 - sigma_{n+1}^2)) V_hat^T.
    """
    tail2 = sol.sigma_np1 ** 2
    hat_denom = sd.sigma_hats ** 2 - tail2
    if np.any(hat_denom <= 0.0):
        raise NonGeneric("some sigma_hat_i does not exceed sigma_(n+1)")
    V_hat = sd.svd_A.right_vectors
    P_inv = (V_hat / hat_denom) @ V_hat.T
    x = sol.x_tls
    projector = np.eye(x.shape[0]) - np.outer(x, x) * sol.alpha ** 2
    gram = P_inv + 2.0 * tail2 * P_inv @ projector @ P_inv
    gram = 0.5 * (gram + gram.T)
    lam_max = float(la.eigvalsh(gram, subset_by_index=[x.shape[0] - 1, x.shape[0] - 1])[0])
    return float(np.sqrt(max(lam_max, 0.0))) / sol.alpha


def kappa_relative(kappa_abs: float, p: TlsProblem, sol: TlsSolution) -> float:
    """kappa_abs * ||[A, b]||_F / ||x_TLS||"""
    x_norm = sol.x_norm
    if x_norm <= 0.0:
        raise DegenerateSolution("relative condition number needs x_TLS != 0")
    return kappa_abs * p.frobenius_norm / x_norm


def condition_report(
    p: TlsProblem,
    sol: TlsSolution,
    sd: SpectralData,
    route: Route = 'closed',
    size_cap: int = DEFAULT_SIZE_CAP_K,
) -> ConditionReport:
    """Evaluate one route and package absolute and relative values"""
    if route == 'closed':
        kappa = kappa_closed(sd)
    elif route == 'kronecker':
        kappa = kappa_kronecker(p, sol, size_cap)
    elif route == 'baboulin_gratton':
        kappa = kappa_bg_closed(sd)
    elif route == 'gram':
        kappa = kappa_gram(sd, sol)
    else:
        raise ValueError(f"unknown route {route!r}")

    if sol.x_norm <= 0.0:
        raise DegenerateSolution("relative condition number needs x_TLS != 0")
    scale = p.frobenius_norm / sol.x_norm
    return ConditionReport(kappa_abs=kappa, kappa_rel=kappa * scale, route=route, scale_factor=scale)
