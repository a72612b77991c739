"""Model-independent checks of the TLS sensitivity: finite differences of the
solution map and the order of the first-order expansion remainder."""
from typing import List, Literal, Optional, Sequence
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from kernel.kernel import EPS, as_dense, spectral_norm
from tls.tls import DEFAULT_TOL_GAP, TlsProblem, solve_tls
from tlscond.tlscond import InsufficientData, InvalidInput, NonGenericUnderPerturbation, TlsError, TooLarge

logger = logging.getLogger(__name__)

DEFAULT_FD_MAX_COLUMNS = 5000

DEFAULT_EPSILONS = (1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6)

# remainders below NOISE_FLOOR * max(1, ||x||) are rounding, not truncation
NOISE_FLOOR = 1e2 * EPS

# extra entropy word: direction draws never share a stream with generator draws
DIRECTION_STREAM = 0xD1EC


class FdConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: Optional[float] = Field(default=None, gt=0.0)
    scheme: Literal['forward', 'central'] = 'central'
    max_columns: int = Field(default=DEFAULT_FD_MAX_COLUMNS, gt=0)
    tol_gap: float = Field(default=DEFAULT_TOL_GAP, gt=0.0)

    def step_for(self, p: TlsProblem) -> float:
        """Configured step, or sqrt(eps) * ||[A, b]||_F"""
        if self.step is not None:
            return self.step
        return float(np.sqrt(EPS) * p.frobenius_norm)


class ExpansionCheck(BaseModel):
    """Log-log fit of ||x(eps d) - x - eps K d|| against eps"""
    model_config = ConfigDict(frozen=True)

    slope: float
    epsilons: List[float]
    remainders: List[float]
    dropped: List[float]


def _perturbed_solution(p: TlsProblem, data: np.ndarray, tol_gap: float) -> np.ndarray:
    try:
        q = TlsProblem.from_data_vector(data, p.m, p.n)
        return solve_tls(q, tol_gap).x_tls
    except TlsError as e:
        raise NonGenericUnderPerturbation(f"perturbed problem fails: {e.code}: {e}") from e


def fd_jacobian(p: TlsProblem, cfg: Optional[FdConfig] = None) -> np.ndarray:
    """n x m(n+1) finite-difference Jacobian of x_TLS with respect to [vec(A); b]"""
    cfg = cfg or FdConfig()
    columns = p.m * (p.n + 1)
    if columns > cfg.max_columns:
        raise TooLarge(f"FD Jacobian needs {columns} columns, above the cap of {cfg.max_columns}")
    h = cfg.step_for(p)
    data = p.data_vector()
    J = np.empty((p.n, columns))

    base = None
    if cfg.scheme == 'forward':
        base = solve_tls(p, cfg.tol_gap).x_tls

    for j in range(columns):
        shifted = data.copy()
        shifted[j] += h
        plus = _perturbed_solution(p, shifted, cfg.tol_gap)
        if cfg.scheme == 'central':
            shifted[j] = data[j] - h
            minus = _perturbed_solution(p, shifted, cfg.tol_gap)
            J[:, j] = (plus - minus) / (2.0 * h)
        else:
            J[:, j] = (plus - base) / h
    return J


def kappa_fd(p: TlsProblem, cfg: Optional[FdConfig] = None) -> float:
    """Spectral norm of the finite-difference Jacobian"""
    return spectral_norm(fd_jacobian(p, cfg))


def random_direction(p: TlsProblem, seed: int = 0) -> np.ndarray:
    """Unit Gaussian direction in [vec(A); b] space, orthogonal to [vec(A); b].

    Drawn from its own seed stream, so it is unrelated to a generator run
    with the same seed. Scaling [A, b] leaves x fixed, hence the projection.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, DIRECTION_STREAM]))
    d = rng.standard_normal(p.m * (p.n + 1))
    z = p.data_vector()
    z = z / np.linalg.norm(z)
    d -= (d @ z) * z
    return d / np.linalg.norm(d)


def expansion_order_check(
    p: TlsProblem,
    K,
    direction,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    tol_gap: float = DEFAULT_TOL_GAP,
) -> ExpansionCheck:
    """Fit the order of the remainder of the first-order expansion x + eps K d"""
    K = as_dense(K, "K")
    d = np.asarray(direction, dtype=np.float64).ravel()
    if d.shape[0] != K.shape[1]:
        raise InvalidInput(f"direction has {d.shape[0]} entries, K has {K.shape[1]} columns")
    if abs(np.linalg.norm(d) - 1.0) > 1e-10:
        raise InvalidInput("direction must have unit norm")
    eps_list = [float(e) for e in epsilons]
    if any(e <= 0.0 for e in eps_list) or any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidInput("epsilons must be positive and strictly decreasing")

    x = solve_tls(p, tol_gap).x_tls
    data = p.data_vector()
    Kd = K @ d
    floor = NOISE_FLOOR * max(1.0, float(np.linalg.norm(x)))

    kept_eps, kept_rem, dropped = [], [], []
    for eps in eps_list:
        x_eps = _perturbed_solution(p, data + eps * d, tol_gap)
        remainder = float(np.linalg.norm(x_eps - x - eps * Kd))
        if remainder <= floor:
            logger.debug(f"eps={eps:.1e}: remainder {remainder:.2e} at noise floor, dropped")
            dropped.append(eps)
            continue
        kept_eps.append(eps)
        kept_rem.append(remainder)

    if dropped:
        logger.info(f"expansion check dropped {len(dropped)} of {len(eps_list)} points at the noise floor")
    if len(kept_eps) < 3:
        raise InsufficientData(f"only {len(kept_eps)} points above the noise floor; need 3")

    slope, _ = np.polyfit(np.log(kept_eps), np.log(kept_rem), 1)
    return ExpansionCheck(slope=float(slope), epsilons=kept_eps, remainders=kept_rem, dropped=dropped)
