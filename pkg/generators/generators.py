"""Seeded constructions of TLS test problems.

All randomness flows through ``numpy.random.default_rng(seed)`` (PCG64), so a
(kind, parameters, seed) triple always yields the bit-identical problem.
"""
from typing import Any, Literal, Mapping, Optional, Union
import logging

import numpy as np
import scipy.linalg as la
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from kernel.kernel import thin_svd
from tls.tls import TlsProblem
from tlscond.tlscond import InvalidInput

logger = logging.getLogger(__name__)

GeneratorKind = Literal['bg_example', 'vanhuffel', 'toeplitz_blur', 'controlled_alpha', 'gaussian']

Seed = Union[int, np.random.Generator]


class GeneratorSpec(BaseModel):
    """Generator kind plus its parameters; shape rules are enforced per kind"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    kind: GeneratorKind
    m: int = Field(gt=0)
    n: Optional[int] = Field(default=None, gt=0)
    e_p: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    alpha: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    omega: int = Field(default=8, gt=0)
    beta_blur: float = Field(default=1.25, gt=0.0)
    gamma: float = Field(default=1e-3, ge=0.0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)

    @model_validator(mode='after')
    def _check_shape(self) -> 'GeneratorSpec':
        if self.kind == 'vanhuffel':
            if self.m < 4:
                raise ValueError("vanhuffel needs m >= 4")
            if self.n is not None and self.n != self.m - 2:
                raise ValueError("vanhuffel forces n = m - 2")
        elif self.kind == 'toeplitz_blur':
            if self.m <= 2 * self.omega + 1:
                raise ValueError("toeplitz_blur needs m > 2 * omega + 1")
            if self.n is not None and self.n != self.m - 2 * self.omega:
                raise ValueError("toeplitz_blur forces n = m - 2 * omega")
        else:
            if self.n is None:
                raise ValueError(f"{self.kind} needs n")
            if not self.m > self.n:
                raise ValueError(f"{self.kind} needs m > n")
            if self.kind == 'bg_example' and self.e_p is None:
                raise ValueError("bg_example needs e_p")
            if self.kind == 'controlled_alpha' and self.alpha is None:
                raise ValueError("controlled_alpha needs alpha")
        return self

    @property
    def columns(self) -> int:
        """n after the kind-specific shape rules"""
        if self.kind == 'vanhuffel':
            return self.m - 2
        if self.kind == 'toeplitz_blur':
            return self.m - 2 * self.omega
        return self.n

    def with_seed(self, seed: int) -> 'GeneratorSpec':
        return self.model_copy(update={'seed': seed})

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> 'GeneratorSpec':
        """Build from a plain key-value config, dropping unset (None) entries"""
        try:
            return cls(**{k: v for k, v in data.items() if v is not None})
        except ValidationError as e:
            raise InvalidInput(f"invalid generator spec: {e}")


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_orthogonal(k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed k x k orthogonal matrix: QR of a Gaussian with sign-corrected R"""
    Q, R = la.qr(rng.standard_normal((k, k)))
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    return Q * signs


def _householder(k: int, rng: np.random.Generator) -> np.ndarray:
    y = rng.standard_normal(k)
    y /= np.linalg.norm(y)
    return np.eye(k) - 2.0 * np.outer(y, y)


def gen_bg_example(m: int, n: int, e_p: float, seed: Seed = 0) -> TlsProblem:
    """[A, b] = Q [Sigma; 0] V^T with Householder Q, V and Sigma = diag(n, ..., 1, 1 - e_p)"""
    if not m > n >= 1:
        raise InvalidInput(f"bg_example needs m > n >= 1, got m={m}, n={n}")
    if not 0.0 < e_p < 1.0:
        raise InvalidInput(f"e_p must lie in (0, 1), got {e_p}")
    rng = _rng(seed)
    Q = _householder(m, rng)
    V = _householder(n + 1, rng)
    sigma = np.append(np.arange(n, 0, -1, dtype=np.float64), 1.0 - e_p)
    C = (Q[:, :n + 1] * sigma) @ V.T
    return TlsProblem(A=C[:, :n], b=C[:, n])


def gen_vanhuffel(m: int) -> TlsProblem:
    """Deterministic problem with x_TLS = -1, sigma_hat_n = sqrt(2m), sigma_{n+1} = sqrt(m)"""
    if m < 4:
        raise InvalidInput(f"vanhuffel needs m >= 4, got {m}")
    n = m - 2
    A = -np.ones((m, n))
    A[np.arange(n), np.arange(n)] = m - 1.0
    b = -np.ones(m)
    b[m - 2] = m - 1.0
    return TlsProblem(A=A, b=b)


def blur_column(omega: int, beta_blur: float) -> np.ndarray:
    """First column of the lower Toeplitz blur: a sampled Gaussian PSF of length 2*omega + 1"""
    i = np.arange(1, 2 * omega + 2, dtype=np.float64)
    return np.exp(-(omega - i + 1.0) ** 2 / (2.0 * beta_blur ** 2)) / np.sqrt(2.0 * np.pi * beta_blur ** 2)


def _lower_toeplitz(column: np.ndarray, m: int, n: int) -> np.ndarray:
    first_col = np.zeros(m)
    first_col[:column.shape[0]] = column
    first_row = np.zeros(n)
    first_row[0] = first_col[0]
    return la.toeplitz(first_col, first_row)


def gen_toeplitz_blur(
    m: int,
    omega: int = 8,
    beta_blur: float = 1.25,
    gamma: float = 1e-3,
    seed: Seed = 0,
) -> TlsProblem:
    """A = T + E, b = ones + e with ||E|| = gamma ||T|| and ||e|| = gamma ||ones||"""
    if not m > 2 * omega + 1:
        raise InvalidInput(f"toeplitz_blur needs m > 2 * omega + 1, got m={m}, omega={omega}")
    if beta_blur <= 0.0 or gamma < 0.0:
        raise InvalidInput("beta_blur must be positive and gamma nonnegative")
    n = m - 2 * omega
    T = _lower_toeplitz(blur_column(omega, beta_blur), m, n)
    g = np.ones(m)
    if gamma == 0.0:
        return TlsProblem(A=T, b=g)

    rng = _rng(seed)
    E = _lower_toeplitz(rng.standard_normal(2 * omega + 1), m, n)
    e = rng.standard_normal(m)
    E *= gamma * np.linalg.norm(T, 2) / np.linalg.norm(E, 2)
    e *= gamma * np.linalg.norm(g) / np.linalg.norm(e)
    return TlsProblem(A=T + E, b=g + e)


def build_alpha_orthogonal(n: int, alpha: float, seed: Seed = 0) -> np.ndarray:
    """Orthogonal (n+1) x (n+1) V with V(n+1, n+1) = -alpha.

    V11 = U1 W1^T + alpha u w^T with borders sqrt(1 - alpha^2) u and
    sqrt(1 - alpha^2) w^T, so the singular values of V11 are 1 (n - 1 times)
    and alpha.
    """
    if n < 1:
        raise InvalidInput(f"n must be positive, got {n}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    rng = _rng(seed)
    U_bar = random_orthogonal(n, rng)
    W_bar = random_orthogonal(n, rng)
    u, w = U_bar[:, -1], W_bar[:, -1]
    root = np.sqrt(1.0 - alpha ** 2)

    V = np.empty((n + 1, n + 1))
    V[:n, :n] = U_bar[:, :-1] @ W_bar[:, :-1].T + alpha * np.outer(u, w)
    V[:n, n] = root * u
    V[n, :n] = root * w
    V[n, n] = -alpha
    return V


def gen_controlled_alpha(m: int, n: int, alpha: float, seed: Seed = 0) -> TlsProblem:
    """Random U and Sigma from a Gaussian m x (n+1) matrix, V replaced by build_alpha_orthogonal"""
    if not m > n >= 1:
        raise InvalidInput(f"controlled_alpha needs m > n >= 1, got m={m}, n={n}")
    rng = _rng(seed)
    svd = thin_svd(rng.standard_normal((m, n + 1)))
    V = build_alpha_orthogonal(n, alpha, rng)
    C = (svd.U * svd.s) @ V.T
    return TlsProblem(A=C[:, :n], b=C[:, n])


def gen_gaussian(m: int, n: int, seed: Seed = 0) -> TlsProblem:
    """i.i.d. standard normal A and b"""
    if not m > n >= 1:
        raise InvalidInput(f"gaussian needs m > n >= 1, got m={m}, n={n}")
    rng = _rng(seed)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return TlsProblem(A=A, b=b)


def generate(spec: GeneratorSpec) -> TlsProblem:
    """Dispatch on spec.kind"""
    logger.debug(f"generating {spec.kind} problem m={spec.m} n={spec.columns} seed={spec.seed}")
    if spec.kind == 'bg_example':
        return gen_bg_example(spec.m, spec.n, spec.e_p, spec.seed)
    if spec.kind == 'vanhuffel':
        return gen_vanhuffel(spec.m)
    if spec.kind == 'toeplitz_blur':
        return gen_toeplitz_blur(spec.m, spec.omega, spec.beta_blur, spec.gamma, spec.seed)
    if spec.kind == 'controlled_alpha':
        return gen_controlled_alpha(spec.m, spec.n, spec.alpha, spec.seed)
    return gen_gaussian(spec.m, spec.n, spec.seed)
