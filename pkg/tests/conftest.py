from pathlib import Path
from typing import Callable, List

import numpy as np
import pytest

from generators.generators import gen_controlled_alpha, gen_gaussian, gen_vanhuffel
from tls.tls import SpectralData, TlsProblem, TlsSolution, solve_tls, spectral_data

GOLDEN_SIGMAS = ((1.0 + np.sqrt(5.0)) / 2.0, (np.sqrt(5.0) - 1.0) / 2.0)
GOLDEN_X = (np.sqrt(5.0) - 1.0) / 2.0
GOLDEN_KAPPA = 1.0705


@pytest.fixture
def mock_data_dir() -> Path:
    """Get the mock data directory"""
    return Path(__file__).parent / "mocks"


@pytest.fixture
def matrix_file(mock_data_dir) -> Callable[[str], Path]:
    """Path to a file under mocks/matrices"""
    def _matrix_file(name: str) -> Path:
        return mock_data_dir / "matrices" / name
    return _matrix_file


@pytest.fixture
def golden_problem() -> TlsProblem:
    """A = [1, 1]^T, b = [1, 0]^T: golden-ratio singular values, x_TLS = (sqrt(5) - 1) / 2"""
    return TlsProblem(A=np.array([[1.0], [1.0]]), b=np.array([1.0, 0.0]))


@pytest.fixture
def degenerate_problem() -> TlsProblem:
    """A = [2, 0]^T, b = [0, 1]^T: A^T b = 0"""
    return TlsProblem(A=np.array([[2.0], [0.0]]), b=np.array([0.0, 1.0]))


@pytest.fixture
def solved():
    """(SpectralData, TlsSolution) for a problem"""
    def _solved(p: TlsProblem) -> tuple[SpectralData, TlsSolution]:
        sd = spectral_data(p)
        return sd, solve_tls(p, spectral=sd)
    return _solved


@pytest.fixture
def vanhuffel() -> Callable[[int], TlsProblem]:
    return gen_vanhuffel


def random_problems(count: int) -> List[TlsProblem]:
    """Seeded generic problems with m <= 40, n <= 10, half Gaussian and half controlled-alpha"""
    problems = []
    alphas = (0.05, 0.2, 0.45, 0.7, 0.9)
    for seed in range(count):
        n = 1 + seed % 10
        m = n + 2 + (7 * seed) % (39 - n)
        if seed % 2 == 0:
            problems.append(gen_gaussian(m, n, seed))
        else:
            problems.append(gen_controlled_alpha(m, n, alphas[seed % len(alphas)], seed))
    return problems


@pytest.fixture
def small_problems() -> List[TlsProblem]:
    return random_problems(20)
