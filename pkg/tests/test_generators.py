import numpy as np
import pytest

from generators.generators import (
    GeneratorSpec,
    blur_column,
    build_alpha_orthogonal,
    gen_bg_example,
    gen_controlled_alpha,
    gen_gaussian,
    gen_toeplitz_blur,
    gen_vanhuffel,
    generate,
    random_orthogonal,
)
from kernel.kernel import orthonormality_residual
from tls.tls import spectral_data
from tlscond.tlscond import InvalidInput


@pytest.mark.unit
def test_random_orthogonal():
    Q = random_orthogonal(6, np.random.default_rng(0))
    assert orthonormality_residual(Q) <= 1e-12


@pytest.mark.unit
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_bg_example_singular_values(seed):
    m, n, e_p = 100, 20, 1e-3
    p = gen_bg_example(m, n, e_p, seed)
    sigmas = np.linalg.svd(p.augmented, compute_uv=False)
    expected = np.append(np.arange(n, 0, -1, dtype=float), 1.0 - e_p)
    assert sigmas == pytest.approx(expected, abs=1e-10)
    assert sigmas[-2] - sigmas[-1] == pytest.approx(e_p, abs=1e-10)


@pytest.mark.unit
def test_bg_example_rejects_large_gap():
    with pytest.raises(InvalidInput):
        gen_bg_example(10, 3, 1.0, 0)


@pytest.mark.unit
def test_vanhuffel_structure():
    p = gen_vanhuffel(6)
    assert p.A.shape == (6, 4)
    assert np.all(np.diag(p.A) == 5.0)
    assert np.all(p.A[4:] == -1.0)
    assert p.b.tolist() == [-1.0, -1.0, -1.0, -1.0, 5.0, -1.0]


@pytest.mark.unit
def test_vanhuffel_needs_four_rows():
    with pytest.raises(InvalidInput):
        gen_vanhuffel(3)


@pytest.mark.unit
def test_blur_column_is_normalized():
    column = blur_column(8, 1.25)
    assert column.shape == (17,)
    assert column.sum() == pytest.approx(1.0, abs=1e-6)
    assert np.argmax(column) == 8


@pytest.mark.unit
def test_toeplitz_blur_without_noise():
    p = gen_toeplitz_blur(40, omega=8, gamma=0.0)
    assert p.A.shape == (40, 24)
    assert np.array_equal(p.b, np.ones(40))
    column = blur_column(8, 1.25)
    assert p.A[:17, 0] == pytest.approx(column)
    assert p.A[1:18, 1] == pytest.approx(column)
    assert np.all(p.A[0, 1:] == 0.0)


@pytest.mark.unit
def test_toeplitz_blur_noise_level():
    clean = gen_toeplitz_blur(60, gamma=0.0)
    noisy = gen_toeplitz_blur(60, gamma=1e-3, seed=5)
    E = noisy.A - clean.A
    e = noisy.b - clean.b
    assert np.linalg.norm(E, 2) == pytest.approx(1e-3 * np.linalg.norm(clean.A, 2), rel=1e-8)
    assert np.linalg.norm(e) == pytest.approx(1e-3 * np.sqrt(60.0), rel=1e-8)


@pytest.mark.unit
def test_toeplitz_blur_shape_rule():
    with pytest.raises(InvalidInput):
        gen_toeplitz_blur(17, omega=8)


@pytest.mark.unit
@pytest.mark.parametrize("n, alpha", [(1, 0.3), (5, 1e-4), (5, 0.5)])
def test_build_alpha_orthogonal(n, alpha):
    V = build_alpha_orthogonal(n, alpha, seed=11)
    assert V.shape == (n + 1, n + 1)
    assert V[n, n] == -alpha
    assert orthonormality_residual(V) <= 1e-12
    expected = np.ones(n)
    expected[-1] = alpha
    assert np.linalg.svd(V[:n, :n], compute_uv=False) == pytest.approx(expected, abs=1e-10)


@pytest.mark.unit
@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2])
def test_build_alpha_orthogonal_rejects_alpha(alpha):
    with pytest.raises(InvalidInput):
        build_alpha_orthogonal(3, alpha)


@pytest.mark.unit
@pytest.mark.parametrize("alpha", [1e-2, 0.49, 0.8])
def test_controlled_alpha_round_trip(alpha):
    sd = spectral_data(gen_controlled_alpha(30, 8, alpha, seed=3))
    assert sd.alpha == pytest.approx(alpha, abs=1e-10)


@pytest.mark.unit
def test_gaussian_is_deterministic():
    first, second = gen_gaussian(20, 5, seed=42), gen_gaussian(20, 5, seed=42)
    assert np.array_equal(first.A, second.A)
    assert np.array_equal(first.b, second.b)
    assert not np.array_equal(first.A, gen_gaussian(20, 5, seed=43).A)


@pytest.mark.unit
def test_spec_shape_rules():
    assert GeneratorSpec(kind='vanhuffel', m=10).columns == 8
    assert GeneratorSpec(kind='toeplitz_blur', m=100).columns == 84
    assert GeneratorSpec(kind='gaussian', m=10, n=3).columns == 3
    with pytest.raises(ValueError):
        GeneratorSpec(kind='vanhuffel', m=10, n=5)
    with pytest.raises(ValueError):
        GeneratorSpec(kind='bg_example', m=10, n=3)
    with pytest.raises(ValueError):
        GeneratorSpec(kind='controlled_alpha', m=10, n=3)
    with pytest.raises(ValueError):
        GeneratorSpec(kind='gaussian', m=3, n=3)


@pytest.mark.unit
def test_spec_from_mapping():
    spec = GeneratorSpec.from_mapping({'kind': 'controlled_alpha', 'm': 20, 'n': 4, 'alpha': 0.1, 'e_p': None})
    assert spec.alpha == 0.1
    with pytest.raises(InvalidInput):
        GeneratorSpec.from_mapping({'kind': 'gaussian', 'm': 5})


@pytest.mark.unit
@pytest.mark.parametrize("spec, direct", [
    (GeneratorSpec(kind='gaussian', m=12, n=3, seed=9), lambda: gen_gaussian(12, 3, 9)),
    (GeneratorSpec(kind='bg_example', m=12, n=3, e_p=1e-3, seed=9), lambda: gen_bg_example(12, 3, 1e-3, 9)),
    (GeneratorSpec(kind='controlled_alpha', m=12, n=3, alpha=0.2, seed=9), lambda: gen_controlled_alpha(12, 3, 0.2, 9)),
    (GeneratorSpec(kind='vanhuffel', m=12), lambda: gen_vanhuffel(12)),
    (GeneratorSpec(kind='toeplitz_blur', m=30, seed=9), lambda: gen_toeplitz_blur(30, seed=9)),
])
def test_generate_dispatch(spec, direct):
    p, q = generate(spec), direct()
    assert np.array_equal(p.A, q.A)
    assert np.array_equal(p.b, q.b)
