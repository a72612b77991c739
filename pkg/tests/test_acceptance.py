"""Reference values for the deterministic van Huffel problems and statistical
properties of the random generators."""
import numpy as np
import pytest

from conftest import random_problems
from bounds.bounds import bound_report, rho_factor
from conditioning.conditioning import build_K, kappa_bg_closed, kappa_closed, kappa_kronecker
from generators.generators import (
    GeneratorSpec,
    gen_bg_example,
    gen_controlled_alpha,
    gen_gaussian,
    gen_vanhuffel,
)
from kernel.kernel import spectral_norm
from oracle.oracle import FdConfig, expansion_order_check, fd_jacobian, random_direction
from report.report import analyze_problem, run_experiment, sandwich_slack
from tls.tls import solve_tls, spectral_data
from tlscond.tlscond import InsufficientData, NonGeneric

VANHUFFEL_TABLE = {
    200: {'kappa_rel': 2.01e2, 'gap_lower_rel': 2.00e2, 'gap_upper_rel': 2.15e2,
          'a_spectrum_upper_rel': 3.46e2, 'bg_upper_rel': 2.83e3, 'gvl_rel': 5.15e3},
    500: {'kappa_rel': 5.01e2, 'gap_lower_rel': 5.00e2, 'gap_upper_rel': 5.15e2,
          'a_spectrum_upper_rel': 8.65e2, 'bg_upper_rel': 1.12e4, 'gvl_rel': 1.21e4},
    1000: {'kappa_rel': 1.00e3, 'gap_lower_rel': 1.00e3, 'gap_upper_rel': 1.02e3,
           'a_spectrum_upper_rel': 1.73e3, 'bg_upper_rel': 3.16e4, 'gvl_rel': 2.35e4},
}

VANHUFFEL_RATIOS = {
    200: {'sigma_np1_over_sigma_n': 7.07e-2, 'sigma_np1_over_sigma_hat_n': 7.07e-1, 'sigma_1_over_sigma_hat_n': 1.00e1},
    500: {'sigma_np1_over_sigma_n': 4.47e-2, 'sigma_np1_over_sigma_hat_n': 7.07e-1, 'sigma_1_over_sigma_hat_n': 1.58e1},
    1000: {'sigma_np1_over_sigma_n': 3.16e-2, 'sigma_np1_over_sigma_hat_n': 7.07e-1, 'sigma_1_over_sigma_hat_n': 2.24e1},
}


@pytest.fixture(scope='module')
def vanhuffel_rows():
    return {m: analyze_problem(gen_vanhuffel(m), source=f'vanhuffel-{m}') for m in VANHUFFEL_TABLE}


@pytest.mark.acceptance
@pytest.mark.parametrize("m", sorted(VANHUFFEL_TABLE))
def test_vanhuffel_relative_condition_table(vanhuffel_rows, m):
    row = vanhuffel_rows[m]
    assert row.ok
    for column, expected in VANHUFFEL_TABLE[m].items():
        assert getattr(row, column) == pytest.approx(expected, rel=1e-2), column


@pytest.mark.acceptance
@pytest.mark.parametrize("m", sorted(VANHUFFEL_RATIOS))
def test_vanhuffel_singular_value_ratios(vanhuffel_rows, m):
    row = vanhuffel_rows[m]
    for column, expected in VANHUFFEL_RATIOS[m].items():
        assert getattr(row, column) == pytest.approx(expected, rel=1e-2), column


@pytest.mark.acceptance
@pytest.mark.parametrize("m", [6, 50, 200])
def test_vanhuffel_closed_form_identities(m):
    p = gen_vanhuffel(m)
    sd = spectral_data(p)
    sol = solve_tls(p, spectral=sd)
    assert sd.alpha == pytest.approx(1.0 / np.sqrt(m - 1), rel=1e-8)
    assert sd.sigma_hat_n == pytest.approx(np.sqrt(2.0 * m), rel=1e-8)
    assert sd.sigma_np1 == pytest.approx(np.sqrt(m), rel=1e-8)
    assert sol.x_tls == pytest.approx(-np.ones(m - 2), rel=1e-8)


@pytest.fixture(scope='module')
def hundred_problems():
    return random_problems(100)


@pytest.mark.acceptance
def test_three_exact_routes_agree(hundred_problems):
    for p in hundred_problems:
        sd = spectral_data(p)
        sol = solve_tls(p, spectral=sd)
        kappa = kappa_closed(sd)
        assert abs(kappa_kronecker(p, sol) - kappa) <= 1e-8 * kappa
        assert abs(kappa_bg_closed(sd) - kappa) <= 1e-8 * kappa


def _assert_bound_sandwich(p):
    sd = spectral_data(p)
    sol = solve_tls(p, spectral=sd)
    kappa = kappa_closed(sd)
    bounds = bound_report(sd, sol)
    slack = sandwich_slack(kappa, sd.sigma_1, sol.gap)
    for name, value in bounds.lowers().items():
        assert value <= kappa + slack, name
    for name, value in bounds.uppers().items():
        assert value >= kappa - slack, name
    assert bounds.alpha_upper / bounds.alpha_lower == pytest.approx(1.0 / sd.alpha, rel=1e-12)
    if sd.alpha <= 0.5:
        assert bounds.last_row_upper < 4.0 * bounds.last_row_lower
        assert bounds.gap_upper / bounds.gap_lower == pytest.approx(rho_factor(bounds.rho), rel=1e-12)
    assert bounds.a_spectrum_upper <= bounds.bg_upper_abs * (1.0 + 1e-12)

    expected = np.ones(p.n)
    expected[-1] = sd.alpha
    singular = np.linalg.svd(sd.V11, compute_uv=False)
    assert singular == pytest.approx(np.sort(expected)[::-1], abs=1e-8)

    u_hat_n = sd.svd_A.U[:, -1]
    assert abs(u_hat_n @ p.b) / (2.0 * sol.x_norm) <= sol.gap * (1.0 + 1e-10)
    assert sol.gap <= np.linalg.norm(p.b) / sol.x_norm * (1.0 + 1e-10)


@pytest.mark.acceptance
def test_bound_sandwiches_on_random_problems(hundred_problems):
    for p in hundred_problems:
        _assert_bound_sandwich(p)


@pytest.mark.acceptance
@pytest.mark.parametrize("e_p", [1e-3, 1e-7, 1e-10])
def test_bound_sandwiches_on_bg_sweep(e_p):
    checked = 0
    for seed in range(10):
        try:
            _assert_bound_sandwich(gen_bg_example(100, 20, e_p, seed))
        except NonGeneric:
            continue
        checked += 1
    assert checked >= 3


@pytest.mark.acceptance
@pytest.mark.slow
def test_oracle_matches_kronecker_jacobian():
    problems = [
        gen_gaussian(5 + i % 8, 1 + i % 4, seed=i) if i % 2 == 0
        else gen_controlled_alpha(5 + i % 8, 1 + i % 4, 0.3, seed=i)
        for i in range(20)
    ]
    slopes = []
    for index, p in enumerate(problems):
        sol = solve_tls(p)
        K = build_K(p, sol)
        J = fd_jacobian(p, FdConfig(step=1e-6))
        assert spectral_norm(J - K) <= 1e-6 * spectral_norm(K)
        for k in range(5):
            try:
                check = expansion_order_check(p, K, random_direction(p, seed=100 * index + k))
            except InsufficientData:
                slopes.append(None)
                continue
            slopes.append(check.slope)
    inside = sum(s is not None and 1.8 <= s <= 2.2 for s in slopes)
    assert inside >= 0.95 * len(slopes)


@pytest.mark.acceptance
@pytest.mark.slow
def test_bg_example_bound_pattern():
    for seed in range(20):
        p = gen_bg_example(100, 20, 1e-3, seed)
        sd = spectral_data(p)
        sol = solve_tls(p, spectral=sd)
        kappa = kappa_closed(sd)
        bounds = bound_report(sd, sol)
        assert bounds.alpha_lower <= kappa * (1.0 + 1e-10)
        assert kappa <= bounds.alpha_upper * (1.0 + 1e-10)
        assert bounds.bg_upper_abs / bounds.a_spectrum_upper >= 10.0


@pytest.mark.acceptance
@pytest.mark.slow
def test_toeplitz_blur_magnitudes():
    summary = run_experiment(GeneratorSpec(kind='toeplitz_blur', m=100), samples=10, base_seed=0)
    rows = [row for row in summary.rows if row.ok]
    assert len(rows) >= 5
    median = float(np.median([row.kappa_rel for row in rows]))
    assert 1e6 <= median <= 1e9
    for row in rows:
        assert row.gvl_rel / row.kappa_rel >= 1e6


@pytest.mark.acceptance
@pytest.mark.slow
def test_controlled_alpha_gap_ratio():
    spec = GeneratorSpec(kind='controlled_alpha', m=500, n=350, alpha=1e-2)
    summary = run_experiment(spec, samples=10, base_seed=0)
    mean = summary.mean['one_minus_sigma_ratio']
    assert 2.91e-4 / 3.0 <= mean <= 3.0 * 2.91e-4


@pytest.mark.acceptance
@pytest.mark.slow
def test_gaussian_relative_condition_magnitude():
    summary = run_experiment(GeneratorSpec(kind='gaussian', m=200, n=75), samples=20, base_seed=0)
    assert summary.succeeded == 20
    assert 1.46e3 / 3.0 <= summary.mean['kappa_rel'] <= 3.0 * 1.46e3
