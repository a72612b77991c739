import io
import csv

import numpy as np
import pytest

from conftest import GOLDEN_KAPPA, GOLDEN_X
from generators.generators import GeneratorSpec, gen_bg_example, gen_controlled_alpha, gen_gaussian
from report import report as report_module
from report.report import (
    ROW_FIELDS,
    SWEEP_FIELDS,
    AnalysisOptions,
    alpha_sweep,
    analyze_problem,
    arun_experiment,
    format_row_human,
    format_summary_human,
    format_sweep_human,
    run_experiment,
    sandwich_slack,
    sandwich_violations,
    verify_problem,
    write_summary_csv,
    write_sweep_csv,
)
from tls.tls import TlsProblem, spectral_data
from tlscond.tlscond import InvalidInput, NonGeneric


@pytest.mark.unit
def test_analyze_golden(golden_problem):
    row = analyze_problem(golden_problem, source='golden')
    assert row.ok
    assert row.kappa_abs == pytest.approx(GOLDEN_KAPPA, abs=1e-4)
    assert row.kappa_rel == pytest.approx(row.kappa_abs * np.sqrt(3.0) / GOLDEN_X, rel=1e-12)
    assert row.route_spread <= 1e-10
    assert row.gap_upper_rel is None
    assert row.bounds.status['gap_upper'] == 'not_applicable'
    assert row.violations == []
    assert row.gap_interval_lower <= row.gap <= row.gap_interval_upper
    assert 'golden' in format_row_human(row)


@pytest.mark.unit
def test_degenerate_problem_gives_error_row(degenerate_problem):
    row = analyze_problem(degenerate_problem, source='diag')
    assert row.status == 'error'
    assert row.error_code == 'DegenerateSolution'
    assert row.kappa_rel is None
    assert 'DegenerateSolution' in format_row_human(row)


@pytest.mark.unit
def test_kronecker_route_skipped_above_cap(golden_problem):
    row = analyze_problem(golden_problem, AnalysisOptions(size_cap_k=2))
    assert row.ok
    assert row.kappa_kronecker_rel is None
    assert row.kappa_bg_rel is not None


@pytest.mark.integration
def test_rows_have_no_violations(small_problems):
    for p in small_problems:
        row = analyze_problem(p)
        assert row.ok
        assert row.violations == []
        assert row.route_spread <= 1e-8


@pytest.mark.unit
def test_options_from_settings(settings):
    settings.TLSCOND_TOL_GAP = 1e-10
    settings.TLSCOND_WORKERS = 2
    options = AnalysisOptions.from_settings()
    assert options.tol_gap == 1e-10
    assert options.workers == 2
    assert AnalysisOptions.from_settings(tol_gap=1e-8, workers=None).tol_gap == 1e-8


@pytest.mark.unit
def test_single_sample_summary_equals_row():
    spec = GeneratorSpec(kind='gaussian', m=12, n=3)
    summary = run_experiment(spec, samples=1, base_seed=5)
    row = summary.rows[0]
    assert summary.samples == 1
    assert summary.succeeded == 1
    assert row.seed == 5
    assert summary.mean['kappa_rel'] == row.kappa_rel
    assert summary.log10_mean['kappa_rel'] == pytest.approx(np.log10(row.kappa_rel))


@pytest.mark.unit
def test_experiment_is_deterministic():
    spec = GeneratorSpec(kind='controlled_alpha', m=15, n=4, alpha=0.3)
    first = run_experiment(spec, samples=4, base_seed=10)
    second = run_experiment(spec, samples=4, base_seed=10, options=AnalysisOptions(workers=1))
    assert first.model_dump_json() == second.model_dump_json()


@pytest.mark.asyncio
async def test_async_runner_keeps_sample_order():
    spec = GeneratorSpec(kind='gaussian', m=10, n=2)
    summary = await arun_experiment(spec, samples=6, base_seed=100, options=AnalysisOptions(workers=3))
    assert [row.seed for row in summary.rows] == list(range(100, 106))
    rows = [report_module.analyze_problem(gen_gaussian(10, 2, 100 + i)) for i in range(6)]
    assert [row.kappa_rel for row in summary.rows] == [row.kappa_rel for row in rows]


@pytest.mark.unit
def test_failures_are_counted(mocker):
    mocker.patch.object(report_module, 'kappa_closed', side_effect=NonGeneric("forced"))
    summary = run_experiment(GeneratorSpec(kind='gaussian', m=8, n=2), samples=3, base_seed=0)
    assert summary.succeeded == 0
    assert summary.failed == 3
    assert summary.failures == {'NonGeneric': 3}
    assert summary.mean['kappa_rel'] is None


@pytest.mark.unit
def test_experiment_needs_samples():
    with pytest.raises(InvalidInput):
        run_experiment(GeneratorSpec(kind='gaussian', m=8, n=2), samples=0, base_seed=0)


@pytest.mark.unit
def test_summary_csv_layout():
    summary = run_experiment(GeneratorSpec(kind='vanhuffel', m=12), samples=2, base_seed=0)
    buffer = io.StringIO()
    write_summary_csv(summary, buffer)
    lines = list(csv.reader(io.StringIO(buffer.getvalue())))
    assert tuple(lines[0]) == ROW_FIELDS
    assert len(lines) == 5
    assert lines[-2][0] == 'mean'
    assert lines[-1][0] == 'log10_mean'
    kappa_col = ROW_FIELDS.index('kappa_rel')
    assert float(lines[-2][kappa_col]) == pytest.approx(float(lines[1][kappa_col]))
    assert 'vanhuffel' in format_summary_human(summary)


@pytest.mark.integration
def test_verify_golden(golden_problem):
    report = verify_problem(golden_problem, source='golden')
    assert report.passed
    assert report.kappa_fd == pytest.approx(GOLDEN_KAPPA, abs=1e-4)
    assert report.fd_jacobian_error <= 1e-5
    assert 1.8 <= report.expansion.slope <= 2.2
    assert report.skipped == {}


@pytest.mark.unit
def test_verify_skips_kronecker_for_consistent_problem():
    p = TlsProblem(A=np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), b=np.array([1.0, 2.0, 0.0]))
    report = verify_problem(p)
    assert report.kappa_kronecker is None
    assert 'kronecker' in report.skipped
    assert report.expansion is None


@pytest.mark.integration
def test_sandwich_slack_stays_tight_on_ill_conditioned_problems():
    checked = 0
    for seed in range(5):
        p = gen_bg_example(100, 20, 1e-10, seed)
        row = analyze_problem(p)
        if not row.ok:
            continue
        checked += 1
        slack = sandwich_slack(row.kappa_abs, spectral_data(p).sigma_1, row.gap)
        assert slack / row.kappa_abs < 1e-3
        assert row.violations == []
        # a lower bound 1% above kappa is flagged
        pushed = row.bounds.model_copy(update={'gap_lower': row.kappa_abs * 1.01})
        assert 'gap_lower' in sandwich_violations(pushed, row.kappa_abs, slack)
    assert checked >= 3


@pytest.mark.integration
def test_alpha_sweep_shares_seeds_across_alphas():
    summaries = alpha_sweep(20, 4, alphas=(1e-2, 1e-4), samples=3, base_seed=5)
    assert [s.spec.alpha for s in summaries] == [1e-2, 1e-4]
    assert all(s.succeeded == 3 for s in summaries)
    for row in summaries[1].rows:
        assert row.alpha == pytest.approx(1e-4, rel=1e-3)
    assert summaries[1].log10_mean['kappa_rel'] > summaries[0].log10_mean['kappa_rel']

    wide = np.linalg.svd(gen_controlled_alpha(20, 4, 1e-2, 6).augmented, compute_uv=False)
    narrow = np.linalg.svd(gen_controlled_alpha(20, 4, 1e-4, 6).augmented, compute_uv=False)
    assert narrow == pytest.approx(wide, rel=1e-10)

    buffer = io.StringIO()
    write_sweep_csv(summaries, buffer)
    lines = list(csv.reader(io.StringIO(buffer.getvalue())))
    assert lines[0] == ['alpha', 'samples', 'succeeded', *SWEEP_FIELDS]
    assert [float(line[0]) for line in lines[1:]] == [1e-2, 1e-4]
    assert float(lines[1][3]) == pytest.approx(summaries[0].log10_mean['kappa_rel'])
    assert '1.0e-04' in format_sweep_human(summaries)


@pytest.mark.unit
def test_alpha_sweep_rejects_bad_alphas():
    with pytest.raises(InvalidInput):
        alpha_sweep(20, 4, alphas=())
    with pytest.raises(InvalidInput):
        alpha_sweep(20, 4, alphas=(1.5,), samples=1)
