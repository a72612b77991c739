"""Per-problem rows and per-experiment summaries.

A ``ProblemRow`` holds the exact relative condition number, every bound in
relative form and the spectral diagnostics of one problem. ``run_experiment``
generates seeded samples, analyzes them concurrently and reduces the rows in
sample order, so the serialized output depends only on (spec, seed).
"""
from typing import Dict, Iterable, List, Literal, Optional, Sequence, TextIO
import asyncio
import csv
import logging
import time

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from bounds.bounds import BoundSet, bound_report, gap_interval
from conditioning.conditioning import (
    DEFAULT_SIZE_CAP_K,
    build_K,
    kappa_bg_closed,
    kappa_closed,
    kappa_gram,
    kappa_kronecker,
)
from generators.generators import GeneratorSpec, generate
from kernel.kernel import EPS, spectral_norm
from oracle.oracle import (
    ExpansionCheck,
    FdConfig,
    expansion_order_check,
    fd_jacobian,
    random_direction,
)
from tls.tls import DEFAULT_TOL_GAP, TlsProblem, solve_tls, spectral_data
from tlscond.tlscond import (
    ConsistentSystem,
    InsufficientData,
    InvalidInput,
    NonGenericUnderPerturbation,
    TlsError,
    TooLarge,
    setting,
)

logger = logging.getLogger(__name__)

# bound-sandwich checks allow this relative slack at least
SANDWICH_RTOL = 1e-10

# bound evaluations lose at most this many ulps of sigma_1 / gap
SANDWICH_ROUNDING = 10.0

DEFAULT_WORKERS = 4

# verification thresholds
ROUTE_RTOL = 1e-8
FD_RTOL = 1e-5
SLOPE_RANGE = (1.8, 2.2)

# Bound fields of BoundSet reported in relative form, in CSV order
RELATIVE_BOUNDS = (
    'alpha_lower', 'alpha_upper',
    'last_row_lower', 'last_row_upper',
    'a_spectrum_lower', 'a_spectrum_upper',
    'gap_lower', 'gap_upper',
)

ROW_FIELDS = (
    'source', 'kind', 'm', 'n', 'seed', 'status', 'error_code',
    'kappa_abs', 'kappa_rel',
    'kappa_kronecker_rel', 'kappa_bg_rel', 'kappa_gram_rel', 'route_spread',
    *(f'{name}_rel' for name in RELATIVE_BOUNDS),
    'bg_upper_rel', 'gvl_rel',
    'sigma_np1_over_sigma_n', 'sigma_np1_over_sigma_hat_n', 'sigma_1_over_sigma_hat_n',
    'one_minus_sigma_ratio', 'alpha', 'gap', 'gap_interval_lower', 'gap_interval_upper',
    'consistent', 'violations',
)

# columns averaged by run_experiment
NUMERIC_FIELDS = tuple(
    f for f in ROW_FIELDS
    if f not in ('source', 'kind', 'm', 'n', 'seed', 'status', 'error_code', 'consistent', 'violations')
)

# alphas of the controlled-alpha sweep and the columns it reports
ALPHA_SWEEP = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7)
SWEEP_FIELDS = ('kappa_rel', *(f'{name}_rel' for name in RELATIVE_BOUNDS), 'bg_upper_rel', 'gvl_rel')


class AnalysisOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol_gap: float = Field(default=DEFAULT_TOL_GAP, gt=0.0)
    size_cap_k: int = Field(default=DEFAULT_SIZE_CAP_K, gt=0)
    workers: int = Field(default=DEFAULT_WORKERS, gt=0)

    @classmethod
    def from_settings(cls, **overrides) -> 'AnalysisOptions':
        """Defaults from TLSCOND_* settings; non-None overrides win"""
        values = {
            'tol_gap': setting('TLSCOND_TOL_GAP', DEFAULT_TOL_GAP),
            'size_cap_k': setting('TLSCOND_SIZE_CAP_K', DEFAULT_SIZE_CAP_K),
            'workers': setting('TLSCOND_WORKERS', DEFAULT_WORKERS),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class ProblemRow(BaseModel):
    """One analyzed problem; on failure only the identifiers and error fields are set"""
    model_config = ConfigDict(frozen=True)

    source: str
    kind: Optional[str] = None
    m: int
    n: int
    seed: Optional[int] = None
    status: Literal['ok', 'error'] = 'ok'
    error_code: Optional[str] = None
    error_message: Optional[str] = None

    kappa_abs: Optional[float] = None
    kappa_rel: Optional[float] = None
    kappa_kronecker_rel: Optional[float] = None
    kappa_bg_rel: Optional[float] = None
    kappa_gram_rel: Optional[float] = None
    route_spread: Optional[float] = None

    alpha_lower_rel: Optional[float] = None
    alpha_upper_rel: Optional[float] = None
    last_row_lower_rel: Optional[float] = None
    last_row_upper_rel: Optional[float] = None
    a_spectrum_lower_rel: Optional[float] = None
    a_spectrum_upper_rel: Optional[float] = None
    gap_lower_rel: Optional[float] = None
    gap_upper_rel: Optional[float] = None
    bg_upper_rel: Optional[float] = None
    gvl_rel: Optional[float] = None

    sigma_np1_over_sigma_n: Optional[float] = None
    sigma_np1_over_sigma_hat_n: Optional[float] = None
    sigma_1_over_sigma_hat_n: Optional[float] = None
    one_minus_sigma_ratio: Optional[float] = None
    alpha: Optional[float] = None
    gap: Optional[float] = None
    gap_interval_lower: Optional[float] = None
    gap_interval_upper: Optional[float] = None
    consistent: Optional[bool] = None

    bounds: Optional[BoundSet] = None
    violations: List[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == 'ok'

    def csv_values(self) -> List[str]:
        return [_csv_cell(getattr(self, name)) for name in ROW_FIELDS]


class ExperimentSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: GeneratorSpec
    base_seed: int
    samples: int = Field(ge=1)
    succeeded: int
    failed: int
    failures: Dict[str, int]
    mean: Dict[str, Optional[float]]
    log10_mean: Dict[str, Optional[float]]
    rows: List[ProblemRow]


def _csv_cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, list):
        return ';'.join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def sandwich_slack(kappa: float, sigma_1: float, gap: float) -> float:
    """Absolute slack for bound comparisons: relative 1e-10 or the rounding level of kappa"""
    return kappa * max(SANDWICH_RTOL, SANDWICH_ROUNDING * EPS * sigma_1 / gap)


def sandwich_violations(bounds: BoundSet, kappa: float, slack: float) -> List[str]:
    """Names of applicable bounds on the wrong side of kappa"""
    bad = [name for name, value in bounds.lowers().items() if value > kappa + slack]
    bad += [name for name, value in bounds.uppers().items() if value < kappa - slack]
    return bad


def _error_row(source: str, m: int, n: int, error: TlsError, **ident) -> ProblemRow:
    return ProblemRow(
        source=source, m=m, n=n, status='error',
        error_code=error.code, error_message=str(error), **ident,
    )


def analyze_problem(
    p: TlsProblem,
    options: Optional[AnalysisOptions] = None,
    source: str = 'input',
    kind: Optional[str] = None,
    seed: Optional[int] = None,
) -> ProblemRow:
    """Exact kappa by every route, all bounds, diagnostics; TlsError becomes an error row"""
    options = options or AnalysisOptions()
    ident = {'kind': kind, 'seed': seed}
    try:
        sd = spectral_data(p)
        sol = solve_tls(p, options.tol_gap, spectral=sd)
        norm_b = float(np.linalg.norm(p.b))
        F = p.frobenius_norm
        scale = F / sol.x_norm

        kappa = kappa_closed(sd)
        routes = {'bg': kappa_bg_closed(sd), 'gram': kappa_gram(sd, sol)}
        try:
            routes['kronecker'] = kappa_kronecker(p, sol, options.size_cap_k)
        except (TooLarge, ConsistentSystem) as e:
            logger.debug(f"{source}: kronecker route skipped: {e}")
        spread = max(abs(v - kappa) for v in routes.values()) / kappa

        bounds = bound_report(sd, sol, frob_Ab=F, norm_b=norm_b)
        violations = sandwich_violations(bounds, kappa, sandwich_slack(kappa, sd.sigma_1, sol.gap))
        if violations:
            logger.warning(f"{source}: bounds on the wrong side of kappa = {kappa:.6e}: {', '.join(violations)}")

        u_hat_n = sd.svd_A.U[:, -1]
        interval = gap_interval(float(u_hat_n @ p.b), norm_b, sol.x_norm)

        def rel(value: Optional[float]) -> Optional[float]:
            return None if value is None else value * scale

        kronecker = routes.get('kronecker')
        return ProblemRow(
            source=source, m=p.m, n=p.n, **ident,
            kappa_abs=kappa,
            kappa_rel=kappa * scale,
            kappa_kronecker_rel=rel(kronecker),
            kappa_bg_rel=rel(routes['bg']),
            kappa_gram_rel=rel(routes['gram']),
            route_spread=spread,
            **{f'{name}_rel': rel(getattr(bounds, name)) for name in RELATIVE_BOUNDS},
            bg_upper_rel=bounds.bg_upper_rel,
            gvl_rel=bounds.gvl_rel,
            sigma_np1_over_sigma_n=sd.sigma_np1 / sd.sigma_n,
            sigma_np1_over_sigma_hat_n=sd.sigma_np1 / sd.sigma_hat_n,
            sigma_1_over_sigma_hat_n=sd.sigma_1 / sd.sigma_hat_n,
            one_minus_sigma_ratio=sol.gap / sd.sigma_hat_n,
            alpha=sd.alpha,
            gap=sol.gap,
            gap_interval_lower=interval[0],
            gap_interval_upper=interval[1],
            consistent=sol.consistent,
            bounds=bounds,
            violations=violations,
        )
    except TlsError as e:
        logger.info(f"{source}: {e.code}: {e}")
        return _error_row(source, p.m, p.n, e, **ident)


def _analyze_sample(spec: GeneratorSpec, options: AnalysisOptions) -> ProblemRow:
    started = time.perf_counter()
    source = f"{spec.kind}#{spec.seed}"
    try:
        p = generate(spec)
    except TlsError as e:
        logger.warning(f"{source}: generation failed: {e}")
        return _error_row(source, spec.m, spec.columns, e, kind=spec.kind, seed=spec.seed)
    row = analyze_problem(p, options, source=source, kind=spec.kind, seed=spec.seed)
    logger.debug(f"{source}: analyzed in {time.perf_counter() - started:.3f}s")
    return row


def summarize(spec: GeneratorSpec, base_seed: int, rows: List[ProblemRow]) -> ExperimentSummary:
    """Arithmetic and log10 means per numeric column over successful rows, in sample order"""
    good = [row for row in rows if row.ok]
    failures: Dict[str, int] = {}
    for row in rows:
        if not row.ok:
            failures[row.error_code] = failures.get(row.error_code, 0) + 1

    mean: Dict[str, Optional[float]] = {}
    log10_mean: Dict[str, Optional[float]] = {}
    for name in NUMERIC_FIELDS:
        values = np.array([getattr(r, name) for r in good if getattr(r, name) is not None], dtype=np.float64)
        mean[name] = float(np.mean(values)) if values.size else None
        positive = values[values > 0.0]
        log10_mean[name] = float(np.mean(np.log10(positive))) if positive.size else None

    return ExperimentSummary(
        spec=spec,
        base_seed=base_seed,
        samples=len(rows),
        succeeded=len(good),
        failed=len(rows) - len(good),
        failures=failures,
        mean=mean,
        log10_mean=log10_mean,
        rows=rows,
    )


async def arun_experiment(
    spec: GeneratorSpec,
    samples: int,
    base_seed: int,
    options: Optional[AnalysisOptions] = None,
) -> ExperimentSummary:
    """Analyze samples with seeds base_seed + i on worker threads, reduced in index order"""
    if samples < 1:
        raise InvalidInput(f"samples must be at least 1, got {samples}")
    options = options or AnalysisOptions()
    semaphore = asyncio.Semaphore(options.workers)
    started = time.perf_counter()

    async def one(index: int) -> ProblemRow:
        async with semaphore:
            return await asyncio.to_thread(_analyze_sample, spec.with_seed(base_seed + index), options)

    rows = await asyncio.gather(*(one(i) for i in range(samples)))
    summary = summarize(spec, base_seed, list(rows))
    logger.info(
        f"experiment {spec.kind}: {summary.succeeded}/{samples} samples succeeded "
        f"in {time.perf_counter() - started:.2f}s"
    )
    if summary.failures:
        logger.warning(f"experiment {spec.kind}: failures {summary.failures}")
    return summary


def run_experiment(
    spec: GeneratorSpec,
    samples: int,
    base_seed: int,
    options: Optional[AnalysisOptions] = None,
) -> ExperimentSummary:
    return asyncio.run(arun_experiment(spec, samples, base_seed, options))


def write_rows_csv(rows: Iterable[ProblemRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(ROW_FIELDS)
    for row in rows:
        writer.writerow(row.csv_values())


def write_summary_csv(summary: ExperimentSummary, stream: TextIO) -> None:
    """Sample rows followed by a 'mean' and a 'log10_mean' row"""
    write_rows_csv(summary.rows, stream)
    writer = csv.writer(stream, lineterminator='\n')
    for label, values in (('mean', summary.mean), ('log10_mean', summary.log10_mean)):
        cells = []
        for name in ROW_FIELDS:
            if name == 'source':
                cells.append(label)
            elif name == 'kind':
                cells.append(summary.spec.kind)
            elif name in ('m', 'n'):
                cells.append(str(summary.spec.m if name == 'm' else summary.spec.columns))
            elif name == 'seed':
                cells.append(str(summary.base_seed))
            else:
                cells.append(_csv_cell(values.get(name)))
        writer.writerow(cells)


def format_row_human(row: ProblemRow) -> str:
    if not row.ok:
        return f"{row.source}: {row.error_code}: {row.error_message}"
    lines = [f"{row.source} ({row.m}x{row.n})"]
    for name in ROW_FIELDS[7:-2]:
        value = getattr(row, name)
        if value is not None:
            lines.append(f"  {name:<28} {value:.6e}")
    if row.consistent:
        lines.append("  consistent system (sigma_(n+1) ~ 0)")
    if row.violations:
        lines.append(f"  VIOLATIONS: {', '.join(row.violations)}")
    return '\n'.join(lines)


def format_summary_human(summary: ExperimentSummary) -> str:
    spec = summary.spec
    lines = [
        f"{spec.kind} m={spec.m} n={spec.columns} samples={summary.samples} base_seed={summary.base_seed}",
        f"  succeeded {summary.succeeded}, failed {summary.failed}"
        + (f" {summary.failures}" if summary.failures else ''),
        f"  {'column':<28} {'mean':>14} {'log10 mean':>12}",
    ]
    for name in NUMERIC_FIELDS:
        mean = summary.mean.get(name)
        if mean is None:
            continue
        log_mean = summary.log10_mean.get(name)
        log_text = f"{log_mean:12.4f}" if log_mean is not None else f"{'-':>12}"
        lines.append(f"  {name:<28} {mean:14.6e} {log_text}")
    return '\n'.join(lines)


def alpha_sweep(
    m: int,
    n: int,
    alphas: Sequence[float] = ALPHA_SWEEP,
    samples: int = 100,
    base_seed: int = 0,
    options: Optional[AnalysisOptions] = None,
) -> List[ExperimentSummary]:
    """One controlled-alpha experiment per alpha, all on the same seeds.

    gen_controlled_alpha draws U and Sigma before V, so sample i has the
    same U and Sigma at every alpha; only V (and hence alpha) changes.
    """
    if not alphas:
        raise InvalidInput("alpha sweep needs at least one alpha")
    summaries = []
    for alpha in alphas:
        spec = GeneratorSpec.from_mapping({'kind': 'controlled_alpha', 'm': m, 'n': n, 'alpha': alpha})
        summaries.append(run_experiment(spec, samples, base_seed, options))
    return summaries


def write_sweep_csv(summaries: Iterable[ExperimentSummary], stream: TextIO) -> None:
    """One row per alpha holding the log10 means of kappa and every relative bound"""
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(['alpha', 'samples', 'succeeded', *SWEEP_FIELDS])
    for summary in summaries:
        writer.writerow([
            repr(summary.spec.alpha),
            summary.samples,
            summary.succeeded,
            *(_csv_cell(summary.log10_mean.get(name)) for name in SWEEP_FIELDS),
        ])


def format_sweep_human(summaries: List[ExperimentSummary]) -> str:
    first = summaries[0]
    lines = [
        f"controlled_alpha m={first.spec.m} n={first.spec.columns} samples={first.samples} "
        f"base_seed={first.base_seed} (log10 means)",
        f"  {'alpha':>9} " + ' '.join(f"{name[:-4]:>16}" for name in SWEEP_FIELDS),
    ]
    for summary in summaries:
        cells = []
        for name in SWEEP_FIELDS:
            value = summary.log10_mean.get(name)
            cells.append(f"{'-':>16}" if value is None else f"{value:16.4f}")
        lines.append(f"  {summary.spec.alpha:9.1e} " + ' '.join(cells))
    return '\n'.join(lines)


class VerificationReport(BaseModel):
    """Every exact route against the finite-difference oracle for one problem"""
    model_config = ConfigDict(frozen=True)

    source: str
    m: int
    n: int
    kappa_closed: float
    kappa_kronecker: Optional[float]
    kappa_bg: float
    kappa_gram: float
    kappa_fd: Optional[float]
    route_spread: float
    fd_jacobian_error: Optional[float]
    expansion: Optional[ExpansionCheck]
    skipped: Dict[str, str] = Field(default_factory=dict)
    passed: bool

    def failures(self) -> List[str]:
        bad = []
        if self.route_spread > ROUTE_RTOL:
            bad.append('route_spread')
        if self.fd_jacobian_error is not None and self.fd_jacobian_error > FD_RTOL:
            bad.append('fd_jacobian_error')
        if self.expansion is not None and not SLOPE_RANGE[0] <= self.expansion.slope <= SLOPE_RANGE[1]:
            bad.append('expansion_slope')
        return bad


def verify_problem(
    p: TlsProblem,
    fd: Optional[FdConfig] = None,
    options: Optional[AnalysisOptions] = None,
    direction_seed: int = 0,
    source: str = 'input',
) -> VerificationReport:
    """Exact routes, FD Jacobian and expansion slope; model errors propagate"""
    options = options or AnalysisOptions()
    fd = fd or FdConfig(tol_gap=options.tol_gap)
    sd = spectral_data(p)
    sol = solve_tls(p, options.tol_gap, spectral=sd)

    kappa = kappa_closed(sd)
    kappa_bg = kappa_bg_closed(sd)
    kappa_g = kappa_gram(sd, sol)
    skipped: Dict[str, str] = {}

    K = None
    try:
        K = build_K(p, sol, options.size_cap_k)
    except (TooLarge, ConsistentSystem) as e:
        skipped['kronecker'] = f"{e.code}: {e}"
    kappa_k = spectral_norm(K) if K is not None else None

    J = None
    try:
        J = fd_jacobian(p, fd)
    except (TooLarge, NonGenericUnderPerturbation) as e:
        skipped['fd'] = f"{e.code}: {e}"
    kappa_f = spectral_norm(J) if J is not None else None
    fd_error = None
    if J is not None and K is not None:
        fd_error = spectral_norm(J - K) / spectral_norm(K)

    expansion = None
    if K is not None:
        try:
            expansion = expansion_order_check(p, K, random_direction(p, direction_seed), tol_gap=options.tol_gap)
        except (InsufficientData, NonGenericUnderPerturbation) as e:
            skipped['expansion'] = f"{e.code}: {e}"

    others = [v for v in (kappa_k, kappa_bg, kappa_g) if v is not None]
    spread = max(abs(v - kappa) for v in others) / kappa
    draft = dict(
        source=source, m=p.m, n=p.n,
        kappa_closed=kappa, kappa_kronecker=kappa_k, kappa_bg=kappa_bg, kappa_gram=kappa_g,
        kappa_fd=kappa_f, route_spread=spread, fd_jacobian_error=fd_error,
        expansion=expansion, skipped=skipped,
    )
    report = VerificationReport(**draft, passed=True)
    failures = report.failures()
    if failures:
        logger.warning(f"{source}: verification failed on {', '.join(failures)}")
        report = report.model_copy(update={'passed': False})
    return report


def format_verification_human(report: VerificationReport) -> str:
    lines = [f"{report.source} ({report.m}x{report.n}) {'PASSED' if report.passed else 'FAILED'}"]
    for name in ('kappa_closed', 'kappa_kronecker', 'kappa_bg', 'kappa_gram', 'kappa_fd',
                 'route_spread', 'fd_jacobian_error'):
        value = getattr(report, name)
        lines.append(f"  {name:<20} {'-' if value is None else f'{value:.10e}'}")
    if report.expansion is not None:
        lines.append(f"  {'expansion_slope':<20} {report.expansion.slope:.4f}")
    for what, why in report.skipped.items():
        lines.append(f"  skipped {what}: {why}")
    return '\n'.join(lines)
