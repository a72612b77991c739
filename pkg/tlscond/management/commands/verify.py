import io
import csv

from oracle.oracle import FdConfig
from report.report import AnalysisOptions, format_verification_human, verify_problem
from tlscond.cli import TlsCommand
from tlscond.tlscond import setting


class Command(TlsCommand):
    help = 'Check the exact condition number routes against finite differences'
    subcommand = 'verify'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--fd-step', type=float, dest='fd_step', help='FD step (default: sqrt(eps) * ||[A, b]||_F)')
        parser.add_argument('--scheme', choices=['central', 'forward'], default='central', help='FD scheme')
        parser.add_argument(
            '--fd-max-columns',
            type=int,
            dest='fd_max_columns',
            default=setting('TLSCOND_FD_MAX_COLUMNS', 5000),
            help='Largest m(n+1) for the FD Jacobian (default: 5000)',
        )

    def compute(self, config, options):
        p = self.load_problem(config)
        analysis = AnalysisOptions.from_settings(tol_gap=config.tol_gap, size_cap_k=options['size_cap_k'])
        fd = FdConfig(
            step=options.get('fd_step'),
            scheme=options['scheme'],
            max_columns=options['fd_max_columns'],
            tol_gap=config.tol_gap,
        )
        report = verify_problem(p, fd, analysis, direction_seed=config.seed, source=config.source)

        if config.format == 'json':
            return report.model_dump_json(indent=2)
        if config.format == 'csv':
            fields = ('kappa_closed', 'kappa_kronecker', 'kappa_bg', 'kappa_gram', 'kappa_fd',
                      'route_spread', 'fd_jacobian_error')
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator='\n')
            writer.writerow(['source', *fields, 'expansion_slope', 'passed'])
            writer.writerow([
                config.source,
                *('' if getattr(report, f) is None else repr(getattr(report, f)) for f in fields),
                '' if report.expansion is None else repr(report.expansion.slope),
                str(report.passed).lower(),
            ])
            return buffer.getvalue()
        return format_verification_human(report)
