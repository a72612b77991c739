import io
import csv
import json
from pathlib import Path

from tls.tls import solve_tls
from tlscond.cli import TlsCommand, write_matrix_market


class Command(TlsCommand):
    help = 'Solve the TLS problem and print x_TLS'
    subcommand = 'solve'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--save-x',
            type=Path,
            dest='save_x',
            help='Also write x_TLS as an n x 1 Matrix Market file',
        )

    def compute(self, config, options):
        p = self.load_problem(config)
        sol = solve_tls(p, config.tol_gap)
        if options.get('save_x'):
            write_matrix_market(options['save_x'], sol.x_tls, comment=f'x_TLS for {config.source}')

        if config.format == 'json':
            return json.dumps({
                'source': config.source,
                'x_tls': sol.x_tls.tolist(),
                'sigma_np1': sol.sigma_np1,
                'alpha': sol.alpha,
                'gap': sol.gap,
                'residual_norm': sol.residual_norm,
                'consistent': sol.consistent,
            }, indent=2)

        if config.format == 'csv':
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator='\n')
            writer.writerow(['i', 'x_tls'])
            for i, value in enumerate(sol.x_tls, start=1):
                writer.writerow([i, repr(float(value))])
            return buffer.getvalue()

        lines = [f"x_TLS ({p.m}x{p.n}, {config.source})"]
        lines += [f"  {value: .15g}" for value in sol.x_tls]
        lines.append(f"sigma_(n+1) = {sol.sigma_np1:.10e}  alpha = {sol.alpha:.10e}  gap = {sol.gap:.10e}")
        lines.append(f"||r|| = {sol.residual_norm:.10e}")
        if sol.consistent:
            lines.append("consistent system: b lies in R(A)")
        return '\n'.join(lines)
