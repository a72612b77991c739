import io

from report.report import AnalysisOptions, analyze_problem, format_row_human, write_rows_csv
from tlscond.cli import TlsCommand
from tlscond.tlscond import error_for


class Command(TlsCommand):
    help = 'Exact condition numbers by every route, all bounds and diagnostics'
    subcommand = 'analyze'

    def compute(self, config, options):
        p = self.load_problem(config)
        analysis = AnalysisOptions.from_settings(tol_gap=config.tol_gap, size_cap_k=options['size_cap_k'])
        kind = config.generator.kind if config.generator else None
        seed = config.generator.seed if config.generator else None
        row = analyze_problem(p, analysis, source=config.source, kind=kind, seed=seed)
        if not row.ok:
            raise error_for(row.error_code, row.error_message)

        if config.format == 'json':
            return row.model_dump_json(indent=2)
        if config.format == 'csv':
            buffer = io.StringIO()
            write_rows_csv([row], buffer)
            return buffer.getvalue()
        return format_row_human(row)
