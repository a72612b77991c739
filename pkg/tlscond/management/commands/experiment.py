import argparse
import io

from django.core.management.base import CommandError

from report.report import (
    AnalysisOptions,
    alpha_sweep,
    format_summary_human,
    format_sweep_human,
    run_experiment,
    write_summary_csv,
    write_sweep_csv,
)
from tlscond.cli import TlsCommand
from tlscond.tlscond import setting


def alpha_list(text: str):
    """Comma-separated alphas, each in (0, 1)"""
    try:
        alphas = [float(token) for token in text.split(',') if token.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}")
    if not alphas or any(not 0.0 < a < 1.0 for a in alphas):
        raise argparse.ArgumentTypeError("alphas must be a non-empty list of values in (0, 1)")
    return alphas


class Command(TlsCommand):
    help = 'Analyze seeded samples of a generator and aggregate the results'
    subcommand = 'experiment'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--samples',
            type=int,
            default=setting('TLSCOND_SAMPLES', 100),
            help='Number of samples; sample i uses seed + i (default: 100)',
        )
        parser.add_argument(
            '--workers',
            type=int,
            default=setting('TLSCOND_WORKERS', 4),
            help='Samples analyzed concurrently (default: 4)',
        )
        parser.add_argument(
            '--alphas',
            type=alpha_list,
            help='Sweep controlled_alpha over these alphas (e.g. 1e-2,1e-3,1e-4) on shared seeds',
        )

    def build_config(self, options):
        alphas = options.get('alphas')
        if alphas and options.get('alpha') is None:
            options = {**options, 'alpha': alphas[0]}
        return super().build_config(options)

    def compute(self, config, options):
        analysis = AnalysisOptions.from_settings(
            tol_gap=config.tol_gap,
            size_cap_k=options['size_cap_k'],
            workers=options['workers'],
        )
        alphas = options.get('alphas')
        if alphas:
            if config.generator.kind != 'controlled_alpha':
                raise CommandError("--alphas needs --gen controlled_alpha", returncode=2)
            summaries = alpha_sweep(
                config.generator.m, config.generator.n, alphas, config.samples, config.seed, analysis,
            )
            if config.format == 'json':
                return '[' + ',\n'.join(s.model_dump_json(indent=2) for s in summaries) + ']'
            if config.format == 'csv':
                buffer = io.StringIO()
                write_sweep_csv(summaries, buffer)
                return buffer.getvalue()
            return format_sweep_human(summaries)

        summary = run_experiment(config.generator, config.samples, config.seed, analysis)
        if config.format == 'json':
            return summary.model_dump_json(indent=2)
        if config.format == 'csv':
            buffer = io.StringIO()
            write_summary_csv(summary, buffer)
            return buffer.getvalue()
        return format_summary_human(summary)
