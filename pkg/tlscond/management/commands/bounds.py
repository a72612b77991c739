import io
import csv
import json

import numpy as np

from bounds.bounds import bound_report
from conditioning.conditioning import kappa_closed
from tls.tls import solve_tls, spectral_data
from tlscond.cli import TlsCommand

BOUND_FIELDS = (
    'alpha_lower', 'alpha_upper',
    'last_row_lower', 'last_row_upper',
    'a_spectrum_lower', 'a_spectrum_upper',
    'gap_lower', 'gap_upper',
    'bg_upper_abs', 'bg_upper_rel', 'gvl_rel',
)


class Command(TlsCommand):
    help = 'Evaluate the lower and upper bounds on the absolute condition number'
    subcommand = 'bounds'

    def compute(self, config, options):
        p = self.load_problem(config)
        sd = spectral_data(p)
        sol = solve_tls(p, config.tol_gap, spectral=sd)
        bounds = bound_report(sd, sol, frob_Ab=p.frobenius_norm, norm_b=float(np.linalg.norm(p.b)))
        kappa = kappa_closed(sd)

        if config.format == 'json':
            data = {'source': config.source, 'kappa': kappa, **bounds.model_dump(mode='json')}
            return json.dumps(data, indent=2)

        if config.format == 'csv':
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator='\n')
            writer.writerow(['bound', 'value', 'status', 'source'])
            writer.writerow(['kappa', repr(kappa), 'exact', 'kappa_closed'])
            for name in BOUND_FIELDS:
                value = getattr(bounds, name)
                writer.writerow([
                    name,
                    '' if value is None else repr(value),
                    bounds.status[name].value,
                    bounds.provenance[name],
                ])
            return buffer.getvalue()

        lines = [
            f"bounds for {config.source} ({p.m}x{p.n})",
            f"  {'kappa (exact)':<18} {kappa:.6e}",
        ]
        for name in BOUND_FIELDS:
            value = getattr(bounds, name)
            text = f"{value:.6e}" if value is not None else bounds.status[name].value
            lines.append(f"  {name:<18} {text}")
        lines.append(f"  {'rho':<18} {bounds.rho:.6e}")
        lines.append(f"  {'alpha':<18} {bounds.alpha:.6e}")
        return '\n'.join(lines)
