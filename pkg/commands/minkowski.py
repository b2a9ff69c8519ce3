import json
import os

import click

from commands.common import check_dump_matches, config_option, envelope, out_option, output_dir, run_config, \
    seed_option, solve_from_config
from commands.errors import lab_command
from core.fielddump import load_field
from core.helpers import write_csv, write_json
from core.minkowski import beta_threshold, check_beta, minkowski_report, phi_series
from core.pdf_utils import build_minkowski_pdf
from core.solver import asymptotics_report

CSV_HEADERS = ['tau', 'level', 'phi', 'quad_err', 'regular_min_grad']


def default_betas(n: int, k: int) -> tuple:
    return (max(beta_threshold(n, k), float(n - 2 * k)),)


def register_minkowski(app):
    @app.cli.command('minkowski')
    @config_option
    @out_option
    @seed_option
    @click.option('--beta', 'beta', help="Lista de beta separada por comas (admite fracciones, ej. '1/3,1').")
    @click.option('--field', 'field_path', type=click.Path(dir_okay=False), help='Volcado previo de solve.')
    @click.option('--pdf', is_flag=True, help='Genera tambien minkowski.pdf.')
    @lab_command('minkowski')
    def minkowski(record, config_path, out, seed, beta, field_path, pdf):
        """Phi series, monotonicity verdict and inequality report for each beta."""
        config = run_config('minkowski', config_path, out=out, seed=seed, beta=beta, field=field_path)
        record.config_hash = config.hash
        schedules = None
        if config.field_path:
            field_ = load_field(config.field_path)
            check_dump_matches(config, field_)
            field_ = field_.with_asymptotics(asymptotics_report(field_))
            domain = config.domain_text or f'n={field_.n} k={field_.k} rho = {field_.grid.surface.describe()}'
        else:
            spec = config.require_domain()
            # las beta se validan antes de resolver
            for b in config.betas or default_betas(spec.n, spec.k):
                check_beta(spec.n, spec.k, b)
            field_, schedules = solve_from_config(config)
            domain = config.domain_text

        n, k = field_.n, field_.k
        betas = config.betas or default_betas(n, k)
        for b in betas:
            check_beta(n, k, b)

        folder = output_dir(config, 'minkowski')
        record.out_dir = folder
        results = []
        for index, b in enumerate(betas):
            series = phi_series(field_, b, config.taus)
            inequality = minkowski_report(field_, field_.grid.surface, b)
            write_csv(os.path.join(folder, f'phi_{index}.csv'), CSV_HEADERS, series.rows())
            results.append({'beta': b, 'csv': f'phi_{index}.csv', 'series': series.to_dict(),
                            'inequality': inequality.to_dict()})

        payload = envelope('minkowski', config, {
            'domain': domain,
            'problem': field_.problem.to_dict(),
            'gamma': field_.asymptotics.gamma,
            'results': results,
        }, grid=field_.grid.to_dict(), schedules=schedules)
        write_json(os.path.join(folder, 'minkowski.json'), payload)
        if pdf:
            with open(os.path.join(folder, 'minkowski.pdf'), 'wb') as fh:
                fh.write(build_minkowski_pdf(payload))

        record.summary = {
            'gamma': field_.asymptotics.gamma,
            'betas': [
                {'beta': r['beta'], 'monotone': r['series']['monotone'],
                 'relative_gap': r['inequality']['relative_gap'], 'equality': r['inequality']['equality']}
                for r in results
            ],
        }
        click.echo(json.dumps(record.summary, sort_keys=True, indent=2))
        return True
