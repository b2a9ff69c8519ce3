import json
import os

import click

from commands.common import config_option, envelope, out_option, output_dir, run_config
from commands.errors import lab_command
from core.barriers import barrier_table
from core.helpers import write_csv, write_json

TABLE_HEADERS = ['n', 'k', 'eps', 'r', 'C', 'phi', 'phi_r', 'eig_radial', 'eig_tangential', 'sigma_k', 'f_eps']


def register_barriers(app):
    @app.cli.command('barriers-table')
    @config_option
    @out_option
    @lab_command('barriers-table')
    def barriers_table(record, config_path, out):
        """Tabulate phi, phi_r, Hessian eigenvalues and f_eps over eps_values x radii."""
        config = run_config('barriers-table', config_path, out=out)
        record.config_hash = config.hash
        spec = config.require_domain()
        rows = barrier_table(spec.n, spec.k, config.eps_values, config.radii, config.C)

        folder = output_dir(config, 'barriers')
        record.out_dir = folder
        write_csv(os.path.join(folder, 'barriers.csv'), TABLE_HEADERS, rows)
        write_json(os.path.join(folder, 'barriers.json'), envelope('barriers-table', config, {'rows': rows}))

        # sigma_k de los autovalores debe reproducir f_eps fila a fila
        worst = max(abs(row['sigma_k'] - row['f_eps']) / max(1.0, abs(row['f_eps'])) for row in rows)
        record.summary = {'rows': len(rows), 'max_sigma_mismatch': worst}
        click.echo(json.dumps(record.summary, sort_keys=True, indent=2))
        return True
