import json
import os

import click
import numpy as np

from commands.common import config_option, envelope, out_option, output_dir, run_config, seed_option, \
    solve_from_config
from commands.errors import lab_command
from core.fielddump import dump_field
from core.helpers import write_csv, write_json

RAYS = (('0', 0.0), ('pi/2', np.pi / 2.0), ('pi', np.pi))


def ray_rows(field_) -> list[dict]:
    """u along theta = 0, pi/2, pi, interpolated across columns row by row."""
    grid = field_.grid
    rows = []
    for label, theta in RAYS:
        r = grid.r_at(grid.s, np.full(grid.n_s, theta))
        u = np.array([np.interp(theta, grid.theta, field_.values[i]) for i in range(grid.n_s)])
        rows.extend({'ray': label, 'theta': float(theta), 'r': float(ri), 'u': float(ui)}
                    for ri, ui in zip(r, u))
    return rows


def register_solve(app):
    @app.cli.command('solve')
    @config_option
    @out_option
    @seed_option
    @lab_command('solve')
    def solve(record, config_path, out, seed):
        """Solve the approximate exterior problem and write dump, report and rays."""
        config = run_config('solve', config_path, out=out, seed=seed)
        record.config_hash = config.hash
        field_, schedules = solve_from_config(config)
        report = field_.report

        folder = output_dir(config, 'solve')
        record.out_dir = folder
        dump_field(field_, os.path.join(folder, 'field.bin'))
        write_json(os.path.join(folder, 'report.json'), envelope('solve', config, {
            'domain': config.domain_text,
            'report': report.to_dict(),
        }, grid=field_.grid.to_dict(), schedules=schedules))
        write_csv(os.path.join(folder, 'rays.csv'), ['ray', 'theta', 'r', 'u'], ray_rows(field_))

        asym = report.asymptotics
        record.summary = {
            'method': report.method,
            'gamma': asym.gamma,
            'gamma_bounds': list(asym.gamma_bounds),
            'final_residual': report.final_residual,
            'stages': len(report.stages),
            'low_confidence': asym.low_confidence,
        }
        click.echo(json.dumps(record.summary, sort_keys=True, indent=2))
        return True
