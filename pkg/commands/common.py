"""Plumbing shared by the subcommands: config loading, output folders, provenance."""
import os

import click
import numpy as np
from flask import current_app

from core.barriers import ApproxProblem, check_dimensions
from core.config import RunConfig, load_run_config
from core.errors import ConfigError
from core.geometry import check_admissible_domain
from core.helpers import ensure_dir
from core.solver import continuation_solve, coupled_eps_schedule

config_option = click.option('--config', 'config_path', type=click.Path(dir_okay=False),
                             help='Archivo key = value con la configuracion de la corrida.')
out_option = click.option('--out', 'out', help='Carpeta de salida.')
seed_option = click.option('--seed', 'seed', type=click.IntRange(min=0), help='Semilla de las pruebas aleatorias.')


def run_config(command: str, config_path=None, **overrides) -> RunConfig:
    config = load_run_config(config_path, overrides, seed=current_app.config['LAB_DEFAULT_SEED'])
    if config.command is not None and config.command != command:
        raise ConfigError(f'config is for {config.command!r}, not {command!r}', key='command')
    current_app.logger.debug("config %s cargada (hash %s)", config_path or '<flags>', config.hash)
    return config


def output_dir(config: RunConfig, command: str) -> str:
    return ensure_dir(config.out_dir or os.path.join(current_app.config['LAB_OUT_DIR'], command))


def provenance(config: RunConfig, grid: dict | None = None, schedules: dict | None = None) -> dict:
    return {
        'config_hash': config.hash,
        'seed': config.seed,
        'domain': config.domain_text,
        'solver': config.solver.to_dict(),
        'grid': grid,
        'schedules': schedules,
    }


def envelope(command: str, config: RunConfig, body: dict, grid: dict | None = None,
             schedules: dict | None = None) -> dict:
    """Report skeleton: schema version, command, provenance, then the command's own keys."""
    out = {
        'schema_version': current_app.config['LAB_SCHEMA_VERSION'],
        'command': command,
        'provenance': provenance(config, grid, schedules),
    }
    out.update(body)
    return out


def schedules_for(config: RunConfig, n: int, k: int) -> tuple[list, list | None]:
    settings = config.problem
    R_schedule = list(settings.R_schedule) or ([settings.R] if settings.R else None)
    if settings.schedule_preset == 'coupled':
        if not R_schedule:
            raise ConfigError('schedule_preset = coupled needs R_schedule or R', key='R_schedule')
        eps_schedule = coupled_eps_schedule(R_schedule, n, k, settings.c0)
    else:
        eps_schedule = list(settings.eps_schedule) or [settings.eps]
    return eps_schedule, R_schedule


def solve_from_config(config: RunConfig):
    """Validate the domain, build the approximating problem and run the continuation."""
    spec = config.require_domain()
    check_dimensions(spec.n, spec.k)
    cert = check_admissible_domain(spec.surface, spec.k, raise_on_failure=True)
    current_app.logger.info("dominio %s certificado (%d angulos)", spec.describe(), cert.samples)
    eps_schedule, R_schedule = schedules_for(config, spec.n, spec.k)
    settings = config.problem
    problem = ApproxProblem.build(spec.surface, spec.k, eps=eps_schedule[0],
                                  R=R_schedule[0] if R_schedule else None,
                                  C0=settings.C0, C1=settings.C1, delta=settings.delta)
    R_schedule = R_schedule or [problem.R]
    field_ = continuation_solve(problem, eps_schedule, R_schedule, config.solver, settings.method)
    return field_, {'eps': [float(e) for e in eps_schedule], 'R': [float(R) for R in R_schedule],
                    'preset': settings.schedule_preset, 'method': settings.method}


def check_dump_matches(config: RunConfig, field_) -> None:
    """A dump passed with --field must come from the domain and final eps, R the config describes."""
    spec = config.domain
    if spec is None:
        return
    found = {'n': field_.n, 'k': field_.k, 'rho': list(field_.grid.surface.coeffs)}
    expected = {'n': spec.n, 'k': spec.k, 'rho': list(spec.surface.coeffs)}
    eps_schedule, R_schedule = schedules_for(config, spec.n, spec.k)
    found['eps'], expected['eps'] = field_.problem.eps, eps_schedule[-1]
    if R_schedule:
        found['R'], expected['R'] = field_.problem.R, R_schedule[-1]
    width = max(len(found['rho']), len(expected['rho']))
    for side in (found, expected):
        side['rho'] = side['rho'] + [0.0] * (width - len(side['rho']))
    mismatched = sorted(key for key in expected
                        if not np.allclose(found[key], expected[key], rtol=1e-12, atol=0.0))
    if mismatched:
        raise ConfigError('field dump does not match the configured problem', keys=mismatched,
                          dump={key: found[key] for key in mismatched},
                          config={key: expected[key] for key in mismatched})
