import json
import os

import click

from commands.common import config_option, envelope, out_option, output_dir, run_config, seed_option
from commands.errors import lab_command
from core.config import SUITES
from core.helpers import write_json
from core.suites import run_suites


def register_verify(app):
    @app.cli.command('verify-identities')
    @config_option
    @out_option
    @seed_option
    @click.option('--suite', type=click.Choice(SUITES), help='Corre solo esta suite.')
    @click.option('--samples', type=click.IntRange(min=1), help='Muestras por suite (o por par n,k).')
    @lab_command('verify-identities')
    def verify_identities(record, config_path, out, seed, suite, samples):
        """Run the randomized invariant suites with a fixed seed."""
        config = run_config('verify-identities', config_path, out=out, seed=seed, suite=suite, samples=samples)
        record.config_hash = config.hash
        names = [config.suite] if config.suite else list(SUITES)
        results = run_suites(names, config.seed, config.samples, config.tolerance)

        folder = output_dir(config, 'verify')
        record.out_dir = folder
        for result in results:
            if result.failures:
                write_json(os.path.join(folder, 'failures', f'{result.name}.json'), {
                    'suite': result.name, 'seed': config.seed, 'samples': config.samples,
                    'tolerance': result.tolerance, 'failures': result.failures,
                })
        passed = all(r.passed for r in results)
        write_json(os.path.join(folder, 'verify.json'), envelope('verify-identities', config, {
            'passed': passed,
            'suites': [r.to_dict() for r in results],
        }))

        record.summary = {r.name: {'passed': r.passed, 'min_margin': r.min_margin} for r in results}
        click.echo(json.dumps(record.summary, sort_keys=True, indent=2))
        return passed
