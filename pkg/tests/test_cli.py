import json

import pytest
from conftest import write_config

from database.db import RunLog

BALL = 'domain = n=5 k=2 rho = 1\n'


def error_of(result) -> dict:
    for line in result.output.splitlines():
        if line.startswith('{"details"'):
            return json.loads(line)
    raise AssertionError(f'no error document in output: {result.output!r}')


def ledger(app):
    with app.app_context():
        return [row.to_dict() for row in RunLog.query.order_by(RunLog.id).all()]


def test_verify_single_suite(app, runner, tmp_path):
    out = tmp_path / 'verify'
    result = runner.invoke(args=['verify-identities', '--suite', 'elem_sym', '--samples', '50', '--seed', '3',
                                 '--out', str(out)])
    assert result.exit_code == 0, result.output
    assert json.loads(result.stdout) == {'elem_sym': {'passed': True, 'min_margin': pytest.approx(0.0, abs=1e-12)}}
    report = json.loads((out / 'verify.json').read_text())
    assert report['passed'] is True
    assert report['schema_version'] == 1
    assert report['provenance']['seed'] == 3
    assert [s['suite'] for s in report['suites']] == ['elem_sym']
    assert not (out / 'failures').exists()

    rows = ledger(app)
    assert len(rows) == 1
    assert rows[0]['command'] == 'verify-identities'
    assert rows[0]['status'] == 'ok'
    assert rows[0]['config_hash'] == report['provenance']['config_hash']


def test_failing_suite_exits_one_and_writes_failures(app, runner, tmp_path):
    out = tmp_path / 'verify'
    path = write_config(tmp_path / 'run.cfg', 'command = verify-identities\ntolerance = 1e-15\n')
    result = runner.invoke(args=['verify-identities', '--config', path, '--suite', 'barriers', '--samples', '4',
                                 '--out', str(out)])
    assert result.exit_code == 1
    failures = json.loads((out / 'failures' / 'barriers.json').read_text())
    assert failures['suite'] == 'barriers'
    assert failures['failures']
    assert ledger(app)[-1]['status'] == 'failed'


def test_default_output_folder(app, runner):
    result = runner.invoke(args=['verify-identities', '--suite', 'log_solution'])
    assert result.exit_code == 0, result.output
    assert ledger(app)[0]['out_dir'].endswith('verify')


def test_barriers_table(runner, tmp_path):
    path = write_config(tmp_path / 'run.cfg', BALL + 'eps_values = 0, 0.1\nradii = 1, 2\nC = 1\n')
    out = tmp_path / 'barriers'
    result = runner.invoke(args=['barriers-table', '--config', path, '--out', str(out)])
    assert result.exit_code == 0, result.output
    summary = json.loads(result.stdout)
    assert summary['rows'] == 4
    assert summary['max_sigma_mismatch'] <= 1e-12
    lines = (out / 'barriers.csv').read_text().splitlines()
    assert lines[0].startswith('n,k,eps,r,C,phi')
    assert len(lines) == 5
    payload = json.loads((out / 'barriers.json').read_text())
    assert len(payload['rows']) == 4
    assert payload['provenance']['domain'] == 'n=5 k=2 rho = 1'


def test_barriers_table_needs_domain(app, runner):
    result = runner.invoke(args=['barriers-table'])
    assert result.exit_code == 2
    error = error_of(result)
    assert error['kind'] == 'config_error'
    assert error['error'] == 'missing key: domain'
    assert ledger(app)[0]['status'] == 'rejected'


def test_config_for_another_command(runner, tmp_path):
    path = write_config(tmp_path / 'run.cfg', 'command = solve\n' + BALL)
    result = runner.invoke(args=['barriers-table', '--config', path])
    assert result.exit_code == 2
    assert error_of(result)['details'] == {'key': 'command'}


def test_half_dimension_is_rejected(app, runner, tmp_path):
    path = write_config(tmp_path / 'run.cfg', 'domain = n=4 k=2 rho = 1\neps = 1e-4\nR = 100\n')
    result = runner.invoke(args=['solve', '--config', path, '--out', str(tmp_path / 'solve')])
    assert result.exit_code == 2
    assert error_of(result)['error'].startswith('k = n/2 is not solvable')
    assert ledger(app)[0]['status'] == 'rejected'
    assert not (tmp_path / 'solve' / 'field.bin').exists()


def test_inadmissible_domain_is_rejected(runner, tmp_path):
    path = write_config(tmp_path / 'run.cfg', 'domain = n=5 k=2 rho = 1 + 0.9*cos(2*theta)\n')
    result = runner.invoke(args=['solve', '--config', path])
    assert result.exit_code == 2
    error = error_of(result)
    assert error['kind'] == 'admissibility_error'
    assert error['details']['certificate']['passed'] is False


def test_solve_then_minkowski_from_dump(app, runner, tmp_path):
    path = write_config(tmp_path / 'run.cfg', BALL + 'eps = 1e-4\nR = 100\nmethod = radial\n')
    solve_out = tmp_path / 'solve'
    result = runner.invoke(args=['solve', '--config', path, '--out', str(solve_out)])
    assert result.exit_code == 0, result.output
    summary = json.loads(result.stdout)
    assert summary['method'] == 'radial-flux'
    assert summary['gamma'] == pytest.approx(1.0, rel=0.02)
    assert summary['stages'] == 1
    for name in ('field.bin', 'report.json', 'rays.csv'):
        assert (solve_out / name).exists()
    report = json.loads((solve_out / 'report.json').read_text())
    assert report['provenance']['schedules']['eps'] == [1e-4]
    assert report['provenance']['grid']['R'] == 100.0
    rays = (solve_out / 'rays.csv').read_text().splitlines()
    assert rays[0] == 'ray,theta,r,u'
    assert {line.split(',')[0] for line in rays[1:]} == {'0', 'pi/2', 'pi'}

    mink_out = tmp_path / 'minkowski'
    result = runner.invoke(args=['minkowski', '--field', str(solve_out / 'field.bin'), '--beta', '1',
                                 '--pdf', '--out', str(mink_out)])
    assert result.exit_code == 0, result.output
    summary = json.loads(result.stdout)
    assert summary['betas'][0]['beta'] == 1.0
    assert summary['betas'][0]['equality']
    payload = json.loads((mink_out / 'minkowski.json').read_text())
    assert payload['domain'].startswith('n=5 k=2')
    assert payload['results'][0]['csv'] == 'phi_0.csv'
    assert (mink_out / 'phi_0.csv').read_text().splitlines()[1].startswith('-inf,')
    assert (mink_out / 'minkowski.pdf').read_bytes()[:4] == b'%PDF'

    assert [row['command'] for row in ledger(app)] == ['solve', 'minkowski']


def test_minkowski_rejects_small_beta_before_solving(runner, tmp_path):
    path = write_config(tmp_path / 'run.cfg', BALL + 'eps = 1e-4\nR = 100\n')
    out = tmp_path / 'minkowski'
    result = runner.invoke(args=['minkowski', '--config', path, '--beta', '0.2', '--out', str(out)])
    assert result.exit_code == 2
    error = error_of(result)
    assert error['kind'] == 'precondition_error'
    assert error['details']['hypothesis'] == 'beta >= (n-2k)/(n-k)'
    assert not (out / 'minkowski.json').exists()


def test_runs_filters(app, runner):
    runner.invoke(args=['verify-identities', '--suite', 'log_solution'])
    runner.invoke(args=['barriers-table'])

    result = runner.invoke(args=['runs'])
    assert result.exit_code == 0, result.output
    assert [row['command'] for row in json.loads(result.stdout)] == ['barriers-table', 'verify-identities']

    result = runner.invoke(args=['runs', '--status', 'rejected'])
    assert [row['command'] for row in json.loads(result.stdout)] == ['barriers-table']

    result = runner.invoke(args=['runs', '--command', 'VERIFY', '--limit', '1'])
    assert [row['status'] for row in json.loads(result.stdout)] == ['ok']

    result = runner.invoke(args=['runs', '--start', '01/01/2000'])
    assert len(json.loads(result.stdout)) == 2
    result = runner.invoke(args=['runs', '--end', '01/01/2000'])
    assert json.loads(result.stdout) == []

    # los comandos de consulta no quedan en el registro
    assert len(ledger(app)) == 2


def test_runs_rejects_bad_dates(runner):
    result = runner.invoke(args=['runs', '--start', '2024-06-11'])
    assert result.exit_code == 2
    assert 'dd/mm/aaaa' in result.output


def test_minkowski_checks_the_dump_against_the_config(app, runner, tmp_path):
    solve_cfg = write_config(tmp_path / 'solve.cfg', BALL + 'eps = 1e-4\nR = 100\nmethod = radial\n')
    solve_out = tmp_path / 'solve'
    assert runner.invoke(args=['solve', '--config', solve_cfg, '--out', str(solve_out)]).exit_code == 0
    dump = str(solve_out / 'field.bin')

    other = write_config(tmp_path / 'other.cfg',
                         'domain = n=5 k=2 rho = 1 + 0.1*cos(2*theta)\neps = 1e-4\nR = 100\n')
    result = runner.invoke(args=['minkowski', '--config', other, '--field', dump, '--out', str(tmp_path / 'm1')])
    assert result.exit_code == 2
    error = error_of(result)
    assert error['kind'] == 'config_error'
    assert error['details']['keys'] == ['rho']
    assert error['details']['dump'] == {'rho': [1.0, 0.0, 0.0]}

    finer = write_config(tmp_path / 'finer.cfg', BALL + 'eps = 1e-5\nR = 100\n')
    result = runner.invoke(args=['minkowski', '--config', finer, '--field', dump, '--out', str(tmp_path / 'm2')])
    assert result.exit_code == 2
    assert error_of(result)['details']['keys'] == ['eps']

    result = runner.invoke(args=['minkowski', '--config', solve_cfg, '--field', dump, '--beta', '1',
                                 '--out', str(tmp_path / 'm3')])
    assert result.exit_code == 0, result.output
    assert [row['status'] for row in ledger(app)] == ['ok', 'rejected', 'rejected', 'ok']
