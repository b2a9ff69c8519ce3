import pytest
from conftest import write_config

from core.config import load_run_config, read_key_values
from core.errors import ConfigError
from core.helpers import canonical_json, parse_dmy, parse_float_list, write_csv


def test_read_key_values_splits_on_first_equals():
    values = read_key_values('# corrida de prueba\ndomain = n=5 k=2 rho = 1  # bola\n\nseed=3\n')
    assert values == {'domain': 'n=5 k=2 rho = 1', 'seed': '3'}


@pytest.mark.parametrize('text', [
    'seed = 1\nseed = 2',
    'just some text',
    '= 3',
])
def test_read_key_values_errors(text):
    with pytest.raises(ConfigError):
        read_key_values(text)


def test_load_merges_solver_file(tmp_path):
    write_config(tmp_path / 'solver.cfg', 'R = 100\nn_theta = 9\n')
    path = write_config(tmp_path / 'run.cfg', 'domain = n=5 k=2 rho = 1\neps = 1e-4\nn_s = 64\n'
                                              'solver_config = solver.cfg\n')
    config = load_run_config(path)
    assert config.solver.n_s == 64
    assert config.solver.n_theta == 9
    assert config.problem.eps == pytest.approx(1e-4)
    assert config.problem.R == pytest.approx(100.0)
    assert config.require_domain().n == 5


def test_included_file_cannot_repeat_keys(tmp_path):
    write_config(tmp_path / 'solver.cfg', 'n_s = 32\n')
    path = write_config(tmp_path / 'run.cfg', 'n_s = 64\nsolver_config = solver.cfg\n')
    with pytest.raises(ConfigError):
        load_run_config(path)


@pytest.mark.parametrize('text', [
    'colour = red',
    'samples = 0',
    'seed = -1',
    'tau = -2, -0.5',
    'method = spectral',
    'domain = n=5 k=two rho = 1',
    'n_s = many',
])
def test_load_rejects_bad_values(tmp_path, text):
    with pytest.raises(ConfigError):
        load_run_config(write_config(tmp_path / 'run.cfg', text))


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / 'nope.cfg'))


def test_overrides_win_over_the_file(tmp_path):
    path = write_config(tmp_path / 'run.cfg', 'seed = 1\neps = 1e-3\n')
    config = load_run_config(path, {'seed': 7, 'eps': '1e-5', 'out': None})
    assert config.seed == 7
    assert config.problem.eps == pytest.approx(1e-5)
    with pytest.raises(ConfigError):
        load_run_config(path, {'bogus': 1})


def test_seed_falls_back_to_default():
    assert load_run_config(None, seed=11).seed == 11
    assert load_run_config(None, {'seed': 4}, seed=11).seed == 4


def test_require_domain():
    with pytest.raises(ConfigError) as info:
        load_run_config(None).require_domain()
    assert info.value.message == 'missing key: domain'


def test_hash_ignores_output_folder():
    base = load_run_config(None, {'domain': 'n=5 k=2 rho = 1'})
    moved = load_run_config(None, {'domain': 'n=5 k=2 rho = 1', 'out': '/tmp/elsewhere'})
    reseeded = load_run_config(None, {'domain': 'n=5 k=2 rho = 1', 'seed': 9})
    assert base.hash == moved.hash
    assert base.hash != reseeded.hash
    assert len(base.hash) == 64


def test_parse_float_list():
    assert parse_float_list('1/3, 1; 0.5') == pytest.approx([1 / 3, 1.0, 0.5])
    assert parse_float_list([1, 2]) == [1.0, 2.0]
    for bad in ('', ' , ', '1/0', 'uno'):
        with pytest.raises(ConfigError):
            parse_float_list(bad)


def test_parse_dmy():
    parsed = parse_dmy('11/06/2024')
    assert (parsed.year, parsed.month, parsed.day) == (2024, 6, 11)
    assert parse_dmy('2024-06-11') is None
    assert parse_dmy(None) is None


def test_csv_and_json_writers_are_deterministic(tmp_path):
    path = write_csv(str(tmp_path / 'rows.csv'), ['a', 'b'], [{'a': 1 / 3, 'b': 'x'}, [0.1, 2]])
    assert (tmp_path / 'rows.csv').read_text().splitlines() == ['a,b', '0.3333333333333333,x', '0.1,2']
    assert path.endswith('rows.csv')
    assert canonical_json({'b': 1, 'a': [2]}) == '{\n  "a": [\n    2\n  ],\n  "b": 1\n}'
