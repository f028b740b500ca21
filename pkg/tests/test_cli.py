"""
GField - command line: job files, artifacts and exit codes
"""
# License: GPLv3, see License.txt

import json

import pandas
import pytest

from gfield.cli import EXIT_ENGINE, EXIT_OK, EXIT_SCHEMA, main
from gfield.commands import collect_command_classes
from gfield.commands.check import SUITES

PARAMS = {'sigma_lo_sq': 1.0, 'sigma_hi_sq': 4.0}
UNIT = {'box': {'lo': [0.0], 'hi': [1.0]}}


@pytest.fixture
def job(tmp_path):
    def write(**data):
        data.setdefault('params', PARAMS)
        path = tmp_path.joinpath('job.json')
        path.write_text(json.dumps(data), encoding='utf-8')
        return str(path)
    return write


def _result(out_dir):
    return json.loads(out_dir.joinpath('result.json').read_text(encoding='utf-8'))


def test_registry():
    assert list(collect_command_classes()) == ['check', 'expect', 'integrate', 'list', 'oracle', 'simulate', 'st-expect', 'st-integral']


def test_list_needs_no_config(capsys):
    assert main(['list']) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert 'expect' in payload['commands']
    assert any(row['key'] == 'grid.radius_mult' for row in payload['keys'])


def test_expect_writes_artifacts(job, tmp_path):
    out = tmp_path.joinpath('out')
    config = job(command='expect', phi='x1^2', regions=[UNIT], output={'format': 'csv'})
    assert main(['expect', '--config', config, '--out', str(out)]) == EXIT_OK
    result = _result(out)
    assert result['result']['value_upper'] == pytest.approx(4.0, rel=1e-3)
    assert result['result']['value_lower'] == pytest.approx(1.0, rel=1e-3)
    assert result['result']['engine'] == 'pde'
    rows = [json.loads(line) for line in out.joinpath('rows.jsonl').read_text(encoding='utf-8').splitlines()]
    assert len(rows) == 1
    assert set(pandas.read_csv(out.joinpath('rows.csv')).columns) >= {'value_upper', 'value_lower', 'engine', 'grid_descriptor', 'runtime_ms'}
    resolved = json.loads(out.joinpath('resolved_config.json').read_text(encoding='utf-8'))
    assert resolved['phi'] == 'x1^2'


def test_reruns_are_byte_identical(job, tmp_path):
    config = job(phi='max(x1, x2)', regions=[UNIT, {'box': {'lo': [0.5], 'hi': [1.5]}}], output={'record_runtime': False})
    first, second = tmp_path.joinpath('a'), tmp_path.joinpath('b')
    assert main(['expect', '--config', config, '--out', str(first)]) == EXIT_OK
    assert main(['expect', '--config', config, '--out', str(second)]) == EXIT_OK
    for name in ('result.json', 'rows.jsonl', 'resolved_config.json'):
        assert first.joinpath(name).read_bytes() == second.joinpath(name).read_bytes()


def test_stdout_without_output_dir(job, capsys):
    assert main(['expect', '--config', job(phi='x1', regions=[UNIT]), '--engine', 'oracle']) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload['result']['engine'] == 'oracle'
    assert abs(payload['result']['value_upper']) < 1e-6


def test_oracle_convergence_table(job, tmp_path):
    out = tmp_path.joinpath('out')
    config = job(phi='x1^2', regions=[UNIT], dp={'convergence': True, 'steps': 20})
    assert main(['oracle', '--config', config, '--out', str(out)]) == EXIT_OK
    table = pandas.read_csv(out.joinpath('dp_convergence.csv'))
    assert list(table.columns) == ['steps', 'upper', 'delta']


def test_integrate_reports_exact_isometry(job, capsys):
    config = job(f={'simple': [{'indicator': UNIT, 'coefficient': 3}]}, phi='x1^2')
    assert main(['integrate', '--config', config]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload['isometry'][0]['equal']
    assert payload['isometry'][0]['second_moment']['exact'] == '36/1'
    assert payload['result']['value_upper'] == pytest.approx(36.0, rel=1e-3)


def test_simulate(job, tmp_path):
    out = tmp_path.joinpath('out')
    config = job(lattice={'extent': [1.0, 1.0], 'cells': [4, 4]}, simulate={'paths': 5, 'moment_paths': 200, 'pairs': 2, 'policy': 'checkerboard'})
    assert main(['simulate', '--config', config, '--out', str(out), '--seed', '7']) == EXIT_OK
    assert len(pandas.read_csv(out.joinpath('paths.csv'))) == 5 * 25
    assert len(pandas.read_csv(out.joinpath('moments.csv'))) == 2
    assert _result(out)['seed'] == 7


def test_st_expect_conditional_table(job, tmp_path):
    out = tmp_path.joinpath('out')
    config = job(times=[0.0, 1.0, 2.0], cells=[UNIT], phi='x1_1 * x2_1^2', condition_at=1.0)
    assert main(['st-expect', '--config', config, '--out', str(out)]) == EXIT_OK
    assert _result(out)['depends_on'] == [1]
    table = pandas.read_csv(out.joinpath('conditional.csv'))
    assert list(table.columns) == ['x1', 'value_upper', 'value_lower']
    assert len(table) == 21


def test_st_integral(job, tmp_path):
    out = tmp_path.joinpath('out')
    config = job(times=[0.0, 1.0, 2.0], cells=[UNIT, {'box': {'lo': [1.0], 'hi': [2.0]}}], process={'example': True})
    assert main(['st-integral', '--config', config, '--out', str(out)]) == EXIT_OK
    result = _result(out)
    assert [row['quantity'] for row in result['results']] == ['E[int f dW]', 'E[(int f dW)^2]', 'E[int f^2 dt dx]']
    assert result['m2_norm'] > 0


def test_check_suite(job, tmp_path):
    out = tmp_path.joinpath('out')
    assert main(['check', 'moments', '--config', job(), '--out', str(out)]) == EXIT_OK
    result = _result(out)
    assert result['command'] == 'check'
    assert not pandas.read_csv(out.joinpath('checks.csv')).empty


def test_check_all(job, tmp_path):
    out = tmp_path.joinpath('out')
    config = job(check={'instances': 20, 'draws': 5, 'paths': 2000, 'mc_paths': 1000})
    assert main(['check', '--all', '--config', config, '--out', str(out), '--workers', '2']) == EXIT_OK
    result = _result(out)
    assert set(result['suites']) == set(SUITES)
    assert [report['suite'] for report in result['reports']] == list(SUITES)
    assert result['suites']['oracle-equivalence']
    checks = pandas.read_csv(out.joinpath('checks.csv'))
    convergence = checks[checks['name'] == 'dp_convergence']
    assert len(convergence) == 1
    assert convergence['worst_violation'].iloc[0] < 1e-3


@pytest.mark.parametrize('argv, data', [
    (['expect'], None),
    (['expect'], {'phi': 'x1 +', 'regions': [UNIT]}),
    (['expect'], {'phi': 'x2', 'regions': [UNIT]}),
    (['expect'], {'phi': '(' * 5000 + 'x1' + ')' * 5000, 'regions': [UNIT]}),
    (['expect'], {'phi': 'x1', 'regions': [{'box': {'lo': [1.0], 'hi': [0.0]}}]}),
    (['expect'], {'command': 'oracle', 'phi': 'x1', 'regions': [UNIT]}),
    (['expect'], {'regions': [UNIT]}),
    (['expect', 'moments'], {'phi': 'x1', 'regions': [UNIT]}),
    (['expect', '--seed', str(2 ** 64)], {'phi': 'x1', 'regions': [UNIT]}),
    (['check'], {}),
    (['check', 'everything'], {}),
    (['integrate'], {'f': {'spline': []}}),
    (['st-expect'], {'times': [0.0, 1.0], 'cells': [UNIT, UNIT], 'phi': 'x1'}),
])
def test_schema_errors(job, argv, data):
    if data is not None:
        argv = argv + ['--config', job(**data)]
    assert main(argv) == EXIT_SCHEMA


def test_missing_params(tmp_path):
    path = tmp_path.joinpath('job.json')
    path.write_text(json.dumps({'phi': 'x1', 'regions': [UNIT]}), encoding='utf-8')
    assert main(['expect', '--config', str(path)]) == EXIT_SCHEMA


@pytest.mark.parametrize('argv, data', [
    (['st-integral'], {'times': [0.0, 1.0, 2.0], 'cells': [UNIT], 'process': {'coefficients': {'1_1': 'x1_1'}}}),
    (['oracle'], {'phi': 'x1 + x2 + x3 + x4', 'regions': [UNIT, {'box': {'lo': [1.0], 'hi': [2.0]}}, {'box': {'lo': [2.0], 'hi': [3.0]}},
                                                          {'box': {'lo': [3.0], 'hi': [4.0]}}]}),
])
def test_engine_errors(job, argv, data):
    assert main(argv + ['--config', job(**data)]) == EXIT_ENGINE
