import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from bandcrit import __version__
from bandcrit.bandcrit_exe import cli


@pytest.fixture
def runner():
    return CliRunner()


def test_version(runner):
    result = runner.invoke(cli, ['--version'])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_covariance(runner, tmp_path):
    result = runner.invoke(cli, ['covariance', '-N', '2', '-W', '1', '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    j = pd.read_csv(tmp_path / 'covariance_N2_W1.csv', header=None).to_numpy()
    assert j[0, 0] == pytest.approx(2 / 3)
    assert j[0, 1] == pytest.approx(1 / 3)
    summary = pd.read_csv(tmp_path / 'covariance.csv')
    assert summary['row_sum_error'].iloc[0] <= 1e-12


def test_simulate_zero_offset(runner, tmp_path):
    result = runner.invoke(cli, ['simulate', '-N', '8', '-k', '1', '-Z', '0', '-n', '20',
                                 '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    df = pd.read_csv(tmp_path / 'simulate.csv')
    assert len(df) == 1
    row = df.iloc[0]
    assert row['ratio'] == 1.0
    assert row['ginibre'] == 1.0
    assert row['factorized'] == 1.0
    assert row['critical'] == pytest.approx(1.0, abs=1e-14)
    document = json.loads((tmp_path / 'simulate.json').read_text())
    assert document['results']['rows'][0]['ratio'] == 1.0
    assert len(document['metadata']['config_hash']) == 64


def test_simulate_independent_of_threads(runner, tmp_path):
    args = ['simulate', '-N', '16', '-N', '32', '-k', '1', '-Z', '0.5', '-Z', '0.3+0.4j',
            '-n', '200', '-s', '1']
    for threads, name in [('1', 'one'), ('3', 'three')]:
        result = runner.invoke(cli, args + ['-j', threads, '-o', str(tmp_path / name)])
        assert result.exit_code == 0, result.output
    for name in ('simulate.csv', 'simulate_summary.csv'):
        assert (tmp_path / 'one' / name).read_bytes() == (tmp_path / 'three' / name).read_bytes()
    summary = pd.read_csv(tmp_path / 'one' / 'simulate_summary.csv')
    assert set(summary['N']) == {16, 32}
    assert 'non_increasing' in summary.columns


def test_simulate_plot(runner, tmp_path):
    result = runner.invoke(cli, ['simulate', '-N', '8', '-Z', '0.5', '-n', '10', '--plot',
                                 '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / 'simulate.svg').read_text().lstrip().startswith('<?xml')


def test_simulate_conflicting_bandwidth(runner, tmp_path):
    result = runner.invoke(cli, ['simulate', '-W', '4', '-k', '1', '-o', str(tmp_path)])
    assert result.exit_code == 2
    assert "'w'" in result.output


def test_unknown_config_key(runner, tmp_path):
    path = tmp_path / 'cfg.json'
    path.write_text(json.dumps({'samples': 10}))
    result = runner.invoke(cli, ['simulate', '-c', str(path), '-o', str(tmp_path)])
    assert result.exit_code == 2
    assert 'samples' in result.output


def test_limits(runner, tmp_path):
    result = runner.invoke(cli, ['limits', '-Z', '0', '-Z', '1', '-u', '1000',
                                 '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    df = pd.read_csv(tmp_path / 'limits.csv')
    assert df['ginibre'].iloc[1] == pytest.approx((1 - np.exp(-4)) / 4, rel=1e-14)
    assert df['critical'].iloc[1] == pytest.approx(df['ginibre'].iloc[1], abs=1e-3)


def test_spectrum(runner, tmp_path):
    result = runner.invoke(cli, ['spectrum', '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / 'spectrum.json').read_text())['results']
    assert payload['report']['max_rel_err'] <= 1e-5
    assert len(pd.read_csv(tmp_path / 'spectrum.csv')) == 8


def test_su2(runner, tmp_path):
    result = runner.invoke(cli, ['su2', '-l', '1', '-W', '20', '-W', '40', '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    df = pd.read_csv(tmp_path / 'su2.csv')
    assert (abs(df['average'] - df['bessel']) <= 1e-9).all()
    payload = json.loads((tmp_path / 'su2.json').read_text())['results']
    assert payload['slopes']['1'] < -3.5
    assert payload['nu_multiplication']['max_deviation'] <= 1e-12
    assert payload['legendre']['hypergeometric_max_deviation'] <= 1e-12


def test_blockgate(runner, tmp_path):
    result = runner.invoke(cli, ['blockgate', '-n', '3', '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / 'blockgate.jsonl').read_text().splitlines()
    assert len(lines) == 3
    assert all(json.loads(line)['ct1_holds'] for line in lines)
    summary = json.loads((tmp_path / 'blockgate.json').read_text())['results']
    assert summary['ct1_all'] and summary['norm_all']


def test_blockgate_violation(runner, tmp_path):
    result = runner.invoke(cli, ['blockgate', '-n', '2', '--violate', '3', '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / 'blockgate.json').read_text())['results']
    assert summary['rejected'] == 2


def test_verify_only_limits(runner, tmp_path):
    result = runner.invoke(cli, ['verify', '--only', 'limits', '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / 'verify.json').read_text())['results']
    assert [c['number'] for c in report['criteria']] == [4, 5]
    assert report['passed']


def test_verify_coarse_truncation_fails(runner, tmp_path):
    result = runner.invoke(cli, ['verify', '--only', 'limits', '-m', '8', '-o', str(tmp_path)])
    assert result.exit_code == 1
    assert 'Criterion 5' in result.output


def test_verify_only_blockgate(runner, tmp_path):
    result = runner.invoke(cli, ['verify', '--only', 'blockgate', '-j', '4', '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / 'verify.json').read_text())['results']
    assert [c['number'] for c in report['criteria']] == [8]
    criterion = report['criteria'][0]
    assert criterion['status'] == 'pass'
    assert all(criterion['details']['verdicts'].values())
    assert all(criterion['details']['violations_detected'].values())


def test_verify_determinism_for_limits(runner, tmp_path):
    result = runner.invoke(cli, ['verify', '--only', 'limits', '--only', 'determinism',
                                 '-o', str(tmp_path)])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / 'verify.json').read_text())['results']
    assert [c['number'] for c in report['criteria']] == [4, 5, 10]
    assert report['criteria'][-1]['details']['compared'] == 2
