import pytest

from bandcrit import verification
from bandcrit.config import ExperimentConfig


@pytest.fixture
def config(tmp_path):
    return ExperimentConfig(command='verify', out=str(tmp_path)).validated()


def test_degenerate_ratio(config, tmp_path):
    status, details = verification.check_degenerate_ratio(config, tmp_path, 2)
    assert status == 'pass'
    assert details['max_error'] <= verification.RATIO_TOL
    assert (tmp_path / 'degenerate_ratio.csv').exists()


def test_hermite_spectrum(config, tmp_path):
    status, details = verification.check_hermite_spectrum(config, tmp_path, 1)
    assert status == 'pass'
    assert details['top_eigenvalue'] == pytest.approx(2**-0.5, rel=1e-8)


def test_selected_criteria():
    assert [c[0] for c in verification.selected_criteria([])] == list(range(1, 10))
    assert [c[0] for c in verification.selected_criteria(['ratio'])] == [1, 2, 3]
    assert [c[0] for c in verification.selected_criteria(['su2', 'trend'])] == [7, 9]


def test_cauchy_schwarz_small_run(tmp_path):
    config = ExperimentConfig(command='verify', verify_cs_runs=2, verify_samples=50).validated()
    status, details = verification.check_cauchy_schwarz(config, tmp_path, 2)
    assert status == 'pass'
    assert details['estimates'] == 12
