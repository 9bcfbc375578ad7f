import dataclasses

import numpy as np
import pytest

from bandcrit import blockgate
from bandcrit.exceptions import ConfigurationError, DomainError, PreconditionError


@pytest.fixture
def params():
    return blockgate.GateParams.default(p_0=1, q=0.3)


def test_default_partition(params):
    assert (params.n_0, params.n_1, params.n_2) == (4, 27, 119)
    assert params.dim == 119
    assert params.delta_0 == pytest.approx(0.3**23)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        blockgate.GateParams(p_0=1, c_1=1.0, q=1.0, q_prime=0.5, n_0=1, n_1=5, n_2=9)
    with pytest.raises(ConfigurationError):
        blockgate.GateParams(p_0=1, c_1=1.0, q=0.5, q_prime=0.5, n_0=5, n_1=5, n_2=9)
    with pytest.raises(ConfigurationError):
        blockgate.GateParams(p_0=0, c_1=1.0, q=0.5, q_prime=0.5, n_0=1, n_1=5, n_2=9)


def test_hypotheses_diagonal_matrix(params):
    m = -2 * params.c_1 * np.eye(params.dim, dtype=complex)
    scenario = blockgate.GateScenario(m=m, params=params)
    assert blockgate.check_hypotheses(scenario) == (True, True, True, True)


def test_hypotheses_zero_matrix(params):
    scenario = blockgate.GateScenario(m=np.zeros((params.dim, params.dim)), params=params)
    assert blockgate.check_hypotheses(scenario)[2] is False


def test_hypotheses_reject_non_hermitian(params):
    m = -2 * np.eye(params.dim, dtype=complex)
    m[0, 1] = 1j
    with pytest.raises(DomainError):
        blockgate.check_hypotheses(blockgate.GateScenario(m=m, params=params))


def test_generator_satisfies_hypotheses(params):
    scenario = blockgate.scenario_generator(3, params)
    assert blockgate.check_hypotheses(scenario) == (True, True, True, True)
    again = blockgate.scenario_generator(3, params)
    np.testing.assert_array_equal(scenario.m, again.m)


@pytest.mark.parametrize('violate', [1, 2, 3, 4])
def test_generator_violations(params, violate):
    scenario = blockgate.scenario_generator(5, params, violate=violate)
    expected = [True] * 4
    expected[violate - 1] = False
    assert list(blockgate.check_hypotheses(scenario)) == expected
    with pytest.raises(PreconditionError) as info:
        blockgate.ct_bound(scenario)
    assert info.value.index == violate


def test_generator_errors(params):
    with pytest.raises(ConfigurationError):
        blockgate.scenario_generator(1, params, dims=params.dim + 1)
    with pytest.raises(ConfigurationError):
        blockgate.scenario_generator(1, params, violate=5)


def test_ct_bound_on_generated_scenarios():
    for idx in range(6):
        scenario = blockgate.scenario_generator(100 + idx, blockgate.batch_params(idx))
        report = blockgate.ct_bound(scenario)
        assert report.ct1_holds
        assert report.resolvent_holds
        assert report.projection_envelope_holds
        assert report.projection_rate_holds
        assert report.projection_rate <= scenario.params.q
        assert report.lambda_max_actual <= report.ct1_bound + 1e-10
        assert report.to_dict()['ct1_slack'] == pytest.approx(report.ct1_slack)


def test_ct_bound_decoupled(params):
    m = -2 * params.c_1 * np.eye(params.dim, dtype=complex)
    m[:params.n_0, :params.n_0] = np.diag(np.linspace(-0.5, 0.5, params.n_0))
    report = blockgate.ct_bound(blockgate.GateScenario(m=m, params=params))
    assert report.lambda_max_actual == pytest.approx(0.5)
    assert report.ct1_slack >= np.sqrt(params.delta_0) - 1e-12


def test_resolvent_decay_diagonal(params):
    m = -2 * params.c_1 * np.eye(params.dim, dtype=complex)
    scenario = blockgate.GateScenario(m=m, params=params)
    # only diagonal blocks survive: (1/(2 c_1 + z)) / (2 / (c_1 (1 - q)))
    assert blockgate.resolvent_decay_check(scenario, 0.0) == pytest.approx((1 - params.q) / 4)
    with pytest.raises(DomainError):
        blockgate.resolvent_decay_check(scenario, -params.c_1)


def test_resolvent_decay_random(params):
    scenario = blockgate.scenario_generator(8, params)
    for z in blockgate.resolvent_z_grid(params.c_1):
        assert blockgate.resolvent_decay_check(scenario, z) <= 1 + 1e-10


def test_projection_uncoupled(params):
    m = -2 * params.c_1 * np.eye(params.dim, dtype=complex)
    m[:params.n_0, :params.n_0] = 0
    result = blockgate.projection_decay_check(blockgate.GateScenario(m=m, params=params))
    assert result['rank'] == params.n_0
    assert result['constant'] == 0
    np.testing.assert_allclose(result['profile'], 0, atol=1e-14)
    assert result['holds']
    assert result['rate'] == 0
    assert result['rate_holds']


def test_projection_rate(params):
    floor = np.sqrt(params.delta_0)
    profile = np.full(params.n_2 - params.n_0, floor)
    profile[0] = 1.0
    profile[1] = floor + 0.2
    assert blockgate.projection_rate(profile, params) == pytest.approx(0.2)
    # slower than q over p_0 blocks
    profile[1] = floor + 0.5
    assert blockgate.projection_rate(profile, params) > params.q
    # below the delta_0 floor the ratio is 0
    profile[1] = floor / 2
    assert blockgate.projection_rate(profile, params) == 0
    assert np.isnan(blockgate.projection_rate([1.0], params))


def test_norm_bound_closed_form():
    m = np.array([[0.0, 0.5], [0.5, -1.0]])
    verdict = blockgate.norm_bound_2x2(m, 0.1, -0.5, 1)
    assert verdict['lambda_max'] == pytest.approx(-0.5 + np.sqrt(0.5))
    assert verdict['bound'] == pytest.approx(0.1 + 0.25 / 0.6)
    assert verdict['holds']


def test_norm_bound_block_diagonal():
    m = np.diag([-1.0, -2.0, 0.5, 0.2])
    verdict = blockgate.norm_bound_2x2(m, -0.5, 1.0, 2)
    assert verdict['scale'] == 0
    assert verdict['lambda_max'] == pytest.approx(0.5)
    assert verdict['holds']


def test_norm_bound_errors():
    m = np.diag([-1.0, 0.5])
    with pytest.raises(PreconditionError):
        blockgate.norm_bound_2x2(m, 1.0, 1.0, 1)
    with pytest.raises(PreconditionError) as info:
        blockgate.norm_bound_2x2(m, -2.0, 1.0, 1)
    assert info.value.index == 1


def test_batches_independent_of_threads():
    seeds = list(range(6))
    one = blockgate.run_gate_batch(seeds, threads=1)
    two = blockgate.run_gate_batch(seeds, threads=2)
    assert [r.lambda_max_actual for r in one] == [r.lambda_max_actual for r in two]
    assert all(r.ct1_holds for r in one)
    norm = blockgate.run_norm_batch(range(60), threads=2)
    assert all(v['holds'] for v in norm)
    assert [v['seed'] for v in norm] == list(range(60))


def test_replace_keeps_validation(params):
    with pytest.raises(ConfigurationError):
        dataclasses.replace(params, q_prime=1.5)
