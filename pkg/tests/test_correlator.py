import logging

import numpy as np
import pytest

from bandcrit import correlator, ensemble
from bandcrit.exceptions import DomainError, EstimationError


def _cofactor_det(a):
    if a.shape[0] == 1:
        return a[0, 0]
    return sum((-1)**k * a[0, k] * _cofactor_det(np.delete(a[1:], k, axis=1))
               for k in range(a.shape[0]))


def test_log_absdet_sq_simple():
    assert correlator.log_absdet_sq(np.zeros((1, 1)), 2) == pytest.approx(np.log(4))
    assert correlator.log_absdet_sq(np.eye(2), 3) == pytest.approx(np.log(16))
    assert correlator.log_absdet_sq(np.eye(2), 1) == -np.inf


def test_log_absdet_sq_against_cofactor():
    rng = np.random.default_rng(3)
    h = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    z = 0.1 + 0.2j
    direct = np.log(abs(_cofactor_det(h - z * np.eye(5)))**2)
    assert correlator.log_absdet_sq(h, z) == pytest.approx(direct, rel=1e-10)


def test_log_mean_exp_large_values():
    x = np.array([1000.0, 1000.0, 1000.0 + np.log(4)])
    assert correlator.log_mean_exp(x) == pytest.approx(1000 + np.log(2))
    loo = correlator.leave_one_out_log_mean_exp(np.array([0.0, 0.0, np.log(4)]))
    np.testing.assert_allclose(loo, [np.log(2.5), np.log(2.5), 0.0], atol=1e-14)


def test_leave_one_out_dominant_term():
    x = np.array([0.0, 100.0, 1.0])
    loo = correlator.leave_one_out_log_mean_exp(x)
    assert loo[1] == pytest.approx(np.log((1 + np.e) / 2), rel=1e-12)


def test_offset_spec():
    off = correlator.OffsetSpec(z=0.1, zeta=0.4, n=16)
    assert off.z1 == pytest.approx(0.2)
    assert off.z2 == pytest.approx(0.0)
    with pytest.raises(DomainError):
        correlator.OffsetSpec(z=1.0, zeta=0.1, n=4)


def test_zero_offset_ratio_exactly_one():
    profile = ensemble.BandProfile(n=32, w=4.0)
    estimate = correlator.theta_ratio(profile,
                                      correlator.OffsetSpec(z=0.3 + 0.1j, zeta=0, n=32),
                                      n_samples=25,
                                      seed=9)
    assert estimate.ratio == 1.0
    assert estimate.log_ratio == 0.0


def test_ratio_curve_symmetry_and_bound():
    profile = ensemble.BandProfile(n=16, w=2.0)
    curve = correlator.ratio_curve(profile, 0.2, [0.5, -0.5, 0.5j, 0], n_samples=200, seed=4)
    ratios = [est.ratio for _, est in curve]
    assert ratios[0] == ratios[1]
    assert ratios[3] == 1.0
    assert all(r <= 1 + 1e-12 for r in ratios)
    assert all(est.n_samples == 200 for _, est in curve)


def test_ratio_curve_independent_of_threads():
    profile = ensemble.BandProfile(n=12, w=2.0)
    one = correlator.ratio_curve(profile, 0, [0.3, 0.7], n_samples=150, seed=2, threads=1)
    three = correlator.ratio_curve(profile, 0, [0.3, 0.7], n_samples=150, seed=2, threads=3)
    for (_, a), (_, b) in zip(one, three):
        assert a.ratio == b.ratio
        assert a.stderr_log == b.stderr_log


def test_ratio_curve_errors():
    profile = ensemble.BandProfile(n=4, w=1.0)
    with pytest.raises(DomainError):
        correlator.ratio_curve(profile, 0, [], n_samples=10, seed=1)
    with pytest.raises(DomainError):
        correlator.ratio_curve(profile, 0, [0.1], n_samples=1, seed=1)


def test_singular_samples_excluded(caplog):
    l1 = np.array([0.5, -np.inf, 0.2, 0.1])
    l2 = np.array([0.3, 0.4, 0.1, 0.2])
    with caplog.at_level(logging.WARNING):
        estimate = correlator.estimate_from_log_dets(l1, l2)
    assert estimate.n_samples == 3
    assert estimate.n_excluded == 1
    assert 'singular' in caplog.text
    with pytest.raises(EstimationError):
        correlator.estimate_from_log_dets(np.array([-np.inf]), np.array([0.0]))


def test_record_fields():
    profile = ensemble.BandProfile(n=8, w=2.0)
    off = correlator.OffsetSpec(z=0, zeta=0.5, n=8)
    estimate = correlator.theta_ratio(profile, off, n_samples=10, seed=1)
    row = estimate.to_record(profile, off, 1)
    assert row['N'] == 8
    assert row['zeta_abs'] == pytest.approx(0.5)
    assert row['ratio'] == pytest.approx(np.exp(row['log_theta12']
                                                - (row['log_theta11'] + row['log_theta22']) / 2))


def test_theta_n1_closed_form():
    # E|h|^2 = 1, E|h|^4 = 2 for a circular Gaussian
    assert correlator.theta_n1(0, 0) == pytest.approx(2)
    assert correlator.theta_exact(np.ones((1, 1)), 0, 0) == pytest.approx(2)
    z1, z2 = 0.7 + 0.1j, -0.3 + 0.1j
    assert correlator.theta_exact(np.ones((1, 1)), z1, z2) == pytest.approx(
        correlator.theta_n1(z1, z2), rel=1e-12)
    assert correlator.theta_exact(np.full((1, 1), 0.5), z1, z2) == pytest.approx(
        correlator.theta_n1(z1, z2, j=0.5), rel=1e-12)


def test_n1_ratio_value():
    # z1 = 0.5, z2 = -0.5: (2 + 0 + 1/16) / (2 + 1 + 1/16)
    assert correlator.ratio_exact(np.ones((1, 1)), 0.5, -0.5) == pytest.approx(2.0625 / 3.0625)


def test_theta_exact_n2_order_independent():
    j = ensemble.covariance(ensemble.BandProfile(n=2, w=1.0))
    a = correlator.theta_exact(j, 0.3, -0.2j, order=3)
    b = correlator.theta_exact(j, 0.3, -0.2j, order=5)
    assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(DomainError):
        correlator.theta_exact(np.eye(3), 0, 0)


def test_monte_carlo_matches_n1_oracle():
    profile = ensemble.BandProfile(n=1, w=1.0)
    off = correlator.OffsetSpec(z=0, zeta=0.5, n=1)
    estimate = correlator.theta_ratio(profile, off, n_samples=40000, seed=12, threads=2)
    exact = 2.0625 / 3.0625
    assert abs(estimate.ratio - exact) <= 5 * estimate.ratio * estimate.stderr_log
