import numpy as np
import pandas as pd
import pytest

from bandcrit import ensemble
from bandcrit.exceptions import DomainError


def test_neumann_laplacian_small():
    np.testing.assert_array_equal(ensemble.neumann_laplacian(1), [[0]])
    np.testing.assert_array_equal(ensemble.neumann_laplacian(2), [[-1, 1], [1, -1]])
    np.testing.assert_array_equal(ensemble.neumann_laplacian(3),
                                  [[-1, 1, 0], [1, -2, 1], [0, 1, -1]])
    with pytest.raises(DomainError):
        ensemble.neumann_laplacian(0)


def test_covariance_closed_forms():
    j = ensemble.covariance(ensemble.BandProfile(n=1, w=7.0))
    np.testing.assert_allclose(j.entries, [[1]])

    j = ensemble.covariance(ensemble.BandProfile(n=2, w=1.0))
    np.testing.assert_allclose(j.entries, np.array([[2, 1], [1, 2]]) / 3, atol=1e-15)


def test_covariance_properties():
    j = ensemble.covariance(ensemble.BandProfile(n=50, w=5.0))
    assert j.row_sum_error() <= 1e-12
    np.testing.assert_array_equal(j.entries, j.entries.T)
    assert np.all(j.entries > 0)
    assert j.min_eigenvalue() > 0
    # matches a dense inverse
    dense = np.linalg.inv(-25 * ensemble.neumann_laplacian(50) + np.eye(50))
    np.testing.assert_allclose(j.entries, dense, atol=1e-12)


def test_covariance_decay_constant():
    j = ensemble.covariance(ensemble.BandProfile(n=200, w=5.0))
    c = j.decay_constant(5.0)
    # bulk pairs decay at rate just below 1; reflected images near the ends lower it
    assert 0 < c < 1
    assert ensemble.covariance(ensemble.BandProfile(n=1, w=5.0)).decay_constant(5.0) == np.inf


def test_covariance_csv(tmp_path):
    j = ensemble.covariance(ensemble.BandProfile(n=4, w=2.0))
    csv_path = tmp_path / 'j.csv'
    j.to_csv(csv_path)
    back = pd.read_csv(csv_path, header=None, float_precision='round_trip').to_numpy()
    np.testing.assert_array_equal(back, j.entries)


def test_band_profile_validation():
    with pytest.raises(DomainError):
        ensemble.BandProfile(n=0, w=1.0)
    with pytest.raises(DomainError):
        ensemble.BandProfile(n=4, w=0.0)
    profile = ensemble.BandProfile.from_kappa(64, 1.0)
    assert profile.w == 8
    assert profile.kappa == pytest.approx(1.0)


def test_spectral_params():
    params = ensemble.spectral_params(0, 10.0)
    assert params.u_star == 1
    assert params.alpha == pytest.approx(1.4177447, abs=1e-7)
    assert params.lambda_star == pytest.approx(0.8682255, abs=1e-7)

    assert ensemble.spectral_params(0.6, 20.0).u_star == pytest.approx(0.8)
    assert ensemble.spectral_params(0, 1e8).alpha == pytest.approx(np.sqrt(2))
    assert ensemble.spectral_params(0.6j, 20.0, n=400).kappa_u == pytest.approx(0.8)
    with pytest.raises(DomainError):
        ensemble.spectral_params(1.0, 10.0)


def test_lambda_star_reciprocal_identity():
    # lambda_* (1 + alpha/W + u^2/W^2) = 1
    for z, w in [(0, 3.0), (0.5, 10.0), (0.9j, 50.0)]:
        p = ensemble.spectral_params(z, w)
        assert p.lambda_star * (1 + p.alpha / w + p.u_star**2 / w**2) == pytest.approx(1, rel=1e-14)


def test_sample_reproducible_across_threads():
    j = ensemble.covariance(ensemble.BandProfile(n=6, w=2.0))
    one = ensemble.sample(j, seed=5, count=10, threads=1)
    four = ensemble.sample(j, seed=5, count=10, threads=4)
    for a, b in zip(one.matrices, four.matrices):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(one.regenerate(3), one.matrices[3])
    tail = ensemble.sample(j, seed=5, count=4, start=6)
    np.testing.assert_array_equal(tail.matrices[0], one.matrices[6])


def test_sample_variances():
    j = ensemble.covariance(ensemble.BandProfile(n=3, w=1.0))
    batch = ensemble.sample(j, seed=11, count=20000)
    second_moment = np.mean(np.abs(np.array(batch.matrices))**2, axis=0)
    np.testing.assert_allclose(second_moment, j.entries, rtol=0.05)
    with pytest.raises(DomainError):
        ensemble.sample(j, seed=1, count=0)


def test_sample_moments_match_covariance():
    count = 10000
    j = ensemble.covariance(ensemble.BandProfile(n=8, w=2.0))
    h = np.array(ensemble.sample(j, seed=3, count=count).matrices)
    # |H_jk|^2 is exponential with mean J_jk, so its standard error is J_jk / sqrt(count)
    stderr = j.entries / np.sqrt(count)
    assert np.all(np.abs(np.mean(np.abs(h)**2, axis=0) - j.entries) <= 5 * stderr)
    # circular: E[H_jk^2] = 0, each part of the mean with standard error J_jk / sqrt(count)
    assert np.all(np.abs(np.mean(h**2, axis=0)) <= 5 * np.sqrt(2) * stderr)
