import numpy as np
import pytest

from bandcrit import specfun
from bandcrit.exceptions import ConfigurationError, DomainError


def test_legendre_low_degrees():
    assert specfun.legendre_P(0, 0.3) == 1
    assert specfun.legendre_P(1, 0.3) == pytest.approx(0.3)
    assert specfun.legendre_P(2, 0.5) == pytest.approx(-0.125)


def test_legendre_vectorized_and_endpoints():
    x = np.linspace(-1, 1, 11)
    np.testing.assert_allclose(specfun.legendre_P(3, x), (5 * x**3 - 3 * x) / 2, atol=1e-14)
    assert specfun.legendre_P(40, 1.0) == pytest.approx(1.0)
    assert specfun.legendre_P(41, -1.0) == pytest.approx(-1.0)


def test_legendre_orthogonality():
    rule = specfun.quadrature('gauss-legendre', 64)
    p = np.array([specfun.legendre_P(ell, rule.nodes) for ell in range(41)])
    gram = (p * rule.weights) @ p.T
    expected = np.diag(2 / (2 * np.arange(41) + 1))
    np.testing.assert_allclose(gram, expected, atol=1e-12)


def test_legendre_bonnet_recurrence():
    x = np.linspace(-1, 1, 101)
    for ell in range(1, 60):
        residual = ((ell + 1) * specfun.legendre_P(ell + 1, x)
                    - (2 * ell + 1) * x * specfun.legendre_P(ell, x)
                    + ell * specfun.legendre_P(ell - 1, x))
        assert np.max(np.abs(residual)) <= 1e-12 * (2 * ell + 1)


def test_legendre_outside_interval():
    with pytest.raises(DomainError):
        specfun.legendre_P(2, 1.5)
    with pytest.raises(DomainError):
        specfun.legendre_P(-1, 0.5)


def test_hermite_low_degrees():
    assert specfun.hermite_H(0, 7.0) == 1
    assert specfun.hermite_H(1, 2.0) == pytest.approx(4)
    assert specfun.hermite_H(3, 1.0) == pytest.approx(-4)


def test_hermite_function_normalized():
    rule = specfun.quadrature('gauss-hermite', 60)
    for m in (0, 3, 10):
        phi = specfun.hermite_function(m, rule.nodes)
        assert np.sum(rule.scaled_weights * phi**2) == pytest.approx(1, rel=1e-12)


def test_hermite_orthogonality():
    rule = specfun.quadrature('gauss-hermite', 40)
    phi = np.array([specfun.hermite_function(m, rule.nodes) for m in range(21)])
    gram = (phi * rule.scaled_weights) @ phi.T
    np.testing.assert_allclose(gram, np.eye(21), atol=1e-12)


def test_small_angle_and_hypergeometric():
    theta = np.array([0.0, 0.01, 0.05])
    for ell in (1, 4):
        exact = specfun.legendre_P(ell, np.cos(theta))
        np.testing.assert_allclose(specfun.legendre_P_hypergeometric(ell, theta), exact,
                                   atol=1e-13)
        remainder = np.abs(specfun.legendre_small_angle(ell, theta) - exact)
        assert np.all(remainder <= ((ell + 1) * np.sin(theta / 2))**4 / 4 + 1e-15)


def test_legendre_cross_check():
    report = specfun.legendre_cross_check(ell_max=10)
    assert report['hypergeometric_max_deviation'] <= 1e-12
    assert report['small_angle_max_excess'] <= 1e-15


def test_quadrature_small_rules():
    rule = specfun.quadrature('gauss-legendre', 1)
    np.testing.assert_allclose(rule.nodes, [0])
    np.testing.assert_allclose(rule.weights, [2])

    rule = specfun.quadrature('gauss-legendre', 2)
    np.testing.assert_allclose(rule.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(rule.weights, [1, 1], atol=1e-15)

    rule = specfun.quadrature('gauss-hermite', 1)
    np.testing.assert_allclose(rule.nodes, [0])
    np.testing.assert_allclose(rule.weights, [np.sqrt(np.pi)])


@pytest.mark.parametrize('method', ['newton', 'golub-welsch'])
def test_quadrature_exactness(method):
    rule = specfun.quadrature('gauss-legendre', 10, method=method)
    assert rule.integrate(lambda x: x**18) == pytest.approx(2 / 19, rel=1e-12)
    assert rule.integrate(lambda x: x**7) == pytest.approx(0, abs=1e-14)

    rule = specfun.quadrature('gauss-hermite', 10, method=method)
    # int t^4 e^{-t^2} dt = 3 sqrt(pi) / 4
    assert rule.integrate(lambda t: t**4) == pytest.approx(3 * np.sqrt(np.pi) / 4, rel=1e-12)


def test_quadrature_symmetry_and_methods_agree():
    newton = specfun.quadrature('gauss-legendre', 64)
    gw = specfun.quadrature('gauss-legendre', 64, method='golub-welsch')
    np.testing.assert_array_equal(newton.nodes, -newton.nodes[::-1])
    np.testing.assert_allclose(newton.nodes, gw.nodes, atol=1e-13)
    np.testing.assert_allclose(newton.weights, gw.weights, atol=1e-13)
    assert np.all(np.diff(newton.nodes) > 0)


def test_high_order_hermite_scaled_weights_finite():
    rule = specfun.quadrature('gauss-hermite', 400)
    assert np.all(np.isfinite(rule.scaled_weights))
    assert np.all(rule.scaled_weights > 0)
    assert np.sum(rule.weights) == pytest.approx(np.sqrt(np.pi), rel=1e-12)


@pytest.mark.parametrize('order', [1, 2, 7, 64, 200])
def test_quadrature_weight_sums(order):
    legendre = specfun.quadrature('gauss-legendre', order)
    hermite = specfun.quadrature('gauss-hermite', order)
    assert np.sum(legendre.weights) == pytest.approx(2, rel=1e-13)
    assert np.sum(hermite.weights) == pytest.approx(np.sqrt(np.pi), rel=1e-13)
    assert np.all(legendre.weights > 0)


def test_mapped_rule():
    nodes, weights = specfun.quadrature('gauss-legendre', 8).mapped(0, np.pi)
    assert np.sum(weights * np.sin(nodes)) == pytest.approx(2, rel=1e-12)
    with pytest.raises(ConfigurationError):
        specfun.quadrature('gauss-hermite', 8).mapped(0, 1)


def test_unsupported_kind():
    with pytest.raises(ConfigurationError):
        specfun.quadrature('gauss-laguerre', 4)
