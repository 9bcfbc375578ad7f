import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.special

from .exceptions import DomainError, ConfigurationError

logger = logging.getLogger(__name__)

MAX_DEGREE = 512
QUADRATURE_KINDS = ('gauss-legendre', 'gauss-hermite')
NEWTON_STEPS = 3


def _check_degree(n, name):
    if int(n) != n or n < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {n}")
    if n > MAX_DEGREE:
        raise DomainError(f"{name}={n} exceeds the supported maximum {MAX_DEGREE}")
    return int(n)


def _as_output(values, scalar):
    if scalar:
        return float(values[()])
    return values


def _legendre_pair(n, x):
    """
    Return (P_n(x), P_{n-1}(x)) by the Bonnet recursion, with P_{-1} = 0.
    """
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    for k in range(n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p, p_prev


def legendre_P(ell, x):
    """
    Legendre polynomial P_ell(x) by three-term recursion.

    Parameters
    ----------
    ell : int
        Degree, 0 <= ell <= 512
    x : float or ndarray
        Evaluation points in [-1, 1]

    Returns
    -------
    p : float or ndarray
        Values of P_ell, same shape as x
    """
    ell = _check_degree(ell, 'ell')
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1):
        raise DomainError("Legendre polynomials are evaluated on [-1, 1] only")
    p, _ = _legendre_pair(ell, x)
    return _as_output(p, scalar)


def hermite_H(m, t):
    """
    Physicists' Hermite polynomial H_m(t), from
    H_{m+1} = 2t H_m - 2m H_{m-1}.
    """
    m = _check_degree(m, 'm')
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    h_prev = np.zeros_like(t)
    h = np.ones_like(t)
    for k in range(m):
        h_prev, h = h, 2 * t * h - 2 * k * h_prev
    return _as_output(h, scalar)


def _hermite_function_pair(n, t):
    phi_prev = np.zeros_like(t)
    phi = np.pi**-0.25 * np.exp(-t**2 / 2)
    for k in range(n):
        phi_prev, phi = phi, (np.sqrt(2 / (k + 1)) * t * phi
                              - np.sqrt(k / (k + 1)) * phi_prev)
    return phi, phi_prev


def hermite_function(m, t):
    """
    Orthonormal Hermite function H_m(t) e^{-t^2/2} / sqrt(2^m m! sqrt(pi)).

    Computed by its own normalized recursion, so it stays finite where
    H_m and e^{-t^2} separately would overflow or underflow.
    """
    m = _check_degree(m, 'm')
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    phi, _ = _hermite_function_pair(m, t)
    return _as_output(phi, scalar)


def legendre_small_angle(ell, theta):
    """
    Leading small-angle form 1 - ell(ell+1) sin^2(theta/2) of P_ell(cos theta).

    The remainder is bounded by ((ell+1) sin(theta/2))^4 / 4 while
    (ell+1) sin(theta/2) < 1.
    """
    return 1 - ell * (ell + 1) * np.sin(np.asarray(theta) / 2)**2


def legendre_P_hypergeometric(ell, theta):
    """
    P_ell(cos theta) as 2F1(-ell, ell+1; 1; sin^2(theta/2)).

    Independent of the recursion; used as a cross-check.
    """
    return scipy.special.hyp2f1(-ell, ell + 1, 1, np.sin(np.asarray(theta) / 2)**2)


@dataclass
class QuadratureRule:
    """
    Gaussian quadrature rule on [-1, 1] (Legendre) or the real line with
    weight e^{-t^2} (Hermite).

    For gauss-hermite rules, ``scaled_weights`` holds w_i e^{t_i^2}, which
    stays positive and finite at large orders where the outermost raw
    weights underflow to zero (orders above roughly 350).
    """
    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    order: int
    scaled_weights: np.ndarray = field(default=None, repr=False)

    def integrate(self, f):
        """
        Apply the rule to a callable (or to values sampled at the nodes).
        """
        values = f(self.nodes) if callable(f) else np.asarray(f)
        return np.sum(self.weights * values)

    def mapped(self, a, b):
        """
        Nodes and weights of a gauss-legendre rule affinely mapped to [a, b].
        """
        if self.kind != 'gauss-legendre':
            raise ConfigurationError("Only gauss-legendre rules map to finite intervals",
                                     field='kind')
        half = (b - a) / 2
        return a + half * (self.nodes + 1), half * self.weights


def _jacobi_matrix(kind, order):
    k = np.arange(1, order)
    if kind == 'gauss-legendre':
        return np.zeros(order), k / np.sqrt(4 * k**2 - 1), 2.0
    return np.zeros(order), np.sqrt(k / 2), np.sqrt(np.pi)


def _golub_welsch(kind, order):
    diag, offdiag, mu0 = _jacobi_matrix(kind, order)
    if order == 1:
        return np.zeros(1), np.array([mu0])
    nodes, vectors = scipy.linalg.eigh_tridiagonal(diag, offdiag)
    return nodes, mu0 * vectors[0, :]**2


def _newton_legendre(x, order):
    for _ in range(NEWTON_STEPS):
        p, p_prev = _legendre_pair(order, x)
        dp = order * (x * p - p_prev) / (x**2 - 1)
        x = x - p / dp
    p, p_prev = _legendre_pair(order, x)
    dp = order * (x * p - p_prev) / (x**2 - 1)
    return x, 2 / ((1 - x**2) * dp**2)


def _newton_hermite(t, order):
    for _ in range(NEWTON_STEPS):
        phi, phi_prev = _hermite_function_pair(order, t)
        dphi = np.sqrt(2 * order) * phi_prev - t * phi
        t = t - phi / dphi
    _, phi_prev = _hermite_function_pair(order, t)
    scaled = 1 / (order * phi_prev**2)
    return t, scaled


def quadrature(kind, order, method='newton'):
    """
    Gauss-Legendre or Gauss-Hermite quadrature rule.

    Parameters
    ----------
    kind : str
        'gauss-legendre' or 'gauss-hermite'
    order : int
        Number of nodes, 1 <= order <= 512
    method : str
        'golub-welsch' for the symmetric tridiagonal eigenvalue method alone,
        or 'newton' to polish those nodes by Newton iteration on the
        three-term recursion and take weights from the derivative formula

    Returns
    -------
    rule : QuadratureRule
        Rule with ascending nodes, symmetric about 0
    """
    if kind not in QUADRATURE_KINDS:
        raise ConfigurationError(f"Unsupported quadrature kind '{kind}'", field='kind')
    if method not in ('newton', 'golub-welsch'):
        raise ConfigurationError(f"Unsupported quadrature method '{method}'",
                                 field='method')
    order = _check_degree(order, 'order')
    if order < 1:
        raise DomainError("Quadrature order must be at least 1")

    nodes, weights = _golub_welsch(kind, order)
    scaled = None
    if method == 'newton' and order > 1:
        if kind == 'gauss-legendre':
            nodes, weights = _newton_legendre(nodes, order)
        else:
            nodes, scaled = _newton_hermite(nodes, order)
            weights = scaled * np.exp(-nodes**2)

    order_idx = np.argsort(nodes)
    nodes, weights = nodes[order_idx], weights[order_idx]
    nodes = (nodes - nodes[::-1]) / 2
    weights = (weights + weights[::-1]) / 2
    if kind == 'gauss-hermite':
        if scaled is None:
            _, phi_prev = _hermite_function_pair(order, nodes)
            scaled = 1 / (order * phi_prev**2)
        else:
            scaled = scaled[order_idx]
            scaled = (scaled + scaled[::-1]) / 2
    return QuadratureRule(nodes=nodes,
                          weights=weights,
                          kind=kind,
                          order=order,
                          scaled_weights=scaled)


def legendre_cross_check(ell_max=10, thetas=(0.0, 0.01, 0.05, 0.2, 0.5)):
    """
    Compare the recursion for P_ell(cos theta) with the hypergeometric form,
    and the small-angle law with its remainder bound where it applies.

    Returns
    -------
    report : dict
        'hypergeometric_max_deviation', 'small_angle_max_excess' (largest
        remainder minus bound over points with (ell+1) sin(theta/2) < 1; at
        most 0 when the law holds)
    """
    thetas = np.asarray(thetas, dtype=float)
    hyp_dev = 0.0
    excess = -np.inf
    for ell in range(ell_max + 1):
        exact = legendre_P(ell, np.cos(thetas))
        hyp_dev = max(hyp_dev, float(np.max(np.abs(legendre_P_hypergeometric(ell, thetas) - exact))))
        reach = (ell + 1) * np.sin(thetas / 2)
        small = reach < 1
        if np.any(small):
            remainder = np.abs(legendre_small_angle(ell, thetas[small]) - exact[small])
            excess = max(excess, float(np.max(remainder - reach[small]**4 / 4)))
    return {'ell_max': ell_max,
            'hypergeometric_max_deviation': hyp_dev,
            'small_angle_max_excess': excess}
