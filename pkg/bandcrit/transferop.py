"""
Spectral data of the transfer operator: the 1D Gaussian kernel of the
quadratic approximation, and averages over U(2) of the Legendre
coefficients t^l_00(U) = P_l(cos theta).

U(2) elements are parametrized as
U = T(phi) [[cos(theta/2), i sin(theta/2)], [i sin(theta/2), cos(theta/2)]] T(psi) e^{i gamma}
with T(phi) = diag(e^{i phi/2}, e^{-i phi/2}), sigma = (phi + psi)/2 and
delta = (phi - psi)/2. The Haar density in (theta, sigma, delta, gamma) is
proportional to sin(theta) on [0, pi] x [-pi, pi]^2 x [-pi/2, pi/2].
"""
import logging
from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.linalg
import scipy.special
import tqdm

from .exceptions import AccuracyError, ConventionError, DomainError
from . import specfun
from .limits import multiplication_matrix

logger = logging.getLogger(__name__)

DOUBLING_TOL = 1e-8
SCHUR_TOL = 1e-8
NU_TOL = 1e-12
MIN_SU2_ORDER = 32
# weights below e^{-TAIL} relative to the peak are dropped from the box
TAIL = 60.0
# the 1D kernel with the prefactor (u^2 W / (pi lambda_*))^{1/2} has top eigenvalue 2^{-1/2}
TOP_EIGENVALUE_1D = 2**-0.5
L_MATRIX = np.diag([1.0, -1.0])


def check_order(order):
    """
    Quadrature order of the self-check: twice the order, capped at the
    largest supported degree.

    Raises
    ------
    AccuracyError
        If the capped order is no finer than ``order``
    """
    fine = min(2 * order, specfun.MAX_DEGREE)
    if fine <= order:
        raise AccuracyError(f"Order {order} leaves no finer order (maximum "
                            f"{specfun.MAX_DEGREE}) for the accuracy self-check; "
                            f"pass check=False or lower the order")
    return fine


@dataclass
class GaussianKernelSpec:
    """
    Coefficients of A_*1(x, y) = prefactor e^{-a x^2} e^{-b (x-y)^2} e^{-a y^2}.
    """
    u_star: float
    w: float
    a: float
    b: float
    prefactor: float
    lambda_star: float
    alpha: float

    @classmethod
    def from_params(cls, u_star, w):
        if not 0 < u_star <= 1:
            raise DomainError(f"u_star must lie in (0, 1], got {u_star}")
        if not w > 0:
            raise DomainError(f"Bandwidth must be positive, got {w}")
        alpha = u_star * np.sqrt(2 + u_star**2 / w**2)
        lambda_star = 1 - (alpha - u_star**2 / w) / w
        return cls(u_star=u_star,
                   w=w,
                   a=2 * u_star**4 / w,
                   b=2 * w * u_star**2,
                   prefactor=np.sqrt(u_star**2 * w / (np.pi * lambda_star)),
                   lambda_star=lambda_star,
                   alpha=alpha)

    @property
    def ground_state_exponent(self):
        """
        s in the eigenfunctions e^{-s x^2} H_m(sqrt(2s) x); equals 2 alpha u_*^2.
        """
        return np.sqrt(self.a**2 + 2 * self.a * self.b)

    def mehler_ratio(self):
        """
        Closed-form ratio of consecutive eigenvalues, b / (a + b + s).
        """
        return self.b / (self.a + self.b + self.ground_state_exponent)

    def mehler_top(self):
        """
        Closed-form top eigenvalue, prefactor * sqrt(pi / (a + b + s)).
        """
        return self.prefactor * np.sqrt(np.pi / (self.a + self.b + self.ground_state_exponent))


def a_star_1d_kernel(x, y, spec):
    """
    One-dimensional factor of the quadratic-approximation kernel.

    Parameters
    ----------
    x, y : float or ndarray
        Arguments, broadcast against each other
    spec : GaussianKernelSpec
        Kernel coefficients

    Returns
    -------
    value : float or ndarray
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    value = spec.prefactor * np.exp(-spec.a * x**2 - spec.b * (x - y)**2 - spec.a * y**2)
    return float(value) if value.ndim == 0 else value


@dataclass
class SpectrumReport:
    """
    Leading Nystrom eigenvalues of A_*1 against the geometric law lambda_*^m.

    ``max_rel_err`` compares the normalized spectrum computed[m] / computed[0]
    with lambda_*^m, m = 0..k_max. ``top_eigenvalue`` is reported separately
    together with its closed form.
    """
    computed: list
    predicted: list
    max_rel_err: float
    quad_order: int
    u_star: float
    w: float
    lambda_star: float
    top_eigenvalue: float
    top_eigenvalue_closed_form: float
    ratios: list
    max_ratio_err: float
    doubling_change: float = None
    nodes: np.ndarray = field(default=None, repr=False)
    eigenvectors: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        out = asdict(self)
        out.pop('nodes')
        out.pop('eigenvectors')
        return out


def _nystrom_eigen(spec, quad_order, k_max):
    s = spec.ground_state_exponent
    rule = specfun.quadrature('gauss-hermite', quad_order)
    extent = np.sqrt((2 * k_max + 81) / (2 * s))
    scale = extent / rule.nodes[-1]
    x = scale * rule.nodes
    sqrt_w = np.sqrt(scale * rule.scaled_weights)
    kernel = a_star_1d_kernel(x[:, None], x[None, :], spec)
    evals, evecs = scipy.linalg.eigh(sqrt_w[:, None] * kernel * sqrt_w[None, :])
    evals, evecs = evals[::-1], evecs[:, ::-1]
    # back to function values at the nodes
    funcs = evecs[:, :k_max + 1] / sqrt_w[:, None]
    return x, evals[:k_max + 1], funcs


def a_star_spectrum(u_star, w, quad_order=200, k_max=7, check=True):
    """
    Nystrom spectrum of the 1D Gaussian kernel A_*1.

    Nodes are Gauss-Hermite nodes rescaled to cover the first k_max + 1
    eigenfunctions; the discretized operator is symmetrized with sqrt(weights).

    Parameters
    ----------
    u_star : float
        (1 - |z|^2)^{1/2}
    w : float
        Bandwidth parameter
    quad_order : int
        Number of nodes, at least 4 * k_max
    k_max : int
        Highest eigenvalue index compared
    check : bool
        Repeat with doubled order (capped at specfun.MAX_DEGREE) and raise
        AccuracyError if the leading eigenvalues move by more than 1e-8
        relative

    Returns
    -------
    report : SpectrumReport
    """
    if quad_order < 4 * k_max:
        raise DomainError(f"quad_order must be at least 4 * k_max = {4 * k_max}")
    spec = GaussianKernelSpec.from_params(u_star, w)
    x, evals, funcs = _nystrom_eigen(spec, quad_order, k_max)
    if np.any(evals <= 0):
        raise AccuracyError("Leading Nystrom eigenvalues are not positive")

    doubling_change = None
    if check:
        fine = check_order(quad_order)
        _, evals_fine, _ = _nystrom_eigen(spec, fine, k_max)
        doubling_change = float(np.max(np.abs(evals_fine / evals - 1)))
        if doubling_change > DOUBLING_TOL:
            raise AccuracyError(f"Nystrom eigenvalues changed by {doubling_change:.3e} "
                                f"from quad_order={quad_order} to {fine}")

    m = np.arange(k_max + 1)
    predicted = spec.lambda_star**m
    normalized = evals / evals[0]
    ratios = evals[1:] / evals[:-1]
    return SpectrumReport(computed=evals.tolist(),
                          predicted=predicted.tolist(),
                          max_rel_err=float(np.max(np.abs(normalized / predicted - 1))),
                          quad_order=quad_order,
                          u_star=u_star,
                          w=w,
                          lambda_star=spec.lambda_star,
                          top_eigenvalue=float(evals[0]),
                          top_eigenvalue_closed_form=float(spec.mehler_top()),
                          ratios=ratios.tolist(),
                          max_ratio_err=float(np.max(np.abs(ratios / spec.lambda_star - 1))),
                          doubling_change=doubling_change,
                          nodes=x,
                          eigenvectors=funcs)


def ground_state_fit(report, width=1.5):
    """
    Quadratic fit of the log of the leading eigenfunction on the central nodes.

    Returns
    -------
    fit : dict
        'curvature' (fitted s in e^{-s x^2}), 'expected' (2 alpha u_*^2),
        'residual' (max abs residual of the fit), 'even' (max relative
        asymmetry), 'concave' (bool)
    """
    spec = GaussianKernelSpec.from_params(report.u_star, report.w)
    s = spec.ground_state_exponent
    x = report.nodes
    psi = report.eigenvectors[:, 0]
    psi = psi * np.sign(psi[np.argmin(np.abs(x))])
    central = np.abs(x) <= width / np.sqrt(s)
    log_psi = np.log(psi[central])
    coeffs = np.polyfit(x[central]**2, log_psi, 1)
    residual = log_psi - np.polyval(coeffs, x[central]**2)
    return {
        'curvature': float(-coeffs[0]),
        'expected': float(s),
        'residual': float(np.max(np.abs(residual))),
        'even': float(np.max(np.abs(psi - psi[::-1])) / np.max(np.abs(psi))),
        'concave': bool(coeffs[0] < 0),
    }


def hermite_convention_fit(report, m=2):
    """
    Residuals of the m-th Nystrom eigenfunction against e^{-s x^2} times a
    Hermite polynomial, for three readings of the argument.

    'matched' is H_m(sqrt(2s) x) = H_m(2 u_* alpha^{1/2} x), the closed-form
    eigenfunction; 'physicists' is H_m(u_* (2 alpha)^{1/2} x); 'probabilists'
    is He_m(u_* (2 alpha)^{1/2} x). Candidates are scaled to unit peak and
    the residual is the max abs difference.
    """
    spec = GaussianKernelSpec.from_params(report.u_star, report.w)
    s = spec.ground_state_exponent
    x = report.nodes
    psi = report.eigenvectors[:, m]
    psi = psi / np.max(np.abs(psi))
    written = spec.u_star * np.sqrt(2 * spec.alpha)
    # He_m(y) is proportional to H_m(y / sqrt(2))
    scales = {
        'matched': np.sqrt(2 * s),
        'physicists': written,
        'probabilists': written / np.sqrt(2),
    }
    fits = {}
    for name, c in scales.items():
        candidate = np.exp(-s * x**2) * specfun.hermite_H(m, c * x)
        candidate = candidate / np.max(np.abs(candidate))
        sign = np.sign(np.dot(candidate, psi))
        fits[name] = float(np.max(np.abs(sign * candidate - psi)))
    return fits


def lambda_ell(ell, u_star, w):
    """
    Unitary-sector eigenvalue 1 - l(l+1) / (8 (u_* W)^2).
    """
    if ell < 0:
        raise DomainError(f"ell must be nonnegative, got {ell}")
    return 1 - ell * (ell + 1) / (8 * (u_star * w)**2)


def sector_eigenvalue(ell, u_star, w, tr_s=2.0):
    """
    Leading law 1 - l(l+1) / (u_*^2 W^2 trS) of the weighted average of
    t^l_00 under exp{-2 u_*^2 W^2 trS (1 - cos(theta/2) cos(sigma) cos(gamma))}.

    Coincides with lambda_ell at trS = 8.
    """
    if ell < 0:
        raise DomainError(f"ell must be nonnegative, got {ell}")
    return 1 - ell * (ell + 1) / ((u_star * w)**2 * tr_s)


@dataclass
class SU2AverageSpec:
    """
    Parameters of the weighted U(2) average of t^l_00.
    """
    ell: int
    w: float
    u_star: float = 1.0
    tr_s: float = 2.0
    n_theta: int = 64
    n_sigma: int = 64
    n_gamma: int = 64

    def __post_init__(self):
        if self.ell < 0:
            raise DomainError(f"ell must be nonnegative, got {self.ell}")
        if not self.tr_s > 0:
            raise DomainError(f"trS must be positive, got {self.tr_s}")

    @property
    def coupling(self):
        """
        c in the weight exp{-c (1 - cos(theta/2) cos(sigma) cos(gamma))}.
        """
        return 2 * self.u_star**2 * self.w**2 * self.tr_s

    def doubled(self):
        return SU2AverageSpec(ell=self.ell,
                              w=self.w,
                              u_star=self.u_star,
                              tr_s=self.tr_s,
                              n_theta=check_order(self.n_theta),
                              n_sigma=check_order(self.n_sigma),
                              n_gamma=check_order(self.n_gamma))


def _half_width(c, limit):
    """
    Half-width of the box where cos(angle) >= 1 - TAIL / c, capped at limit.
    """
    cut = 1 - TAIL / c
    if cut <= -1:
        return limit
    return min(limit, np.arccos(cut))


def _su2_integrals(spec):
    """
    Weighted integrals of P_l(cos theta) and of 1, normalized by total Haar mass.
    """
    c = spec.coupling
    rule_t = specfun.quadrature('gauss-legendre', spec.n_theta)
    rule_s = specfun.quadrature('gauss-legendre', spec.n_sigma)
    rule_g = specfun.quadrature('gauss-legendre', spec.n_gamma)
    theta, w_t = rule_t.mapped(0, 2 * _half_width(c, np.pi / 2))
    s_max = _half_width(c, np.pi)
    sigma, w_s = rule_s.mapped(-s_max, s_max)
    g_max = _half_width(c, np.pi / 2)
    gamma, w_g = rule_g.mapped(-g_max, g_max)

    cos_sg = np.cos(sigma)[:, None] * np.cos(gamma)[None, :]
    w_sg = w_s[:, None] * w_g[None, :]
    inner = np.array([np.sum(w_sg * np.exp(-c * (1 - np.cos(th / 2) * cos_sg)))
                      for th in theta])
    haar = w_t * np.sin(theta) * inner
    # delta contributes 2 pi; total Haar mass is 2 * (2 pi)^2 * pi
    mass = 2 * (2 * np.pi)**2 * np.pi
    z0 = 2 * np.pi * np.sum(haar) / mass
    numerator = 2 * np.pi * np.sum(haar * specfun.legendre_P(spec.ell, np.cos(theta))) / mass
    return numerator, z0


def su2_normalization(spec):
    """
    Z_0: Haar-normalized integral of the weight.
    """
    return _su2_integrals(spec)[1]


def su2_normalization_gaussian(spec):
    """
    Gaussian approximation 1 / (2 pi u_*^4 W^4 trS^2) of Z_0 for large W.
    """
    return 1 / (2 * np.pi * spec.u_star**4 * spec.w**4 * spec.tr_s**2)


def su2_average_t00(spec, check=True):
    """
    Weighted U(2) average of t^l_00(U) = P_l(cos theta).

    Tensor Gauss-Legendre quadrature over (theta, sigma, gamma) on the box
    outside which the weight is below e^{-60} of its peak; delta integrates
    to a constant factor.

    Parameters
    ----------
    spec : SU2AverageSpec
        Sector index, parameters and quadrature orders (each >= 32)
    check : bool
        Repeat with doubled orders (capped at specfun.MAX_DEGREE); raise
        AccuracyError if the value moves by more than 1e-8

    Returns
    -------
    average : float
    """
    if min(spec.n_theta, spec.n_sigma, spec.n_gamma) < MIN_SU2_ORDER:
        raise DomainError(f"Quadrature orders must be at least {MIN_SU2_ORDER}")
    numerator, z0 = _su2_integrals(spec)
    average = numerator / z0
    if check:
        num_fine, z0_fine = _su2_integrals(spec.doubled())
        change = abs(num_fine / z0_fine - average)
        if change > DOUBLING_TOL:
            raise AccuracyError(f"SU(2) average changed by {change:.3e} on doubling")
    return float(average)


def su2_average_t00_bessel(spec, n_gamma=None):
    """
    Same average with the (theta, sigma) integral done in closed form.

    For fixed gamma the SU(2) part is a class function of the rotation angle,
    which gives 2 I_{2l+1}(x) / x against 2 I_1(x) / x with x = c cos(gamma);
    the gamma integral is done by Gauss-Legendre.
    """
    c = spec.coupling
    if n_gamma is None:
        n_gamma = min(2 * spec.n_gamma, specfun.MAX_DEGREE)
    rule = specfun.quadrature('gauss-legendre', n_gamma)
    g_max = _half_width(c, np.pi / 2)
    gamma, w_g = rule.mapped(-g_max, g_max)
    x = c * np.cos(gamma)
    damp = np.exp(x - c)
    numerator = np.sum(w_g * damp * scipy.special.ive(2 * spec.ell + 1, x) / x)
    denominator = np.sum(w_g * damp * scipy.special.ive(1, x) / x)
    return float(numerator / denominator)


def su2_sweep(ells, ws, u_star=1.0, tr_s=2.0, orders=(64, 64, 64), progress=False):
    """
    Averages, leading laws and deviations over a grid of (l, W).

    Returns
    -------
    rows : list of dict
    """
    rows = []
    grid = [(ell, w) for ell in ells for w in ws]
    for ell, w in tqdm.tqdm(grid, disable=not progress):
        spec = SU2AverageSpec(ell=ell, w=w, u_star=u_star, tr_s=tr_s,
                              n_theta=orders[0], n_sigma=orders[1], n_gamma=orders[2])
        average = su2_average_t00(spec)
        law = sector_eigenvalue(ell, u_star, w, tr_s=tr_s)
        rows.append({
            'ell': ell,
            'W': w,
            'u_star': u_star,
            'trS': tr_s,
            'average': average,
            'sector_law': law,
            'deviation': abs(average - law),
            'lambda_ell': lambda_ell(ell, u_star, w),
            'deviation_lambda_ell': abs(average - lambda_ell(ell, u_star, w)),
        })
    return rows


def loglog_slope(ws, deviations):
    """
    Least-squares slope of log(deviation) against log(W).
    """
    return float(np.polyfit(np.log(ws), np.log(deviations), 1)[0])


def schur_orthogonality_check(ell_max=10, quad_orders=(64, 16, 16)):
    """
    Check that the integral of |t^l_00|^2 over U(2) equals 1/(2l+1) under the
    sin(theta) Haar density, for l = 0..ell_max.

    The full tensor rule over (theta, sigma, gamma) is used, so the total
    mass normalization is tested along with the theta density.

    Returns
    -------
    report : dict
        Per-l values, expected values, max deviation

    Raises
    ------
    ConventionError
        If any deviation exceeds 1e-8
    """
    n_theta, n_sigma, n_gamma = quad_orders
    theta, w_t = specfun.quadrature('gauss-legendre', n_theta).mapped(0, np.pi)
    sigma, w_s = specfun.quadrature('gauss-legendre', n_sigma).mapped(-np.pi, np.pi)
    gamma, w_g = specfun.quadrature('gauss-legendre', n_gamma).mapped(-np.pi / 2, np.pi / 2)
    mass = 2 * (2 * np.pi)**2 * np.pi
    angular = 2 * np.pi * np.sum(w_s) * np.sum(w_g)
    values = []
    for ell in range(ell_max + 1):
        p = specfun.legendre_P(ell, np.cos(theta))
        values.append(float(angular * np.sum(w_t * np.sin(theta) * p**2) / mass))
    expected = [1 / (2 * ell + 1) for ell in range(ell_max + 1)]
    deviation = float(np.max(np.abs(np.array(values) - expected)))
    if deviation > SCHUR_TOL:
        raise ConventionError(f"Haar normalization check failed, deviation {deviation:.3e}")
    return {
        'ell': list(range(ell_max + 1)),
        'value': values,
        'expected': expected,
        'max_deviation': deviation,
    }


def u2_element(theta, sigma, delta, gamma):
    """
    U(2) matrix for the given coordinates.
    """
    phi = sigma + delta
    psi = sigma - delta
    t_phi = np.diag([np.exp(1j * phi / 2), np.exp(-1j * phi / 2)])
    t_psi = np.diag([np.exp(1j * psi / 2), np.exp(-1j * psi / 2)])
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    rot = np.array([[c, 1j * s], [1j * s, c]])
    return t_phi @ rot @ t_psi * np.exp(1j * gamma)


def nu_value(u, zeta=1.0):
    """
    |zeta|^2 Tr(L U* L U) / 2 with L = diag(1, -1).
    """
    return abs(zeta)**2 * np.trace(L_MATRIX @ u.conj().T @ L_MATRIX @ u).real / 2


def nu_identity_check(quad_orders=(9, 7, 7, 5)):
    """
    Check Tr(L U* L U)/2 = cos(theta) with L = diag(1, -1) on a grid.

    Parameters
    ----------
    quad_orders : tuple of int
        Grid sizes for (theta, sigma, delta, gamma); theta includes 0 and pi

    Returns
    -------
    report : dict

    Raises
    ------
    ConventionError
        If any grid point violates the identity by more than 1e-12
    """
    n_theta, n_sigma, n_delta, n_gamma = quad_orders
    thetas = np.linspace(0, np.pi, n_theta)
    sigmas = np.linspace(-np.pi, np.pi, n_sigma)
    deltas = np.linspace(-np.pi, np.pi, n_delta)
    gammas = np.linspace(-np.pi / 2, np.pi / 2, n_gamma)
    worst = 0.0
    count = 0
    for theta in thetas:
        for sigma in sigmas:
            for delta in deltas:
                for gamma in gammas:
                    u = u2_element(theta, sigma, delta, gamma)
                    worst = max(worst, abs(nu_value(u) - np.cos(theta)))
                    count += 1
    if worst > NU_TOL:
        raise ConventionError(f"Tr(L U* L U)/2 differs from cos(theta) by {worst:.3e}")
    return {'points': count, 'max_deviation': float(worst)}


def nu_matrix_elements(ell_max, zeta, quad_order=64):
    """
    Matrix (nu p_l, p_l') over the Haar measure in the orthonormal basis
    p_l = sqrt(2l+1) P_l(cos theta), with nu evaluated from the 2x2 matrices.

    Equals |zeta|^2 times the Legendre multiplication matrix.
    """
    theta, w_t = specfun.quadrature('gauss-legendre', quad_order).mapped(0, np.pi)
    nu = np.array([nu_value(u2_element(th, 0.0, 0.0, 0.0), zeta) for th in theta])
    ell = np.arange(ell_max + 1)
    basis = np.array([np.sqrt(2 * k + 1) * specfun.legendre_P(k, np.cos(theta))
                      for k in ell])
    density = w_t * np.sin(theta) / 2
    return (basis * (density * nu)) @ basis.T


def nu_multiplication_check(ell_max=10, zeta=0.5, quad_order=64):
    """
    Check that nu_matrix_elements equals |zeta|^2 times the Legendre
    multiplication matrix of the limits module.

    Raises
    ------
    ConventionError
        If any entry differs by more than 1e-12
    """
    nu = nu_matrix_elements(ell_max, zeta, quad_order=quad_order)
    expected = abs(zeta)**2 * multiplication_matrix(ell_max)
    deviation = float(np.max(np.abs(nu - expected)))
    if deviation > NU_TOL:
        raise ConventionError(f"(nu p_l, p_l') differs from |zeta|^2 T by {deviation:.3e}")
    return {'ell_max': ell_max, 'zeta_abs': abs(zeta), 'max_deviation': deviation}
