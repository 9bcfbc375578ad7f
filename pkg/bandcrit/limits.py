import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg

from .exceptions import DomainError, ConfigurationError

logger = logging.getLogger(__name__)

MODES = ('regime-consistent', 'paper-literal')
DEFAULT_MODE = 'regime-consistent'
DEFAULT_TRUNCATION = 60
MIN_TRUNCATION = 8
SERIES_THRESHOLD = 1e-6
SYMMETRY_TOL = 1e-12
EXP_CROSS_TOL = 1e-10


def ginibre_limit(zeta):
    """
    Ginibre-regime limit (1 - e^{-4|zeta|^2}) / (4|zeta|^2).

    Below |zeta|^2 = 1e-6 a four-term Taylor series replaces the closed form.
    """
    t = abs(zeta)**2
    if t < SERIES_THRESHOLD:
        # sum_{k>=0} (-4t)^k / (k+1)!
        return 1 - 2 * t + 8 * t**2 / 3 - 8 * t**3 / 3
    return -np.expm1(-4 * t) / (4 * t)


def factorized_limit(zeta):
    """
    Short-band (factorized) limit e^{-2|zeta|^2}.
    """
    return float(np.exp(-2 * abs(zeta)**2))


def multiplication_matrix(m):
    """
    Multiplication by z in the orthonormal Legendre basis sqrt(2l+1) P_l.

    Parameters
    ----------
    m : int
        Truncation order; the matrix is (m+1, m+1)

    Returns
    -------
    t : ndarray
        Symmetric tridiagonal matrix, T_{l,l+1} = (l+1) / sqrt((2l+1)(2l+3))
    """
    ell = np.arange(m)
    off = (ell + 1) / np.sqrt((2 * ell + 1) * (2 * ell + 3))
    return np.diag(off, 1) + np.diag(off, -1)


@dataclass
class A0Matrix:
    """
    Truncated Legendre-basis matrix of the critical-regime operator.
    """
    entries: np.ndarray
    kappa_u: float
    zeta_abs2: float
    mode: str

    @property
    def size(self):
        return self.entries.shape[0]


def a0_matrix(kappa_u, zeta, m=DEFAULT_TRUNCATION, mode=DEFAULT_MODE):
    """
    Matrix of the operator (1/(8 kappa_u^2)) d/dz (1-z^2) d/dz + multiplication
    term, in the basis sqrt(2l+1) P_l orthonormal under dz/2 on [-1, 1].

    Parameters
    ----------
    kappa_u : float
        Product kappa_* u_*, positive
    zeta : complex
        Offset; only |zeta|^2 enters
    m : int
        Truncation order, at least 8
    mode : str
        'regime-consistent' adds 2|zeta|^2 (T - I);
        'paper-literal' adds 2 T

    Returns
    -------
    a0 : A0Matrix
    """
    if not kappa_u > 0:
        raise DomainError(f"kappa_u must be positive, got {kappa_u}")
    if int(m) != m or m < MIN_TRUNCATION:
        raise DomainError(f"Truncation must be an integer >= {MIN_TRUNCATION}, got {m}")
    if mode not in MODES:
        raise ConfigurationError(f"Unknown mode '{mode}'", field='mode')
    m = int(m)
    ell = np.arange(m + 1)
    zeta_abs2 = abs(zeta)**2
    t = multiplication_matrix(m)
    entries = np.diag(-ell * (ell + 1) / (8 * kappa_u**2))
    if mode == 'regime-consistent':
        entries = entries + 2 * zeta_abs2 * (t - np.eye(m + 1))
    else:
        entries = entries + 2 * t
    return A0Matrix(entries=entries,
                    kappa_u=kappa_u,
                    zeta_abs2=zeta_abs2,
                    mode=mode)


def matrix_exponential(a, method='eigh'):
    """
    Exponential of a real symmetric matrix.

    Parameters
    ----------
    a : ndarray
        Symmetric within 1e-12 (absolute, entrywise)
    method : str
        'eigh' for the symmetric eigendecomposition, 'pade' for scaling and
        squaring (scipy.linalg.expm)

    Returns
    -------
    exp_a : ndarray
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("Matrix exponential needs a square matrix")
    if np.max(np.abs(a - a.T), initial=0) > SYMMETRY_TOL:
        raise DomainError("Matrix is not symmetric within tolerance")
    if method == 'pade':
        return scipy.linalg.expm(a)
    if method != 'eigh':
        raise ConfigurationError(f"Unknown exponential method '{method}'", field='method')
    evals, evecs = scipy.linalg.eigh((a + a.T) / 2)
    return (evecs * np.exp(evals)) @ evecs.T


def critical_limit(kappa_u, zeta, m=DEFAULT_TRUNCATION, mode=DEFAULT_MODE, method='eigh'):
    """
    Critical-regime limit (e^{A_0} 1, 1) as the (0, 0) entry of the
    exponentiated Legendre matrix; ``method`` as in matrix_exponential.
    """
    a0 = a0_matrix(kappa_u, zeta, m=m, mode=mode)
    return float(matrix_exponential(a0.entries, method=method)[0, 0])


def limit_table(zeta_abs, kappa_u, m=DEFAULT_TRUNCATION, modes=MODES):
    """
    Limit curves as a DataFrame with columns
    zeta_abs, ginibre, factorized, critical, critical_pade, exp_rel_diff,
    kappa_u, mode.

    ``critical`` uses the eigendecomposition and ``critical_pade`` scaling and
    squaring; rows where they differ by more than EXP_CROSS_TOL (relative)
    are logged as warnings.
    """
    rows = []
    for mode in modes:
        for za in zeta_abs:
            critical = critical_limit(kappa_u, za, m=m, mode=mode)
            pade = critical_limit(kappa_u, za, m=m, mode=mode, method='pade')
            rel_diff = abs(critical - pade) / max(abs(pade), np.finfo(float).tiny)
            if rel_diff > EXP_CROSS_TOL:
                logger.warning(f"Exponential methods disagree at |zeta| = {za}, "
                               f"mode {mode}: relative difference {rel_diff:.3g}")
            rows.append({
                'zeta_abs': float(za),
                'ginibre': ginibre_limit(za),
                'factorized': factorized_limit(za),
                'critical': critical,
                'critical_pade': pade,
                'exp_rel_diff': rel_diff,
                'kappa_u': float(kappa_u),
                'mode': mode,
            })
    return pd.DataFrame(rows)
