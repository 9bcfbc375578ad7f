import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special
import tqdm

from .ensemble import covariance, draw_matrix
from .exceptions import DomainError, EstimationError
from . import specfun

logger = logging.getLogger(__name__)

CHUNK_SIZE = 64


@dataclass(frozen=True)
class OffsetSpec:
    """
    Pair z_{1,2} = z +- zeta / sqrt(N) around the spectral center z.
    """
    z: complex
    zeta: complex
    n: int

    def __post_init__(self):
        if not abs(self.z) < 1:
            raise DomainError(f"Spectral center must satisfy |z| < 1, got {self.z}")

    @property
    def shift(self):
        return complex(self.zeta) / np.sqrt(self.n)

    @property
    def z1(self):
        return complex(self.z) + self.shift

    @property
    def z2(self):
        return complex(self.z) - self.shift


@dataclass
class RatioEstimate:
    """
    Log-domain Monte Carlo estimate of Theta(z1,z2) / sqrt(Theta(z1,z1) Theta(z2,z2)).
    """
    log_theta12: float
    log_theta11: float
    log_theta22: float
    stderr_log: float
    n_samples: int
    n_excluded: int = 0

    @property
    def log_ratio(self):
        return self.log_theta12 - (self.log_theta11 + self.log_theta22) / 2

    @property
    def ratio(self):
        return float(np.exp(self.log_ratio))

    def to_record(self, profile, offsets, seed):
        zeta = complex(offsets.zeta)
        z = complex(offsets.z)
        return {
            'N': profile.n,
            'W': profile.w,
            'kappa': profile.kappa,
            'z_re': z.real,
            'z_im': z.imag,
            'zeta_re': zeta.real,
            'zeta_im': zeta.imag,
            'zeta_abs': abs(zeta),
            'n_samples': self.n_samples,
            'seed': seed,
            'ratio': self.ratio,
            'stderr_log': self.stderr_log,
            'log_theta12': self.log_theta12,
            'log_theta11': self.log_theta11,
            'log_theta22': self.log_theta22,
        }


def log_absdet_sq(h, z):
    """
    ln |det(H - zI)|^2 from a partially pivoted LU factorization.

    Parameters
    ----------
    h : ndarray
        Complex (N, N) matrix
    z : complex
        Shift

    Returns
    -------
    value : float
        Sum of ln |u_ii|^2; -inf if H - zI is exactly singular
    """
    h = np.atleast_2d(h)
    a = h - z * np.eye(h.shape[0])
    lu, _ = scipy.linalg.lu_factor(a, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag == 0):
        return -np.inf
    return float(np.sum(2 * np.log(diag)))


def log_mean_exp(x):
    """
    ln of the mean of e^x, via log-sum-exp.
    """
    x = np.asarray(x)
    return scipy.special.logsumexp(x) - np.log(x.size)


def leave_one_out_log_mean_exp(x):
    """
    ln of the mean of e^x with each entry left out in turn.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    x_max = np.max(x)
    terms = np.exp(x - x_max)
    total = np.sum(terms)
    rest = total - terms
    loo = np.empty(n)
    # one term can carry nearly all of the mass
    unstable = rest <= total * 1e-8
    loo[~unstable] = x_max + np.log(rest[~unstable]) - np.log(n - 1)
    for i in np.flatnonzero(unstable):
        loo[i] = log_mean_exp(np.delete(x, i))
    return loo


def estimate_from_log_dets(l1, l2):
    """
    Assemble a RatioEstimate from per-sample log-determinants at z1 and z2.

    Samples where either value is -inf are excluded.
    """
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    keep = np.isfinite(l1) & np.isfinite(l2)
    n_excluded = int(np.sum(~keep))
    if n_excluded > 0:
        logger.warning(f"Excluding {n_excluded} singular sample(s) from the estimate")
    l1, l2 = l1[keep], l2[keep]
    n = l1.size
    if n == 0:
        raise EstimationError("Every sample was singular; no estimate possible")
    a = 2 * l1
    b = 2 * l2
    y = l1 + l2
    estimate = RatioEstimate(log_theta12=log_mean_exp(y),
                             log_theta11=log_mean_exp(a),
                             log_theta22=log_mean_exp(b),
                             stderr_log=np.nan,
                             n_samples=n,
                             n_excluded=n_excluded)
    if n > 1:
        jack = (leave_one_out_log_mean_exp(y)
                - (leave_one_out_log_mean_exp(a) + leave_one_out_log_mean_exp(b)) / 2)
        estimate.stderr_log = float(np.sqrt((n - 1) / n * np.sum((jack - jack.mean())**2)))
    return estimate


def _sample_log_dets(j, seed, index, points):
    h = draw_matrix(j, seed, index)
    values = {}
    for p in points:
        if p not in values:
            values[p] = log_absdet_sq(h, p)
    return [values[p] for p in points]


def sample_log_dets(j, seed, n_samples, points, threads=1, progress=False):
    """
    ln |det(H_i - p)|^2 for every sample index i and every point p.

    Each sample is drawn once and evaluated at all points, so different
    points share the same random numbers. Rows are ordered by sample index
    whatever the number of threads.

    Returns
    -------
    log_dets : ndarray
        Array of shape (n_samples, len(points))
    """
    points = [complex(p) for p in points]
    chunks = [range(start, min(start + CHUNK_SIZE, n_samples))
              for start in range(0, n_samples, CHUNK_SIZE)]

    def run_chunk(chunk):
        return [_sample_log_dets(j, seed, i, points) for i in chunk]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        results = list(tqdm.tqdm(executor.map(run_chunk, chunks),
                                 total=len(chunks),
                                 disable=not progress))
    return np.array(list(itertools.chain.from_iterable(results)),
                    dtype=float).reshape(n_samples, len(points))


def theta_ratio(profile, offsets, n_samples, seed, threads=1, progress=False):
    """
    Monte Carlo estimate of the normalized correlator ratio.

    Numerator and both denominators use the same samples.

    Parameters
    ----------
    profile : BandProfile
        Dimension and bandwidth
    offsets : OffsetSpec
        Center and offset
    n_samples : int
        Number of samples, at least 2
    seed : int
        Seed keying the per-sample substreams
    threads : int
        Worker threads; the result does not depend on it
    progress : bool
        Show a progress bar

    Returns
    -------
    estimate : RatioEstimate
    """
    return ratio_curve(profile,
                       offsets.z,
                       [offsets.zeta],
                       n_samples,
                       seed,
                       threads=threads,
                       progress=progress)[0][1]


def ratio_curve(profile, z, zeta_grid, n_samples, seed, threads=1, progress=False):
    """
    RatioEstimate for every zeta on a grid, from one shared sample set.

    Returns
    -------
    curve : list of (complex, RatioEstimate)
    """
    if len(zeta_grid) == 0:
        raise DomainError("zeta grid must not be empty")
    if n_samples < 2:
        raise DomainError(f"At least 2 samples are needed, got {n_samples}")
    offsets = [OffsetSpec(z=z, zeta=zeta, n=profile.n) for zeta in zeta_grid]
    points = []
    for off in offsets:
        points.extend([off.z1, off.z2])
    log_dets = sample_log_dets(covariance(profile),
                               seed,
                               n_samples,
                               points,
                               threads=threads,
                               progress=progress)
    curve = []
    for idx, off in enumerate(offsets):
        curve.append((complex(off.zeta),
                      estimate_from_log_dets(log_dets[:, 2 * idx],
                                             log_dets[:, 2 * idx + 1])))
    return curve


def theta_n1(z1, z2, j=1.0):
    """
    Exact E|h - z1|^2 |h - z2|^2 for a scalar circular Gaussian h with E|h|^2 = j.
    """
    return 2 * j**2 + j * abs(z1 + z2)**2 + abs(z1)**2 * abs(z2)**2


def theta_exact(j, z1, z2, order=4):
    """
    Theta(z1, z2) = E |det(H - z1)|^2 |det(H - z2)|^2 for N <= 2.

    Tensor Gauss-Hermite quadrature over the 2N^2 real coordinates of H.
    The integrand has degree at most 4 in each coordinate, so any order >= 3
    is exact up to rounding.

    Parameters
    ----------
    j : CovarianceMatrix or ndarray
        Entry variances, N <= 2
    z1, z2 : complex
        Evaluation points
    order : int
        Gauss-Hermite order per coordinate

    Returns
    -------
    theta : float
    """
    entries = j.entries if hasattr(j, 'entries') else np.atleast_2d(np.asarray(j, dtype=float))
    n = entries.shape[0]
    if n > 2:
        raise DomainError("Exact quadrature is limited to N <= 2")
    rule = specfun.quadrature('gauss-hermite', order)
    t = rule.nodes
    w = rule.weights / np.sqrt(np.pi)
    dims = 2 * n * n
    grid = np.array(list(itertools.product(range(order), repeat=dims)))
    weights = np.prod(w[grid], axis=1)
    # Re and Im of entry (j,k) are sqrt(J_jk) t with t ~ e^{-t^2}/sqrt(pi)
    scale = np.sqrt(entries).ravel()
    coords = t[grid] * np.concatenate([scale, scale])
    h = (coords[:, :n * n] + 1j * coords[:, n * n:]).reshape(-1, n, n)
    eye = np.eye(n)
    d1 = np.abs(np.linalg.det(h - z1 * eye))**2
    d2 = np.abs(np.linalg.det(h - z2 * eye))**2
    return float(np.sum(weights * d1 * d2))


def ratio_exact(j, z1, z2, order=4):
    """
    Exact normalized ratio for N <= 2, from theta_exact.
    """
    t12 = theta_exact(j, z1, z2, order=order)
    t11 = theta_exact(j, z1, z1, order=order)
    t22 = theta_exact(j, z2, z2, order=order)
    return t12 / np.sqrt(t11 * t22)
