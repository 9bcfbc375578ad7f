import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np
import pandas as pd
import scipy.linalg
import tqdm

from .exceptions import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BandProfile:
    """
    Matrix dimension N and bandwidth parameter W of the band ensemble.
    """
    n: int
    w: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"Matrix dimension must be a positive integer, got {self.n}")
        if not self.w > 0:
            raise DomainError(f"Bandwidth must be positive, got {self.w}")

    @property
    def kappa(self):
        return self.w / np.sqrt(self.n)

    @classmethod
    def from_kappa(cls, n, kappa):
        """
        Profile with W = round(kappa * sqrt(N)), at least 1.
        """
        if not kappa > 0:
            raise DomainError(f"kappa must be positive, got {kappa}")
        return cls(n=int(n), w=max(1, int(round(kappa * np.sqrt(n)))))


@dataclass
class CovarianceMatrix:
    """
    Dense covariance J of the matrix-entry variances.
    """
    entries: np.ndarray

    @property
    def n(self):
        return self.entries.shape[0]

    def row_sum_error(self):
        """
        Largest deviation of a row sum from 1.
        """
        return np.max(np.abs(self.entries.sum(axis=1) - 1))

    def min_eigenvalue(self):
        return scipy.linalg.eigvalsh(self.entries)[0]

    def decay_constant(self, w):
        """
        Largest c with J_jk <= J_jj exp(-c|j-k|/W) over all j != k.

        Returns inf for N = 1.
        """
        if self.n == 1:
            return np.inf
        j, k = np.triu_indices(self.n, 1)
        dist = np.abs(j - k)
        ratios = self.entries[j, k] / self.entries[j, j]
        return np.min(-w * np.log(ratios) / dist)

    def to_csv(self, csv_path):
        """
        Write J row-major with 17 significant digits, no header.
        """
        pd.DataFrame(self.entries).to_csv(csv_path,
                                          header=False,
                                          index=False,
                                          float_format='%.17g')


@dataclass
class SpectralParams:
    """
    Scalars u_*, alpha and lambda_* derived from the spectral center z and W.

    kappa_star is W / sqrt(N) when N is supplied.
    """
    z: complex
    w: float
    u_star: float
    alpha: float
    lambda_star: float
    kappa_star: float = None

    @property
    def kappa_u(self):
        if self.kappa_star is None:
            return None
        return self.kappa_star * self.u_star


@dataclass
class SampleBatch:
    """
    Complex Gaussian band matrices drawn from per-index substreams.
    """
    matrices: List[np.ndarray]
    seed: int
    indices: List[int]
    covariance: CovarianceMatrix = field(default=None, repr=False)

    def __len__(self):
        return len(self.matrices)

    def regenerate(self, index):
        """
        Redraw the sample with the given index bit-exactly.
        """
        return draw_matrix(self.covariance, self.seed, index)


def neumann_laplacian(n):
    """
    Second-difference operator on [1, n] with reflecting (Neumann) end rows.

    Parameters
    ----------
    n : int
        Matrix dimension

    Returns
    -------
    delta : ndarray
        Symmetric tridiagonal (n, n) matrix with zero row sums
    """
    if int(n) != n or n < 1:
        raise DomainError(f"Laplacian dimension must be a positive integer, got {n}")
    n = int(n)
    delta = (np.diag(np.full(n - 1, 1.0), -1)
             + np.diag(np.full(n - 1, 1.0), 1))
    delta -= np.diag(delta.sum(axis=1))
    return delta


def covariance(profile):
    """
    Covariance J = (-W^2 Delta + 1)^{-1} of the band ensemble.

    All columns come from one banded (tridiagonal) LU solve against the
    identity, O(N^2) in total.

    Parameters
    ----------
    profile : BandProfile
        Dimension and bandwidth

    Returns
    -------
    j : CovarianceMatrix
        Symmetric, positive, with unit row sums
    """
    n, w2 = profile.n, profile.w**2
    delta = neumann_laplacian(n)
    ab = np.zeros((3, n))
    ab[0, 1:] = -w2 * np.diag(delta, 1)
    ab[1, :] = 1 - w2 * np.diag(delta)
    ab[2, :-1] = -w2 * np.diag(delta, -1)
    entries = scipy.linalg.solve_banded((1, 1), ab, np.eye(n))
    entries = (entries + entries.T) / 2
    return CovarianceMatrix(entries=entries)


def spectral_params(z, w, n=None):
    """
    Derived scalars of the transfer-operator analysis.

    u_* = (1 - |z|^2)^{1/2}, alpha = u_* (2 + u_*^2 W^{-2})^{1/2} and
    lambda_* = 1 - W^{-1} (alpha - u_*^2 W^{-1}).

    Parameters
    ----------
    z : complex
        Spectral center, |z| < 1
    w : float
        Bandwidth parameter
    n : int, optional
        Matrix dimension, used to attach kappa_* = W / sqrt(N)

    Returns
    -------
    params : SpectralParams
    """
    if not abs(z) < 1:
        raise DomainError(f"Spectral center must satisfy |z| < 1, got {z}")
    if not w > 0:
        raise DomainError(f"Bandwidth must be positive, got {w}")
    u_star = np.sqrt(1 - abs(z)**2)
    alpha = u_star * np.sqrt(2 + u_star**2 / w**2)
    lambda_star = 1 - (alpha - u_star**2 / w) / w
    kappa_star = None if n is None else w / np.sqrt(n)
    return SpectralParams(z=complex(z),
                          w=w,
                          u_star=u_star,
                          alpha=alpha,
                          lambda_star=lambda_star,
                          kappa_star=kappa_star)


def substream(seed, index):
    """
    Counter-based generator keyed by (seed, index).
    """
    seq = np.random.SeedSequence(seed, spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(seq))


def _entries(j):
    if isinstance(j, CovarianceMatrix):
        return j.entries
    return np.asarray(j, dtype=float)


def draw_matrix(j, seed, index):
    """
    One circular complex Gaussian matrix with E|H_jk|^2 = J_jk.

    Real and imaginary parts are independent N(0, J_jk / 2).
    """
    entries = _entries(j)
    rng = substream(seed, index)
    parts = rng.standard_normal((2,) + entries.shape)
    return np.sqrt(entries / 2) * (parts[0] + 1j * parts[1])


def sample(j, seed, count, start=0, threads=1, progress=False):
    """
    Draw a batch of band matrices.

    Sample i uses the substream keyed by (seed, i), so the batch does not
    depend on ``threads``.

    Parameters
    ----------
    j : CovarianceMatrix or ndarray
        Entry variances
    seed : int
        Batch seed; if None, fresh entropy is drawn and stored on the batch
    count : int
        Number of samples
    start : int
        First sample index
    threads : int
        Worker threads
    progress : bool
        Show a progress bar

    Returns
    -------
    batch : SampleBatch
    """
    if count < 1:
        raise DomainError(f"Sample count must be at least 1, got {count}")
    if seed is None:
        seed = np.random.SeedSequence().entropy
        logger.info(f"No seed given, using entropy {seed}")
    cov = j if isinstance(j, CovarianceMatrix) else CovarianceMatrix(_entries(j))
    indices = list(range(start, start + count))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        matrices = list(tqdm.tqdm(executor.map(lambda i: draw_matrix(cov, seed, i),
                                               indices),
                                  total=count,
                                  disable=not progress))
    return SampleBatch(matrices=matrices,
                       seed=seed,
                       indices=indices,
                       covariance=cov)
