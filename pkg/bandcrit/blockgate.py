"""
Numerical checkers for the block-matrix spectral bounds.

A Hermitian matrix M is split into square blocks M_kj, k, j = 1..n_2, each
of size ``block_size``. Blocks 1..n_0 form part 0, n_0+1..n_1 part 1 and
n_1+1..n_2 part 2; M^{(ab)} denotes the corresponding sub-matrix and
M_1 (the upper-left union of parts 0 and 1) the matrix whose top eigenvalue
controls that of M.
"""
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import tqdm

from .exceptions import ConfigurationError, DomainError, PreconditionError

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
VERDICT_TOL = 1e-10
PERTURBATION_FILL = 0.9
COUPLING_FILL = 0.9
GRID_POINTS = 10
TIGHTNESS_FACTOR = 10
RATE_TOL = 1e-6


@dataclass(frozen=True)
class GateParams:
    """
    Partition and constants of a block scenario.

    Parameters
    ----------
    p_0 : int
        Block band half-width
    c_1 : float
        Spectral gap constant
    q : float
        Contraction factor in (0, 1)
    q_prime : float
        Coupling factor in (0, 1)
    n_0, n_1, n_2 : int
        Partition indices, 0 <= n_0 < n_1 < n_2
    c_log : float
        Constant c of the gap condition n_1 - n_0 > c log^2(n_2)
    block_size : int
        Size of each square block
    """
    p_0: int
    c_1: float
    q: float
    q_prime: float
    n_0: int
    n_1: int
    n_2: int
    c_log: float = 1.0
    block_size: int = 1

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ConfigurationError(f"q must lie in (0, 1), got {self.q}", field='q')
        if not 0 < self.q_prime < 1:
            raise ConfigurationError(f"q_prime must lie in (0, 1), got {self.q_prime}",
                                     field='q_prime')
        if not self.c_1 > 0:
            raise ConfigurationError(f"c_1 must be positive, got {self.c_1}", field='c_1')
        if self.p_0 < 1:
            raise ConfigurationError(f"p_0 must be at least 1, got {self.p_0}", field='p_0')
        if not 0 <= self.n_0 < self.n_1 < self.n_2:
            raise ConfigurationError("Partition must satisfy 0 <= n_0 < n_1 < n_2",
                                     field='n_0, n_1, n_2')
        if self.block_size < 1:
            raise ConfigurationError("block_size must be at least 1", field='block_size')

    @property
    def delta_0(self):
        return self.q**((self.n_1 - self.n_0) / self.p_0)

    @property
    def dim(self):
        return self.n_2 * self.block_size

    @classmethod
    def default(cls, p_0, q, c_1=1.0, q_prime=0.5, n_0=4, c_log=1.0, tail_factor=4,
                block_size=1):
        """
        Smallest partition whose gap satisfies the log^2 condition, with part 2
        ``tail_factor`` times as long as the gap.
        """
        gap = 1
        while True:
            n_2 = n_0 + (1 + tail_factor) * gap
            needed = int(np.floor(c_log * np.log(n_2)**2)) + 1
            if needed <= gap:
                break
            gap = needed
        return cls(p_0=p_0,
                   c_1=c_1,
                   q=q,
                   q_prime=q_prime,
                   n_0=n_0,
                   n_1=n_0 + gap,
                   n_2=n_0 + (1 + tail_factor) * gap,
                   c_log=c_log,
                   block_size=block_size)


@dataclass
class GateScenario:
    """
    Hermitian block matrix with its partition parameters and provenance.
    """
    m: np.ndarray
    params: GateParams
    seed: int = None
    violate: int = None

    def part(self, a, b):
        """
        Sub-matrix M^{(ab)} for parts a, b in {0, 1, 2}.
        """
        bounds = _part_bounds(self.params)
        return self.m[bounds[a], bounds[b]]

    @property
    def m1(self):
        """
        Upper-left sub-matrix over parts 0 and 1.
        """
        end = self.params.n_1 * self.params.block_size
        return self.m[:end, :end]


@dataclass
class GateReport:
    """
    Verdicts for one scenario.
    """
    hypotheses_hold: tuple
    lambda_max_actual: float
    ct1_bound: float
    ct1_holds: bool
    projection_decay_profile: list
    resolvent_decay_worst_ratio: float
    lambda_max_m1: float = None
    delta_0: float = None
    projection_envelope: list = field(default=None)
    projection_envelope_holds: bool = None
    projection_fitted_rate: float = None
    projection_rate: float = None
    projection_rate_holds: bool = None
    resolvent_holds: bool = None
    seed: int = None
    params: dict = None

    @property
    def ct1_slack(self):
        return self.ct1_bound - self.lambda_max_actual

    @property
    def ct1_scale(self):
        return np.sqrt(self.delta_0)

    @property
    def tight(self):
        return self.ct1_slack <= TIGHTNESS_FACTOR * self.ct1_scale

    def to_dict(self):
        out = dataclasses.asdict(self)
        out['hypotheses_hold'] = list(self.hypotheses_hold)
        out['ct1_slack'] = self.ct1_slack
        return out


def _part_bounds(params):
    b = params.block_size
    return [slice(0, params.n_0 * b),
            slice(params.n_0 * b, params.n_1 * b),
            slice(params.n_1 * b, params.n_2 * b)]


def _block_index(params):
    """
    1-based block number of every row.
    """
    return np.arange(params.dim) // params.block_size + 1


def _spectral_norm(a):
    if a.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(a)[0])


def _lambda_max(a):
    if a.size == 0:
        return -np.inf
    return float(scipy.linalg.eigvalsh(a)[-1])


def _block_diagonal_part(a, block_size):
    out = np.zeros_like(a)
    for start in range(0, a.shape[0], block_size):
        sl = slice(start, start + block_size)
        out[sl, sl] = a[sl, sl]
    return out


def _check_hermitian(m):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("Scenario matrix must be square")
    if np.max(np.abs(m - m.conj().T), initial=0) > HERMITIAN_TOL:
        raise DomainError("Scenario matrix is not Hermitian")


def check_hypotheses(scenario):
    """
    Evaluate the four hypotheses of the three-part bound.

    (i) n_1 - n_0 > c log^2(n_2); (ii) M_kj = 0 for |j-k| > p_0 whenever
    min(j, k) <= n_1; (iii) the block diagonal D of M^{(11)} satisfies
    D < -c_1 and ||M^{(11)} - D|| <= q c_1 / 2; (iv) M^{(22)} <= -c_1 and
    ||M^{(12)}||^2 < q' (1 - q) (c_1 / 2)^2.

    Returns
    -------
    holds : tuple of bool
        One verdict per hypothesis
    """
    p = scenario.params
    m = scenario.m
    _check_hermitian(m)
    if m.shape[0] != p.dim:
        raise DomainError(f"Scenario matrix has size {m.shape[0]}, partition needs {p.dim}")

    gap_ok = (p.n_1 - p.n_0) > p.c_log * np.log(p.n_2)**2

    blk = _block_index(p)
    far = np.abs(blk[:, None] - blk[None, :]) > p.p_0
    near_top = np.minimum(blk[:, None], blk[None, :]) <= p.n_1
    band_ok = not np.any(m[far & near_top] != 0)

    m11 = scenario.part(1, 1)
    d = _block_diagonal_part(m11, p.block_size)
    diag_ok = (_lambda_max(d) < -p.c_1
               and _spectral_norm(m11 - d) <= p.q * p.c_1 / 2)

    m22 = scenario.part(2, 2)
    coupling_ok = (_lambda_max(m22) <= -p.c_1
                   and _spectral_norm(scenario.part(1, 2))**2
                   < p.q_prime * (1 - p.q) * (p.c_1 / 2)**2)
    return (bool(gap_ok), bool(band_ok), bool(diag_ok), bool(coupling_ok))


def _require(scenario, indices=(1, 2, 3, 4)):
    holds = check_hypotheses(scenario)
    for idx in indices:
        if not holds[idx - 1]:
            raise PreconditionError(f"Hypothesis ({idx}) does not hold", index=idx)
    return holds


def resolvent_z_grid(c_1, count=GRID_POINTS):
    """
    ``count`` equispaced points in (-c_1/2, c_1].
    """
    return np.linspace(-c_1 / 2, c_1, count + 1)[1:]


def resolvent_decay_check(scenario, z):
    """
    Worst ratio of resolvent block norms to the geometric bound
    2 (c_1 (1-q))^{-1} q^{|j-k|/p_0}.

    Parameters
    ----------
    scenario : GateScenario
        Must satisfy hypothesis (iii)
    z : float
        Real point above -c_1/2

    Returns
    -------
    ratio : float
        max over block pairs of ||(M^{(11)} - z)^{-1}_{jk}|| / bound_{jk};
        the bound holds when ratio <= 1 + 1e-10
    """
    p = scenario.params
    _require(scenario, indices=(3,))
    if not z > -p.c_1 / 2:
        raise DomainError(f"z must exceed -c_1/2 = {-p.c_1 / 2}, got {z}")
    m11 = scenario.part(1, 1)
    size = m11.shape[0]
    try:
        g = scipy.linalg.inv(m11 - z * np.eye(size))
    except np.linalg.LinAlgError:
        raise PreconditionError("M^{(11)} - z is singular", index=3)
    b = p.block_size
    nb = size // b
    blocks = g.reshape(nb, b, nb, b).transpose(0, 2, 1, 3)
    norms = np.linalg.norm(blocks, ord=2, axis=(2, 3))
    k = np.arange(nb)
    dist = np.abs(k[:, None] - k[None, :])
    bound = 2 / (p.c_1 * (1 - p.q)) * p.q**(dist / p.p_0)
    return float(np.max(norms / bound))


def projection_rate(profile, params):
    """
    Measured decay over p_0 blocks: the profile at block n_0 + 1 + p_0,
    less the delta_0^{1/2} floor, over the profile at block n_0 + 1.

    Parameters
    ----------
    profile : array_like
        ||E P_k|| for k = n_0 + 1, ..., n_2
    params : GateParams

    Returns
    -------
    ratio : float
        0 when the profile vanishes at n_0 + 1; nan when block n_0 + 1 + p_0
        lies beyond n_2
    """
    profile = np.asarray(profile, dtype=float)
    if params.p_0 >= len(profile):
        return np.nan
    near, far = profile[0], profile[params.p_0]
    if near <= 0:
        return 0.0
    return float(max(far - np.sqrt(params.delta_0), 0) / near)


def projection_decay_check(scenario):
    """
    Block profile of the spectral projection onto eigenvalues above -c_1/2.

    For each block k > n_0 reports ||E P_k|| and compares it with the envelope
    C q^{(k-n_0)/p_0} + delta_0^{1/2}, C = 2 p_0 r^{1/2} ||M^{(10)}|| / (c_1 (1-q) q),
    where r is the rank of E.

    Returns
    -------
    result : dict
        'blocks', 'profile', 'envelope', 'holds', 'constant', 'rank',
        'fitted_rate' (per-block decay factor from a log-linear fit, nan if
        fewer than two resolved values), 'predicted_rate' (q^{1/p_0}),
        'rate' (see projection_rate) and 'rate_holds' (rate <= q within
        tolerance)
    """
    p = scenario.params
    _require(scenario)
    evals, evecs = scipy.linalg.eigh(scenario.m)
    v = evecs[:, evals > -p.c_1 / 2]
    rank = v.shape[1]
    b = p.block_size
    blocks = np.arange(p.n_0 + 1, p.n_2 + 1)
    profile = np.array([_spectral_norm(v[(k - 1) * b:k * b, :]) for k in blocks])
    constant = (2 * p.p_0 * np.sqrt(rank) * _spectral_norm(scenario.part(1, 0))
                / (p.c_1 * (1 - p.q) * p.q))
    envelope = constant * p.q**((blocks - p.n_0) / p.p_0) + np.sqrt(p.delta_0)
    holds = bool(np.all(profile <= envelope * (1 + VERDICT_TOL)))

    fitted_rate = np.nan
    if rank > 0:
        resolved = profile > 1e-13 * np.max(profile, initial=0)
        resolved &= blocks <= p.n_1
        if np.sum(resolved) >= 2:
            slope = np.polyfit(blocks[resolved] - p.n_0, np.log(profile[resolved]), 1)[0]
            fitted_rate = float(np.exp(slope))
    rate = projection_rate(profile, p)
    rate_holds = bool(np.isnan(rate) or rate <= p.q * (1 + RATE_TOL))
    return {
        'blocks': blocks.tolist(),
        'profile': profile.tolist(),
        'envelope': envelope.tolist(),
        'holds': holds,
        'constant': float(constant),
        'rank': int(rank),
        'fitted_rate': fitted_rate,
        'predicted_rate': float(p.q**(1 / p.p_0)),
        'rate': rate,
        'rate_holds': rate_holds,
    }


def ct_bound(scenario, z_grid=None):
    """
    Compare lambda_max(M) with lambda_max(M_1) + delta_0^{1/2} and attach
    the projection and resolvent decay checks.

    Parameters
    ----------
    scenario : GateScenario
        Must satisfy all four hypotheses
    z_grid : array_like, optional
        Points for the resolvent check; defaults to 10 points in (-c_1/2, c_1]

    Returns
    -------
    report : GateReport
    """
    p = scenario.params
    holds = _require(scenario)
    actual = _lambda_max(scenario.m)
    top_m1 = _lambda_max(scenario.m1)
    bound = top_m1 + np.sqrt(p.delta_0)
    if z_grid is None:
        z_grid = resolvent_z_grid(p.c_1)
    worst = max(resolvent_decay_check(scenario, z) for z in z_grid)
    projection = projection_decay_check(scenario)
    return GateReport(hypotheses_hold=holds,
                      lambda_max_actual=actual,
                      ct1_bound=bound,
                      ct1_holds=bool(actual <= bound + VERDICT_TOL),
                      projection_decay_profile=projection['profile'],
                      resolvent_decay_worst_ratio=worst,
                      lambda_max_m1=top_m1,
                      delta_0=p.delta_0,
                      projection_envelope=projection['envelope'],
                      projection_envelope_holds=projection['holds'],
                      projection_fitted_rate=projection['fitted_rate'],
                      projection_rate=projection['rate'],
                      projection_rate_holds=projection['rate_holds'],
                      resolvent_holds=bool(worst <= 1 + VERDICT_TOL),
                      seed=scenario.seed,
                      params=dataclasses.asdict(p))


def norm_bound_2x2(m, m1, m2, n1):
    """
    Check lambda_max(M) <= max(m1, m2) + ||M^{(12)}||^2 / |m2 - m1| for a
    Hermitian matrix split after row ``n1``.

    Returns
    -------
    verdict : dict
        'holds', 'lambda_max', 'bound', 'slack', 'scale' (the coupling term)
    """
    m = np.asarray(m)
    _check_hermitian(m)
    if m1 == m2:
        raise PreconditionError("The bound needs m1 != m2")
    if not 0 < n1 < m.shape[0]:
        raise DomainError(f"Split index must lie strictly inside the matrix, got {n1}")
    if not _lambda_max(m[:n1, :n1]) < m1:
        raise PreconditionError("M^{(11)} < m1 does not hold", index=1)
    if not _lambda_max(m[n1:, n1:]) < m2:
        raise PreconditionError("M^{(22)} < m2 does not hold", index=2)
    scale = _spectral_norm(m[:n1, n1:])**2 / abs(m2 - m1)
    bound = max(m1, m2) + scale
    actual = _lambda_max(m)
    return {
        'holds': bool(actual <= bound + VERDICT_TOL),
        'lambda_max': actual,
        'bound': bound,
        'slack': bound - actual,
        'scale': scale,
    }


def _random_hermitian(rng, size):
    a = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return (a + a.conj().T) / 2


def _banded_blocks(rng, rows, cols, row_offset, col_offset, params, diagonal_blocks=False):
    """
    Random complex matrix supported on block pairs with |j - k| <= p_0.
    """
    b = params.block_size
    rblk = np.arange(rows) // b + 1 + row_offset
    cblk = np.arange(cols) // b + 1 + col_offset
    dist = np.abs(rblk[:, None] - cblk[None, :])
    mask = dist <= params.p_0
    if not diagonal_blocks:
        mask &= dist >= 1
    a = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return np.where(mask, a, 0)


def _rescaled(a, norm):
    current = _spectral_norm(a)
    if current == 0:
        return a
    return a * (norm / current)


def scenario_generator(seed, params, dims=None, violate=None):
    """
    Random scenario satisfying all four hypotheses, or breaking exactly one.

    D has diagonal entries uniform in (-3 c_1, -1.5 c_1); the banded
    perturbation of part 1 has norm 0.9 q c_1 / 2; M^{(12)} has squared norm
    0.9 q' (1-q) (c_1/2)^2; M^{(22)} has spectrum in (-3 c_1, -1.1 c_1);
    M^{(00)} is banded with diagonal in (-c_1, c_1) and M^{(10)} has norm c_1/2.

    Parameters
    ----------
    seed : int
        Generator seed
    params : GateParams
        Partition and constants
    dims : int, optional
        Total dimension; must equal n_2 * block_size if given
    violate : int, optional
        Hypothesis (1-4) to break

    Returns
    -------
    scenario : GateScenario
    """
    if dims is not None and dims != params.dim:
        raise ConfigurationError(f"dims={dims} inconsistent with partition of size {params.dim}",
                                 field='dims')
    if violate not in (None, 1, 2, 3, 4):
        raise ConfigurationError(f"violate must be 1-4, got {violate}", field='violate')
    rng = np.random.default_rng(seed)
    p = params
    b = p.block_size
    n00, n11, n22 = p.n_0 * b, (p.n_1 - p.n_0) * b, (p.n_2 - p.n_1) * b
    s0, s1, s2 = _part_bounds(p)
    m = np.zeros((p.dim, p.dim), dtype=complex)

    if n00 > 0:
        band = _banded_blocks(rng, n00, n00, 0, 0, p)
        band = _rescaled(np.triu(band, 1) + np.triu(band, 1).conj().T, p.c_1 / 2)
        m[s0, s0] = band + np.diag(rng.uniform(-p.c_1, p.c_1, n00))
        coupling = _banded_blocks(rng, n11, n00, p.n_0, 0, p, diagonal_blocks=True)
        m[s1, s0] = _rescaled(coupling, p.c_1 / 2)
        m[s0, s1] = m[s1, s0].conj().T

    d = np.diag(rng.uniform(-3 * p.c_1, -1.5 * p.c_1, n11))
    pert = _banded_blocks(rng, n11, n11, p.n_0, p.n_0, p)
    pert = np.triu(pert, 1)
    pert = _rescaled(pert + pert.conj().T, PERTURBATION_FILL * p.q * p.c_1 / 2)
    if violate == 3:
        pert = 10 * pert
    m[s1, s1] = d + pert

    coupling_norm = np.sqrt(COUPLING_FILL * p.q_prime * (1 - p.q)) * p.c_1 / 2
    if violate == 4:
        coupling_norm = np.sqrt(2 * p.q_prime * (1 - p.q)) * p.c_1 / 2
    m12 = _banded_blocks(rng, n11, n22, p.n_0, p.n_1, p, diagonal_blocks=True)
    m[s1, s2] = _rescaled(m12, coupling_norm)
    m[s2, s1] = m[s1, s2].conj().T

    q_mat, _ = scipy.linalg.qr(rng.standard_normal((n22, n22))
                               + 1j * rng.standard_normal((n22, n22)))
    spectrum = rng.uniform(-3 * p.c_1, -1.1 * p.c_1, n22)
    m22 = (q_mat * spectrum) @ q_mat.conj().T
    m[s2, s2] = (m22 + m22.conj().T) / 2

    if violate == 1:
        p = dataclasses.replace(p, c_log=2 * (p.n_1 - p.n_0) / np.log(p.n_2)**2)
    elif violate == 2:
        # one entry just outside the band, small enough to leave (iii) and (iv) intact
        eps = 1e-6 * p.c_1
        j = p.n_0 + 1
        k = j + p.p_0 + 1
        if k > p.n_1:
            j, k = p.n_1, p.n_1 + p.p_0 + 1
        if k > p.n_2:
            raise ConfigurationError("Partition too small to violate the band condition",
                                     field='violate')
        r, c = (j - 1) * b, (k - 1) * b
        m[r, c] += eps
        m[c, r] += eps
    return GateScenario(m=m, params=p, seed=seed, violate=violate)


def norm_scenario(seed, max_dim=40):
    """
    Random Hermitian 2x2-block matrix with bounds m1, m2 above each diagonal
    block.

    Returns
    -------
    m, m1, m2, n1
    """
    rng = np.random.default_rng(seed)
    n1 = int(rng.integers(1, max_dim + 1))
    n2 = int(rng.integers(1, max_dim + 1))
    m = np.zeros((n1 + n2, n1 + n2), dtype=complex)
    m[:n1, :n1] = _random_hermitian(rng, n1)
    m[n1:, n1:] = _random_hermitian(rng, n2) + rng.uniform(-2, 2)
    coupling = rng.standard_normal((n1, n2)) + 1j * rng.standard_normal((n1, n2))
    m[:n1, n1:] = _rescaled(coupling, rng.uniform(0.01, 1.0))
    m[n1:, :n1] = m[:n1, n1:].conj().T
    m1 = _lambda_max(m[:n1, :n1]) + rng.uniform(1e-3, 0.5)
    m2 = _lambda_max(m[n1:, n1:]) + rng.uniform(1e-3, 0.5)
    if m1 == m2:
        m2 += 1e-3
    return m, m1, m2, n1


def batch_params(index, qs=(0.1, 0.3, 0.6), p_0s=(1, 2, 3)):
    """
    Parameters cycling over the q and p_0 grids by scenario index.
    """
    return GateParams.default(p_0=p_0s[(index // len(qs)) % len(p_0s)],
                              q=qs[index % len(qs)])


def run_gate_batch(seeds, threads=1, progress=False):
    """
    GateReport for every seed, parameters from ``batch_params``.

    Reports are returned in seed order whatever the number of threads.
    """
    seeds = list(seeds)

    def run_one(idx):
        scenario = scenario_generator(seeds[idx], batch_params(idx))
        return ct_bound(scenario)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        return list(tqdm.tqdm(executor.map(run_one, range(len(seeds))),
                              total=len(seeds),
                              disable=not progress))


def run_norm_batch(seeds, threads=1, progress=False):
    """
    norm_bound_2x2 verdicts for random 2x2-block scenarios, one per seed.
    """
    def run_one(seed):
        m, m1, m2, n1 = norm_scenario(seed)
        verdict = norm_bound_2x2(m, m1, m2, n1)
        verdict.update({'seed': seed, 'm1': m1, 'm2': m2, 'n1': n1, 'dim': m.shape[0]})
        verdict['tight'] = bool(verdict['slack'] <= TIGHTNESS_FACTOR * verdict['scale'])
        return verdict

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        return list(tqdm.tqdm(executor.map(run_one, list(seeds)),
                              total=len(seeds),
                              disable=not progress))
