"""
Acceptance suite: exact identities, oracle comparisons, bound verdicts and
convergence trends, each writing its own CSV so reruns can be compared
byte for byte.
"""
import dataclasses
import filecmp
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import blockgate
from . import correlator
from . import ensemble
from . import limits
from . import records
from . import specfun
from . import transferop
from .analysis import common_options, load_config, simulate_rows
from .config import VERIFY_GROUPS
from .exceptions import (AccuracyError, ConventionError, EstimationError,
                         PreconditionError)

logger = logging.getLogger(__name__)

RATIO_TOL = 1e-12
LIMIT_TOL = 1e-3
TRUNCATION_TOL = 1e-10
SPECTRUM_TOL = 1e-5
SU2_SLOPE_MAX = -3.5
BESSEL_TOL = 1e-8
LEGENDRE_TOL = 1e-12
ORACLE_SIGMAS = 3
TREND_GAP_MAX = 0.15
# profile / envelope ratio that makes a scenario a near-tight witness
WITNESS_RATIO = 0.01


@dataclass
class CriterionResult:
    """
    Outcome of one acceptance criterion.

    ``status`` is 'pass', 'warn' (soft criterion outside its trend but
    within tolerance) or 'fail'.
    """
    number: int
    name: str
    group: str
    status: str
    details: dict = field(default_factory=dict)
    runtime: float = None

    @property
    def passed(self):
        return self.status != 'fail'

    def to_dict(self):
        out = dataclasses.asdict(self)
        out['passed'] = self.passed
        return out


def _status(ok):
    return 'pass' if ok else 'fail'


def check_degenerate_ratio(config, out_dir, threads):
    """
    zeta = 0 gives ratio 1 for any N, W, z and seed.
    """
    cases = [(1, 1.0, 0j), (16, 3.0, 0.3 + 0.2j), (64, 8.0, 0j), (256, 16.0, 0.5j)]
    rows = []
    for n, w, z in cases:
        estimate = correlator.theta_ratio(ensemble.BandProfile(n=n, w=w),
                                          correlator.OffsetSpec(z=z, zeta=0, n=n),
                                          n_samples=20,
                                          seed=config.seed,
                                          threads=threads)
        rows.append({'N': n, 'W': w, 'z_re': z.real, 'z_im': z.imag,
                     'ratio': estimate.ratio,
                     'error': abs(estimate.ratio - 1)})
    worst = max(r['error'] for r in rows)
    records.write_csv(rows, out_dir / 'degenerate_ratio.csv')
    return _status(worst <= RATIO_TOL), {'max_error': worst}


def check_cauchy_schwarz(config, out_dir, threads):
    """
    Every Monte Carlo ratio with |zeta| <= 1 is at most 1.
    """
    profile = ensemble.BandProfile.from_kappa(64, 1.0)
    zeta_grid = [0.25, 0.5, 0.75, 1.0, 0.5j, 0.6 + 0.8j]
    rows = []
    for run in range(config.verify_cs_runs):
        seed = config.seed * 1000 + run
        curve = correlator.ratio_curve(profile, 0j, zeta_grid, config.verify_samples, seed,
                                       threads=threads)
        for zeta, estimate in curve:
            rows.append({'run': run, 'seed': seed, 'zeta_re': zeta.real, 'zeta_im': zeta.imag,
                         'ratio': estimate.ratio})
    worst = max(r['ratio'] for r in rows)
    records.write_csv(rows, out_dir / 'cauchy_schwarz.csv')
    return _status(worst <= 1 + RATIO_TOL), {'max_ratio': worst, 'estimates': len(rows)}


def check_small_n_oracle(config, out_dir, threads):
    """
    Monte Carlo ratios for N = 1, 2 against exact quadrature.
    """
    z, zeta = 0.2 + 0.1j, 0.5
    rows = []
    for n in (1, 2):
        profile = ensemble.BandProfile(n=n, w=1.0)
        offsets = correlator.OffsetSpec(z=z, zeta=zeta, n=n)
        estimate = correlator.theta_ratio(profile, offsets, config.verify_oracle_samples,
                                          config.seed, threads=threads)
        j = ensemble.covariance(profile)
        exact = correlator.ratio_exact(j, offsets.z1, offsets.z2)
        stderr = estimate.ratio * estimate.stderr_log
        rows.append({'N': n, 'ratio': estimate.ratio, 'exact': exact, 'stderr': stderr,
                     'sigmas': abs(estimate.ratio - exact) / stderr})
    # the N = 1 quadrature must reproduce the Wick formula
    z1, z2 = z + zeta, z - zeta
    wick = correlator.theta_n1(z1, z2) / np.sqrt(correlator.theta_n1(z1, z1)
                                                 * correlator.theta_n1(z2, z2))
    wick_error = abs(wick - correlator.ratio_exact(np.ones((1, 1)), z1, z2))
    records.write_csv(rows, out_dir / 'small_n_oracle.csv')
    ok = all(r['sigmas'] <= ORACLE_SIGMAS for r in rows) and wick_error <= 1e-12
    return _status(ok), {'max_sigmas': max(r['sigmas'] for r in rows), 'wick_error': wick_error}


def check_regime_interpolation(config, out_dir, threads):
    """
    critical_limit reduces to the Ginibre limit for large kappa_u and to the
    factorized limit for small kappa_u.
    """
    rows = []
    for zeta_abs in (0.25, 0.5, 1.0):
        large = limits.critical_limit(1e3, zeta_abs, mode='regime-consistent')
        small = limits.critical_limit(1e-3, zeta_abs, mode='regime-consistent')
        rows.append({'zeta_abs': zeta_abs,
                     'ginibre_gap': abs(large - limits.ginibre_limit(zeta_abs)),
                     'factorized_gap': abs(small - limits.factorized_limit(zeta_abs))})
    worst = max(max(r['ginibre_gap'], r['factorized_gap']) for r in rows)
    records.write_csv(rows, out_dir / 'regime_interpolation.csv')
    return _status(worst <= LIMIT_TOL), {'max_gap': worst}


def check_truncation(config, out_dir, threads):
    """
    critical_limit at truncation m against 2m over |zeta| <= 2, kappa_u in [0.1, 10].
    """
    m = config.resolved_truncation()
    rows = []
    for kappa_u in np.geomspace(0.1, 10, 7):
        for zeta_abs in np.linspace(0, 2, 9):
            coarse = limits.critical_limit(kappa_u, zeta_abs, m=m, mode=config.mode)
            fine = limits.critical_limit(kappa_u, zeta_abs, m=2 * m, mode=config.mode)
            rows.append({'kappa_u': kappa_u, 'zeta_abs': zeta_abs,
                         'coarse': coarse, 'fine': fine, 'change': abs(coarse - fine)})
    worst = max(r['change'] for r in rows)
    records.write_csv(rows, out_dir / 'truncation.csv')
    return _status(worst <= TRUNCATION_TOL), {'truncation': m, 'max_change': worst}


def check_hermite_spectrum(config, out_dir, threads):
    """
    Leading Nystrom eigenvalues at u_* = 1, W = 50 follow lambda_*^m.
    """
    try:
        report = transferop.a_star_spectrum(1.0, 50.0, quad_order=config.quad_order, k_max=7)
    except AccuracyError as e:
        return 'fail', {'error': str(e)}
    rows = [{'m': m, 'computed': c, 'predicted': p}
            for m, (c, p) in enumerate(zip(report.computed, report.predicted))]
    records.write_csv(rows, out_dir / 'hermite_spectrum.csv')
    fit = transferop.ground_state_fit(report)
    ok = report.max_rel_err <= SPECTRUM_TOL and report.max_ratio_err <= SPECTRUM_TOL
    return _status(ok), {'max_rel_err': report.max_rel_err,
                         'max_ratio_err': report.max_ratio_err,
                         'lambda_star': report.lambda_star,
                         'top_eigenvalue': report.top_eigenvalue,
                         'ground_state': fit}


def check_su2_law(config, out_dir, threads):
    """
    Deviation of the weighted U(2) average from the sector law decays at
    least like W^{-3.5}; Schur orthogonality, the nu multiplication identity
    and the Legendre cross-checks hold.
    """
    ells, ws = [1, 2, 3], [20.0, 40.0, 80.0]
    try:
        rows = transferop.su2_sweep(ells, ws, tr_s=config.tr_s,
                                    orders=tuple(config.su2_orders),
                                    progress=config.progress)
        schur = transferop.schur_orthogonality_check()
        nu = transferop.nu_multiplication_check()
    except (AccuracyError, ConventionError) as e:
        return 'fail', {'error': str(e)}
    for row in rows:
        spec = transferop.SU2AverageSpec(ell=row['ell'], w=row['W'], tr_s=config.tr_s)
        row['bessel_gap'] = abs(row['average'] - transferop.su2_average_t00_bessel(spec))
    slopes = {}
    for ell in ells:
        group = [r for r in rows if r['ell'] == ell]
        slopes[str(ell)] = transferop.loglog_slope(ws, [r['deviation'] for r in group])
    records.write_csv(rows, out_dir / 'su2_law.csv')
    legendre = specfun.legendre_cross_check()
    ok = (max(slopes.values()) <= SU2_SLOPE_MAX
          and max(r['bessel_gap'] for r in rows) <= BESSEL_TOL
          and legendre['hypergeometric_max_deviation'] <= LEGENDRE_TOL
          and legendre['small_angle_max_excess'] <= LEGENDRE_TOL)
    return _status(ok), {'slopes': slopes,
                         'schur_max_deviation': schur['max_deviation'],
                         'nu_max_deviation': nu['max_deviation'],
                         'legendre': legendre}


def check_block_bounds(config, out_dir, threads):
    """
    Bound verdicts over seeded scenarios, near-tight witnesses, and detection
    of each broken hypothesis.
    """
    seeds = [config.seed * 1_000_003 + i for i in range(config.n_scenarios)]
    try:
        reports = blockgate.run_gate_batch(seeds, threads=threads, progress=config.progress)
    except PreconditionError as e:
        return 'fail', {'error': f"generated scenario rejected: {e}"}
    norm = blockgate.run_norm_batch(seeds, threads=threads, progress=config.progress)

    envelope_ratio = [max(np.array(r.projection_decay_profile) / np.array(r.projection_envelope))
                      for r in reports]
    rows = [{'seed': r.seed,
             'ct1_holds': r.ct1_holds,
             'ct1_slack': r.ct1_slack,
             'resolvent_ratio': r.resolvent_decay_worst_ratio,
             'envelope_ratio': ratio,
             'envelope_holds': r.projection_envelope_holds,
             'projection_rate': r.projection_rate,
             'rate_holds': r.projection_rate_holds,
             'norm_holds': v['holds'],
             'norm_slack': v['slack']}
            for r, ratio, v in zip(reports, envelope_ratio, norm)]
    records.write_csv(rows, out_dir / 'block_bounds.csv')

    detected = {}
    for violate in (1, 2, 3, 4):
        flags = []
        for idx, seed in enumerate(seeds[:10]):
            scenario = blockgate.scenario_generator(seed, blockgate.batch_params(idx),
                                                    violate=violate)
            flags.append(not blockgate.check_hypotheses(scenario)[violate - 1])
        detected[str(violate)] = all(flags)

    verdicts = {
        'ct1': all(r.ct1_holds for r in reports),
        'ct2_rate': all(r.resolvent_holds for r in reports),
        'ct0_envelope': all(r.projection_envelope_holds for r in reports),
        'ct0_rate': all(r.projection_rate_holds for r in reports),
        'norm': all(v['holds'] for v in norm),
    }
    witnesses = {
        'ct1': sum(r.tight for r in reports),
        'ct2_rate': sum(r.resolvent_decay_worst_ratio >= WITNESS_RATIO for r in reports),
        'ct0_envelope': sum(ratio >= WITNESS_RATIO for ratio in envelope_ratio),
        'norm': sum(v['tight'] for v in norm),
    }
    ok = all(verdicts.values()) and all(witnesses.values()) and all(detected.values())
    return _status(ok), {'verdicts': verdicts, 'witnesses': witnesses,
                         'violations_detected': detected}


def check_trend(config, out_dir, threads):
    """
    |ratio_N - critical| non-increasing over N at kappa = 1, z = 0,
    |zeta| = 0.5, and small at the largest N.

    A monotonicity break smaller than one standard error only warns.
    """
    trend_config = dataclasses.replace(config, kappa=1.0, w=None, z=0j, zeta_grid=[0.5 + 0j],
                                       n_samples=config.trend_samples, kappa_u=None,
                                       n=list(config.trend_n))
    rows = []
    for n in trend_config.n:
        row = simulate_rows(trend_config, n, threads=threads)[0]
        row['gap'] = abs(row['ratio'] - row['critical'])
        row['stderr'] = row['ratio'] * row['stderr_log']
        rows.append(row)
    records.write_csv(rows, out_dir / 'trend.csv')
    increases = [(b['gap'] - a['gap'], b['stderr']) for a, b in zip(rows, rows[1:])]
    final_gap = rows[-1]['gap']
    if final_gap > TREND_GAP_MAX or any(up >= err for up, err in increases if up > 0):
        status = 'fail'
    elif any(up > 0 for up, _ in increases):
        logger.warning("Finite-size gap increases by less than one standard error")
        status = 'warn'
    else:
        status = 'pass'
    return status, {'gaps': [r['gap'] for r in rows], 'final_gap': final_gap}


CRITERIA = [
    (1, 'degenerate ratio', 'ratio', check_degenerate_ratio),
    (2, 'Cauchy-Schwarz', 'ratio', check_cauchy_schwarz),
    (3, 'small-N oracle', 'ratio', check_small_n_oracle),
    (4, 'regime interpolation', 'limits', check_regime_interpolation),
    (5, 'truncation convergence', 'limits', check_truncation),
    (6, 'Hermite spectrum', 'spectrum', check_hermite_spectrum),
    (7, 'SU(2) eigenvalue law', 'su2', check_su2_law),
    (8, 'block bounds', 'blockgate', check_block_bounds),
    (9, 'finite-size trend', 'trend', check_trend),
]


def selected_criteria(groups):
    if not groups:
        return list(CRITERIA)
    return [c for c in CRITERIA if c[2] in groups]


def run_criterion(criterion, config, out_dir, threads):
    number, name, group, check = criterion
    start = time.time()
    try:
        status, details = check(config, out_dir, threads)
    except EstimationError as e:
        status, details = 'fail', {'error': str(e)}
    return CriterionResult(number=number,
                           name=name,
                           group=group,
                           status=status,
                           details=details,
                           runtime=time.time() - start)


def check_determinism(config, criteria, first_dir):
    """
    Rerun the criteria with another thread count and compare every CSV byte
    for byte.
    """
    rerun_dir = Path(first_dir) / 'rerun'
    rerun_dir.mkdir(parents=True, exist_ok=True)
    threads = config.determinism_threads
    if threads == config.threads:
        threads += 1
    mismatched = []
    compared = 0
    for criterion in criteria:
        if criterion[2] in config.determinism_skip:
            continue
        run_criterion(criterion, config, rerun_dir, threads)
    for csv_path in sorted(rerun_dir.glob('*.csv')):
        compared += 1
        if not filecmp.cmp(csv_path, Path(first_dir) / csv_path.name, shallow=False):
            mismatched.append(csv_path.name)
    return _status(not mismatched and compared > 0), {'compared': compared,
                                                       'mismatched': mismatched,
                                                       'threads': threads}


def run_verify(config):
    """
    Run the selected criteria and write verify.json.

    Returns
    -------
    results : list of CriterionResult
    """
    out_dir = config.out_dir
    groups = list(config.verify_only)
    # determinism alone reruns everything it compares against
    criteria = selected_criteria([g for g in groups if g != 'determinism'])
    results = []
    for criterion in criteria:
        result = run_criterion(criterion, config, out_dir, config.threads)
        logger.info(f"Criterion {result.number} ({result.name}): {result.status}")
        results.append(result)
    if not groups or 'determinism' in groups:
        start = time.time()
        status, details = check_determinism(config, criteria, out_dir)
        results.append(CriterionResult(number=10,
                                       name='determinism',
                                       group='determinism',
                                       status=status,
                                       details=details,
                                       runtime=time.time() - start))
    records.write_json({'criteria': [r.to_dict() for r in results],
                        'passed': all(r.passed for r in results)},
                       out_dir / 'verify.json',
                       config)
    return results


@click.command(name='verify',
               short_help='Run the acceptance suite')
@common_options
@click.option('--only', multiple=True,
              type=click.Choice(VERIFY_GROUPS),
              help='Run only these criterion groups (repeatable)')
@click.option('-m', '--truncation', type=int,
              help='Truncation compared against its double')
@click.option('-n', '--scenarios', 'n_scenarios', type=int,
              help='Number of block scenarios')
def verify(config_path, seed, threads, out, plot, progress, only, truncation, n_scenarios):
    """
    Run the acceptance criteria; exit nonzero naming the first failure
    """
    config = load_config('verify', config_path, seed=seed, threads=threads, out=out,
                         plot=plot, progress=progress, verify_only=list(only) or None,
                         truncation=truncation, n_scenarios=n_scenarios)
    results = run_verify(config)
    for r in results:
        click.echo(f"[{r.status:>4}] {r.number}. {r.name} ({r.runtime:.1f} s)")
    failed = [r for r in results if not r.passed]
    if failed:
        raise click.ClickException(f"Criterion {failed[0].number} ({failed[0].name}) failed")
