import collections
import functools
import logging

import click
import numpy as np
import pandas as pd

from . import blockgate
from . import correlator
from . import ensemble
from . import limits
from . import records
from . import specfun
from . import transferop
from .config import ExperimentConfig
from .exceptions import (ConfigurationError, DomainError, PreconditionError,
                         AccuracyError, ConventionError, EstimationError)

logger = logging.getLogger(__name__)


def profile_for(config, n):
    """
    BandProfile for dimension n: W from the config, or round(kappa sqrt(n)).
    """
    if config.w is not None:
        return ensemble.BandProfile(n=int(n), w=config.w)
    return ensemble.BandProfile.from_kappa(int(n), config.resolved_kappa(n))


def run_covariance(config):
    """
    Write J for every N of the config, plus a summary of its properties.

    Files: covariance_N{N}_W{W}.csv (matrix, no header), covariance.csv and
    covariance.json with columns N, W, kappa, min_eigenvalue, row_sum_error,
    decay_constant.
    """
    out_dir = config.out_dir
    rows = []
    for n in config.n:
        profile = profile_for(config, n)
        j = ensemble.covariance(profile)
        j.to_csv(out_dir / f"covariance_N{profile.n}_W{profile.w:g}.csv")
        rows.append({
            'N': profile.n,
            'W': profile.w,
            'kappa': profile.kappa,
            'min_eigenvalue': j.min_eigenvalue(),
            'row_sum_error': j.row_sum_error(),
            'decay_constant': j.decay_constant(profile.w),
        })
    records.write_csv(rows, out_dir / 'covariance.csv')
    records.write_json(rows, out_dir / 'covariance.json', config)
    return rows


def simulate_rows(config, n, threads=None):
    """
    Ratio estimates on the zeta grid for one N, with the three limits
    alongside.
    """
    profile = profile_for(config, n)
    params = ensemble.spectral_params(config.z, profile.w, n=profile.n)
    kappa_u = config.kappa_u if config.kappa_u is not None else params.kappa_u
    m = config.resolved_truncation()
    curve = correlator.ratio_curve(profile,
                                   config.z,
                                   config.zeta_grid,
                                   config.n_samples,
                                   config.seed,
                                   threads=config.threads if threads is None else threads,
                                   progress=config.progress)
    rows = []
    for zeta, estimate in curve:
        offsets = correlator.OffsetSpec(z=config.z, zeta=zeta, n=profile.n)
        row = estimate.to_record(profile, offsets, config.seed)
        row.update({
            'n_excluded': estimate.n_excluded,
            'ginibre': limits.ginibre_limit(zeta),
            'factorized': limits.factorized_limit(zeta),
            'critical': limits.critical_limit(kappa_u, zeta, m=m, mode=config.mode),
            'kappa_u': kappa_u,
            'truncation': m,
            'mode': config.mode,
        })
        rows.append(row)
    return rows


def convergence_summary(rows):
    """
    Gap |ratio - critical| per zeta across N, and whether it is
    non-increasing in N.
    """
    by_zeta = collections.defaultdict(list)
    for row in rows:
        by_zeta[(row['zeta_re'], row['zeta_im'])].append(row)
    summary = []
    for (zeta_re, zeta_im), group in by_zeta.items():
        group = sorted(group, key=lambda r: r['N'])
        gaps = [abs(r['ratio'] - r['critical']) for r in group]
        non_increasing = bool(np.all(np.diff(gaps) <= 0))
        for r, gap in zip(group, gaps):
            summary.append({
                'zeta_re': zeta_re,
                'zeta_im': zeta_im,
                'zeta_abs': r['zeta_abs'],
                'N': r['N'],
                'W': r['W'],
                'ratio': r['ratio'],
                'stderr_log': r['stderr_log'],
                'critical': r['critical'],
                'gap': gap,
                'non_increasing': non_increasing,
            })
    return summary


def run_simulate(config, threads=None):
    """
    Monte Carlo correlator ratios for every N and zeta of the config.

    Files: simulate.csv / simulate.json (one row per N and zeta),
    simulate_summary.csv (convergence gaps), simulate.svg with ``plot``.
    """
    out_dir = config.out_dir
    rows = []
    for n in config.n:
        rows.extend(simulate_rows(config, n, threads=threads))
    summary = convergence_summary(rows)
    records.write_csv(rows, out_dir / 'simulate.csv')
    records.write_csv(summary, out_dir / 'simulate_summary.csv')
    records.write_json({'rows': rows, 'summary': summary}, out_dir / 'simulate.json', config)
    if len(config.n) > 1:
        for zeta_abs, group in pd.DataFrame(summary).groupby('zeta_abs'):
            if not group['non_increasing'].iloc[0]:
                logger.warning(f"|ratio - critical| is not non-increasing in N at |zeta|={zeta_abs:g}")
    if config.plot:
        from .plotting import plot_ratio_curve
        plot_ratio_curve(pd.DataFrame(rows),
                         out_dir / 'simulate.svg',
                         kappa_u=rows[-1]['kappa_u'],
                         m=config.resolved_truncation(),
                         mode=config.mode)
    return rows


def run_limits(config):
    """
    Limit curves on the |zeta| grid. Files: limits.csv, limits.json.
    """
    out_dir = config.out_dir
    zeta_abs = [abs(zeta) for zeta in config.zeta_grid]
    df = limits.limit_table(zeta_abs,
                            config.resolved_kappa_u(),
                            m=config.resolved_truncation(),
                            modes=(config.mode,))
    records.write_csv(df, out_dir / 'limits.csv')
    rows = df.to_dict(orient='records')
    records.write_json(rows, out_dir / 'limits.json', config)
    return rows


def run_spectrum(config):
    """
    Nystrom spectrum of the 1D Gaussian kernel against lambda_*^m.

    Files: spectrum.csv (m, computed, normalized, predicted, rel_err) and
    spectrum.json (report, ground-state fit, Hermite convention residuals).
    """
    out_dir = config.out_dir
    report = transferop.a_star_spectrum(config.u_star,
                                        config.spectrum_w,
                                        quad_order=config.quad_order,
                                        k_max=config.k_max)
    rows = []
    for m, (computed, predicted) in enumerate(zip(report.computed, report.predicted)):
        normalized = computed / report.computed[0]
        rows.append({
            'm': m,
            'computed': computed,
            'normalized': normalized,
            'predicted': predicted,
            'rel_err': abs(normalized / predicted - 1),
        })
    payload = {
        'report': report.to_dict(),
        'ground_state': transferop.ground_state_fit(report),
        'hermite_convention': transferop.hermite_convention_fit(report),
    }
    records.write_csv(rows, out_dir / 'spectrum.csv')
    records.write_json(payload, out_dir / 'spectrum.json', config)
    return payload


def run_su2(config):
    """
    Weighted U(2) averages of t^l_00 over the (l, W) grid.

    Files: su2.csv (one row per l and W, with the Bessel cross-check) and
    su2.json (rows, log-log slopes per l, Schur and nu checks).
    """
    out_dir = config.out_dir
    rows = transferop.su2_sweep(config.ells,
                                config.ws,
                                u_star=config.u_star,
                                tr_s=config.tr_s,
                                orders=tuple(config.su2_orders),
                                progress=config.progress)
    for row in rows:
        spec = transferop.SU2AverageSpec(ell=row['ell'],
                                         w=row['W'],
                                         u_star=config.u_star,
                                         tr_s=config.tr_s,
                                         n_gamma=config.su2_orders[2])
        row['bessel'] = transferop.su2_average_t00_bessel(spec)
        row['z0'] = transferop.su2_normalization(spec)
        row['z0_gaussian'] = transferop.su2_normalization_gaussian(spec)
    slopes = {}
    if len(config.ws) > 1:
        for ell in config.ells:
            group = [r for r in rows if r['ell'] == ell]
            slopes[str(ell)] = transferop.loglog_slope([r['W'] for r in group],
                                                       [r['deviation'] for r in group])
    payload = {
        'rows': rows,
        'slopes': slopes,
        'schur': transferop.schur_orthogonality_check(),
        'nu_identity': transferop.nu_identity_check(),
        'nu_multiplication': transferop.nu_multiplication_check(),
        'legendre': specfun.legendre_cross_check(),
    }
    records.write_csv(rows, out_dir / 'su2.csv')
    records.write_json(payload, out_dir / 'su2.json', config)
    return payload


def scenario_seeds(config, count=None):
    count = config.n_scenarios if count is None else count
    return [config.seed * 1_000_003 + i for i in range(count)]


def gate_summary(reports, norm_verdicts):
    return {
        'n_scenarios': len(reports),
        'ct1_all': all(r.ct1_holds for r in reports),
        'ct2_rate_all': all(r.resolvent_holds for r in reports),
        'ct0_envelope_all': all(r.projection_envelope_holds for r in reports),
        'ct0_rate_all': all(r.projection_rate_holds for r in reports),
        'norm_all': all(v['holds'] for v in norm_verdicts),
        'ct1_tight': sum(r.tight for r in reports),
        'norm_tight': sum(v['tight'] for v in norm_verdicts),
        'worst_resolvent_ratio': max(r.resolvent_decay_worst_ratio for r in reports),
        'min_ct1_slack': min(r.ct1_slack for r in reports),
    }


def run_blockgate(config, threads=None):
    """
    Block-bound verdicts over seeded scenarios.

    Files: blockgate.jsonl (one GateReport per scenario), norm.jsonl
    (2x2-block verdicts), blockgate.json (summary). With ``violate`` set,
    only the hypothesis verdicts of the broken scenarios are written.
    """
    out_dir = config.out_dir
    threads = config.threads if threads is None else threads
    seeds = scenario_seeds(config)
    if config.violate is not None:
        rows = []
        for idx, seed in enumerate(seeds):
            scenario = blockgate.scenario_generator(seed,
                                                    blockgate.batch_params(idx),
                                                    violate=config.violate)
            rows.append({'seed': seed,
                         'violate': config.violate,
                         'hypotheses_hold': list(blockgate.check_hypotheses(scenario))})
        records.write_jsonl(rows, out_dir / 'blockgate.jsonl')
        summary = {'violate': config.violate,
                   'n_scenarios': len(rows),
                   'rejected': sum(not r['hypotheses_hold'][config.violate - 1] for r in rows)}
        records.write_json(summary, out_dir / 'blockgate.json', config)
        return summary

    reports = blockgate.run_gate_batch(seeds, threads=threads, progress=config.progress)
    norm_verdicts = blockgate.run_norm_batch(seeds, threads=threads, progress=config.progress)
    records.write_jsonl([r.to_dict() for r in reports], out_dir / 'blockgate.jsonl')
    records.write_jsonl(norm_verdicts, out_dir / 'norm.jsonl')
    summary = gate_summary(reports, norm_verdicts)
    records.write_json(summary, out_dir / 'blockgate.json', config)
    return summary


def load_config(command, config_path, **overrides):
    """
    ExperimentConfig for a subcommand; configuration errors become usage
    errors naming the offending field.
    """
    try:
        return ExperimentConfig.load(config_path, command=command, **overrides)
    except ConfigurationError as e:
        raise click.UsageError(f"Invalid value for '{e.field}': {e}")


def run_or_fail(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigurationError as e:
        raise click.UsageError(f"Invalid value for '{e.field}': {e}")
    except (DomainError, PreconditionError, AccuracyError, ConventionError,
            EstimationError) as e:
        raise click.ClickException(str(e))


def common_options(fn):
    """
    --config, --seed, --threads, --out, --plot and --progress.
    """
    @click.option('-c', '--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                  help='JSON configuration file; flags override its values')
    @click.option('-s', '--seed', type=int,
                  help='Seed of the random substreams')
    @click.option('-j', '--threads', type=int,
                  help='Worker threads (speed only, never results)')
    @click.option('-o', '--out', type=click.Path(file_okay=False),
                  help='Output directory')
    @click.option('--plot', is_flag=True,
                  help='Also write an SVG plot where one is available')
    @click.option('--progress', is_flag=True,
                  help='Show progress bars')
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        # unset flags must not override the config file
        kwargs['plot'] = kwargs['plot'] or None
        kwargs['progress'] = kwargs['progress'] or None
        return fn(*args, **kwargs)
    return wrapper


def _float_list(values):
    return [float(v) for v in values] if values else None


@click.command(name='covariance',
               short_help='Write the band covariance matrix J')
@common_options
@click.option('-N', '--size', 'n', multiple=True, type=int,
              help='Matrix dimension (repeatable)')
@click.option('-W', '--bandwidth', 'w', type=float,
              help='Bandwidth parameter W')
@click.option('-k', '--kappa', type=float,
              help='W / sqrt(N); W = round(kappa sqrt(N))')
def covariance(config_path, seed, threads, out, plot, progress, n, w, kappa):
    """
    Write J = (-W^2 Delta + 1)^{-1} for each N, with its row-sum error,
    minimum eigenvalue and decay constant
    """
    config = load_config('covariance', config_path, seed=seed, threads=threads, out=out,
                         plot=plot, progress=progress, n=list(n) or None, w=w, kappa=kappa)
    rows = run_or_fail(run_covariance, config)
    for row in rows:
        click.echo(f"N={row['N']} W={row['W']:g}: min eigenvalue {row['min_eigenvalue']:.3e}, "
                   f"row-sum error {row['row_sum_error']:.3e}")


@click.command(name='simulate',
               short_help='Monte Carlo correlator ratios against the limit curves')
@common_options
@click.option('-N', '--size', 'n', multiple=True, type=int,
              help='Matrix dimension (repeatable, for an N sweep)')
@click.option('-W', '--bandwidth', 'w', type=float,
              help='Bandwidth parameter W')
@click.option('-k', '--kappa', type=float,
              help='W / sqrt(N); W = round(kappa sqrt(N))')
@click.option('-z', '--center', 'z', type=str,
              help="Spectral center, e.g. '0.3' or '0.2+0.1j'")
@click.option('-Z', '--zeta', multiple=True, type=str,
              help='Offset zeta (repeatable)')
@click.option('-n', '--samples', 'n_samples', type=int,
              help='Number of Monte Carlo samples')
@click.option('-m', '--truncation', type=int,
              help='Legendre truncation of the critical limit')
@click.option('--mode', type=click.Choice(limits.MODES),
              help='Form of the critical-regime operator')
def simulate(config_path, seed, threads, out, plot, progress, n, w, kappa, z, zeta,
             n_samples, truncation, mode):
    """
    Estimate Theta(z1,z2) / sqrt(Theta(z1,z1) Theta(z2,z2)) by Monte Carlo
    and compare with the Ginibre, factorized and critical limits
    """
    config = load_config('simulate', config_path, seed=seed, threads=threads, out=out,
                         plot=plot, progress=progress, n=list(n) or None, w=w, kappa=kappa,
                         z=z, zeta_grid=list(zeta) or None, n_samples=n_samples,
                         truncation=truncation, mode=mode)
    rows = run_or_fail(run_simulate, config)
    for row in rows:
        click.echo(f"N={row['N']} |zeta|={row['zeta_abs']:.4g}: ratio {row['ratio']:.5f} "
                   f"(+-{row['stderr_log']:.1e} log), critical {row['critical']:.5f}")


@click.command(name='limits',
               short_help='Ginibre, factorized and critical limit curves')
@common_options
@click.option('-Z', '--zeta', multiple=True, type=str,
              help='Offset zeta (repeatable)')
@click.option('-u', '--kappa-u', type=float,
              help='Product kappa_* u_*')
@click.option('-m', '--truncation', type=int,
              help='Legendre truncation')
@click.option('--mode', type=click.Choice(limits.MODES),
              help='Form of the critical-regime operator')
def limits_(config_path, seed, threads, out, plot, progress, zeta, kappa_u, truncation, mode):
    """
    Tabulate the three limit curves on a zeta grid
    """
    config = load_config('limits', config_path, seed=seed, threads=threads, out=out,
                         plot=plot, progress=progress, zeta_grid=list(zeta) or None,
                         kappa_u=kappa_u, truncation=truncation, mode=mode)
    rows = run_or_fail(run_limits, config)
    for row in rows:
        click.echo(f"|zeta|={row['zeta_abs']:.4g}: ginibre {row['ginibre']:.6f}, "
                   f"factorized {row['factorized']:.6f}, critical {row['critical']:.6f}")


@click.command(name='spectrum',
               short_help='Nystrom spectrum of the Gaussian transfer kernel')
@common_options
@click.option('-u', '--u-star', type=float,
              help='u_* = (1 - |z|^2)^{1/2}')
@click.option('-W', '--bandwidth', 'spectrum_w', type=float,
              help='Bandwidth parameter W')
@click.option('-q', '--quad-order', type=int,
              help='Number of Gauss-Hermite nodes')
@click.option('-K', '--k-max', type=int,
              help='Highest eigenvalue index compared')
def spectrum(config_path, seed, threads, out, plot, progress, u_star, spectrum_w,
             quad_order, k_max):
    """
    Compare the leading Nystrom eigenvalues of the 1D Gaussian kernel with
    the geometric law lambda_*^m
    """
    config = load_config('spectrum', config_path, seed=seed, threads=threads, out=out,
                         plot=plot, progress=progress, u_star=u_star, spectrum_w=spectrum_w,
                         quad_order=quad_order, k_max=k_max)
    payload = run_or_fail(run_spectrum, config)
    report = payload['report']
    click.echo(f"lambda_* = {report['lambda_star']:.10f}, max relative error "
               f"{report['max_rel_err']:.3e}, top eigenvalue {report['top_eigenvalue']:.10f}")


@click.command(name='su2',
               short_help='Weighted U(2) averages of the Legendre coefficients')
@common_options
@click.option('-l', '--ell', 'ells', multiple=True, type=int,
              help='Sector index (repeatable)')
@click.option('-W', '--bandwidth', 'ws', multiple=True, type=float,
              help='Bandwidth parameter W (repeatable)')
@click.option('-u', '--u-star', type=float,
              help='u_* = (1 - |z|^2)^{1/2}')
@click.option('-t', '--tr-s', type=float,
              help='Trace of the coupling matrix S')
def su2(config_path, seed, threads, out, plot, progress, ells, ws, u_star, tr_s):
    """
    Average t^l_00 over U(2) under the transfer-operator weight and compare
    with the sector eigenvalue law
    """
    config = load_config('su2', config_path, seed=seed, threads=threads, out=out,
                         plot=plot, progress=progress, ells=list(ells) or None,
                         ws=_float_list(ws), u_star=u_star, tr_s=tr_s)
    payload = run_or_fail(run_su2, config)
    for ell, slope in payload['slopes'].items():
        click.echo(f"l={ell}: log-log slope of the deviation {slope:.3f}")


@click.command(name='blockgate',
               short_help='Check the block-matrix spectral bounds on random scenarios')
@common_options
@click.option('-n', '--scenarios', 'n_scenarios', type=int,
              help='Number of seeded scenarios')
@click.option('--violate', type=click.IntRange(1, 4),
              help='Break hypothesis 1-4 and report its detection')
def blockgate_(config_path, seed, threads, out, plot, progress, n_scenarios, violate):
    """
    Evaluate the three-part eigenvalue bound, its decay estimates and the
    2x2-block norm bound over seeded scenarios
    """
    config = load_config('blockgate', config_path, seed=seed, threads=threads, out=out,
                         plot=plot, progress=progress, n_scenarios=n_scenarios,
                         violate=violate)
    summary = run_or_fail(run_blockgate, config)
    click.echo(', '.join(f"{k}={v}" for k, v in summary.items()))
