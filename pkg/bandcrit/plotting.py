import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

from . import limits


def plot_ratio_curve(df, svg_path, kappa_u, m=limits.DEFAULT_TRUNCATION,
                     mode=limits.DEFAULT_MODE, zeta_max=None):
    """
    Monte Carlo ratio against |zeta|, one series per N, with the Ginibre,
    factorized and critical limit curves.

    Parameters
    ----------
    df : pandas.DataFrame
        Rows from ``simulate`` with columns N, zeta_abs, ratio, stderr_log
    svg_path : str or Path
        Output file
    kappa_u : float
        kappa_* u_* of the critical curve
    m : int
        Truncation of the critical curve
    mode : str
        Mode of the critical curve
    zeta_max : float, optional
        Upper end of the |zeta| axis; defaults to the largest |zeta| in df
    """
    if zeta_max is None:
        zeta_max = max(float(df['zeta_abs'].max()), 1e-3)
    grid = np.linspace(0, zeta_max, 101)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(grid, [limits.ginibre_limit(x) for x in grid], ls='--', c='k', label='Ginibre')
    ax.plot(grid, [limits.factorized_limit(x) for x in grid], ls=':', c='k', label='Factorized')
    ax.plot(grid, [limits.critical_limit(kappa_u, x, m=m, mode=mode) for x in grid],
            ls='-', c='C3', label=rf'Critical ($\kappa u$={kappa_u:.3g})')
    for n, group in df.groupby('N'):
        group = group.sort_values('zeta_abs')
        ax.errorbar(group['zeta_abs'],
                    group['ratio'],
                    yerr=group['ratio'] * group['stderr_log'],
                    fmt='o',
                    ms=4,
                    capsize=2,
                    label=f'N={n}')
    ax.set_xlabel(r'$|\zeta|$')
    ax.set_ylabel('Correlator ratio')
    ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path, format='svg')
    plt.close(fig)
