#!/usr/bin/env python3
import logging

import click

from ._version import __version__
from . import analysis
from . import verification


CONTEXT_SETTINGS = dict(help_option_names=['-h', '--help'])
@click.group(context_settings=CONTEXT_SETTINGS)
@click.version_option(__version__, '-V', '--version')
@click.option('-v', '--verbose', count=True,
              help='Log more (-v info, -vv debug)')
@click.pass_context
def cli(ctx, verbose):
    """
    Numerical lab for non-Hermitian random band matrices
    """
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level,
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')


cli.add_command(analysis.covariance)
cli.add_command(analysis.simulate)
cli.add_command(analysis.limits_)
cli.add_command(analysis.spectrum)
cli.add_command(analysis.su2)
cli.add_command(analysis.blockgate_)
cli.add_command(verification.verify)

if __name__ == '__main__':
    cli()
