#!/usr/bin/env python3
"""Batch command-line front end: check, curve, price and decompose a configured model."""

import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Optional

import click

from assets import price_fundamental, price_frame, transversality_check
from bonds import bond_surface, curve_frame, fh_extract
from check import failure_report, print_summary, run_check_suite
from errors import ConfigParseError, TermStructureError
from filtration import is_martingale
from kernel import doob_decomposition
from model_config import Model, build_model, load_config
from pdf_generator import generate_check_report
from utils import check_reports_to_dict, frame_to_csv, process_to_dict, setup_logging, to_json

EXIT_FAILURE = 1
EXIT_USAGE = 2

config_option = click.option('--config', 'config_path', required=True,
                             type=click.Path(exists=True, dir_okay=False), help='Model configuration (JSON).')
out_option = click.option('--out', type=click.Path(dir_okay=False), default=None,
                          help='Write the output here instead of stdout.')
tolerance_option = click.option('--tolerance', type=float, default=None,
                                help='Identity tolerance for the checks; overrides the configuration.')


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        click.echo(text, nl=False)


def _load(config_path: str, tolerance: Optional[float]):
    try:
        config = load_config(config_path)
    except ConfigParseError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_USAGE)
    if tolerance is not None:
        config = replace(config, tolerance=tolerance)
    return config


def _build(config) -> Model:
    """Build or exit: 2 for document problems, 1 when the model itself is rejected."""
    try:
        return build_model(config)
    except ConfigParseError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_USAGE)
    except TermStructureError as e:
        logging.error(f"Model rejected: {e}")
        click.echo(f"Model rejected: {e}", err=True)
        sys.exit(EXIT_FAILURE)


@click.group()
@click.option('--verbose', is_flag=True, help='Log progress at INFO level on stderr.')
def cli(verbose):
    """Discrete-time pricing-kernel term-structure engine."""
    setup_logging(verbose)


@cli.command()
@config_option
@tolerance_option
@out_option
@click.option('--pdf', type=click.Path(dir_okay=False), default=None, help='Also render the report as PDF.')
def check(config_path, tolerance, out, pdf):
    """Run the full property-check suite; exit 0 iff every check passes."""
    config = _load(config_path, tolerance)
    try:
        reports = run_check_suite(build_model(config), config.tolerance)
    except ConfigParseError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_USAGE)
    except TermStructureError as e:
        logging.error(f"Model rejected: {e}")
        reports = [failure_report(e)]

    _emit(to_json(check_reports_to_dict(reports)), out)
    print_summary(reports)
    if pdf:
        generate_check_report(reports, pdf, subtitle=str(config_path))
    sys.exit(0 if all(r.passed for r in reports) else EXIT_FAILURE)


@cli.command()
@config_option
@click.option('--from', 'start', type=click.IntRange(min=0), default=None,
              help='Valuation depth i; rows cover every maturity j > i.')
@out_option
def curve(config_path, start, out):
    """Discount-bond prices P_ij and per-period rates R_ij as CSV."""
    config = _load(config_path, None)
    model = _build(config)
    start = int(config.outputs.get("from", 0)) if start is None else start
    _emit(frame_to_csv(curve_frame(bond_surface(model.kernel), start)), out)


@cli.command()
@config_option
@click.option('--asset', 'asset_id', default=None, help='Asset id from the configuration.')
@tolerance_option
@out_option
def price(config_path, asset_id, tolerance, out):
    """Value process of one asset with its transversality sequence, as CSV."""
    config = _load(config_path, tolerance)
    model = _build(config)
    asset_id = asset_id or config.outputs.get("asset")
    if asset_id not in model.assets:
        raise click.BadParameter(f"Unknown asset '{asset_id}'; configured: {sorted(model.assets)}",
                                 param_hint="--asset")
    asset = model.assets[asset_id]
    kernel = model.kernel
    S = asset.value.restrict(0, kernel.horizon) if asset.value is not None else \
        price_fundamental(kernel, asset.dividends, asset.redemption)
    report = transversality_check(kernel, S, config.tolerance)
    _emit(frame_to_csv(price_frame(kernel, S, report)), out)


def _decomposition_document(model: Model) -> Dict[str, Any]:
    kernel = model.kernel
    surface = bond_surface(kernel)
    doob = doob_decomposition(kernel, surface)
    family = fh_extract(kernel)
    columns = {str(n): process_to_dict(family.column(n)) for n in range(1, kernel.horizon + 2)}
    return {
        "horizon": kernel.horizon,
        "kernel": process_to_dict(kernel.process),
        "money_market": process_to_dict(model.account.balance),
        "short_rate": process_to_dict(model.account.short_rate),
        "rho": process_to_dict(model.rho),
        "rho_martingale": is_martingale(kernel.tree, model.rho, kernel.tolerance, name="rho_martingale").to_dict(),
        "doob": {
            "compensator": process_to_dict(doob.compensator),
            "martingale": process_to_dict(doob.martingale),
            "residual": process_to_dict(doob.residual),
        },
        "fh": {
            "root_row": [float(family.m(0, n)[0]) for n in range(1, kernel.horizon + 2)],
            "columns": columns,
        },
    }


@cli.command()
@config_option
@out_option
def decompose(config_path, out):
    """Money-market account, rho, Doob compensator and Flesaker-Hughston family as JSON."""
    model = _build(_load(config_path, None))
    _emit(to_json(_decomposition_document(model)), out)


if __name__ == '__main__':
    cli()
