"""
Full property-check suite for a configured model.

Runs every identity the engine guarantees against one model and returns the
check records in a fixed order: kernel validation, money-market account,
bond surface, Flesaker-Hughston family, Doob decomposition, positive-return
assets, dividend assets and FX legs.
"""

import logging
from dataclasses import replace
from typing import Iterable, List, Optional

import numpy as np
from rich.console import Console
from rich.table import Table

from assets import (
    bubble_characterization,
    check_axiom_a,
    decompose_value,
    frn_check,
    fx_denominator_check,
    fx_price,
    par_note_check,
    potential_ratio_price,
    price_fundamental,
    transversality_check,
)
from bonds import (
    bond_surface,
    fh_extract,
    fh_reconstruction_check,
    previsible_rate_check,
    rational_closed_form_check,
)
from errors import TermStructureError
from filtration import CheckReport, compare_processes, is_martingale, is_positive
from kernel import (
    PositiveReturnAsset,
    accumulated_returns,
    check_money_market_account,
    check_positive_return_asset,
    doob_decomposition,
    increasing_process_roundtrip,
    kernel_representation_check,
    positive_return_from_doob,
    rational_closed_form_decomposition,
)
from model_config import Model
from utils import summary_frame


def _prefixed(prefix: str, reports: Iterable[CheckReport]) -> List[CheckReport]:
    return [replace(r, name=f"{prefix}:{r.name}") for r in reports]


def failure_report(error: TermStructureError, name: str = "model_validation") -> CheckReport:
    """A failed record for an error raised while building or checking a model."""
    if error.report is not None:
        return replace(error.report, details={**error.report.details, "error": type(error).__name__})
    return CheckReport(name, False, 0.0, error.node, 0.0, {"error": type(error).__name__, "message": str(error)})


def _asset_checks(model: Model, tolerance: float) -> List[CheckReport]:
    kernel, reports = model.kernel, []
    for name, asset in model.assets.items():
        prefix = f"asset:{name}"
        try:
            fundamental = price_fundamental(kernel, asset.dividends, asset.redemption)
            ratio = potential_ratio_price(kernel, asset.dividends, asset.redemption)
            reports.append(compare_processes(f"{prefix}:formula_equivalence", fundamental, ratio))
            reports.append(check_axiom_a(kernel, fundamental, asset.dividends, asset.redemption, tolerance,
                                         name=f"{prefix}:axiom_a_closure"))
            reports.extend(_prefixed(f"{prefix}:fundamental", [transversality_check(kernel, fundamental, tolerance)]))
            if asset.value is not None:
                decomposition = decompose_value(kernel, asset, tolerance)
                transversality = transversality_check(kernel, asset.value.restrict(0, kernel.horizon), tolerance)
                reports.extend(_prefixed(prefix, decomposition.reports))
                reports.extend(_prefixed(prefix, [bubble_characterization(decomposition, transversality)]))
        except TermStructureError as e:
            logging.warning(f"Asset '{name}' failed: {e}")
            reports.extend(_prefixed(prefix, [failure_report(e)]))
    return reports


def _fx_checks(model: Model, tolerance: float) -> List[CheckReport]:
    kernel, rates = model.kernel, model.account.short_rate
    reports = [
        fx_denominator_check(kernel, rates),
        compare_processes("fx_symmetry", fx_price(kernel, rates, rates),
                          {i: np.ones(kernel.tree.size(i)) for i in range(kernel.horizon + 1)}),
    ]
    for name, leg in model.fx.items():
        try:
            price = fx_price(kernel, leg.dividends, rates, leg.redemption)
            reports.append(is_positive(kernel.tree, price, name=f"fx:{name}:positive"))
        except TermStructureError as e:
            logging.warning(f"FX leg '{name}' failed: {e}")
            reports.extend(_prefixed(f"fx:{name}", [failure_report(e)]))
    return reports


def run_check_suite(model: Model, tolerance: Optional[float] = None) -> List[CheckReport]:
    """
    Run every check on a built model.

    Parameters:
        model: Output of model_config.build_model.
        tolerance: Identity tolerance; defaults to the kernel's.

    Returns:
        List[CheckReport]: One record per check, in a fixed order.
    """
    kernel = model.kernel
    tolerance = kernel.tolerance if tolerance is None else tolerance
    tree, account = kernel.tree, model.account
    reports = list(kernel.reports)

    reports.append(is_martingale(tree, model.rho, tolerance, name="rho_martingale"))
    reports.extend(check_money_market_account(kernel, account))
    money_market = PositiveReturnAsset(account.balance, account.short_rate, model.rho)
    reports.append(kernel_representation_check(kernel, money_market, "money_market_kernel_representation"))
    reports.append(frn_check(kernel, account.short_rate))

    surface = bond_surface(kernel)
    reports.extend(surface.reports)
    reports.append(previsible_rate_check(surface, account))
    family = fh_extract(kernel)
    reports.extend(family.reports)
    reports.append(fh_reconstruction_check(family, surface))

    doob = doob_decomposition(kernel, surface)
    reports.extend(doob.reports)
    doob_asset = positive_return_from_doob(kernel, surface)
    reports.extend(check_positive_return_asset(kernel, doob_asset, "doob_positive_return"))
    reports.append(compare_processes("doob_accumulated_returns", accumulated_returns(kernel, doob_asset),
                                     doob.compensator))
    reports.append(kernel_representation_check(kernel, doob_asset, "doob_kernel_representation"))
    reports.append(par_note_check(kernel, doob_asset.rate, "doob_par_note"))

    if model.rational is not None:
        rational = model.rational
        reports.append(rational_closed_form_check(surface, rational.alpha, rational.beta, rational.martingale))
        B, rho = rational_closed_form_decomposition(tree, rational.alpha, rational.beta, rational.martingale)
        reports.append(compare_processes("rational_money_market_closed_form", account.balance, B))
        reports.append(compare_processes("rational_rho_closed_form", model.rho, rho))
    if model.increasing is not None:
        G, asset = model.increasing
        reports.extend(check_positive_return_asset(kernel, asset, "increasing_positive_return"))
        reports.append(increasing_process_roundtrip(kernel, asset, G))
        reports.append(kernel_representation_check(kernel, asset, "increasing_kernel_representation"))
        reports.append(par_note_check(kernel, asset.rate, "increasing_par_note"))

    reports.extend(_asset_checks(model, tolerance))
    reports.extend(_fx_checks(model, tolerance))
    failed = sum(1 for r in reports if not r.passed)
    logging.info(f"Check suite finished: {len(reports) - failed} passed, {failed} failed")
    return reports


def print_summary(reports: List[CheckReport], console: Optional[Console] = None) -> None:
    """Rich table of the check records, failures highlighted."""
    console = console or Console(stderr=True)
    table = Table(title="Property checks")
    frame = summary_frame(reports)
    for column in frame.columns:
        table.add_column(column, justify="right" if column in ("max_violation", "tolerance") else "left")
    for row in frame.itertuples(index=False):
        style = "green" if row.status == "PASS" else "bold red"
        table.add_row(*[str(v) for v in row], style=style)
    console.print(table)
    failed = int((frame["status"] == "FAIL").sum()) if len(frame) else 0
    console.print(f"{len(frame) - failed} passed, {failed} failed")
