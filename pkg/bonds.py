"""
Discount-bond surfaces and the Flesaker-Hughston representation.

P_ij = E_i[pi_j] / pi_i for 0 <= i < j <= H, stored densely. The FH family is
built from the Doob increments of the kernel with an extra residual column
E_i[pi_H], which makes the ratio-of-tail-sums formula exact on a finite tree.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from config import CSV_COLUMNS, TOLERANCE_CONFIG
from errors import IndexOutOfRange, InternalInvariantError
from filtration import (
    AdaptedProcess,
    CheckReport,
    compare_processes,
    conditional_expectation_process,
    is_martingale,
    is_positive,
    scaled_gap,
)
from kernel import MoneyMarketAccount, PricingKernel, ScheduleLike, validate_rational_inputs


@dataclass(frozen=True, eq=False)
class BondSurface:
    """Discount-bond prices P_ij, each a depth-i field, for 0 <= i < j <= H."""
    kernel: PricingKernel
    prices: Dict[Tuple[int, int], np.ndarray]
    reports: Tuple[CheckReport, ...] = field(default=(), repr=False)

    @property
    def horizon(self) -> int:
        return self.kernel.horizon

    def price(self, i: int, j: int) -> np.ndarray:
        if (i, j) not in self.prices:
            raise IndexOutOfRange(f"No bond price for (i, j) = ({i}, {j}); need 0 <= i < j <= {self.horizon}")
        return self.prices[(i, j)]

    def maturities(self, i: int) -> range:
        return range(i + 1, self.horizon + 1)


def bond_surface(kernel: PricingKernel) -> BondSurface:
    """Compute every P_ij = E_i[pi_j] / pi_i and assert 0 < P_ij < 1, strictly decreasing in j."""
    tree, pi, H = kernel.tree, kernel.process, kernel.horizon
    prices: Dict[Tuple[int, int], np.ndarray] = {}
    for j in range(1, H + 1):
        conditional = pi.at(j)
        for i in range(j - 1, -1, -1):
            conditional = tree.one_step(i, conditional)
            prices[(i, j)] = conditional / pi.at(i)
    for array in prices.values():
        array.flags.writeable = False

    bounds, monotone = {}, {}
    for i in range(H):
        fields = np.vstack([prices[(i, j)] for j in range(i + 1, H + 1)])
        # distance outside the open interval (0, 1)
        bounds[i] = np.maximum(-fields, fields - 1.0).max(axis=0)
        if fields.shape[0] > 1:
            monotone[i] = np.diff(fields, axis=0).max(axis=0)
    reports = [CheckReport.from_fields("bond_price_bounds", bounds, 0.0, strict=True)]
    if monotone:
        reports.append(CheckReport.from_fields("bond_price_decreasing_in_maturity", monotone, 0.0, strict=True))
    for report in reports:
        if not report.passed:
            raise InternalInvariantError("Bond surface invariant failed", report=report)
    logging.info(f"Computed bond surface with {len(prices)} (i, j) fields")
    return BondSurface(kernel, prices, tuple(reports))


def per_period_rate(surface: BondSurface) -> Dict[Tuple[int, int], np.ndarray]:
    """R_ij defined by P_ij = 1 / (1 + R_ij)."""
    return {key: 1.0 / price - 1.0 for key, price in surface.prices.items()}


def rational_bond_closed_form(alpha: ScheduleLike, beta: ScheduleLike, martingale: AdaptedProcess,
                              i: int, j: int) -> np.ndarray:
    """P_ij = (alpha_j + beta_j N_i) / (alpha_i + beta_i N_i) for the rational model."""
    tree = martingale.tree
    if not 0 <= i < j <= tree.depth:
        raise IndexOutOfRange(f"Need 0 <= i < j <= {tree.depth}, got i={i}, j={j}")
    a, b = validate_rational_inputs(tree, alpha, beta, martingale)
    N = martingale.at(i)
    return (a[j] + b[j] * N) / (a[i] + b[i] * N)


def previsible_rate_check(surface: BondSurface, account: MoneyMarketAccount,
                          tolerance: Optional[float] = None) -> CheckReport:
    """P_{i-1,i} = B_{i-1} / B_i on every depth-i node."""
    tree, B = surface.kernel.tree, account.balance
    expected = {i: tree.broadcast(i, surface.price(i - 1, i)) for i in range(1, surface.horizon + 1)}
    actual = {i: tree.broadcast(i, B.at(i - 1)) / B.at(i) for i in expected}
    return compare_processes("previsible_rate_identity", actual, expected, tolerance)


def curve_frame(surface: BondSurface, i: int) -> pd.DataFrame:
    """One row per (j, node) for j > i: time_i, time_j, node, P, R."""
    tree = surface.kernel.tree
    rates = per_period_rate(surface)
    rows: List[dict] = []
    for j in surface.maturities(i):
        for k, label in enumerate(tree.labels[i]):
            rows.append({
                'time_i': tree.time(i),
                'time_j': tree.time(j),
                'node': label,
                'P': float(surface.price(i, j)[k]),
                'R': float(rates[(i, j)][k]),
            })
    return pd.DataFrame(rows, columns=CSV_COLUMNS['curve'])


# ------------------------------------------------------------------------------
# Flesaker-Hughston family
# ------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class FHFamily:
    """
    Positive martingales m_{i,n}: column n (1 <= n <= H) lives on [0, n-1];
    the residual column H+1 is E_i[pi_H] on [0, H].
    """
    kernel: PricingKernel
    columns: Dict[int, AdaptedProcess]
    residual: AdaptedProcess
    reports: Tuple[CheckReport, ...] = field(default=(), repr=False)

    @property
    def horizon(self) -> int:
        return self.kernel.horizon

    def column(self, n: int) -> AdaptedProcess:
        if n == self.horizon + 1:
            return self.residual
        if n not in self.columns:
            raise IndexOutOfRange(f"No FH column {n}; columns run from 1 to {self.horizon + 1}")
        return self.columns[n]

    def m(self, i: int, n: int) -> np.ndarray:
        column = self.column(n)
        if not column.covers(i):
            raise IndexOutOfRange(f"m_(i, n) is defined for i <= {column.hi} in column {n}, got i={i}")
        return column.at(i)

    def tail(self, i: int, start: int) -> np.ndarray:
        """sum_{n=start}^{H+1} m_{i,n}, summed in increasing n."""
        total = np.zeros(self.kernel.tree.size(i))
        for n in range(start, self.horizon + 2):
            total = total + self.m(i, n)
        return total


def fh_extract(kernel: PricingKernel) -> FHFamily:
    """m_{i,n} = E_i[pi_{n-1} - E_{n-1}[pi_n]], plus the residual column E_i[pi_H]."""
    tree, pi, H = kernel.tree, kernel.process, kernel.horizon
    columns: Dict[int, AdaptedProcess] = {}
    for n in range(1, H + 1):
        increment = pi.at(n - 1) - tree.one_step(n - 1, pi.at(n))
        seed = AdaptedProcess(tree, n - 1, n - 1, (increment,), f"m_{n}")
        columns[n] = conditional_expectation_process(tree, seed, n - 1, 0)
    residual = conditional_expectation_process(tree, pi, H, 0).renamed(f"m_{H + 1}")
    family = FHFamily(kernel, columns, residual)

    reports = []
    for n in range(1, H + 2):
        column = family.column(n)
        reports.append(is_positive(tree, column, name=f"fh_column_{n}_positive"))
        if column.hi > column.lo:
            reports.append(is_martingale(tree, column, kernel.tolerance, name=f"fh_column_{n}_martingale"))
    sums = {i: family.tail(i, i + 1) for i in range(H + 1)}
    reports.append(compare_processes("fh_column_sum", sums, {i: pi.at(i) for i in range(H + 1)}))
    for report in reports:
        if not report.passed:
            raise InternalInvariantError("Flesaker-Hughston family invariant failed", report=report)
    logging.info(f"Extracted Flesaker-Hughston family with {H + 1} columns")
    return FHFamily(kernel, columns, residual, tuple(reports))


def fh_reconstruct(family: FHFamily, i: int, j: int) -> np.ndarray:
    """P_ij = sum_{n>j} m_{i,n} / sum_{n>i} m_{i,n}, both sums running through the residual column."""
    if not 0 <= i < j <= family.horizon:
        raise IndexOutOfRange(f"Need 0 <= i < j <= {family.horizon}, got i={i}, j={j}")
    return family.tail(i, j + 1) / family.tail(i, i + 1)


def fh_reconstruction_check(family: FHFamily, surface: BondSurface,
                            tolerance: Optional[float] = None) -> CheckReport:
    """fh_reconstruct equals the bond surface for every (i, j) and node."""
    tolerance = TOLERANCE_CONFIG['relative'] if tolerance is None else tolerance
    violations: Dict[int, np.ndarray] = {}
    for (i, j), price in surface.prices.items():
        gap = scaled_gap(fh_reconstruct(family, i, j), price)
        violations[i] = np.maximum(violations.get(i, gap), gap)
    return CheckReport.from_fields("fh_reconstruction", violations, tolerance)


def rational_closed_form_check(surface: BondSurface, alpha: ScheduleLike, beta: ScheduleLike,
                               martingale: AdaptedProcess, tolerance: Optional[float] = None) -> CheckReport:
    """bond_surface equals the rational closed form for every (i, j) and node."""
    tolerance = TOLERANCE_CONFIG['relative'] if tolerance is None else tolerance
    violations: Dict[int, np.ndarray] = {}
    for (i, j), price in surface.prices.items():
        gap = scaled_gap(price, rational_bond_closed_form(alpha, beta, martingale, i, j))
        violations[i] = np.maximum(violations.get(i, gap), gap)
    return CheckReport.from_fields("rational_closed_form", violations, tolerance)

