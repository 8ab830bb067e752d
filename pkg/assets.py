"""
Pricing of dividend-paying and limited-liability assets.

Covers the fundamental pricing equation, its ratio-of-potentials form, the
split of a given value process into a fundamental part and a bubble
martingale, the transversality statistic, and the symmetric FX pricing form.
Cash flows after the horizon H do not exist on the tree; any terminal
redemption is paid at H together with D_H.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from config import CSV_COLUMNS, PRICE_FLAGS
from errors import AxiomAViolation, DividendOutsideHorizon, NegativeCashFlow, NotPrevisible, ProcessShapeMismatch
from filtration import (
    AdaptedProcess,
    CheckReport,
    compare_processes,
    conditional_expectation_process,
    expectation,
    is_martingale,
    is_previsible,
)
from kernel import PricingKernel


@dataclass(frozen=True, eq=False)
class DividendAsset:
    """
    An asset given by its dividend process, an optional redemption paid at the
    horizon and, optionally, a value process to decompose.
    """
    name: str
    dividends: Optional[AdaptedProcess] = None
    redemption: float = 0.0
    value: Optional[AdaptedProcess] = None

    def __post_init__(self):
        if self.dividends is not None and self.dividends.min() < 0:
            raise NegativeCashFlow(f"Asset '{self.name}' has a negative dividend")
        if self.redemption < 0:
            raise NegativeCashFlow(f"Asset '{self.name}' has a negative redemption")
        if self.value is not None and self.value.min() < 0:
            raise NegativeCashFlow(f"Asset '{self.name}' has a negative value")


@dataclass(frozen=True, eq=False)
class FXLeg:
    """Foreign asset paying the previsible `dividends` with `redemption` units at the horizon."""
    name: str
    dividends: AdaptedProcess
    redemption: float = 1.0


@dataclass(frozen=True, eq=False)
class ValueDecomposition:
    """pi_i S_i = m_i + E_i[sum_{n>i} pi_n D_n], with m the bubble martingale."""
    fundamental: AdaptedProcess
    bubble: AdaptedProcess
    terminal_value: float
    transversality: List[float]
    reports: Tuple[CheckReport, ...] = field(default=(), repr=False)


def _dividend_fields(kernel: PricingKernel, D: Optional[AdaptedProcess], terminal: float) -> Dict[int, np.ndarray]:
    """Dividend fields on [1, H]; missing depths pay nothing, the redemption joins D_H."""
    tree, H = kernel.tree, kernel.horizon
    if D is not None:
        if D.tree is not tree:
            raise ProcessShapeMismatch("Dividend process lives on a different tree")
        if D.hi > H:
            raise DividendOutsideHorizon(f"Dividends run to depth {D.hi}, beyond the kernel horizon {H}")
    fields = {}
    for n in range(1, H + 1):
        fields[n] = np.array(D.at(n)) if D is not None and D.covers(n) else np.zeros(tree.size(n))
    fields[H] = fields[H] + float(terminal or 0.0)
    return fields


def discounted_dividends(kernel: PricingKernel, D: Optional[AdaptedProcess],
                         terminal: float = 0.0) -> AdaptedProcess:
    """V_i = E_i[sum_{n=i+1}^{H} pi_n D_n] on [0, H], by backward induction; V_H = 0."""
    tree, pi, H = kernel.tree, kernel.process, kernel.horizon
    flows = _dividend_fields(kernel, D, terminal)
    values = [np.zeros(tree.size(H))]
    for i in range(H - 1, -1, -1):
        values.append(tree.one_step(i, pi.at(i + 1) * flows[i + 1] + values[-1]))
    return AdaptedProcess(tree, 0, H, tuple(reversed(values)), "V")


def price_fundamental(kernel: PricingKernel, D: Optional[AdaptedProcess],
                      terminal: float = 0.0) -> AdaptedProcess:
    """S_i = (1 / pi_i) E_i[sum_{n=i+1}^{H} pi_n D_n]; S_H = 0 (ex-dividend at the last date)."""
    return (discounted_dividends(kernel, D, terminal) / kernel.process).renamed("S")


def cumulative_dividends(kernel: PricingKernel, D: Optional[AdaptedProcess],
                         terminal: float = 0.0) -> AdaptedProcess:
    """F_i = sum_{n<=i} pi_n D_n, including D_0 when the dividend process covers depth 0."""
    tree, pi = kernel.tree, kernel.process
    flows = _dividend_fields(kernel, D, terminal)
    start = D.at(0) if D is not None and D.covers(0) else np.zeros(1)
    fields = [pi.at(0) * start]
    for n in range(1, kernel.horizon + 1):
        fields.append(tree.broadcast(n, fields[-1]) + pi.at(n) * flows[n])
    return AdaptedProcess(tree, 0, kernel.horizon, tuple(fields), "F")


def potential_ratio_price(kernel: PricingKernel, D: Optional[AdaptedProcess],
                          terminal: float = 0.0) -> AdaptedProcess:
    """S_i = (E_i[F_H] - F_i) / pi_i with F_i = sum_{n<=i} pi_n D_n."""
    F = cumulative_dividends(kernel, D, terminal)
    potential = conditional_expectation_process(kernel.tree, F, kernel.horizon, 0) - F
    return (potential / kernel.process).renamed("S")


def axiom_a_process(kernel: PricingKernel, S: AdaptedProcess, D: Optional[AdaptedProcess],
                    terminal: float = 0.0) -> AdaptedProcess:
    """M_i = pi_i S_i + sum_{n<=i} pi_n D_n on [0, H]."""
    H = kernel.horizon
    if not (S.covers(0) and S.covers(H)):
        raise ProcessShapeMismatch(f"Value process must cover [0, {H}]")
    return (kernel.process * S.restrict(0, H) + cumulative_dividends(kernel, D, terminal)).renamed("M")


def check_axiom_a(kernel: PricingKernel, S: AdaptedProcess, D: Optional[AdaptedProcess],
                  terminal: float = 0.0, tolerance: Optional[float] = None,
                  name: str = "axiom_a") -> CheckReport:
    """Deflated gains pi_i S_i + sum_{n<=i} pi_n D_n form a martingale."""
    tolerance = kernel.tolerance if tolerance is None else tolerance
    return is_martingale(kernel.tree, axiom_a_process(kernel, S, D, terminal), tolerance, name=name)


def transversality_sequence(kernel: PricingKernel, S: AdaptedProcess) -> List[float]:
    """e_j = E[pi_j S_j] for j in [0, H]."""
    product = kernel.process * S.restrict(0, kernel.horizon)
    return [expectation(kernel.tree, product, j) for j in range(kernel.horizon + 1)]


def transversality_check(kernel: PricingKernel, S: AdaptedProcess,
                         tolerance: Optional[float] = None) -> CheckReport:
    """
    Pass iff E[pi_H S_H] <= tolerance.

    The full sequence e_j and whether it is non-increasing are reported in the
    details; the witness is the depth-H node contributing most to e_H.
    """
    tolerance = kernel.tolerance if tolerance is None else tolerance
    if S.min() < 0:
        raise NegativeCashFlow("Transversality needs a non-negative value process")
    tree, H = kernel.tree, kernel.horizon
    sequence = transversality_sequence(kernel, S)
    contributions = tree.node_probabilities(H) * kernel.at(H) * S.at(H)
    witness = (H, int(np.argmax(contributions)))
    non_increasing = all(b <= a for a, b in zip(sequence, sequence[1:]))
    report = CheckReport("transversality", bool(sequence[-1] <= tolerance), float(sequence[-1]), witness,
                         tolerance, {"sequence": sequence, "non_increasing": non_increasing})
    logging.info(f"Transversality: e_H = {sequence[-1]:.3e} ({'pass' if report.passed else 'fail'})")
    return report


def decompose_value(kernel: PricingKernel, asset: DividendAsset,
                    tolerance: Optional[float] = None) -> ValueDecomposition:
    """
    Split pi_i S_i into a bubble martingale m_i and the discounted dividend value.

    Axiom A is checked first; on the finite horizon m_i = E_i[pi_H S_H].

    Raises:
        AxiomAViolation: when (S, D) is not consistent with the kernel.
    """
    tolerance = kernel.tolerance if tolerance is None else tolerance
    if asset.value is None:
        raise ProcessShapeMismatch(f"Asset '{asset.name}' has no value process to decompose")
    tree, H = kernel.tree, kernel.horizon
    S = asset.value.restrict(0, H) if asset.value.covers(0) and asset.value.covers(H) else asset.value
    axiom = check_axiom_a(kernel, S, asset.dividends, asset.redemption, tolerance)
    if not axiom.passed:
        raise AxiomAViolation(f"Asset '{asset.name}' is not arbitrage-consistent with the kernel", report=axiom)

    flows = discounted_dividends(kernel, asset.dividends, asset.redemption)
    deflated = kernel.process * S
    bubble = (deflated - flows).renamed("m")
    terminal_value = expectation(tree, deflated, H)
    reports = [
        axiom,
        is_martingale(tree, bubble, tolerance, name="bubble_martingale"),
        compare_processes("bubble_terminal_value", bubble,
                          conditional_expectation_process(tree, deflated, H, 0), tolerance),
        CheckReport.from_fields("bubble_non_negative", {i: -bubble.at(i) for i in bubble.depths}, tolerance),
    ]
    logging.info(f"Decomposed '{asset.name}': bubble m_0 = {bubble.value(0, 0):.6g}")
    return ValueDecomposition((flows / kernel.process).renamed("S_fundamental"), bubble, terminal_value,
                              transversality_sequence(kernel, S), tuple(reports))


def bubble_characterization(decomposition: ValueDecomposition, transversality: CheckReport,
                            tolerance: Optional[float] = None) -> CheckReport:
    """m_0 vanishes (within tolerance) exactly when transversality holds."""
    tolerance = transversality.tolerance if tolerance is None else tolerance
    vanishes = abs(decomposition.bubble.value(0, 0)) <= tolerance
    agree = vanishes == transversality.passed
    return CheckReport("bubble_characterization", agree, 0.0 if agree else 1.0, None, 0.0,
                       {"bubble_vanishes": vanishes, "transversality": transversality.passed})


def par_note_check(kernel: PricingKernel, rates: AdaptedProcess, name: str = "par_note",
                   tolerance: Optional[float] = None) -> CheckReport:
    """Paying `rates` each period plus a unit redemption at H prices to 1 on [0, H-1]."""
    S = price_fundamental(kernel, rates, terminal=1.0)
    ones = {i: np.ones(kernel.tree.size(i)) for i in range(kernel.horizon)}
    return compare_processes(name, {i: S.at(i) for i in ones}, ones, tolerance)


# ------------------------------------------------------------------------------
# Symmetric FX form
# ------------------------------------------------------------------------------
def _previsible_leg(kernel: PricingKernel, X: AdaptedProcess, label: str) -> AdaptedProcess:
    X = X.restrict(1, X.hi) if X.lo == 0 else X
    if X.hi > kernel.horizon:
        raise DividendOutsideHorizon(f"{label} runs to depth {X.hi}, beyond the kernel horizon {kernel.horizon}")
    if X.min() < 0:
        raise NegativeCashFlow(f"{label} must be non-negative")
    report = is_previsible(kernel.tree, X, name=f"{label}_previsible")
    if not report.passed:
        raise NotPrevisible(f"{label} is not previsible", report=report)
    return X


def _terminal_residual(kernel: PricingKernel) -> AdaptedProcess:
    """E_i[pi_H] on [0, H]."""
    return conditional_expectation_process(kernel.tree, kernel.process, kernel.horizon, 0)


def fx_denominator(kernel: PricingKernel, r: AdaptedProcess) -> AdaptedProcess:
    """E_i[sum_{n=i+1}^{H} pi_n r_n] + E_i[pi_H]; equals pi_i when r is the kernel's short rate."""
    return (discounted_dividends(kernel, r) + _terminal_residual(kernel)).renamed("fx_denominator")


def fx_price(kernel: PricingKernel, D: AdaptedProcess, r: AdaptedProcess,
             redemption: float = 1.0) -> AdaptedProcess:
    """
    S_i = E_i[sum_{n>i} pi_n D_n + redemption pi_H] / (E_i[sum_{n>i} pi_n r_n] + E_i[pi_H]).

    Both legs must be previsible; the default redemption is one unit of the
    foreign currency, so D = c r with redemption c prices to c everywhere,
    including S_H = redemption.
    """
    D = _previsible_leg(kernel, D, "dividend leg")
    r = _previsible_leg(kernel, r, "rate leg")
    numerator = discounted_dividends(kernel, D) + float(redemption) * _terminal_residual(kernel)
    return (numerator / fx_denominator(kernel, r)).renamed("S_fx")


def fx_denominator_check(kernel: PricingKernel, r: AdaptedProcess,
                         tolerance: Optional[float] = None) -> CheckReport:
    """The FX denominator reproduces pi_i node-wise."""
    return compare_processes("fx_denominator_identity", fx_denominator(kernel, r), kernel.process, tolerance)


def price_frame(kernel: PricingKernel, S: AdaptedProcess, transversality: CheckReport) -> pd.DataFrame:
    """Rows (depth, node, value, transversality, flag) over every node of S."""
    tree = kernel.tree
    sequence = transversality.details.get("sequence", [])
    flag = PRICE_FLAGS['fundamental'] if transversality.passed else PRICE_FLAGS['bubble']
    rows = []
    for i in S.depths:
        for k, label in enumerate(tree.labels[i]):
            rows.append({
                'depth': i,
                'node': label,
                'value': float(S.at(i)[k]),
                'transversality': sequence[i] if i < len(sequence) else np.nan,
                'flag': flag,
            })
    return pd.DataFrame(rows, columns=CSV_COLUMNS['price'])


def frn_check(kernel: PricingKernel, rates: AdaptedProcess, tolerance: Optional[float] = None) -> CheckReport:
    """Floating-rate note paying the short rate with unit redemption stays at par."""
    return par_note_check(kernel, rates, "frn_par", tolerance)
