"""
Pricing kernels and their structural decompositions.

A pricing kernel is a strictly positive strict supermartingale pi on depths
[0, H]. From it this module extracts the natural money-market account (the
multiplicative decomposition pi = rho / B), the Doob decomposition, and
positive-return assets; it also builds kernels from rational models and from
strictly increasing processes.

All infinite-horizon statements are taken at the finite horizon H with the
terminal residual E_i[pi_H] carried explicitly.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import TOLERANCE_CONFIG
from errors import (
    HorizonTooShort,
    InternalInvariantError,
    NonPositive,
    NonPositiveKernel,
    NonPositiveMartingale,
    NonZeroInitialValue,
    NotAMartingale,
    NotStrictSupermartingale,
    NotStrictlyIncreasing,
    ProcessShapeMismatch,
    ScheduleNotDecreasing,
    ZeroKernelInsideHorizon,
)
from filtration import (
    AdaptedProcess,
    CheckReport,
    FiltrationTree,
    compare_processes,
    conditional_expectation_process,
    expectation,
    is_martingale,
    is_path_increasing,
    is_positive,
    is_previsible,
    is_strict_supermartingale,
)

# a sequence of floats, a numpy array, or any object with a `values` sequence (models.Schedule)
ScheduleLike = Any


# ------------------------------------------------------------------------------
# Domain types
# ------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class PricingKernel:
    """Validated pricing kernel pi on [0, H]."""
    process: AdaptedProcess
    tolerance: float
    reports: Tuple[CheckReport, ...] = field(default=(), repr=False)

    @property
    def tree(self) -> FiltrationTree:
        return self.process.tree

    @property
    def horizon(self) -> int:
        return self.process.hi

    def at(self, i: int) -> np.ndarray:
        return self.process.at(i)

    def value(self, i: int, k: int) -> float:
        return self.process.value(i, k)


@dataclass(frozen=True, eq=False)
class MoneyMarketAccount:
    """Natural money-market account B on [0, H] with its previsible short rate r on [1, H]."""
    balance: AdaptedProcess
    short_rate: AdaptedProcess


@dataclass(frozen=True, eq=False)
class PositiveReturnAsset:
    """Increasing non-dividend asset B-bar, its rate of return r-bar and the martingale rho-bar = pi B-bar."""
    value: AdaptedProcess
    rate: AdaptedProcess
    martingale: AdaptedProcess


@dataclass(frozen=True, eq=False)
class DoobDecomposition:
    """
    pi_i = M_i - A_i with A previsible and increasing, A_0 = 0.

    On the finite horizon M_i = E_i[A_H] + E_i[pi_H]; `residual` is E_i[pi_H].
    """
    compensator: AdaptedProcess
    martingale: AdaptedProcess
    residual: AdaptedProcess
    reports: Tuple[CheckReport, ...] = ()


def _schedule_values(schedule: ScheduleLike) -> np.ndarray:
    values = getattr(schedule, "values", schedule)
    return np.asarray(values, dtype=np.float64)


# ------------------------------------------------------------------------------
# Construction
# ------------------------------------------------------------------------------
def kernel_from_process(tree: FiltrationTree, values: Union[AdaptedProcess, Sequence[Sequence[float]]],
                        tolerance: Optional[float] = None, margin: Optional[float] = None) -> PricingKernel:
    """
    Validate raw kernel values.

    Parameters:
        tree: The filtration.
        values: AdaptedProcess on [0, H], or per-depth value lists starting at depth 0.
        tolerance: Identity tolerance carried by the kernel for downstream checks.
        margin: Strictness margin for the supermartingale test.

    Returns:
        PricingKernel: The accepted kernel.

    Raises:
        NonPositiveKernel, NotStrictSupermartingale: with the failing CheckReport attached.
    """
    tolerance = TOLERANCE_CONFIG['identity'] if tolerance is None else tolerance
    process = values if isinstance(values, AdaptedProcess) else \
        AdaptedProcess(tree, 0, len(values) - 1, tuple(np.asarray(v, dtype=np.float64) for v in values))
    if process.lo != 0:
        raise ProcessShapeMismatch(f"Kernel must start at depth 0, starts at {process.lo}")
    process = process.renamed("pi")

    positivity = is_positive(tree, process, name="kernel_positive")
    if not positivity.passed:
        raise NonPositiveKernel("Pricing kernel must be strictly positive", report=positivity)
    supermartingale = is_strict_supermartingale(tree, process, margin, name="kernel_strict_supermartingale")
    if not supermartingale.passed:
        raise NotStrictSupermartingale("Pricing kernel is not a strict supermartingale", report=supermartingale)

    kernel = PricingKernel(process, tolerance, (positivity, supermartingale))
    decay = expected_kernel_decay(kernel)
    logging.info(f"Accepted pricing kernel with horizon {process.hi}, pi_0 = {process.value(0, 0):.6g}")
    return PricingKernel(process, tolerance, (positivity, supermartingale, decay))


def expected_kernel_decay(kernel: PricingKernel) -> CheckReport:
    """E[pi_i] strictly decreasing in i: the finite-horizon form of E[pi_i] -> 0."""
    tree, pi = kernel.tree, kernel.process
    means = [expectation(tree, pi, i) for i in range(kernel.horizon + 1)]
    steps = {i: np.array([means[i] - means[i - 1]]) for i in range(1, len(means))}
    return CheckReport.from_fields("kernel_expectation_decay", steps, 0.0, strict=True,
                                   details={"expectations": means})


def _validate_schedule(name: str, values: np.ndarray, length: int) -> None:
    if values.shape != (length,):
        raise ProcessShapeMismatch(f"Schedule {name} needs {length} values, got {values.size}")
    if np.any(values <= 0):
        raise NonPositive(f"Schedule {name} must be strictly positive", node=(int(np.argmin(values)), 0))
    drops = np.diff(values)
    if np.any(drops >= 0):
        raise ScheduleNotDecreasing(f"Schedule {name} must be strictly decreasing",
                                    node=(int(np.argmax(drops)) + 1, 0))


def validate_rational_inputs(tree: FiltrationTree, alpha: ScheduleLike, beta: ScheduleLike,
                             martingale: AdaptedProcess,
                             tolerance: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Check (alpha, beta, N) of a rational model; return the schedules as arrays."""
    tolerance = TOLERANCE_CONFIG['identity'] if tolerance is None else tolerance
    a, b = _schedule_values(alpha), _schedule_values(beta)
    _validate_schedule("alpha", a, tree.depth + 1)
    _validate_schedule("beta", b, tree.depth + 1)
    if (martingale.lo, martingale.hi) != (0, tree.depth):
        raise ProcessShapeMismatch(f"Martingale must cover [0, {tree.depth}]")
    positive = is_positive(tree, martingale, name="martingale_positive")
    if not positive.passed:
        raise NonPositiveMartingale("Rational-model martingale must be strictly positive", report=positive)
    report = is_martingale(tree, martingale, tolerance, name="rational_martingale")
    if not report.passed:
        raise NotAMartingale("Rational-model driver is not a martingale", report=report)
    return a, b


def kernel_rational(tree: FiltrationTree, alpha: ScheduleLike, beta: ScheduleLike,
                    martingale: AdaptedProcess, tolerance: Optional[float] = None) -> PricingKernel:
    """Rational model pi_i = alpha_i + beta_i N_i on the full tree (H = N)."""
    a, b = validate_rational_inputs(tree, alpha, beta, martingale, tolerance)
    fields = tuple(a[i] + b[i] * martingale.at(i) for i in range(tree.depth + 1))
    logging.info(f"Building rational kernel over {tree.depth} periods")
    return kernel_from_process(tree, AdaptedProcess(tree, 0, tree.depth, fields, "pi"), tolerance)


def kernel_from_increasing(tree: FiltrationTree, G: AdaptedProcess,
                           tolerance: Optional[float] = None) -> Tuple[PricingKernel, PositiveReturnAsset]:
    """
    Build a kernel and positive-return asset from a strictly increasing process G.

    pi_i = E_i[G_N] - G_i on [0, N-1] (pi_N = 0 is excluded, so H = N - 1),
    r-bar_i = (G_i - G_{i-1}) / pi_i and B-bar_i = prod_{n<=i} (1 + r-bar_n).
    """
    tolerance = TOLERANCE_CONFIG['identity'] if tolerance is None else tolerance
    N = tree.depth
    if (G.lo, G.hi) != (0, N):
        raise ProcessShapeMismatch(f"G must cover [0, {N}]")
    if abs(G.value(0, 0)) > tolerance:
        raise NonZeroInitialValue(f"G_0 must be 0, got {G.value(0, 0)}")
    if N < 2:
        raise HorizonTooShort(f"G needs a tree of depth >= 2 to leave a horizon of one period, got depth {N}",
                              node=(0, 0))

    inner = is_path_increasing(tree, G.restrict(0, N - 1), name="increasing_process_strict")
    if not inner.passed:
        raise NotStrictlyIncreasing("G must be strictly increasing along every path", report=inner)
    final_steps = G.at(N) - tree.broadcast(N, G.at(N - 1))
    if np.any(final_steps < 0):
        k = int(np.argmin(final_steps))
        raise NotStrictlyIncreasing("G decreases at the final step", node=(N, k))
    largest = np.full(tree.size(N - 1), -np.inf)
    np.maximum.at(largest, tree.parents[N], final_steps)
    if np.any(largest <= 0):
        k = int(np.argmin(largest))
        raise ZeroKernelInsideHorizon("G is flat at the final step on every child, so pi_{N-1} = 0",
                                      node=(N - 1, k))
    if np.any(final_steps == 0):
        k = int(np.argmin(final_steps))
        raise NotStrictlyIncreasing("G must be strictly increasing along every path", node=(N, k))

    H = N - 1
    terminal = conditional_expectation_process(tree, G, N, 0)
    pi_fields = tuple(terminal.at(i) - G.at(i) for i in range(H + 1))
    kernel = kernel_from_process(tree, AdaptedProcess(tree, 0, H, pi_fields, "pi"), tolerance)
    asset = _asset_from_rates(kernel, [(G.at(i) - tree.broadcast(i, G.at(i - 1))) / kernel.at(i)
                                       for i in range(1, H + 1)], "increasing_process")
    return kernel, asset


def _asset_from_rates(kernel: PricingKernel, rates: List[np.ndarray], origin: str) -> PositiveReturnAsset:
    """Roll up rates of return into B-bar and check the companion martingale."""
    tree, H = kernel.tree, kernel.horizon
    value = [np.ones(1)]
    for i, rate in enumerate(rates, start=1):
        value.append(tree.broadcast(i, value[-1]) * (1.0 + rate))
    B_bar = AdaptedProcess(tree, 0, H, tuple(value), "B_bar")
    rho_bar = (kernel.process * B_bar).renamed("rho_bar")
    report = is_martingale(tree, rho_bar, kernel.tolerance, name=f"{origin}_rho_bar_martingale")
    if not report.passed:
        raise InternalInvariantError(f"rho-bar from {origin} is not a martingale", report=report)
    return PositiveReturnAsset(B_bar, AdaptedProcess(tree, 1, H, tuple(rates), "r_bar"), rho_bar)


# ------------------------------------------------------------------------------
# Rates and decompositions
# ------------------------------------------------------------------------------
def _one_step_ratios(kernel: PricingKernel) -> List[np.ndarray]:
    """pi_{i-1} / E_{i-1}[pi_i] on depth i-1, for i in [1, H]."""
    tree, pi = kernel.tree, kernel.process
    return [pi.at(i - 1) / tree.one_step(i - 1, pi.at(i)) for i in range(1, kernel.horizon + 1)]


def short_rate(kernel: PricingKernel) -> AdaptedProcess:
    """r_i = pi_{i-1} / E_{i-1}[pi_i] - 1, stored on depth i and constant across siblings."""
    ratios = _one_step_ratios(kernel)
    return AdaptedProcess.from_parent_values(kernel.tree, [q - 1.0 for q in ratios], 1, "r")


def multiplicative_decomposition(kernel: PricingKernel) -> Tuple[MoneyMarketAccount, AdaptedProcess]:
    """
    Split pi = rho / B with B previsible and increasing and rho a martingale.

    B_i = (pi_{i-1} / E_{i-1}[pi_i]) B_{i-1}, B_0 = 1;
    rho_i = (pi_i / E_{i-1}[pi_i]) rho_{i-1}, rho_0 = pi_0.
    """
    tree, pi = kernel.tree, kernel.process
    balance, rho = [np.ones(1)], [pi.at(0)]
    for i in range(1, kernel.horizon + 1):
        conditional = tree.one_step(i - 1, pi.at(i))
        balance.append(tree.broadcast(i, pi.at(i - 1) / conditional * balance[-1]))
        rho.append(pi.at(i) / tree.broadcast(i, conditional) * tree.broadcast(i, rho[-1]))
    B = AdaptedProcess(tree, 0, kernel.horizon, tuple(balance), "B")
    rho_process = AdaptedProcess(tree, 0, kernel.horizon, tuple(rho), "rho")
    account = MoneyMarketAccount(B, short_rate(kernel))

    reports = [is_martingale(tree, rho_process, kernel.tolerance, name="rho_martingale")]
    reports.extend(check_money_market_account(kernel, account))
    for report in reports:
        if not report.passed:
            raise InternalInvariantError("Multiplicative decomposition postcondition failed", report=report)
    return account, rho_process


def check_money_market_account(kernel: PricingKernel, account: MoneyMarketAccount) -> List[CheckReport]:
    """Previsible, strictly increasing along paths, and B_i = (1 + r_i) B_{i-1}."""
    tree, B = kernel.tree, account.balance
    reports = [
        is_previsible(tree, B.restrict(1), kernel.tolerance, name="money_market_previsible"),
        is_path_increasing(tree, B, name="money_market_increasing"),
    ]
    rolled = {i: (1.0 + account.short_rate.at(i)) * tree.broadcast(i, B.at(i - 1)) for i in B.depths if i >= 1}
    reports.append(compare_processes("money_market_recursion", {i: B.at(i) for i in rolled}, rolled))
    return reports


def check_positive_return_asset(kernel: PricingKernel, asset: PositiveReturnAsset,
                                name: str = "positive_return") -> List[CheckReport]:
    """B-bar_0 = 1, strict path increase, r-bar > 0, and rho-bar = pi B-bar a martingale."""
    tree = kernel.tree
    return [
        compare_processes(f"{name}_initial_unit", {0: asset.value.at(0)}, {0: np.ones(1)}),
        is_path_increasing(tree, asset.value, name=f"{name}_increasing"),
        is_positive(tree, asset.rate, name=f"{name}_rate_positive"),
        is_martingale(tree, asset.martingale, kernel.tolerance, name=f"{name}_rho_bar_martingale"),
    ]


def doob_decomposition(kernel: PricingKernel, surface=None) -> DoobDecomposition:
    """
    Doob decomposition pi_i = E_i[A_H] - A_i + E_i[pi_H].

    A_i = sum_{n<i} (pi_n - E_n[pi_{n+1}]) is previsible and increasing with A_0 = 0.
    When a bond surface is passed, A_i = sum_{n<i} pi_n r_{n+1} P_{n,n+1} is verified as well.
    """
    tree, pi, H = kernel.tree, kernel.process, kernel.horizon
    increments = [pi.at(n) - tree.one_step(n, pi.at(n + 1)) for n in range(H)]
    compensator = [np.zeros(1)]
    for i in range(1, H + 1):
        compensator.append(tree.broadcast(i, compensator[-1] + increments[i - 1]))
    A = AdaptedProcess(tree, 0, H, tuple(compensator), "A")
    residual = conditional_expectation_process(tree, pi, H, 0).renamed("residual")
    target = conditional_expectation_process(tree, A, H, 0)
    M = (target + residual).renamed("M")

    reports = [
        compare_processes("doob_identity", pi, M - A),
        is_previsible(tree, A.restrict(1), kernel.tolerance, name="doob_compensator_previsible"),
        is_path_increasing(tree, A, name="doob_compensator_increasing"),
    ]
    if surface is not None:
        rates = short_rate(kernel)
        terms = [pi.at(n) * tree.collapse(n, rates.at(n + 1)) * surface.price(n, n + 1) for n in range(H)]
        accumulated = [np.zeros(1)]
        for i in range(1, H + 1):
            accumulated.append(tree.broadcast(i, accumulated[-1] + terms[i - 1]))
        reports.append(compare_processes("doob_rate_identity", A, {i: accumulated[i] for i in range(H + 1)}))
    for report in reports:
        if not report.passed:
            raise InternalInvariantError("Doob decomposition postcondition failed", report=report)
    return DoobDecomposition(A, M, residual, tuple(reports))


def positive_return_from_doob(kernel: PricingKernel, surface) -> PositiveReturnAsset:
    """Positive-return asset with r-bar_i = r_i pi_{i-1} P_{i-1,i} / pi_i."""
    tree, pi = kernel.tree, kernel.process
    rates = short_rate(kernel)
    r_bar = [rates.at(i) * tree.broadcast(i, pi.at(i - 1) * surface.price(i - 1, i)) / pi.at(i)
             for i in range(1, kernel.horizon + 1)]
    asset = _asset_from_rates(kernel, r_bar, "doob")
    positive = is_positive(tree, asset.rate, name="doob_rate_positive")
    if not positive.passed:
        raise InternalInvariantError("Doob-based rate of return must be positive", report=positive)
    return asset


def accumulated_returns(kernel: PricingKernel, asset: PositiveReturnAsset) -> AdaptedProcess:
    """G_i = sum_{1<=n<=i} pi_n r-bar_n, with G_0 = 0."""
    tree, pi = kernel.tree, kernel.process
    fields = [np.zeros(1)]
    for i in range(1, kernel.horizon + 1):
        fields.append(tree.broadcast(i, fields[-1]) + pi.at(i) * asset.rate.at(i))
    return AdaptedProcess(tree, 0, kernel.horizon, tuple(fields), "G")


def kernel_representation_check(kernel: PricingKernel, asset: PositiveReturnAsset,
                                name: str = "kernel_representation") -> CheckReport:
    """pi_i = E_i[G_H] - G_i + E_i[pi_H] with G built from the asset's rate of return."""
    tree, H = kernel.tree, kernel.horizon
    G = accumulated_returns(kernel, asset)
    rebuilt = conditional_expectation_process(tree, G, H, 0) - G + \
        conditional_expectation_process(tree, kernel.process, H, 0)
    return compare_processes(name, kernel.process, rebuilt)


def increasing_process_roundtrip(kernel: PricingKernel, asset: PositiveReturnAsset,
                                 G: AdaptedProcess) -> CheckReport:
    """G'_i = sum_{n<=i} pi_n r-bar_n reproduces G on [0, H]."""
    rebuilt = accumulated_returns(kernel, asset)
    return compare_processes("increasing_process_roundtrip", rebuilt, G.restrict(0, kernel.horizon),
                             TOLERANCE_CONFIG['identity'])


def rational_closed_form_decomposition(tree: FiltrationTree, alpha: ScheduleLike, beta: ScheduleLike,
                                       martingale: AdaptedProcess) -> Tuple[AdaptedProcess, AdaptedProcess]:
    """
    Explicit B and rho of the rational model.

    B_i = prod_{n<=i} (alpha_{n-1} + beta_{n-1} N_{n-1}) / (alpha_n + beta_n N_{n-1}),
    rho_i = rho_0 prod_{n<=i} (alpha_n + beta_n N_n) / (alpha_n + beta_n N_{n-1}), rho_0 = alpha_0 + beta_0 N_0.
    """
    a, b = validate_rational_inputs(tree, alpha, beta, martingale)
    N = martingale
    balance, rho = [np.ones(1)], [a[0] + b[0] * N.at(0)]
    for n in range(1, tree.depth + 1):
        previous = N.at(n - 1)
        balance.append(tree.broadcast(n, balance[-1] * (a[n - 1] + b[n - 1] * previous) / (a[n] + b[n] * previous)))
        rho.append(tree.broadcast(n, rho[-1] / (a[n] + b[n] * previous)) * (a[n] + b[n] * N.at(n)))
    return (AdaptedProcess(tree, 0, tree.depth, tuple(balance), "B"),
            AdaptedProcess(tree, 0, tree.depth, tuple(rho), "rho"))
