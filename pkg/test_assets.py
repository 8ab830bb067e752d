import numpy as np
from pytest import approx, mark, raises

from assets import (
    DividendAsset,
    axiom_a_process,
    bubble_characterization,
    check_axiom_a,
    cumulative_dividends,
    decompose_value,
    discounted_dividends,
    frn_check,
    fx_denominator,
    fx_denominator_check,
    fx_price,
    potential_ratio_price,
    price_fundamental,
    price_frame,
    transversality_check,
)
from config import CSV_COLUMNS, PRICE_FLAGS
from errors import AxiomAViolation, DividendOutsideHorizon, NegativeCashFlow, NotPrevisible
from filtration import AdaptedProcess, build_tree, compare_processes
from kernel import kernel_from_process, kernel_rational, multiplicative_decomposition, short_rate
from models import random_rational_model


def _halving_chain(depth):
    tree = build_tree([1] * depth)
    return kernel_from_process(tree, [[2.0 ** -i] for i in range(depth + 1)])


def test_chain_coupon_price(chain_tree, chain_kernel):
    D = AdaptedProcess.deterministic(chain_tree, [1.0, 1.0], lo=1)
    S = price_fundamental(chain_kernel, D)
    assert [S.at(i)[0] for i in range(3)] == approx([0.75, 0.5, 0.0])
    assert discounted_dividends(chain_kernel, D).at(0) == approx([0.75])


def test_zero_dividends_price_to_zero(r1_kernel):
    S = price_fundamental(r1_kernel, None)
    assert S.max() == 0.0
    assert S.min() == 0.0


def test_floating_rate_note_prices_at_par(r1_kernel):
    rates = short_rate(r1_kernel)
    S = price_fundamental(r1_kernel, rates, terminal=1.0)
    assert S.at(0) == approx([1.0])
    assert S.at(1) == approx([1.0, 1.0])
    assert S.at(2) == approx([0.0] * 4)
    assert frn_check(r1_kernel, rates).passed


def test_pricing_formulas_agree_on_r1(r1_kernel):
    rates = short_rate(r1_kernel)
    fundamental = price_fundamental(r1_kernel, rates, terminal=1.0)
    ratio = potential_ratio_price(r1_kernel, rates, terminal=1.0)
    assert compare_processes("formula_equivalence", fundamental, ratio).passed


def test_cumulative_dividends_include_depth_zero(chain_tree, chain_kernel):
    D = AdaptedProcess.constant(chain_tree, 1.0)
    F = cumulative_dividends(chain_kernel, D)
    assert [F.at(i)[0] for i in range(3)] == approx([1.0, 1.5, 1.75])
    # a payment at depth 0 never enters the price
    assert price_fundamental(chain_kernel, D).at(0) == approx([0.75])


@mark.parametrize("seed", range(50))
def test_pricing_formulas_agree_on_random_models(seed):
    rng = np.random.default_rng(500 + seed)
    model = random_rational_model(rng, int(rng.integers(1, 6)))
    kernel = kernel_rational(model.tree, model.alpha, model.beta, model.martingale)
    tree = kernel.tree
    D = AdaptedProcess(tree, 1, kernel.horizon,
                       tuple(rng.uniform(0.0, 1.0, size=tree.size(i)) for i in range(1, kernel.horizon + 1)))
    redemption = float(rng.uniform(0.0, 2.0))
    fundamental = price_fundamental(kernel, D, redemption)
    ratio = potential_ratio_price(kernel, D, redemption)
    assert compare_processes("formula_equivalence", fundamental, ratio, 1e-11).passed
    assert check_axiom_a(kernel, fundamental, D, redemption).passed


def test_axiom_a_closure_for_fundamental_price(r1_kernel):
    rates = short_rate(r1_kernel)
    S = price_fundamental(r1_kernel, rates, terminal=1.0)
    M = axiom_a_process(r1_kernel, S, rates, terminal=1.0)
    # M_i = E_i[F_H]: the root value is pi_0 S_0
    assert M.at(0) == approx([2.0])
    assert check_axiom_a(r1_kernel, S, rates, terminal=1.0).passed


def test_money_market_account_is_a_bubble(r1_kernel):
    account, rho = multiplicative_decomposition(r1_kernel)
    asset = DividendAsset("money-market", value=account.balance)
    decomposition = decompose_value(r1_kernel, asset)
    for i in range(3):
        assert decomposition.bubble.at(i) == approx(rho.at(i))
    assert decomposition.terminal_value == approx(2.0)
    assert decomposition.transversality == approx([2.0, 2.0, 2.0])
    assert all(r.passed for r in decomposition.reports)

    transversality = transversality_check(r1_kernel, account.balance)
    assert not transversality.passed
    assert transversality.details["sequence"] == approx([2.0, 2.0, 2.0])
    assert isinstance(transversality.details["non_increasing"], bool)
    assert transversality.witness[0] == 2
    assert bubble_characterization(decomposition, transversality).passed


def test_fundamental_value_has_no_bubble(r1_kernel):
    rates = short_rate(r1_kernel)
    S = price_fundamental(r1_kernel, rates, terminal=1.0)
    asset = DividendAsset("frn", dividends=rates, redemption=1.0, value=S)
    decomposition = decompose_value(r1_kernel, asset)
    assert abs(decomposition.bubble.value(0, 0)) <= 1e-12
    assert decomposition.fundamental.at(0) == approx([1.0])
    transversality = transversality_check(r1_kernel, S)
    assert transversality.passed
    assert transversality.max_violation == 0.0
    assert bubble_characterization(decomposition, transversality).passed


@mark.parametrize("depth, passes", ((2, False), (36, True)))
def test_unit_asset_on_halving_chain(depth, passes):
    kernel = _halving_chain(depth)
    rates = short_rate(kernel)
    S = AdaptedProcess.constant(kernel.tree, 1.0)
    decomposition = decompose_value(kernel, DividendAsset("unit", dividends=rates, value=S))
    # the bubble is the unpaid tail pi_H
    assert decomposition.bubble.value(0, 0) == approx(2.0 ** -depth)
    transversality = transversality_check(kernel, S)
    assert transversality.details["sequence"] == approx([2.0 ** -j for j in range(depth + 1)])
    assert transversality.passed is passes
    assert bubble_characterization(decomposition, transversality).passed


def test_inconsistent_value_is_rejected(r1_kernel, r1_tree):
    asset = DividendAsset("flat", value=AdaptedProcess.constant(r1_tree, 1.0))
    with raises(AxiomAViolation) as info:
        decompose_value(r1_kernel, asset)
    assert info.value.report.name == "axiom_a"


def test_negative_cash_flows_are_rejected(r1_kernel, r1_tree):
    with raises(NegativeCashFlow):
        DividendAsset("short", dividends=AdaptedProcess.constant(r1_tree, -1.0, lo=1))
    with raises(NegativeCashFlow):
        DividendAsset("short", redemption=-1.0)
    with raises(NegativeCashFlow):
        transversality_check(r1_kernel, AdaptedProcess.constant(r1_tree, -1.0))


def test_dividends_beyond_horizon(r1_tree):
    kernel = kernel_from_process(r1_tree, [[2.0], [1.1, 0.9]])
    with raises(DividendOutsideHorizon):
        price_fundamental(kernel, AdaptedProcess.constant(r1_tree, 1.0, lo=1))


def test_fx_symmetry(r1_kernel):
    rates = short_rate(r1_kernel)
    S = fx_price(r1_kernel, rates, rates)
    for i in range(3):
        assert S.at(i) == approx(np.ones(r1_kernel.tree.size(i)), abs=1e-12)
    assert fx_denominator(r1_kernel, rates).at(2) == approx(r1_kernel.at(2))
    assert fx_denominator_check(r1_kernel, rates).passed


def test_fx_scaled_leg(r1_kernel):
    rates = short_rate(r1_kernel)
    S = fx_price(r1_kernel, 0.5 * rates, rates, redemption=0.5)
    for i in range(3):
        assert S.at(i) == approx(np.full(r1_kernel.tree.size(i), 0.5), abs=1e-12)


def test_fx_foreign_leg(r1_kernel, r1_tree):
    foreign = AdaptedProcess.deterministic(r1_tree, [0.5, 0.5], lo=1)
    S = fx_price(r1_kernel, foreign, short_rate(r1_kernel))
    assert S.at(0) == approx([0.625], abs=1e-12)
    assert S.at(2) == approx([1.0] * 4)


def test_fx_legs_must_be_previsible(r1_kernel):
    with raises(NotPrevisible) as info:
        fx_price(r1_kernel, r1_kernel.process.restrict(1), short_rate(r1_kernel))
    assert info.value.report is not None


def test_price_frame_flags(r1_kernel):
    account, _ = multiplicative_decomposition(r1_kernel)
    bubble = price_frame(r1_kernel, account.balance, transversality_check(r1_kernel, account.balance))
    assert list(bubble.columns) == CSV_COLUMNS['price']
    assert len(bubble) == 7
    assert set(bubble['flag']) == {PRICE_FLAGS['bubble']}
    assert bubble['transversality'].tolist() == approx([2.0] * 7)

    S = price_fundamental(r1_kernel, short_rate(r1_kernel), terminal=1.0)
    fundamental = price_frame(r1_kernel, S, transversality_check(r1_kernel, S))
    assert set(fundamental['flag']) == {PRICE_FLAGS['fundamental']}
    assert fundamental['node'].tolist()[:3] == ['root', 'n1_0', 'n1_1']


def test_floating_rate_note_on_random_kernels(random_kernel):
    rates = short_rate(random_kernel)
    assert frn_check(random_kernel, rates).passed
    S = price_fundamental(random_kernel, rates, terminal=1.0)
    decomposition = decompose_value(random_kernel, DividendAsset("frn", dividends=rates, redemption=1.0, value=S))
    transversality = transversality_check(random_kernel, S)
    assert transversality.passed
    assert abs(decomposition.bubble.value(0, 0)) <= 1e-10
    assert bubble_characterization(decomposition, transversality).passed


def test_money_market_bubble_on_random_kernels(random_kernel):
    account, rho = multiplicative_decomposition(random_kernel)
    decomposition = decompose_value(random_kernel, DividendAsset("money-market", value=account.balance))
    assert compare_processes("bubble_is_rho", decomposition.bubble, rho, 1e-10).passed
    pi_0 = random_kernel.value(0, 0)
    # E[pi_j B_j] = rho_0 = pi_0 at every depth
    assert decomposition.transversality == approx([pi_0] * (random_kernel.horizon + 1), rel=1e-10)
    transversality = transversality_check(random_kernel, account.balance)
    assert not transversality.passed
    assert bubble_characterization(decomposition, transversality).passed
