import numpy as np
from pytest import approx, mark, raises

from config import TOLERANCE_CONFIG
from errors import (
    ExtinctionMassPresent,
    MartingaleConditionViolated,
    ModelSpecError,
    NonPositive,
    NotStrictlyDecreasing,
    SupportTooLarge,
    TreeNotBinary,
)
from filtration import build_tree, conditional_expectation, is_martingale, is_positive
from kernel import kernel_rational
from models import (
    MartingaleSpec,
    Schedule,
    gen_binomial_martingale,
    gen_branching_martingale,
    gen_martingale,
    gen_schedule,
    random_increasing_process,
    random_rational_model,
    random_tree,
)

GENERATOR_TOLERANCE = TOLERANCE_CONFIG["martingale_generator"]


def test_binomial_martingale_values(r1_martingale):
    assert r1_martingale.at(1) == approx([1.2, 0.8])
    assert r1_martingale.at(2) == approx([1.44, 0.96, 0.96, 0.64])
    assert is_martingale(r1_martingale.tree, r1_martingale, GENERATOR_TOLERANCE).passed


def test_degenerate_binomial_is_constant(r1_tree):
    N = gen_binomial_martingale(r1_tree, 1.0, 1.0, 0.5, 1.0)
    assert N.min() == N.max() == 1.0


@mark.parametrize("up, down, probability", ((1.2, 0.9, 0.5), (1.2, 0.8, 1.0), (1.2, 0.8, 0.0)))
def test_binomial_martingale_condition(r1_tree, up, down, probability):
    with raises(MartingaleConditionViolated):
        gen_binomial_martingale(r1_tree, up, down, probability)


def test_binomial_needs_positive_moves(r1_tree):
    with raises(NonPositive):
        gen_binomial_martingale(r1_tree, 2.0, 0.0, 0.5)


def test_binomial_needs_binary_tree():
    with raises(TreeNotBinary):
        gen_binomial_martingale(build_tree([3]), 1.2, 0.8, 0.5)
    with raises(TreeNotBinary) as info:
        gen_binomial_martingale(build_tree([2], [[0.3, 0.7]]), 1.2, 0.8, 0.5)
    assert info.value.node == (0, 0)


def test_branching_martingale_one_generation():
    tree, N = gen_branching_martingale({"1": "1/2", "2": "1/2"}, 1, 1)
    assert tree.labels[1] == ("n1_0", "n1_1")
    assert N.at(1) == approx([2 / 3, 4 / 3])
    assert tree.probabilities[1].tolist() == [0.5, 0.5]


def test_branching_martingale_two_generations():
    tree, N = gen_branching_martingale({"1": "1/2", "2": "1/2"}, 1, 2)
    # population 1 -> {1, 2}; population 2 -> {2, 3, 4} with masses 1/4, 1/2, 1/4
    assert tree.size(2) == 5
    assert list(tree.children(1, 1)) == [2, 3, 4]
    assert tree.probabilities[2].tolist() == [0.5, 0.5, 0.25, 0.5, 0.25]
    assert N.at(2) == approx([4 / 9, 8 / 9, 8 / 9, 12 / 9, 16 / 9])
    assert is_martingale(tree, N, GENERATOR_TOLERANCE).passed
    assert is_positive(tree, N).passed


def test_branching_martingale_with_float_masses():
    tree, N = gen_branching_martingale({1: 0.25, 3: 0.75}, 2, 2)
    assert N.value(0, 0) == 2.0
    assert is_martingale(tree, N, GENERATOR_TOLERANCE).passed


@mark.parametrize("offspring, initial, depth", (
    ({"1": "1/2", "2": "1/2"}, 1, 3),
    ({"1": "1/3", "2": "1/3", "3": "1/3"}, 1, 3),
    ({1: 0.25, 3: 0.75}, 2, 2),
))
def test_branching_martingale_tower_property(offspring, initial, depth):
    tree, N = gen_branching_martingale(offspring, initial, depth)
    for i in range(depth + 1):
        assert tree.node_probabilities(i).sum() == approx(1.0, abs=1e-12)
    assert is_positive(tree, N).passed
    for j in range(1, depth + 1):
        for i in range(j):
            gap = np.abs(conditional_expectation(tree, N, j, i).at(i) - N.at(i))
            assert gap.max() <= GENERATOR_TOLERANCE

def test_deterministic_offspring_gives_constant_martingale():
    tree, N = gen_branching_martingale({"1": 1}, 3, 4)
    assert [tree.size(i) for i in range(5)] == [1] * 5
    assert N.min() == N.max() == 3.0


def test_extinction_mass_is_rejected():
    with raises(ExtinctionMassPresent):
        gen_branching_martingale({"0": "1/4", "2": "3/4"}, 1, 2)


def test_offspring_law_must_sum_to_one():
    with raises(ModelSpecError):
        gen_branching_martingale({"1": "1/2", "2": "1/3"}, 1, 2)


def test_branching_support_cap():
    with raises(SupportTooLarge):
        gen_branching_martingale({"1": "1/2", "2": "1/2"}, 1, 3, max_nodes=5)


def test_gen_martingale_dispatch(r1_tree):
    tree, N = gen_martingale(MartingaleSpec("constant", {"value": 2.0}), r1_tree)
    assert tree is r1_tree
    assert N.min() == N.max() == 2.0
    tree, N = gen_martingale(MartingaleSpec("branching-process", {"offspring": {"1": "1/2", "2": "1/2"}, "depth": 2}))
    assert tree.depth == 2
    with raises(ModelSpecError):
        gen_martingale(MartingaleSpec("multiplicative-binomial", {"up": 1.2, "down": 0.8, "probability": 0.5}))
    with raises(ModelSpecError):
        MartingaleSpec("lognormal")
    with raises(NonPositive):
        MartingaleSpec("multiplicative-binomial", initial=0.0)


def test_schedules():
    assert gen_schedule("geometric", {"initial": 1, "ratio": 0.5}, 2).values == (1.0, 0.5, 0.25)
    explicit = gen_schedule("explicit", {"values": [3, 2, 1]}, 2)
    assert explicit.values == (3.0, 2.0, 1.0)
    assert len(explicit) == 3


@mark.parametrize("values, error", (
    ((1.0, 1.0, 0.5), NotStrictlyDecreasing),
    ((1.0, 0.5, 0.75), NotStrictlyDecreasing),
    ((1.0, 0.5, 0.0), NonPositive),
    ((1.0, -0.5), NonPositive),
))
def test_invalid_schedules(values, error):
    with raises(error):
        Schedule(values)


def test_schedule_generator_errors():
    with raises(NotStrictlyDecreasing):
        gen_schedule("geometric", {"initial": 1, "ratio": 1.0}, 2)
    with raises(ModelSpecError):
        gen_schedule("explicit", {"values": [3, 2]}, 2)
    with raises(ModelSpecError):
        gen_schedule("linear", {}, 2)


def test_random_tree(rng):
    tree = random_tree(rng, 4)
    assert tree.depth == 4
    assert len(tree.children(0, 0)) >= 2
    for i in range(5):
        assert tree.node_probabilities(i).sum() == approx(1.0, abs=1e-12)
    G = random_increasing_process(rng, tree)
    assert G.value(0, 0) == 0.0
    assert all((G.at(i) > tree.broadcast(i, G.at(i - 1))).all() for i in range(1, 5))


@mark.parametrize("seed", range(100))
def test_random_rational_models_are_valid_kernels(seed):
    rng = np.random.default_rng(2000 + seed)
    model = random_rational_model(rng, int(rng.integers(1, 7)))
    assert is_martingale(model.tree, model.martingale, GENERATOR_TOLERANCE).passed
    assert is_positive(model.tree, model.martingale).passed
    kernel = kernel_rational(model.tree, model.alpha, model.beta, model.martingale)
    assert all(r.passed for r in kernel.reports)
