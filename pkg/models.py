"""
Positive-martingale generators, deterministic schedules and randomized model instances.

The generators instantiate rational kernels pi_i = alpha_i + beta_i N_i:
multiplicative binomial martingales on binary trees, the branching-process
martingale Z_i / mu^i on its exact population tree, and constants.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from config import BRANCHING_CONFIG, TOLERANCE_CONFIG
from errors import (
    ExtinctionMassPresent,
    MartingaleConditionViolated,
    ModelSpecError,
    NonPositive,
    NotStrictlyDecreasing,
    SupportTooLarge,
    TreeNotBinary,
)
from filtration import AdaptedProcess, FiltrationTree, build_tree, tree_from_nodes

MARTINGALE_KINDS = ("multiplicative-binomial", "branching-process", "constant")
SCHEDULE_KINDS = ("geometric", "explicit")


# ------------------------------------------------------------------------------
# Specs
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class Schedule:
    """Strictly positive, strictly decreasing deterministic sequence v_0 > ... > v_N."""
    values: Tuple[float, ...]
    kind: str = "explicit"

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        for n, v in enumerate(values):
            if not v > 0 or not math.isfinite(v):
                raise NonPositive(f"Schedule value {v} at depth {n} must be positive", node=(n, 0))
        for n in range(1, len(values)):
            if not values[n] < values[n - 1]:
                raise NotStrictlyDecreasing(
                    f"Schedule must be strictly decreasing: {values[n - 1]} then {values[n]}", node=(n, 0))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class MartingaleSpec:
    """
    Positive martingale recipe.

    Parameters per kind:
        multiplicative-binomial: up, down, probability.
        branching-process: offspring (count -> probability), depth; `initial` is Z_0.
        constant: value.
    """
    kind: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    initial: float = 1.0

    def __post_init__(self):
        if self.kind not in MARTINGALE_KINDS:
            raise ModelSpecError(f"Unknown martingale kind '{self.kind}', expected one of {MARTINGALE_KINDS}")
        if self.kind != "constant" and not float(self.initial) > 0:
            raise NonPositive(f"Initial martingale value must be positive, got {self.initial}")


@dataclass(frozen=True, eq=False)
class RationalModel:
    """The inputs (alpha, beta, N) of a rational kernel on a tree."""
    tree: FiltrationTree
    alpha: Schedule
    beta: Schedule
    martingale: AdaptedProcess


# ------------------------------------------------------------------------------
# Martingale generators
# ------------------------------------------------------------------------------
def gen_binomial_martingale(tree: FiltrationTree, up: float, down: float, probability: float,
                            initial: float = 1.0) -> AdaptedProcess:
    """
    Multiplicative binomial martingale: N moves by `up` on the first child and
    `down` on the second.

    Raises:
        NonPositive: u, d or N_0 not positive.
        MartingaleConditionViolated: p u + (1 - p) d differs from 1, or p outside (0, 1).
        TreeNotBinary: a node without exactly two children, or branch probabilities other than (p, 1 - p).
    """
    up, down, probability, initial = float(up), float(down), float(probability), float(initial)
    for label, value in (("up", up), ("down", down), ("initial", initial)):
        if not value > 0:
            raise NonPositive(f"Binomial martingale parameter {label} must be positive, got {value}")
    if not 0.0 < probability < 1.0:
        raise MartingaleConditionViolated(f"Branch probability {probability} outside (0, 1)")
    drift = probability * up + (1.0 - probability) * down
    if abs(drift - 1.0) > TOLERANCE_CONFIG['martingale_condition']:
        raise MartingaleConditionViolated(f"p u + (1 - p) d = {drift!r}, not 1")

    expected = np.array([probability, 1.0 - probability])
    fields = [np.full(1, initial)]
    for i in range(tree.depth):
        counts = tree.child_counts(i)
        if np.any(counts != 2):
            raise TreeNotBinary("Binomial martingale needs two children per node",
                                node=(i, int(np.argmax(counts != 2))))
        branch = tree.probabilities[i + 1].reshape(-1, 2)
        gaps = np.abs(branch - expected).max(axis=1)
        if np.any(gaps > TOLERANCE_CONFIG['probability_sum']):
            raise TreeNotBinary(f"Branch probabilities differ from ({probability}, {1 - probability})",
                                node=(i, int(np.argmax(gaps))))
        fields.append(tree.broadcast(i + 1, fields[-1]) * np.tile([up, down], tree.size(i)))
    logging.info(f"Generated binomial martingale u={up}, d={down}, p={probability} over {tree.depth} periods")
    return AdaptedProcess(tree, 0, tree.depth, tuple(fields), "N")


def _offspring_law(offspring: Mapping[Any, Any]) -> Dict[int, Fraction]:
    """Parse an offspring pmf into exact probabilities, dropping zero-mass counts."""
    law: Dict[int, Fraction] = {}
    exact = True
    for count, mass in offspring.items():
        count = int(count)
        if count < 0:
            raise NonPositive(f"Offspring count {count} must be non-negative")
        if isinstance(mass, float):
            exact = False
        value = Fraction(str(mass).strip())
        if value < 0:
            raise NonPositive(f"Offspring probability for {count} is negative")
        if value > 0:
            law[count] = law.get(count, Fraction(0)) + value
    if not law:
        raise ModelSpecError("Offspring distribution is empty")
    if 0 in law:
        raise ExtinctionMassPresent(f"Offspring distribution puts mass {float(law[0])} on 0 children")
    total = sum(law.values(), Fraction(0))
    if exact and total != 1:
        raise ModelSpecError(f"Offspring probabilities sum to {float(total)}, not 1")
    if not exact and abs(float(total) - 1.0) > TOLERANCE_CONFIG['probability_sum']:
        raise ModelSpecError(f"Offspring probabilities sum to {float(total)!r}, not 1")
    return {k: law[k] / total for k in sorted(law)}


def _population_laws(law: Dict[int, Fraction]):
    """Distribution of the next population given the current one, cached by population."""
    cache: Dict[int, Dict[int, Fraction]] = {0: {0: Fraction(1)}}

    def next_population(population: int) -> Dict[int, Fraction]:
        start = max(k for k in cache if k <= population)
        for z in range(start + 1, population + 1):
            previous, convolved = cache[z - 1], {}
            for total, p in previous.items():
                for count, q in law.items():
                    convolved[total + count] = convolved.get(total + count, Fraction(0)) + p * q
            cache[z] = convolved
        return cache[population]

    return next_population


def gen_branching_martingale(offspring: Mapping[Any, Any], initial: int, depth: int,
                             max_nodes: Optional[int] = None) -> Tuple[FiltrationTree, AdaptedProcess]:
    """
    Exact Galton-Watson population tree and its martingale N_i = Z_i / mu^i.

    Each depth-i node carries a population Z_i; its children enumerate every
    attainable next population, sorted ascending, with exact probabilities.

    Parameters:
        offspring: Mapping from offspring count to probability (strings are read exactly).
        initial: Z_0, an integer >= 1.
        depth: Number of generations N.
        max_nodes: Cap on the total node count.

    Returns:
        Tuple[FiltrationTree, AdaptedProcess]: The population tree and N on [0, N].
    """
    max_nodes = BRANCHING_CONFIG['max_nodes'] if max_nodes is None else max_nodes
    if int(initial) != initial or initial < 1:
        raise NonPositive(f"Initial population must be an integer >= 1, got {initial}")
    if int(depth) < 1:
        raise ModelSpecError(f"Branching depth must be >= 1, got {depth}")
    law = _offspring_law(offspring)
    mean = sum((k * q for k, q in law.items()), Fraction(0))
    population_law = _population_laws(law)

    records: List[Dict[str, Any]] = [{"id": "root", "depth": 0, "parent": None}]
    populations: List[List[int]] = [[int(initial)]]
    labels: List[List[str]] = [["root"]]
    for i in range(int(depth)):
        level_populations, level_labels = [], []
        for parent_label, z in zip(labels[-1], populations[-1]):
            for z_next, p in sorted(population_law(z).items()):
                label = f"n{i + 1}_{len(level_labels)}"
                records.append({"id": label, "depth": i + 1, "parent": parent_label, "probability": p})
                level_populations.append(z_next)
                level_labels.append(label)
                if len(records) > max_nodes:
                    raise SupportTooLarge(f"Branching tree exceeds {max_nodes} nodes at depth {i + 1}")
        populations.append(level_populations)
        labels.append(level_labels)

    tree = tree_from_nodes(records, depth=int(depth))
    fields = tuple(np.array([float(Fraction(z) / mean ** i) for z in level], dtype=np.float64)
                   for i, level in enumerate(populations))
    logging.info(f"Generated branching martingale: mu = {float(mean)}, {tree.node_count} nodes")
    return tree, AdaptedProcess(tree, 0, tree.depth, fields, "N")


def gen_constant_martingale(tree: FiltrationTree, value: float) -> AdaptedProcess:
    if not float(value) > 0:
        raise NonPositive(f"Constant martingale value must be positive, got {value}")
    return AdaptedProcess.constant(tree, float(value), name="N")


def gen_martingale(spec: MartingaleSpec, tree: Optional[FiltrationTree] = None
                   ) -> Tuple[FiltrationTree, AdaptedProcess]:
    """Dispatch on spec.kind; a branching spec builds its own tree, the others need one."""
    params = spec.parameters
    if spec.kind == "branching-process":
        return gen_branching_martingale(params["offspring"], int(spec.initial), int(params["depth"]),
                                        params.get("max_nodes"))
    if tree is None:
        raise ModelSpecError(f"Martingale kind '{spec.kind}' needs a tree")
    if spec.kind == "constant":
        return tree, gen_constant_martingale(tree, params.get("value", spec.initial))
    return tree, gen_binomial_martingale(tree, params["up"], params["down"], params["probability"], spec.initial)


# ------------------------------------------------------------------------------
# Schedules
# ------------------------------------------------------------------------------
def gen_schedule(kind: str, parameters: Mapping[str, Any], N: int) -> Schedule:
    """
    Build a validated schedule of N + 1 values.

    geometric: v_n = initial * ratio^n with ratio in (0, 1).
    explicit: parameters["values"], exactly N + 1 of them.
    """
    if kind == "geometric":
        initial, ratio = float(parameters.get("initial", 1.0)), float(parameters["ratio"])
        if not initial > 0 or not ratio > 0:
            raise NonPositive(f"Geometric schedule needs positive initial and ratio, got {initial}, {ratio}")
        if not ratio < 1:
            raise NotStrictlyDecreasing(f"Geometric ratio {ratio} must be below 1")
        return Schedule(tuple(initial * ratio ** n for n in range(N + 1)), "geometric")
    if kind == "explicit":
        values = tuple(parameters["values"])
        if len(values) != N + 1:
            raise ModelSpecError(f"Explicit schedule needs {N + 1} values, got {len(values)}")
        return Schedule(values, "explicit")
    raise ModelSpecError(f"Unknown schedule kind '{kind}', expected one of {SCHEDULE_KINDS}")


# ------------------------------------------------------------------------------
# Randomized instances
# ------------------------------------------------------------------------------
def _dirichlet_probabilities(rng: np.random.Generator, count: int) -> List[float]:
    if count == 1:
        return [1.0]
    weights = np.maximum(rng.dirichlet(np.full(count, 2.0)), 0.05)
    weights = weights / weights.sum()
    weights[-1] = 1.0 - weights[:-1].sum()
    return weights.tolist()


def random_tree(rng: np.random.Generator, depth: int, max_branching: int = 3) -> FiltrationTree:
    """Tree with per-depth branching in [1, max_branching] and random per-node probabilities."""
    branching = rng.integers(1, max_branching + 1, size=depth)
    branching[0] = max(int(branching[0]), 2)
    probabilities = {}

    def per_node(i: int, k: int) -> List[float]:
        if (i, k) not in probabilities:
            probabilities[(i, k)] = _dirichlet_probabilities(rng, int(branching[i]))
        return probabilities[(i, k)]

    return build_tree(branching.tolist(), per_node)


def random_increasing_process(rng: np.random.Generator, tree: FiltrationTree) -> AdaptedProcess:
    """G_0 = 0 with positive random increments on every edge."""
    fields = [np.zeros(1)]
    for i in range(1, tree.depth + 1):
        fields.append(tree.broadcast(i, fields[-1]) + rng.uniform(0.1, 1.0, size=tree.size(i)))
    return AdaptedProcess(tree, 0, tree.depth, tuple(fields), "G")


def random_rational_model(rng: np.random.Generator, depth: int) -> RationalModel:
    """Binary tree with branch probability p, binomial N and geometric alpha, beta."""
    p = float(rng.uniform(0.2, 0.8))
    up = float(rng.uniform(1.05, min(1.8, 0.98 / p)))
    down = (1.0 - p * up) / (1.0 - p)
    tree = build_tree([2] * depth, [[p, 1.0 - p]] * depth)
    martingale = gen_binomial_martingale(tree, up, down, p, float(rng.uniform(0.5, 2.0)))
    alpha = gen_schedule("geometric", {"initial": rng.uniform(0.5, 2.0), "ratio": rng.uniform(0.3, 0.95)}, depth)
    beta = gen_schedule("geometric", {"initial": rng.uniform(0.5, 2.0), "ratio": rng.uniform(0.3, 0.95)}, depth)
    return RationalModel(tree, alpha, beta, martingale)

