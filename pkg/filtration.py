"""
Finite filtered probability spaces as explicit event trees.

This module provides the tree itself, adapted processes living on it, exact
conditional expectation, and the process-classification predicates
(martingale, strict supermartingale, previsible) the rest of the engine is
checked against.

Node ids are (depth, index) pairs; the children of a node are contiguous in
the next depth and keep the order in which they were declared.
"""

import logging
import math
import numbers
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import TOLERANCE_CONFIG
from errors import (
    DepthOrderViolation,
    EmptyRange,
    InvalidTreeStructure,
    NonIncreasingTimes,
    NonPositiveProbability,
    ProbabilitySumMismatch,
    ProcessNotDefinedAtDepth,
    ProcessShapeMismatch,
    RangeStartsAtRoot,
)

Node = Tuple[int, int]
ProbabilityLike = Union[float, int, str, Decimal, Fraction]


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    array.flags.writeable = False
    return array


# ------------------------------------------------------------------------------
# Tree
# ------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class FiltrationTree:
    """
    A finite non-recombining event tree (Omega, F, P, {F_i}).

    Attributes:
        depth: Number of periods N; leaves sit at depth N.
        parents: parents[i][k] is the index at depth i-1 of node (i, k); parents[0] is [-1].
        probabilities: probabilities[i][k] is the one-step probability of reaching (i, k) from its parent.
        labels: Human-readable node ids per depth, used in every export.
        times: Optional strictly increasing time labels t_0 < ... < t_N.
        probability_text: Decimal strings of the one-step probabilities as given; exact inputs stay exact.
    """
    depth: int
    parents: Tuple[np.ndarray, ...]
    probabilities: Tuple[np.ndarray, ...]
    labels: Tuple[Tuple[str, ...], ...]
    times: Optional[Tuple[float, ...]] = None
    probability_text: Tuple[Tuple[str, ...], ...] = ()
    _offsets: Tuple[np.ndarray, ...] = field(default=(), repr=False)
    _index: Dict[str, Node] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        offsets = []
        for i in range(self.depth):
            counts = np.bincount(self.parents[i + 1], minlength=self.size(i))
            offsets.append(np.concatenate(([0], np.cumsum(counts))))
        object.__setattr__(self, "_offsets", tuple(offsets))
        index = {}
        for i, row in enumerate(self.labels):
            for k, label in enumerate(row):
                index[label] = (i, k)
        object.__setattr__(self, "_index", index)

    def size(self, i: int) -> int:
        """Number of nodes at depth i."""
        return len(self.parents[i])

    @property
    def node_count(self) -> int:
        return sum(self.size(i) for i in range(self.depth + 1))

    def children(self, i: int, k: int) -> range:
        """Indices at depth i+1 of the children of node (i, k)."""
        offsets = self._offsets[i]
        return range(int(offsets[k]), int(offsets[k + 1]))

    def child_counts(self, i: int) -> np.ndarray:
        return np.diff(self._offsets[i])

    def label(self, i: int, k: int) -> str:
        return self.labels[i][k]

    def node_of(self, label: str) -> Node:
        try:
            return self._index[label]
        except KeyError:
            raise InvalidTreeStructure(f"Unknown node id '{label}'")

    def time(self, i: int) -> float:
        return self.times[i] if self.times is not None else float(i)

    def node_probabilities(self, i: int) -> np.ndarray:
        """Unconditional probability of every depth-i node (product of one-step probabilities)."""
        weights = np.ones(1)
        for n in range(1, i + 1):
            weights = weights[self.parents[n]] * self.probabilities[n]
        return weights

    def one_step(self, i: int, values_next: np.ndarray) -> np.ndarray:
        """E_i[X_{i+1}] as a depth-i field; children summed left to right in declared order."""
        weighted = self.probabilities[i + 1] * values_next
        return np.bincount(self.parents[i + 1], weights=weighted, minlength=self.size(i))

    def broadcast(self, i: int, parent_values: np.ndarray) -> np.ndarray:
        """Lift a depth-(i-1) field to depth i, constant across siblings."""
        return np.asarray(parent_values)[self.parents[i]]

    def collapse(self, i: int, sibling_constant: np.ndarray) -> np.ndarray:
        """Inverse of broadcast: read a sibling-constant depth-(i+1) field back onto depth i."""
        return np.asarray(sibling_constant)[self._offsets[i][:-1]]


def _as_probability(value: ProbabilityLike, node: Node) -> Tuple[float, Optional[Fraction]]:
    """Return (float value, exact value or None for floating input)."""
    if isinstance(value, bool):
        raise NonPositiveProbability(f"Probability must be numeric, got {value!r}", node=node)
    if isinstance(value, (str, Decimal, Fraction, numbers.Integral)):
        try:
            exact = Fraction(str(value).strip()) if isinstance(value, (str, Decimal)) else Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise NonPositiveProbability(f"Unparseable probability {value!r}", node=node)
        return float(exact), exact
    return float(value), None


def _probability_text(value: float, exact: Optional[Fraction]) -> str:
    """Shortest decimal for floats; exact decimal for terminating fractions, 'p/q' otherwise."""
    if exact is None:
        return repr(value)
    denominator = exact.denominator
    for prime in (2, 5):
        while denominator % prime == 0:
            denominator //= prime
    if denominator != 1:
        return str(exact)
    with localcontext() as context:
        context.prec = len(str(exact.numerator)) + exact.denominator.bit_length() + 2
        return format(Decimal(exact.numerator) / Decimal(exact.denominator), "f")


def _child_probabilities(values: Sequence[ProbabilityLike], count: int, node: Node,
                         tolerance: float) -> Tuple[np.ndarray, List[str]]:
    if len(values) != count:
        raise InvalidTreeStructure(
            f"Node has {count} children but {len(values)} probabilities were given", node=node)
    parsed = [_as_probability(v, node) for v in values]
    floats = [p for p, _ in parsed]
    for p in floats:
        if not (p > 0.0) or p > 1.0 or not math.isfinite(p):
            raise NonPositiveProbability(f"Transition probability {p} outside (0, 1]", node=node)
    if all(exact is not None for _, exact in parsed):
        total = sum((exact for _, exact in parsed), Fraction(0))
        if total != 1:
            raise ProbabilitySumMismatch(f"Child probabilities sum to {float(total)!r}, not 1", node=node)
    else:
        total = math.fsum(floats)
        if abs(total - 1.0) > tolerance:
            raise ProbabilitySumMismatch(f"Child probabilities sum to {total!r}, not 1", node=node)
    return np.array(floats, dtype=np.float64), [_probability_text(p, exact) for p, exact in parsed]


def _validated_times(times: Optional[Sequence[float]], depth: int) -> Optional[Tuple[float, ...]]:
    if times is None:
        return None
    times = tuple(float(t) for t in times)
    if len(times) != depth + 1:
        raise InvalidTreeStructure(f"Expected {depth + 1} time labels, got {len(times)}")
    for i in range(1, len(times)):
        if not times[i] > times[i - 1]:
            raise NonIncreasingTimes(f"Time labels not strictly increasing at depth {i}: "
                                     f"{times[i - 1]} >= {times[i]}")
    return times


def build_tree(branching: Optional[Sequence[int]] = None,
               probabilities: Union[None, Sequence[Sequence[ProbabilityLike]],
                                    Callable[[int, int], Sequence[ProbabilityLike]]] = None,
               times: Optional[Sequence[float]] = None,
               nodes: Optional[Iterable[Any]] = None,
               tolerance: Optional[float] = None) -> FiltrationTree:
    """
    Build and validate a FiltrationTree.

    Parameters:
        branching: Per-depth child counts; branching[i] children for every depth-i node.
        probabilities: Per-depth child probability vectors, or a callable (depth, index) -> vector
            giving per-node probabilities. None means uniform branching.
        times: Optional time labels t_0 < ... < t_N.
        nodes: Explicit node list instead of branching, see tree_from_nodes.
        tolerance: Allowed deviation of floating child-probability sums from 1.

    Returns:
        FiltrationTree: The validated tree; node ids are deterministic in the input order.
    """
    tolerance = TOLERANCE_CONFIG['probability_sum'] if tolerance is None else tolerance
    if nodes is not None:
        return tree_from_nodes(nodes, times=times, tolerance=tolerance)
    if not branching:
        raise InvalidTreeStructure("Tree needs at least one period of branching")

    parents: List[np.ndarray] = [np.array([-1], dtype=np.intp)]
    probs: List[np.ndarray] = [_frozen([1.0])]
    texts: List[Tuple[str, ...]] = [("1",)]
    labels: List[Tuple[str, ...]] = [("root",)]
    for i, count in enumerate(branching):
        count = int(count)
        if count < 1:
            raise InvalidTreeStructure(f"Child count at depth {i} must be >= 1, got {count}")
        width = len(parents[-1])
        step_parents = np.repeat(np.arange(width, dtype=np.intp), count)
        step_probs, step_texts = [], []
        for k in range(width):
            if probabilities is None:
                vector = [Fraction(1, count)] * count
            elif callable(probabilities):
                vector = probabilities(i, k)
            else:
                vector = probabilities[i]
            floats, text = _child_probabilities(vector, count, (i, k), tolerance)
            step_probs.append(floats)
            step_texts.extend(text)
        parents.append(step_parents)
        probs.append(_frozen(np.concatenate(step_probs)))
        texts.append(tuple(step_texts))
        labels.append(tuple(f"n{i + 1}_{k}" for k in range(width * count)))

    depth = len(branching)
    for array in parents:
        array.flags.writeable = False
    tree = FiltrationTree(depth=depth, parents=tuple(parents), probabilities=tuple(probs),
                          labels=tuple(labels), times=_validated_times(times, depth),
                          probability_text=tuple(texts))
    logging.info(f"Built filtration tree of depth {depth} with {tree.node_count} nodes")
    return tree


def _node_record(record: Any) -> Dict[str, Any]:
    if isinstance(record, Mapping):
        return dict(record)
    keys = ("id", "depth", "parent", "probability", "time")
    return dict(zip(keys, record))


def tree_from_nodes(nodes: Iterable[Any], times: Optional[Sequence[float]] = None,
                    depth: Optional[int] = None, tolerance: Optional[float] = None) -> FiltrationTree:
    """
    Build a tree from explicit node records.

    Each record is a mapping (or tuple in this order) with keys id, depth, parent,
    probability (from the parent; ignored at the root) and an optional time. Children
    keep the order in which they appear in the list.
    """
    tolerance = TOLERANCE_CONFIG['probability_sum'] if tolerance is None else tolerance
    records = [_node_record(r) for r in nodes]
    roots = [r for r in records if r.get("parent") is None]
    if len(roots) != 1:
        raise InvalidTreeStructure(f"Expected exactly one root, found {len(roots)}")
    root = roots[0]
    if int(root.get("depth", 0)) != 0:
        raise InvalidTreeStructure("Root must sit at depth 0")

    by_parent: Dict[str, List[Dict[str, Any]]] = {}
    seen = {str(root["id"])}
    for r in records:
        if r is root:
            continue
        node_id = str(r["id"])
        if node_id in seen:
            raise InvalidTreeStructure(f"Duplicate node id '{node_id}'")
        seen.add(node_id)
        by_parent.setdefault(str(r["parent"]), []).append(r)

    parents: List[np.ndarray] = [np.array([-1], dtype=np.intp)]
    probs: List[np.ndarray] = [_frozen([1.0])]
    texts: List[Tuple[str, ...]] = [("1",)]
    labels: List[Tuple[str, ...]] = [(str(root["id"]),)]
    level_times: List[Optional[float]] = [root.get("time")]
    placed = 1
    while True:
        i = len(labels) - 1
        step_parents, step_probs, step_texts, step_labels, step_times = [], [], [], [], []
        for k, parent_id in enumerate(labels[-1]):
            children = by_parent.get(parent_id, [])
            if not children:
                continue
            for child in children:
                if "depth" in child and child["depth"] is not None and int(child["depth"]) != i + 1:
                    raise InvalidTreeStructure(
                        f"Node '{child['id']}' declares depth {child['depth']} but its parent sits at depth {i}")
                step_times.append(child.get("time"))
            vector, text = _child_probabilities([c.get("probability") for c in children], len(children),
                                                (i, k), tolerance)
            step_parents.extend([k] * len(children))
            step_probs.append(vector)
            step_texts.extend(text)
            step_labels.extend(str(c["id"]) for c in children)
        if not step_labels:
            break
        counts = np.bincount(np.array(step_parents, dtype=np.intp), minlength=len(labels[-1]))
        if np.any(counts == 0):
            k = int(np.argmin(counts))
            raise InvalidTreeStructure("Non-terminal node without children", node=(i, k))
        parents.append(np.array(step_parents, dtype=np.intp))
        probs.append(_frozen(np.concatenate(step_probs)))
        texts.append(tuple(step_texts))
        labels.append(tuple(step_labels))
        defined = {t for t in step_times if t is not None}
        if len(defined) > 1:
            raise InvalidTreeStructure(f"Nodes at depth {i + 1} carry different time labels")
        level_times.append(defined.pop() if defined else None)
        placed += len(step_labels)

    if placed != len(records):
        raise InvalidTreeStructure(f"{len(records) - placed} node(s) are not connected to the root")
    tree_depth = len(labels) - 1
    if tree_depth < 1:
        raise InvalidTreeStructure("Tree needs at least one period of branching")
    if depth is not None and int(depth) != tree_depth:
        raise InvalidTreeStructure(f"Declared depth {depth} but nodes reach depth {tree_depth}")
    if times is None and any(t is not None for t in level_times):
        if any(t is None for t in level_times):
            raise InvalidTreeStructure("Time labels must be given at every depth or at none")
        times = level_times

    for array in parents:
        array.flags.writeable = False
    tree = FiltrationTree(depth=tree_depth, parents=tuple(parents), probabilities=tuple(probs),
                          labels=tuple(labels), times=_validated_times(times, tree_depth),
                          probability_text=tuple(texts))
    logging.info(f"Built filtration tree from {len(records)} explicit nodes, depth {tree_depth}")
    return tree


# ------------------------------------------------------------------------------
# Adapted processes
# ------------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class AdaptedProcess:
    """
    One finite value per node for every depth in [lo, hi].

    Values are stored as read-only float64 arrays, one per depth, in node order.
    """
    tree: FiltrationTree
    lo: int
    hi: int
    values: Tuple[np.ndarray, ...]
    name: str = ""

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi <= self.tree.depth):
            raise ProcessShapeMismatch(
                f"Depth range [{self.lo}, {self.hi}] not inside [0, {self.tree.depth}]")
        if len(self.values) != self.hi - self.lo + 1:
            raise ProcessShapeMismatch(
                f"Expected {self.hi - self.lo + 1} depth fields, got {len(self.values)}")
        frozen = []
        for offset, field_values in enumerate(self.values):
            i = self.lo + offset
            array = _frozen(np.broadcast_to(np.asarray(field_values, dtype=np.float64), (self.tree.size(i),))
                            if np.ndim(field_values) == 0 else field_values)
            if array.shape != (self.tree.size(i),):
                raise ProcessShapeMismatch(
                    f"Depth {i} has {self.tree.size(i)} nodes but {array.size} values were given")
            if not np.all(np.isfinite(array)):
                k = int(np.argmin(np.isfinite(array)))
                raise ProcessShapeMismatch("Process values must be finite", node=(i, k))
            frozen.append(array)
        object.__setattr__(self, "values", tuple(frozen))

    # construction helpers
    @classmethod
    def constant(cls, tree: FiltrationTree, value: float, lo: int = 0,
                 hi: Optional[int] = None, name: str = "") -> "AdaptedProcess":
        hi = tree.depth if hi is None else hi
        return cls(tree, lo, hi, tuple(np.full(tree.size(i), float(value)) for i in range(lo, hi + 1)), name)

    @classmethod
    def deterministic(cls, tree: FiltrationTree, sequence: Sequence[float], lo: int = 0,
                      name: str = "") -> "AdaptedProcess":
        """One value per depth, the same on every node of that depth."""
        hi = lo + len(sequence) - 1
        if not 0 <= lo <= hi <= tree.depth:
            raise ProcessShapeMismatch(f"Depth range [{lo}, {hi}] not inside [0, {tree.depth}]")
        return cls(tree, lo, hi, tuple(np.full(tree.size(lo + n), float(v)) for n, v in enumerate(sequence)), name)

    @classmethod
    def from_parent_values(cls, tree: FiltrationTree, fields: Sequence[np.ndarray], lo: int = 1,
                           name: str = "") -> "AdaptedProcess":
        """Previsible process: fields[n] lives on depth lo+n-1 and is copied to every child."""
        if lo < 1:
            raise RangeStartsAtRoot("A previsible process starts at depth 1")
        return cls(tree, lo, lo + len(fields) - 1,
                   tuple(tree.broadcast(lo + n, f) for n, f in enumerate(fields)), name)

    # access
    @property
    def depths(self) -> range:
        return range(self.lo, self.hi + 1)

    def covers(self, i: int) -> bool:
        return self.lo <= i <= self.hi

    def at(self, i: int) -> np.ndarray:
        if not self.covers(i):
            raise ProcessNotDefinedAtDepth(
                f"Process '{self.name}' is defined on [{self.lo}, {self.hi}], not at depth {i}")
        return self.values[i - self.lo]

    def value(self, i: int, k: int) -> float:
        return float(self.at(i)[k])

    def restrict(self, lo: int, hi: Optional[int] = None) -> "AdaptedProcess":
        hi = self.hi if hi is None else hi
        return AdaptedProcess(self.tree, lo, hi, tuple(self.at(i) for i in range(lo, hi + 1)), self.name)

    def renamed(self, name: str) -> "AdaptedProcess":
        return AdaptedProcess(self.tree, self.lo, self.hi, self.values, name)

    def map(self, fn: Callable[[np.ndarray], np.ndarray], name: str = "") -> "AdaptedProcess":
        return AdaptedProcess(self.tree, self.lo, self.hi, tuple(fn(v) for v in self.values), name)

    def min(self) -> float:
        return float(min(v.min() for v in self.values))

    def max(self) -> float:
        return float(max(v.max() for v in self.values))

    # algebra
    def _combine(self, other, op) -> "AdaptedProcess":
        if isinstance(other, AdaptedProcess):
            if other.tree is not self.tree:
                raise ProcessShapeMismatch("Processes live on different trees")
            if (other.lo, other.hi) != (self.lo, self.hi):
                raise ProcessShapeMismatch(
                    f"Depth ranges differ: [{self.lo}, {self.hi}] vs [{other.lo}, {other.hi}]")
            return AdaptedProcess(self.tree, self.lo, self.hi,
                                  tuple(op(a, b) for a, b in zip(self.values, other.values)))
        if isinstance(other, numbers.Real):
            return AdaptedProcess(self.tree, self.lo, self.hi, tuple(op(a, float(other)) for a in self.values))
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: np.subtract(b, a))

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.divide)

    def __neg__(self):
        return self.map(np.negative, self.name)


def _check_tree(tree: FiltrationTree, X: AdaptedProcess) -> None:
    if X.tree is not tree:
        raise ProcessShapeMismatch("Process does not live on the given tree")


def expect_field(tree: FiltrationTree, field_j: np.ndarray, j: int, i: int) -> np.ndarray:
    """E_i of a depth-j field, by backward induction one step at a time."""
    if i > j:
        raise DepthOrderViolation(f"Conditioning depth {i} exceeds target depth {j}")
    values = np.asarray(field_j, dtype=np.float64)
    for n in range(j - 1, i - 1, -1):
        values = tree.one_step(n, values)
    return values


def conditional_expectation(tree: FiltrationTree, X: AdaptedProcess, j: int, i: int) -> AdaptedProcess:
    """
    Compute E_i[X_j] as a depth-i field.

    Parameters:
        tree: The filtration.
        X: Process defined at depth j.
        j: Target depth.
        i: Conditioning depth, i <= j.

    Returns:
        AdaptedProcess: Single-depth process on [i, i]; for i == j it is X_j unchanged.
    """
    _check_tree(tree, X)
    if not 0 <= i <= j:
        raise DepthOrderViolation(f"Need 0 <= i <= j, got i={i}, j={j}")
    field_j = X.at(j)
    return AdaptedProcess(tree, i, i, (expect_field(tree, field_j, j, i),), X.name)


def conditional_expectation_process(tree: FiltrationTree, X: AdaptedProcess, j: int,
                                    lo: int = 0) -> AdaptedProcess:
    """E_i[X_j] for every i in [lo, j], as one process."""
    _check_tree(tree, X)
    if not 0 <= lo <= j:
        raise DepthOrderViolation(f"Need 0 <= lo <= j, got lo={lo}, j={j}")
    fields = [np.asarray(X.at(j))]
    for n in range(j - 1, lo - 1, -1):
        fields.append(tree.one_step(n, fields[-1]))
    return AdaptedProcess(tree, lo, j, tuple(reversed(fields)), X.name)


def expectation(tree: FiltrationTree, X: AdaptedProcess, j: int) -> float:
    """Unconditional expectation E[X_j]."""
    return float(conditional_expectation(tree, X, j, 0).at(0)[0])


# ------------------------------------------------------------------------------
# Check reports and predicates
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class CheckReport:
    """
    Outcome of one property check.

    `passed` is True iff max_violation <= tolerance, except for strict checks
    (strict=True) where it requires max_violation < tolerance.
    """
    name: str
    passed: bool
    max_violation: float
    witness: Optional[Node]
    tolerance: float
    details: Dict[str, Any] = field(default_factory=dict)
    strict: bool = False

    @classmethod
    def from_fields(cls, name: str, violations: Mapping[int, np.ndarray], tolerance: float,
                    strict: bool = False, details: Optional[Dict[str, Any]] = None) -> "CheckReport":
        """Build a report from per-depth violation fields, keeping the worst node as witness."""
        worst, witness = 0.0, None
        for i in sorted(violations):
            field_values = np.asarray(violations[i], dtype=np.float64)
            if field_values.size == 0:
                continue
            k = int(np.argmax(field_values))
            if witness is None or field_values[k] > worst:
                worst, witness = float(field_values[k]), (i, k)
        passed = worst < tolerance if strict else worst <= tolerance
        report = cls(name, bool(passed), worst, witness, tolerance, dict(details or {}), strict)
        log = logging.info if report.passed else logging.warning
        log(f"Check {name}: {'pass' if report.passed else 'FAIL'} "
            f"(max violation {worst:.3e}, tolerance {tolerance:.1e}, witness {witness})")
        return report

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "pass": self.passed,
            "max_violation": self.max_violation,
            "witness": list(self.witness) if self.witness is not None else None,
            "tolerance": self.tolerance,
            "details": self.details,
        }


def scaled_gap(actual: np.ndarray, expected: np.ndarray) -> np.ndarray:
    """|a - b| / max(1, |b|): absolute on unit-scale values, relative on large ones."""
    expected = np.asarray(expected, dtype=np.float64)
    return np.abs(np.asarray(actual, dtype=np.float64) - expected) / np.maximum(1.0, np.abs(expected))


def compare_processes(name: str, actual: Union[AdaptedProcess, Mapping[int, np.ndarray]],
                      expected: Union[AdaptedProcess, Mapping[int, np.ndarray]],
                      tolerance: Optional[float] = None) -> CheckReport:
    """Node-wise identity check between two processes (or per-depth field mappings)."""
    tolerance = TOLERANCE_CONFIG['relative'] if tolerance is None else tolerance
    a = {i: actual.at(i) for i in actual.depths} if isinstance(actual, AdaptedProcess) else actual
    b = {i: expected.at(i) for i in expected.depths} if isinstance(expected, AdaptedProcess) else expected
    if set(a) != set(b):
        raise ProcessShapeMismatch(f"{name}: compared processes cover different depths")
    return CheckReport.from_fields(name, {i: scaled_gap(a[i], b[i]) for i in a}, tolerance)


def _adjacent_pairs(X: AdaptedProcess) -> range:
    if X.hi <= X.lo:
        raise EmptyRange(f"Process on [{X.lo}, {X.hi}] has no adjacent depth pair to check")
    return range(X.lo, X.hi)


def is_martingale(tree: FiltrationTree, X: AdaptedProcess, tolerance: Optional[float] = None,
                  name: str = "martingale") -> CheckReport:
    """Pass iff |E_i[X_{i+1}] - X_i| <= tolerance at every node of every adjacent depth pair."""
    _check_tree(tree, X)
    tolerance = TOLERANCE_CONFIG['identity'] if tolerance is None else tolerance
    violations = {i: np.abs(tree.one_step(i, X.at(i + 1)) - X.at(i)) for i in _adjacent_pairs(X)}
    return CheckReport.from_fields(name, violations, tolerance)


def is_strict_supermartingale(tree: FiltrationTree, X: AdaptedProcess, tolerance: Optional[float] = None,
                              name: str = "strict_supermartingale") -> CheckReport:
    """
    Pass iff X_i - E_i[X_{i+1}] > tolerance at every node.

    The reported violation is the largest E_i[X_{i+1}] - X_i (negative when the
    check passes) compared strictly against -tolerance; the smallest margin is
    kept in details["min_margin"].
    """
    _check_tree(tree, X)
    tolerance = TOLERANCE_CONFIG['strict_margin'] if tolerance is None else tolerance
    excess = {i: tree.one_step(i, X.at(i + 1)) - X.at(i) for i in _adjacent_pairs(X)}
    min_margin = -max(float(e.max()) for e in excess.values())
    return CheckReport.from_fields(name, excess, -tolerance, strict=True,
                                   details={"min_margin": min_margin})


def is_previsible(tree: FiltrationTree, X: AdaptedProcess, tolerance: Optional[float] = None,
                  name: str = "previsible") -> CheckReport:
    """Pass iff X_i is constant across the children of each depth-(i-1) node, for every i in range."""
    _check_tree(tree, X)
    if X.lo < 1:
        raise RangeStartsAtRoot("Previsibility at depth 0 is vacuous; start the range at depth 1")
    tolerance = TOLERANCE_CONFIG['identity'] if tolerance is None else tolerance
    violations = {}
    for i in X.depths:
        values = X.at(i)
        parents = tree.parents[i]
        low = np.full(tree.size(i - 1), np.inf)
        np.minimum.at(low, parents, values)
        violations[i] = values - low[parents]
    return CheckReport.from_fields(name, violations, tolerance)


def is_positive(tree: FiltrationTree, X: AdaptedProcess, name: str = "positive") -> CheckReport:
    """Pass iff X > 0 at every node; the violation is max(-X)."""
    _check_tree(tree, X)
    return CheckReport.from_fields(name, {i: -X.at(i) for i in X.depths}, 0.0, strict=True)


def is_path_increasing(tree: FiltrationTree, X: AdaptedProcess, tolerance: float = 0.0,
                       name: str = "path_increasing") -> CheckReport:
    """Pass iff X_i - X_{i-1} > tolerance on every edge of the tree inside the range."""
    _check_tree(tree, X)
    steps = {i: tree.broadcast(i, X.at(i - 1)) - X.at(i) for i in _increments(X)}
    return CheckReport.from_fields(name, steps, -tolerance, strict=True)


def _increments(X: AdaptedProcess) -> range:
    if X.hi <= X.lo:
        raise EmptyRange(f"Process on [{X.lo}, {X.hi}] has no increments")
    return range(X.lo + 1, X.hi + 1)
