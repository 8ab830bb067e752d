"""
Model configuration documents.

A configuration is a JSON document naming a tree, exactly one kernel spec,
optional dividend assets and FX legs, output selections and a tolerance.
Parsing checks the document's shape; building turns it into validated model
objects. Shape problems raise ConfigParseError with a line/column or a field
path; kernel rejections propagate as KernelError with their check report.
"""

import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from assets import DividendAsset, FXLeg, price_fundamental
from errors import ConfigParseError, KernelError, TermStructureError
from filtration import AdaptedProcess, FiltrationTree, build_tree
from kernel import (
    MoneyMarketAccount,
    PositiveReturnAsset,
    PricingKernel,
    kernel_from_increasing,
    kernel_from_process,
    kernel_rational,
    multiplicative_decomposition,
    short_rate,
)
from models import MartingaleSpec, RationalModel, Schedule, gen_martingale, gen_schedule
from utils import process_from_dict

TOP_LEVEL_KEYS = {"tree", "kernel", "assets", "fx", "outputs", "tolerance"}
KERNEL_TYPES = ("rational", "from-increasing", "explicit")


@dataclass(frozen=True)
class ModelConfig:
    """Shape-checked configuration document."""
    kernel: Dict[str, Any]
    tree: Optional[Dict[str, Any]] = None
    assets: Tuple[Dict[str, Any], ...] = ()
    fx: Tuple[Dict[str, Any], ...] = ()
    outputs: Dict[str, Any] = field(default_factory=dict)
    tolerance: Optional[float] = None


@dataclass(frozen=True, eq=False)
class Model:
    """Everything a configuration builds: the kernel plus the objects the commands report on."""
    config: ModelConfig
    kernel: PricingKernel
    account: MoneyMarketAccount
    rho: AdaptedProcess
    rational: Optional[RationalModel] = None
    increasing: Optional[Tuple[AdaptedProcess, PositiveReturnAsset]] = None
    assets: Dict[str, DividendAsset] = field(default_factory=dict)
    fx: Dict[str, FXLeg] = field(default_factory=dict)

    @property
    def tree(self) -> FiltrationTree:
        return self.kernel.tree


# ------------------------------------------------------------------------------
# Parsing
# ------------------------------------------------------------------------------
def _expect(value: Any, kind, path: str, what: str):
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigParseError(f"Expected {what}", field=path)
    return value


def _number(value: Any, path: str) -> float:
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ConfigParseError(f"Expected a number, got '{value}'", field=path)
    return float(_expect(value, (int, float), path, "a number"))


def parse_config(text: str) -> ModelConfig:
    """
    Parse a configuration document.

    Parameters:
        text: JSON text.

    Returns:
        ModelConfig: The shape-checked document.

    Raises:
        ConfigParseError: Invalid JSON (with line and column) or a schema error (with the field path).
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"Invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from e
    _expect(document, dict, "", "a JSON object at the top level")
    unknown = sorted(set(document) - TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigParseError(f"Unknown key '{unknown[0]}'", field=unknown[0])
    if "kernel" not in document:
        raise ConfigParseError("Exactly one kernel spec is required", field="kernel")

    kernel = _expect(document["kernel"], dict, "kernel", "an object")
    if kernel.get("type") not in KERNEL_TYPES:
        raise ConfigParseError(f"Kernel type must be one of {KERNEL_TYPES}", field="kernel.type")
    if kernel["type"] == "rational":
        for key in ("alpha", "beta", "martingale"):
            if key not in kernel:
                raise ConfigParseError("Missing rational-model input", field=f"kernel.{key}")
        _expect(kernel["martingale"], dict, "kernel.martingale", "an object")
    elif "process" not in kernel:
        raise ConfigParseError("Missing kernel process", field="kernel.process")

    tree = document.get("tree")
    branching_driver = kernel["type"] == "rational" and kernel["martingale"].get("kind") == "branching-process"
    if tree is None and not branching_driver:
        raise ConfigParseError("A tree is required unless a branching-process martingale builds it", field="tree")
    if tree is not None:
        _expect(tree, dict, "tree", "an object")
        if "nodes" not in tree and "branching" not in tree:
            raise ConfigParseError("Tree needs 'branching' or 'nodes'", field="tree")

    assets = tuple(_expect(a, dict, f"assets[{n}]", "an object")
                   for n, a in enumerate(_expect(document.get("assets", []), list, "assets", "a list")))
    fx = tuple(_expect(a, dict, f"fx[{n}]", "an object")
               for n, a in enumerate(_expect(document.get("fx", []), list, "fx", "a list")))
    seen = set()
    for section, entries in (("assets", assets), ("fx", fx)):
        for n, entry in enumerate(entries):
            name = entry.get("id")
            if not isinstance(name, str) or not name:
                raise ConfigParseError("Every entry needs a string id", field=f"{section}[{n}].id")
            if name in seen:
                raise ConfigParseError(f"Duplicate id '{name}'", field=f"{section}[{n}].id")
            seen.add(name)
            if "dividends" not in entry:
                raise ConfigParseError("Missing dividends", field=f"{section}[{n}].dividends")

    outputs = _expect(document.get("outputs", {}), dict, "outputs", "an object")
    tolerance = document.get("tolerance")
    if tolerance is not None:
        tolerance = _number(tolerance, "tolerance")
        if not tolerance >= 0:
            raise ConfigParseError("Tolerance must be non-negative", field="tolerance")
    return ModelConfig(kernel, tree, assets, fx, outputs, tolerance)


def load_config(path: Union[str, Path]) -> ModelConfig:
    logging.info(f"Loading model configuration from {path}")
    return parse_config(Path(path).read_text(encoding="utf-8"))


# ------------------------------------------------------------------------------
# Building
# ------------------------------------------------------------------------------
@contextmanager
def _at(path: str):
    """Report document-level model errors against their field; kernel rejections pass through."""
    try:
        yield
    except KernelError:
        raise
    except ConfigParseError as e:
        if e.field is None and e.line is None:
            raise ConfigParseError(str(e), field=path) from e
        raise
    except TermStructureError as e:
        raise ConfigParseError(str(e), field=path) from e
    except (LookupError, TypeError, ValueError) as e:
        raise ConfigParseError(f"Malformed entry: {e}", field=path) from e


def _tree(spec: Dict[str, Any]) -> FiltrationTree:
    return build_tree(branching=spec.get("branching"), probabilities=spec.get("probabilities"),
                      times=spec.get("times"), nodes=spec.get("nodes"))


def _schedule(spec: Any, depth: int) -> Schedule:
    if isinstance(spec, list):
        return gen_schedule("explicit", {"values": spec}, depth)
    parameters = {k: v for k, v in spec.items() if k != "kind"}
    return gen_schedule(spec.get("kind", "explicit"), parameters, depth)


def _martingale_spec(spec: Dict[str, Any]) -> MartingaleSpec:
    parameters = {k: v for k, v in spec.items() if k not in ("kind", "initial")}
    return MartingaleSpec(spec.get("kind"), parameters, spec.get("initial", 1.0))


def parse_process(tree: FiltrationTree, spec: Any, name: str) -> AdaptedProcess:
    """Read a PROCESS value: deterministic list, per-depth node lists, or node-id keyed values."""
    if not isinstance(spec, dict):
        raise ConfigParseError("Expected a process object")
    start = int(spec.get("start", 0))
    if "deterministic" in spec:
        return AdaptedProcess.deterministic(tree, [float(v) for v in spec["deterministic"]], start, name)
    if "nodes" in spec:
        fields = tuple(np.asarray(row, dtype=np.float64) for row in spec["nodes"])
        return AdaptedProcess(tree, start, start + len(fields) - 1, fields, name)
    if "values" in spec:
        return process_from_dict(tree, spec, name)
    raise ConfigParseError("Process needs 'deterministic', 'nodes' or 'values'")


def _kernel(config: ModelConfig, tolerance: float):
    spec = config.kernel
    rational, increasing = None, None
    if spec["type"] == "rational":
        tree = None
        if config.tree is not None:
            with _at("tree"):
                tree = _tree(config.tree)
        with _at("kernel.martingale"):
            tree, N = gen_martingale(_martingale_spec(spec["martingale"]), tree)
        with _at("kernel.alpha"):
            alpha = _schedule(spec["alpha"], tree.depth)
        with _at("kernel.beta"):
            beta = _schedule(spec["beta"], tree.depth)
        rational = RationalModel(tree, alpha, beta, N)
        kernel = kernel_rational(tree, alpha, beta, N, tolerance)
    else:
        with _at("tree"):
            tree = _tree(config.tree)
        with _at("kernel.process"):
            process = parse_process(tree, spec["process"], "pi" if spec["type"] == "explicit" else "G")
        if spec["type"] == "explicit":
            kernel = kernel_from_process(tree, process, tolerance)
        else:
            kernel, asset = kernel_from_increasing(tree, process, tolerance)
            increasing = (process, asset)
    return kernel, rational, increasing


def _cash_flows(model_kernel: PricingKernel, spec: Any, path: str) -> Optional[AdaptedProcess]:
    if spec == "zero":
        return None
    if spec == "short-rate":
        return short_rate(model_kernel)
    with _at(path):
        return parse_process(model_kernel.tree, spec, "D")


def build_model(config: ModelConfig) -> Model:
    """
    Build the kernel, its money-market account, assets and FX legs.

    Raises:
        ConfigParseError: A document-level problem, reported against its field.
        KernelError: The kernel (or its inputs) failed validation; carries the failing report.
    """
    tolerance = config.tolerance
    kernel, rational, increasing = _kernel(config, tolerance)
    account, rho = multiplicative_decomposition(kernel)

    assets: Dict[str, DividendAsset] = {}
    for n, spec in enumerate(config.assets):
        path = f"assets[{n}]"
        dividends = _cash_flows(kernel, spec["dividends"], f"{path}.dividends")
        redemption = _number(spec.get("redemption", 0.0), f"{path}.redemption")
        value = spec.get("value")
        with _at(f"{path}.value"):
            if value == "money-market":
                value = account.balance
            elif value == "fundamental":
                value = price_fundamental(kernel, dividends, redemption)
            elif value is not None:
                value = parse_process(kernel.tree, value, "S")
                if value.lo > 0 or value.hi < kernel.horizon:
                    raise ConfigParseError(f"Value process must cover depths 0..{kernel.horizon}, "
                                           f"got [{value.lo}, {value.hi}]")
        with _at(path):
            assets[spec["id"]] = DividendAsset(spec["id"], dividends, redemption, value)

    fx: Dict[str, FXLeg] = {}
    for n, spec in enumerate(config.fx):
        path = f"fx[{n}]"
        dividends = _cash_flows(kernel, spec["dividends"], f"{path}.dividends")
        if dividends is None:
            dividends = AdaptedProcess.constant(kernel.tree, 0.0, 1, kernel.horizon, "D")
        redemption = _number(spec.get("redemption", 1.0), f"{path}.redemption")
        fx[spec["id"]] = FXLeg(spec["id"], dividends, redemption)

    logging.info(f"Built model: horizon {kernel.horizon}, {len(assets)} assets, {len(fx)} FX legs")
    return Model(config, kernel, account, rho, rational, increasing, assets, fx)
