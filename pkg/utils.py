"""
Utility functions for the term-structure kernel engine.

This module provides logging setup, number formatting, CSV and JSON output,
and the node-id keyed serialization of trees, processes and check reports.
"""

import json
import logging
from typing import Any, Dict, Iterable, List

import numpy as np
import pandas as pd
from rich.console import Console
from rich.logging import RichHandler

from config import CSV_COLUMNS, OUTPUT_CONFIG
from errors import ProcessShapeMismatch
from filtration import AdaptedProcess, CheckReport, FiltrationTree, tree_from_nodes


def setup_logging(verbose: bool = False) -> None:
    """
    Route log records to stderr through rich.

    Parameters:
        verbose: INFO level when True, WARNING otherwise.
    """
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def format_float(value: float) -> str:
    """Render a float with the configured number of significant digits."""
    return f"{float(value):.{OUTPUT_CONFIG['significant_digits']}g}"


def round_significant(value: Any) -> Any:
    """Round floats (recursively through dicts and lists) to the output precision."""
    if isinstance(value, (float, np.floating)):
        return float(format_float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {k: round_significant(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [round_significant(v) for v in value]
    return value


def frame_to_csv(df: pd.DataFrame) -> str:
    """CSV text with a header row, LF line endings and 12 significant digits."""
    return df.to_csv(index=False, float_format=OUTPUT_CONFIG['float_format'],
                     lineterminator=OUTPUT_CONFIG['line_terminator'])


def to_json(document: Any) -> str:
    return json.dumps(round_significant(document), indent=OUTPUT_CONFIG['json_indent']) + "\n"


# ------------------------------------------------------------------------------
# Serialization
# ------------------------------------------------------------------------------
def tree_to_dict(tree: FiltrationTree) -> Dict[str, Any]:
    """
    Node records in tree order, probabilities as decimal strings.

    Reading them back with tree_from_dict rebuilds the same ids and the same exact probabilities.
    """
    nodes: List[Dict[str, Any]] = []
    for i in range(tree.depth + 1):
        for k, label in enumerate(tree.labels[i]):
            record = {"id": label, "depth": i,
                      "parent": tree.label(i - 1, int(tree.parents[i][k])) if i else None}
            if i:
                record["probability"] = tree.probability_text[i][k]
            if tree.times is not None:
                record["time"] = tree.times[i]
            nodes.append(record)
    return {"depth": tree.depth, "nodes": nodes}


def tree_from_dict(document: Dict[str, Any]) -> FiltrationTree:
    return tree_from_nodes(document["nodes"], depth=document.get("depth"))


def process_to_dict(X: AdaptedProcess) -> Dict[str, Any]:
    """{"name", "lo", "hi", "values": {"<depth>": {"<node id>": value}}}."""
    values = {str(i): {label: float(v) for label, v in zip(X.tree.labels[i], X.at(i))} for i in X.depths}
    return {"name": X.name, "lo": X.lo, "hi": X.hi, "values": values}


def process_from_dict(tree: FiltrationTree, document: Dict[str, Any], name: str = "") -> AdaptedProcess:
    """Inverse of process_to_dict; every node of every listed depth must be present."""
    by_depth = document.get("values", document)
    depths = sorted(int(d) for d in by_depth)
    if not depths or depths != list(range(depths[0], depths[-1] + 1)):
        raise ProcessShapeMismatch(f"Process '{name}' must list a contiguous, non-empty range of depths")
    fields = []
    for i in depths:
        if i > tree.depth:
            raise ProcessShapeMismatch(f"Process '{name}' lists depth {i} beyond the tree depth {tree.depth}")
        entries = by_depth[str(i)] if str(i) in by_depth else by_depth[i]
        values = np.full(tree.size(i), np.nan)
        for label, value in entries.items():
            depth, k = tree.node_of(label)
            if depth != i:
                raise ProcessShapeMismatch(f"Node '{label}' sits at depth {depth}, listed under depth {i}")
            values[k] = float(value)
        if np.any(np.isnan(values)):
            k = int(np.argmax(np.isnan(values)))
            raise ProcessShapeMismatch(f"Process '{name}' has no value for node '{tree.label(i, k)}'")
        fields.append(values)
    return AdaptedProcess(tree, depths[0], depths[-1], tuple(fields), name or document.get("name", ""))


def process_frame(X: AdaptedProcess) -> pd.DataFrame:
    """Rows (depth, node, value) for every node of X."""
    rows = [{"depth": i, "node": label, "value": float(v)}
            for i in X.depths for label, v in zip(X.tree.labels[i], X.at(i))]
    return pd.DataFrame(rows, columns=CSV_COLUMNS['process'])


def check_reports_to_dict(reports: Iterable[CheckReport]) -> Dict[str, Any]:
    """Report document: overall status plus one record per check."""
    records = [r.to_dict() for r in reports]
    return {
        "passed": all(r["pass"] for r in records),
        "failures": sum(1 for r in records if not r["pass"]),
        "checks": records,
    }


def summary_frame(reports: Iterable[CheckReport]) -> pd.DataFrame:
    """One row per check for the human-readable summaries (console and PDF)."""
    rows = []
    for r in reports:
        if "min_margin" in r.details:
            # strict supermartingale checks: the margin must exceed the required gap
            violation = f"margin {format_float(r.details['min_margin'])}"
            tolerance = f"> {format_float(-r.tolerance)}"
        else:
            violation, tolerance = format_float(r.max_violation), format_float(r.tolerance)
        rows.append({
            "check": r.name,
            "status": "PASS" if r.passed else "FAIL",
            "max_violation": violation,
            "tolerance": tolerance,
            "witness": "" if r.witness is None else f"({r.witness[0]}, {r.witness[1]})",
        })
    return pd.DataFrame(rows, columns=["check", "status", "max_violation", "tolerance", "witness"])
