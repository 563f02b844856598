"""JSON and CSV serialization for the toolkit's value types.

All numeric report fields are normalized to 12 significant digits so that
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .approx import SampleSet
from .discrete_mot import DiscreteMeasure, PlanMatrix
from .riccati import CovarianceBlocks
from .sspace import LinearMonotoneGraph, PiecewiseMonotoneGraph, ScalarProductMatrix, standard_matrix

__all__ = [
    "sig12",
    "canonical",
    "dump_report",
    "blocks_to_dict",
    "blocks_from_dict",
    "measure_to_dict",
    "measure_from_dict",
    "plan_to_dict",
    "plan_from_dict",
    "graph_to_dict",
    "graph_from_dict",
    "parse_scalar_matrix",
    "read_samples_csv",
    "write_samples_csv",
]


def sig12(x: float) -> float:
    """Round a float to 12 significant digits (report precision)."""
    return float(f"{float(x):.12g}")


def canonical(obj):
    """Recursively normalize floats/arrays so json.dumps output is stable."""
    if isinstance(obj, dict):
        return {k: canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return sig12(obj)
    return obj


def dump_report(obj, path) -> None:
    Path(path).write_text(json.dumps(canonical(obj), indent=2, sort_keys=True) + "\n")


def blocks_to_dict(blocks: CovarianceBlocks) -> dict:
    return {
        "m": blocks.m,
        "suu": blocks.suu.tolist(),
        "suv": blocks.suv.tolist(),
        "svv": blocks.svv.tolist(),
    }


def blocks_from_dict(d: dict) -> CovarianceBlocks:
    return CovarianceBlocks(m=int(d["m"]), suu=d["suu"], suv=d["suv"], svv=d["svv"])


def measure_to_dict(nu: DiscreteMeasure) -> dict:
    return {"points": nu.points.tolist(), "weights": nu.weights.tolist()}


def measure_from_dict(d: dict) -> DiscreteMeasure:
    return DiscreteMeasure(points=d["points"], weights=d["weights"])


def plan_to_dict(plan: PlanMatrix) -> dict:
    return {
        "x_grid": canonical(plan.x_grid),
        "gamma": canonical(plan.gamma),
        "value": sig12(plan.value),
        "y_points": canonical(plan.y_points),
        "y_weights": canonical(plan.y_weights),
    }


def plan_from_dict(d: dict) -> PlanMatrix:
    return PlanMatrix(
        x_grid=d["x_grid"],
        gamma=d["gamma"],
        value=float(d["value"]),
        y_points=d["y_points"],
        y_weights=d["y_weights"],
    )


def graph_to_dict(G) -> dict:
    if isinstance(G, LinearMonotoneGraph):
        return {"kind": "linear", "A": G.A.tolist()}
    if isinstance(G, PiecewiseMonotoneGraph):
        return {
            "kind": "pwl",
            "breakpoints": G.breakpoints.tolist(),
            "left_slope": G.left_slope,
            "right_slope": G.right_slope,
        }
    raise TypeError(f"unsupported graph type {type(G).__name__}")


def graph_from_dict(d: dict):
    kind = d["kind"]
    if kind == "linear":
        return LinearMonotoneGraph.from_matrix(d["A"])
    if kind == "pwl":
        return PiecewiseMonotoneGraph(
            breakpoints=d["breakpoints"],
            left_slope=d.get("left_slope"),
            right_slope=d.get("right_slope"),
        )
    raise ValueError(f"unknown graph kind {kind!r}")


def parse_scalar_matrix(spec) -> ScalarProductMatrix:
    """Parse 'standard:m', a matrix list, or {'entries': [[...]]}."""
    if isinstance(spec, str):
        if spec.startswith("standard:"):
            return standard_matrix(int(spec.split(":", 1)[1]))
        raise ValueError(f"unknown scalar-product spec {spec!r}")
    if isinstance(spec, dict):
        return ScalarProductMatrix.from_matrix(spec["entries"])
    return ScalarProductMatrix.from_matrix(spec)


def read_samples_csv(path) -> SampleSet:
    """Read a sample file with columns x_1..x_dx, y_1..y_dy."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        x_cols = [i for i, name in enumerate(header) if name.strip().startswith("x_")]
        y_cols = [i for i, name in enumerate(header) if name.strip().startswith("y_")]
        if not x_cols or not y_cols:
            raise ValueError("sample CSV must have x_* and y_* columns")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows)
    return SampleSet(X=data[:, x_cols], Y=data[:, y_cols])


def write_samples_csv(path, arrays: dict) -> None:
    """Write named column groups ({'u': (n, m), ...}) as name_1..name_m columns."""
    names = []
    stacked = []
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=float)
        names.extend(f"{name}_{i + 1}" for i in range(arr.shape[1]))
        stacked.append(arr)
    data = np.hstack(stacked)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in data:
            writer.writerow([f"{v:.12g}" for v in row])
