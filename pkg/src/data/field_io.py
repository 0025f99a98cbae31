"""
Field CSVs and the JSON run report.

Outputs carry no timestamps or host data; with a fixed seed every file is byte-identical
across runs.
"""

import json
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np
import pandas as pd

from data.functions import SystemSpec
from data.models import ConditionReport, Grid, InvertibilityReport, LogisticSolution, PerturbationReport, SolveReport, SystemState, UniquenessReport

SCHEMA_VERSION = "1.0"
FLOAT_FORMAT = "%.17g"


def field_frame(grid: Grid, columns: Mapping[str, np.ndarray]) -> pd.DataFrame:
    """One row per interior node: x[, y] followed by the given value columns."""
    coordinates = grid.node_coordinates()
    frame = pd.DataFrame(coordinates, columns=["x", "y"][: grid.dim])
    for name, values in columns.items():
        frame[name] = np.asarray(values, dtype=float)
    return frame


def write_frame_csv(path: Path, frame: pd.DataFrame) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_field_csv(path: Path, grid: Grid, columns: Mapping[str, np.ndarray]) -> Path:
    return write_frame_csv(path, field_frame(grid, columns))


def write_state_csv(path: Path, state: SystemState) -> Path:
    columns = {f"u{i + 1}": field.values for i, field in enumerate(state.fields)}
    return write_field_csv(path, state.grid, columns)


def state_summary(state: SystemState) -> Dict[str, Any]:
    stacked = state.stacked()
    return {"sup_norms": [float(v) for v in np.max(np.abs(stacked), axis=1)], "min_values": [float(v) for v in np.min(stacked, axis=1)]}


def spec_summary(spec: SystemSpec) -> Dict[str, Any]:
    return {
        "grid": spec.grid.model_dump(mode="json"),
        "working_max": spec.working_max,
        "species": [
            {
                "h": sp.h.model_dump(mode="json", exclude={"scan_samples"}),
                "g": sp.g.model_dump(mode="json"),
                "k": float(sp.k),
            }
            for sp in spec.species
        ],
    }


def condition_report_dict(report: ConditionReport) -> Dict[str, Any]:
    return {"name": report.name, "all_passed": report.all_passed, "entries": [entry.model_dump(mode="json") for entry in report.entries]}


def solve_report_dict(report: SolveReport) -> Dict[str, Any]:
    return {**report.model_dump(mode="json", exclude={"state"}), "state": state_summary(report.state)}


def uniqueness_dict(report: UniquenessReport) -> Dict[str, Any]:
    payload = report.model_dump(mode="json", exclude={"distinct_solutions", "boundary_states"})
    payload["distinct_solutions"] = [state_summary(state) for state in report.distinct_solutions]
    payload["boundary_states"] = [state_summary(state) for state in report.boundary_states]
    return payload


def invertibility_dict(report: InvertibilityReport) -> Dict[str, Any]:
    return report.model_dump(mode="json")


def logistic_dict(solution: LogisticSolution) -> Dict[str, Any]:
    return {**solution.model_dump(mode="json", exclude={"theta"}), "sup_norm": solution.theta.sup_norm()}


def perturbation_dict(report: PerturbationReport) -> Dict[str, Any]:
    return report.model_dump(mode="json")


def write_report(path: Path, command: str, payload: Mapping[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"schema_version": SCHEMA_VERSION, "command": command, **payload}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True, default=str, ensure_ascii=False)
        f.write("\n")
    return path
