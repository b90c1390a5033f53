"""CSV and manifest readers with descriptive parse errors."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

__all__ = ["ParseError", "read_manifest", "read_sweep_table", "read_curve_family", "read_totals"]


class ParseError(ValueError):
    """An input file is missing, empty, or malformed."""


def _float(cell: str) -> float:
    return math.nan if cell == "" else float(cell)


def _read_rows(path: Path, expected_header: str) -> list[list[str]]:
    if not path.is_file():
        raise ParseError(f"missing input file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"empty input file: {path}")
    header = ",".join(rows[0])
    if header != expected_header:
        raise ParseError(f"{path}: expected header {expected_header!r}, found {header!r}")
    if len(rows) == 1:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0])
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(f"{path}:{k}: expected {width} fields, found {len(row)}")
    return rows[1:]


def read_manifest(path: Path) -> dict:
    if not Path(path).is_file():
        raise ParseError(f"missing manifest: {path}")
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None


def read_sweep_table(path: Path) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Long-format sweep: measure -> (param values, times, value grid).

    The grid has one row per parameter value and one column per time.
    """
    rows = _read_rows(Path(path), "param,t,measure,value")
    data: dict[str, dict[float, list[tuple[float, float]]]] = {}
    for param, t, measure, value in rows:
        data.setdefault(measure, {}).setdefault(float(param), []).append(
            (float(t), _float(value)))
    out = {}
    for measure, per_param in data.items():
        params = np.array(sorted(per_param))
        times = np.array([t for t, _ in per_param[params[0]]])
        grid = np.empty((len(params), len(times)))
        for i, p in enumerate(params):
            samples = per_param[p]
            if len(samples) != len(times):
                raise ParseError(f"{path}: ragged series for measure {measure!r} at param {p}")
            grid[i] = [v for _, v in samples]
        out[measure] = (params, times, grid)
    return out


def read_curve_family(path: Path) -> dict[tuple[str, float, str], tuple[np.ndarray, np.ndarray]]:
    """Family curves: (cycle, g, measure) -> (times, values)."""
    rows = _read_rows(Path(path), "cycle,g,t,measure,value")
    data: dict[tuple[str, float, str], list[tuple[float, float]]] = {}
    for cycle, g, t, measure, value in rows:
        data.setdefault((cycle, float(g), measure), []).append((float(t), _float(value)))
    return {key: (np.array([t for t, _ in samples]), np.array([v for _, v in samples]))
            for key, samples in data.items()}


def read_totals(path: Path) -> dict[tuple[str, float, str], float]:
    """Backflow totals: (cycle, g, subsystem) -> value."""
    rows = _read_rows(Path(path), "cycle,g,subsystem,value")
    return {(cycle, float(g), sub): _float(value) for cycle, g, sub, value in rows}
