"""Scenario runner and sweep engine: computes named measures over
trajectories and emits CSV datasets plus JSON manifests.

All numeric output uses the shortest round-trip decimal form of the
underlying binary64 value and gaps are emitted as empty fields, so
re-running a command with the same configuration produces byte-identical
files.  Manifests carry the fully resolved configuration and sha256
checksums of every emitted file; nothing time- or host-dependent is written.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .dynamics import IntegrationFailure, Trajectory, evolve
from .infomeasures import BlpResult, blp_non_markovianity, concurrence
from .model import ConfigError, ScenarioConfig
from .qcore import entropy_of_probabilities, entropy_stack
from . import thermo
from .thermo import MeasureSeries

__all__ = [
    "SweepSpec",
    "RunContext",
    "MEASURE_GROUPS",
    "DEFAULT_MEASURES",
    "resolve_measures",
    "compute_measures",
    "run_single",
    "run_sweep",
    "run_figures",
    "FIGURE_PROTOCOLS",
]


# ---------------------------------------------------------------------------
# measure registry

class RunContext:
    """Lazily evolves and caches the trajectories one configuration needs.

    The cache dictionary may be shared between contexts (e.g. across the
    canned figure protocols) since entries are keyed by the full resolved
    configuration and initial-state variant.
    """

    def __init__(self, config: ScenarioConfig, cache: dict | None = None):
        self.config = config.validate()
        self._cache = cache if cache is not None else {}
        self._key = tuple(sorted(config.as_dict().items()))

    def trajectory(self, variant: str = "coherent_S") -> Trajectory:
        key = (self._key, variant)
        if key not in self._cache:
            self._cache[key] = evolve(self.config, variant)
        return self._cache[key]

    def blp(self, subsystem: str) -> BlpResult:
        key = (self._key, "blp", subsystem)
        if key not in self._cache:
            twins = (self.trajectory("coherent_S"), self.trajectory("dephased_S"))
            self._cache[key] = blp_non_markovianity(self.config, subsystem, trajectories=twins)
        return self._cache[key]


def _diag_entropy_stack(states: np.ndarray, base: float) -> np.ndarray:
    diags = np.real(np.einsum("nii->ni", np.asarray(states)))
    return np.array([entropy_of_probabilities(row, base) for row in diags])


def _coherence_stack(states: np.ndarray, base: float) -> np.ndarray:
    return _diag_entropy_stack(states, base) - entropy_stack(states, base)


def _measure_mutual_information_ms(ctx: RunContext) -> MeasureSeries:
    traj = ctx.trajectory()
    base = ctx.config.log_base_value
    values = (entropy_stack(traj.reduced("M"), base)
              + entropy_stack(traj.reduced("S"), base)
              - entropy_stack(traj.states, base))
    return MeasureSeries("mutual_information_MS", traj.times, values,
                         units="bits" if ctx.config.log_base == "2" else "nats")


def _measure_mutual_information_s(ctx: RunContext) -> MeasureSeries:
    traj = ctx.trajectory()
    base = ctx.config.log_base_value
    values = (entropy_stack(traj.reduced("S1"), base)
              + entropy_stack(traj.reduced("S2"), base)
              - entropy_stack(traj.reduced("S"), base))
    return MeasureSeries("mutual_information_S1S2", traj.times, values,
                         units="bits" if ctx.config.log_base == "2" else "nats")


def _measure_concurrence(ctx: RunContext) -> MeasureSeries:
    traj = ctx.trajectory()
    values = np.array([concurrence(r) for r in traj.reduced("S")])
    return MeasureSeries("concurrence_S1S2", traj.times, values, units="dimensionless")


def _measure_coherence(label: str) -> Callable[[RunContext], MeasureSeries]:
    def compute(ctx: RunContext) -> MeasureSeries:
        traj = ctx.trajectory()
        values = _coherence_stack(traj.reduced(label), ctx.config.log_base_value)
        return MeasureSeries(f"coherence_{label}", traj.times, values,
                             units="bits" if ctx.config.log_base == "2" else "nats")
    return compute


def _measure_coherence_correlation(ctx: RunContext) -> MeasureSeries:
    traj = ctx.trajectory()
    base = ctx.config.log_base_value
    values = (_coherence_stack(traj.reduced("S"), base)
              - _coherence_stack(traj.reduced("S1"), base)
              - _coherence_stack(traj.reduced("S2"), base))
    return MeasureSeries("coherence_correlation", traj.times, values,
                         units="bits" if ctx.config.log_base == "2" else "nats")


def _measure_entropy_production(ctx: RunContext) -> MeasureSeries:
    return thermo.entropy_production_series(ctx.trajectory())


def _measure_entropy_production_rate(ctx: RunContext) -> MeasureSeries:
    sigma = thermo.entropy_production_series(ctx.trajectory())
    series = thermo.entropy_production_rate_series(sigma)
    series.name = "entropy_production_rate"
    return series


def _measure_temperature_virtual(ctx: RunContext) -> MeasureSeries:
    series = thermo.virtual_temperature_series(ctx.trajectory(), "M")
    series.name = "temperature_virtual"
    return series


MEASURES: dict[str, Callable[[RunContext], MeasureSeries]] = {}
for _lb in ("M1", "M2", "S1", "S2"):
    MEASURES[f"heat_{_lb}"] = (lambda lb: lambda ctx: thermo.heat_series(ctx.trajectory(), lb))(_lb)
for _lb in ("M1", "M2"):
    MEASURES[f"temperature_{_lb}"] = (
        lambda lb: lambda ctx: thermo.effective_temperature_series(ctx.trajectory(), lb))(_lb)
MEASURES["temperature_virtual"] = _measure_temperature_virtual
MEASURES["virtual_heat"] = lambda ctx: thermo.virtual_heat_series(ctx.trajectory())
MEASURES["entropy_production"] = _measure_entropy_production
MEASURES["entropy_production_rate"] = _measure_entropy_production_rate
for _sub in ("M", "S1", "S2"):
    MEASURES[f"blp_distance_{_sub}"] = (lambda s: lambda ctx: ctx.blp(s).distance)(_sub)
    MEASURES[f"blp_rate_{_sub}"] = (lambda s: lambda ctx: ctx.blp(s).rate)(_sub)
    MEASURES[f"blp_cumulative_{_sub}"] = (lambda s: lambda ctx: ctx.blp(s).cumulative)(_sub)
MEASURES["mutual_information_MS"] = _measure_mutual_information_ms
MEASURES["mutual_information_S1S2"] = _measure_mutual_information_s
MEASURES["concurrence_S1S2"] = _measure_concurrence
for _lb in ("S", "S1", "S2"):
    MEASURES[f"coherence_{_lb}"] = _measure_coherence(_lb)
MEASURES["coherence_correlation"] = _measure_coherence_correlation

MEASURE_GROUPS: dict[str, tuple[str, ...]] = {
    "heat": ("heat_M1", "heat_M2", "heat_S1", "heat_S2"),
    "temperature": ("temperature_M1", "temperature_M2", "temperature_virtual"),
    "entropy": ("entropy_production", "entropy_production_rate"),
    "blp": tuple(f"blp_{kind}_{sub}" for kind in ("distance", "rate", "cumulative")
                 for sub in ("M", "S1", "S2")),
    "information": ("mutual_information_MS", "mutual_information_S1S2"),
    "concurrence": ("concurrence_S1S2",),
    "coherence": ("coherence_S", "coherence_S1", "coherence_S2", "coherence_correlation"),
}

SPECIAL_MEASURES = ("cycle", "trajectory")
DEFAULT_MEASURES = ("heat", "temperature", "virtual_heat", "entropy", "blp",
                    "information", "concurrence", "coherence", "cycle")


def resolve_measures(names: Iterable[str]) -> list[str]:
    """Expand group aliases into concrete measure names, preserving order."""
    resolved: list[str] = []
    for name in names:
        name = name.strip()
        if name == "all":
            expansion = [m for group in MEASURE_GROUPS.values() for m in group]
            expansion += ["virtual_heat", "cycle"]
        elif name in MEASURE_GROUPS:
            expansion = list(MEASURE_GROUPS[name])
        elif name in MEASURES or name in SPECIAL_MEASURES:
            expansion = [name]
        else:
            raise ConfigError(f"unknown measure {name!r}")
        for m in expansion:
            if m not in resolved:
                resolved.append(m)
    if not resolved:
        raise ConfigError("no measures requested")
    return resolved


def compute_measures(config: ScenarioConfig, measure_names: Sequence[str],
                     cache: dict | None = None) -> tuple[dict[str, MeasureSeries], dict]:
    """Evaluate concrete measures; returns (series by name, manifest extras)."""
    ctx = RunContext(config, cache)
    series: dict[str, MeasureSeries] = {}
    extras: dict = {"cycle": thermo.classify_cycle(config).value}
    for name in measure_names:
        if name == "cycle":
            continue
        if name == "trajectory":
            continue  # handled by run_single only
        series[name] = MEASURES[name](ctx)
    blp_subs = sorted({name.rsplit("_", 1)[1] for name in measure_names
                       if name.startswith("blp_")}, key="M S1 S2".split().index)
    if blp_subs:
        extras["non_markovianity"] = {sub: ctx.blp(sub).total for sub in blp_subs}
    return series, extras


# ---------------------------------------------------------------------------
# deterministic serialization

def format_value(x: float) -> str:
    """Shortest round-trip decimal; gaps become empty fields."""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_series_csv(path: Path, series: MeasureSeries) -> None:
    lines = ["t,value"]
    lines += [f"{format_value(t)},{format_value(v)}" for t, v in zip(series.times, series.values)]
    _write_text(path, "\n".join(lines) + "\n")


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    """Dump the full state: t, 256 real parts, 256 imaginary parts, row-major."""
    dim = traj.states.shape[1]
    header = (["t"]
              + [f"re_{k:03d}" for k in range(dim * dim)]
              + [f"im_{k:03d}" for k in range(dim * dim)])
    lines = [",".join(header)]
    for t, state in zip(traj.times, traj.states):
        flat = state.reshape(-1)  # row-major
        row = [format_value(t)]
        row += [format_value(x) for x in flat.real]
        row += [format_value(x) for x in flat.imag]
        lines.append(",".join(row))
    _write_text(path, "\n".join(lines) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, manifest: dict, created: list[Path]) -> dict:
    manifest["outputs"] = {p.relative_to(out_dir).as_posix(): _sha256(p) for p in sorted(created)}
    _write_text(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _cleanup(created: list[Path]) -> None:
    for p in created:
        try:
            p.unlink()
        except OSError:
            pass


# ---------------------------------------------------------------------------
# run / sweep

def run_single(config: ScenarioConfig, measures: Iterable[str], out_dir: str | Path,
               cache: dict | None = None) -> dict:
    """One scenario: a CSV per concrete measure plus a manifest."""
    out = Path(out_dir)
    resolved = resolve_measures(measures)
    created: list[Path] = []
    try:
        series, extras = compute_measures(config, resolved, cache)
        out.mkdir(parents=True, exist_ok=True)
        for name in resolved:
            if name in SPECIAL_MEASURES:
                continue
            path = out / f"{name}.csv"
            write_series_csv(path, series[name])
            created.append(path)
        if "trajectory" in resolved:
            ctx = RunContext(config, cache)
            path = out / "trajectory.csv"
            write_trajectory_csv(path, ctx.trajectory())
            created.append(path)
    except IntegrationFailure:
        _cleanup(created)
        raise
    manifest = {"command": "run", "config": config.as_dict(), "measures": resolved, **extras}
    return _write_manifest(out, manifest, created)


_NUMERIC_FIELDS = {f.name for f in dc_fields(ScenarioConfig) if f.type in ("float", "int")}


@dataclass
class SweepSpec:
    """A one-parameter family of scenarios sharing a base configuration."""

    parameter: str
    values: Sequence[float]
    base: ScenarioConfig
    out_dir: Path
    measures: Sequence[str] = ("heat",)
    workers: int | None = None

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if self.parameter not in _NUMERIC_FIELDS:
            raise ConfigError(f"swept parameter {self.parameter!r} is not a numeric scenario key")
        vals = [float(v) for v in self.values]
        if not vals:
            raise ConfigError("sweep needs a nonempty value list")
        if len(vals) > 1:
            increasing = all(b > a for a, b in zip(vals, vals[1:]))
            decreasing = all(b < a for a, b in zip(vals, vals[1:]))
            if not (increasing or decreasing):
                raise ConfigError("sweep values must be strictly monotone")
        self.values = vals


def _worker_count(requested: int | None) -> int:
    if requested is not None:
        return max(1, int(requested))
    return max(1, os.cpu_count() or 1)


def _parallel_indexed(items: Sequence, fn: Callable, workers: int | None) -> list:
    """Apply fn to each item, returning results in input order."""
    n = _worker_count(workers)
    if n == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _sweep_rows(series: dict[str, MeasureSeries], resolved: Sequence[str],
                key_prefix: Sequence[str]) -> list[str]:
    rows = []
    prefix = ",".join(key_prefix)
    for name in resolved:
        if name in SPECIAL_MEASURES:
            continue
        s = series[name]
        for t, v in zip(s.times, s.values):
            rows.append(f"{prefix},{format_value(t)},{name},{format_value(v)}")
    return rows


def run_sweep(spec: SweepSpec, cache: dict | None = None) -> dict:
    """Long-format dataset over a swept parameter; per-point failures are recorded."""
    resolved = resolve_measures(spec.measures)
    if "trajectory" in resolved:
        raise ConfigError("the trajectory dump is not available inside sweeps")
    shared = cache if cache is not None else {}

    def one_point(indexed) -> dict:
        index, value = indexed
        try:
            config = spec.base.with_overrides({spec.parameter: value}).validate()
            series, extras = compute_measures(config, resolved, shared)
            rows = _sweep_rows(series, resolved, [format_value(value)])
            return {"value": value, "rows": rows, **extras}
        except (ConfigError, IntegrationFailure, ValueError) as exc:
            return {"value": value, "error": f"{type(exc).__name__}: {exc}"}

    results = _parallel_indexed(list(enumerate(spec.values)), one_point, spec.workers)

    lines = ["param,t,measure,value"]
    failures = []
    cycles = {}
    nm_totals = {}
    for res in results:
        if "error" in res:
            failures.append({"value": res["value"], "error": res["error"]})
            continue
        lines.extend(res["rows"])
        cycles[format_value(res["value"])] = res["cycle"]
        if "non_markovianity" in res:
            nm_totals[format_value(res["value"])] = res["non_markovianity"]

    spec.out_dir.mkdir(parents=True, exist_ok=True)
    data_path = spec.out_dir / "sweep.csv"
    _write_text(data_path, "\n".join(lines) + "\n")
    manifest = {
        "command": "sweep",
        "parameter": spec.parameter,
        "values": [float(v) for v in spec.values],
        "config": spec.base.as_dict(),
        "measures": resolved,
        "boundary_T_M1": thermo.cycle_boundary_temperature(spec.base),
        "cycles": cycles,
        "failures": failures,
    }
    if nm_totals:
        manifest["non_markovianity"] = nm_totals
    return _write_manifest(spec.out_dir, manifest, [data_path])


# ---------------------------------------------------------------------------
# canned figure protocols

CYCLE_FRACTIONS = {"A": 0.1, "B": 0.8}      # T_M1 as a fraction of T_M2
G_FAMILY_FRACTIONS = (0.03, 0.05, 0.07, 0.09)  # coupling in units of E_M2
SWEEP_STEPS = 46

FAMILY_HEADER = "cycle,g,t,measure,value"


def _family_dataset(base: ScenarioConfig, measures: Sequence[str], out_dir: Path,
                    workers: int | None, cache: dict) -> tuple[dict, list[Path]]:
    """Curves over (cycle, coupling) pairs in one long CSV."""
    resolved = resolve_measures(measures)
    g_values = [round(frac * base.E_M2, 12) for frac in G_FAMILY_FRACTIONS]
    points = [(cycle, g) for cycle in ("A", "B") for g in g_values]

    def one_point(point) -> dict:
        cycle, g = point
        config = base.with_overrides(
            {"T_M1": round(CYCLE_FRACTIONS[cycle] * base.T_M2, 12), "g": g}).validate()
        series, extras = compute_measures(config, resolved, cache)
        rows = _sweep_rows(series, resolved, [cycle, format_value(g)])
        return {"cycle": cycle, "g": g, "rows": rows, **extras}

    results = _parallel_indexed(points, one_point, workers)
    lines = [FAMILY_HEADER]
    nm_rows = []
    for res in results:
        lines.extend(res["rows"])
        for sub, total in res.get("non_markovianity", {}).items():
            nm_rows.append(f"{res['cycle']},{format_value(res['g'])},{sub},{format_value(total)}")

    out_dir.mkdir(parents=True, exist_ok=True)
    created = [out_dir / "curves.csv"]
    _write_text(created[0], "\n".join(lines) + "\n")
    if nm_rows:
        totals = out_dir / "nm_totals.csv"
        _write_text(totals, "\n".join(["cycle,g,subsystem,value"] + nm_rows) + "\n")
        created.append(totals)
    info = {
        "kind": "curve_family",
        "measures": resolved,
        "g_values": g_values,
        "cycle_T_M1": {c: round(CYCLE_FRACTIONS[c] * base.T_M2, 12) for c in ("A", "B")},
        "data": "curves.csv",
    }
    if nm_rows:
        info["totals"] = "nm_totals.csv"
    return info, created


def _contour_dataset(base: ScenarioConfig, measures: Sequence[str], out_dir: Path,
                     workers: int | None, cache: dict) -> tuple[dict, list[Path]]:
    """T_M1 x time sweep for contour panels."""
    values = [float(v) for v in np.linspace(0.1 * base.T_M2, base.T_M2, SWEEP_STEPS)]
    spec = SweepSpec(parameter="T_M1", values=values, base=base,
                     out_dir=out_dir, measures=measures, workers=workers)
    manifest = run_sweep(spec, cache)
    if manifest["failures"]:
        raise IntegrationFailure(f"contour sweep had {len(manifest['failures'])} failed points", math.nan)
    info = {
        "kind": "contour_sweep",
        "measures": manifest["measures"],
        "parameter": "T_M1",
        "values": values,
        "boundary_T_M1": manifest["boundary_T_M1"],
        "data": "sweep.csv",
    }
    return info, [out_dir / "sweep.csv", out_dir / "manifest.json"]


FIGURE_PROTOCOLS = {
    "fig2": ("heat contours over T_M1 and time", ("heat",)),
    "fig3": ("machine temperature curves, both cycles", ("temperature",)),
    "fig4": ("entropy production and its rate, both cycles", ("entropy",)),
    "fig5": ("backflow, mutual information, and entanglement contours", ("blp", "mutual_information_MS")),
    "fig6": ("local coherences and coherence correlation", ("coherence",)),
}


def run_figures(base: ScenarioConfig, out_dir: str | Path, workers: int | None = None) -> dict:
    """Produce the five canned datasets mirroring the machine-cycle figures."""
    base.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache: dict = {}
    protocols: dict[str, dict] = {}
    created: list[Path] = []

    info, paths = _contour_dataset(base, ("heat",), out / "fig2", workers, cache)
    protocols["fig2"] = {"dir": "fig2", "title": FIGURE_PROTOCOLS["fig2"][0], **info}
    created += paths

    for name in ("fig3", "fig4", "fig6"):
        measures = FIGURE_PROTOCOLS[name][1]
        info, paths = _family_dataset(base, measures, out / name, workers, cache)
        protocols[name] = {"dir": name, "title": FIGURE_PROTOCOLS[name][0], **info}
        created += paths

    info, paths = _family_dataset(base, FIGURE_PROTOCOLS["fig5"][1], out / "fig5", workers, cache)
    contour_base = base.with_overrides({"g": round(0.09 * base.E_M2, 12)})
    contour_info, contour_paths = _contour_dataset(
        contour_base, ("concurrence_S1S2", "mutual_information_S1S2"), out / "fig5" / "contour",
        workers, cache)
    info["contour"] = {"dir": "fig5/contour", **contour_info}
    protocols["fig5"] = {"dir": "fig5", "title": FIGURE_PROTOCOLS["fig5"][0], **info}
    created += paths + contour_paths

    manifest = {
        "command": "figures",
        "config": base.as_dict(),
        "boundary_T_M1": thermo.cycle_boundary_temperature(base),
        "protocols": protocols,
    }
    manifest["outputs"] = {p.relative_to(out).as_posix(): _sha256(p) for p in sorted(created)}
    _write_text(out / "figures_manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
