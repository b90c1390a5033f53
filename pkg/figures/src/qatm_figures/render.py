"""Builds the five multi-panel figures from the dataset manifest.

Curve panels color the coupling family red/black/blue/magenta in
ascending order; contour panels overlay the cycle boundary as a white
dashed line. Images are saved without software/timestamp metadata so a
re-render of identical inputs is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import ParseError, read_curve_family, read_manifest, read_sweep_table

__all__ = ["FigureRecipe", "recipes_from_manifest", "build_figure", "render", "render_all"]

FAMILY_COLORS = ("red", "black", "blue", "magenta")
MEASURE_STYLES = ("-", "--", ":", "-.")

matplotlib.rcParams.update({
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.titlesize": 10,
    "lines.linewidth": 1.4,
    "legend.fontsize": 7,
    "svg.hashsalt": "qatm-figures",
})


@dataclass
class FigureRecipe:
    """Input files and panel plan for one figure."""

    name: str
    kind: str                       # heat_contours / curve_family / backflow_panels / ...
    title: str
    csv_paths: dict[str, Path]
    panel_count: int
    boundary: float | None = None   # cycle-boundary T_M1 for contour panels
    axis_labels: dict[str, str] = field(default_factory=dict)
    curve_measures: tuple[str, ...] = ()

    def validate(self) -> "FigureRecipe":
        for role, path in self.csv_paths.items():
            if not Path(path).is_file():
                raise ParseError(f"recipe {self.name}: missing {role} file {path}")
        return self


def recipes_from_manifest(manifest_path: str | Path) -> list[FigureRecipe]:
    """One recipe per canned protocol, resolved relative to the manifest."""
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    root = manifest_path.parent
    protocols = manifest.get("protocols", {})
    missing = [k for k in ("fig2", "fig3", "fig4", "fig5", "fig6") if k not in protocols]
    if missing:
        raise ParseError(f"{manifest_path}: manifest lacks protocols {missing}")
    boundary = float(manifest["boundary_T_M1"])

    recipes = [
        FigureRecipe(
            name="fig2", kind="heat_contours", title=protocols["fig2"].get("title", ""),
            csv_paths={"sweep": root / protocols["fig2"]["dir"] / protocols["fig2"]["data"]},
            panel_count=4, boundary=boundary,
            axis_labels={"x": "t", "y": "T_M1"},
        ),
        FigureRecipe(
            name="fig3", kind="curve_family", title=protocols["fig3"].get("title", ""),
            csv_paths={"curves": root / protocols["fig3"]["dir"] / protocols["fig3"]["data"]},
            panel_count=2,
            curve_measures=("temperature_M1", "temperature_M2", "temperature_virtual"),
            axis_labels={"x": "t", "y": "temperature"},
        ),
        FigureRecipe(
            name="fig4", kind="curve_grid", title=protocols["fig4"].get("title", ""),
            csv_paths={"curves": root / protocols["fig4"]["dir"] / protocols["fig4"]["data"]},
            panel_count=4,
            curve_measures=("entropy_production", "entropy_production_rate"),
            axis_labels={"x": "t", "y": ""},
        ),
        FigureRecipe(
            name="fig5", kind="backflow_panels", title=protocols["fig5"].get("title", ""),
            csv_paths={
                "curves": root / protocols["fig5"]["dir"] / protocols["fig5"]["data"],
                "contour": root / protocols["fig5"]["contour"]["dir"]
                / protocols["fig5"]["contour"]["data"],
            },
            panel_count=10, boundary=boundary,
            curve_measures=("blp_cumulative_M", "blp_cumulative_S1", "blp_cumulative_S2",
                            "mutual_information_MS"),
            axis_labels={"x": "t", "y": ""},
        ),
        FigureRecipe(
            name="fig6", kind="curve_family", title=protocols["fig6"].get("title", ""),
            csv_paths={"curves": root / protocols["fig6"]["dir"] / protocols["fig6"]["data"]},
            panel_count=2,
            curve_measures=("coherence_S", "coherence_S1", "coherence_S2",
                            "coherence_correlation"),
            axis_labels={"x": "t", "y": "coherence"},
        ),
    ]
    return [r.validate() for r in recipes]


def _draw_boundary(ax, boundary: float) -> None:
    ax.axhline(boundary, color="white", linestyle="--", linewidth=1.2)


def _contour_panel(ax, params, times, grid, label: str, boundary: float) -> None:
    mesh = ax.pcolormesh(times, params, grid, shading="nearest", cmap="viridis")
    ax.figure.colorbar(mesh, ax=ax, pad=0.02)
    _draw_boundary(ax, boundary)
    ax.set_title(label)


def _family_panel(ax, curves, cycle: str, measures, g_values, labels=True) -> None:
    for style, measure in zip(MEASURE_STYLES, measures):
        for color, g in zip(FAMILY_COLORS, g_values):
            times, values = curves[(cycle, g, measure)]
            label = f"{measure} g={g:g}" if labels else None
            ax.plot(times, values, linestyle=style, color=color, label=label)
    ax.set_title(f"cycle {cycle}")


def _family_g_values(curves) -> list[float]:
    return sorted({g for (_, g, _) in curves})


def build_figure(recipe: FigureRecipe):
    """Assemble the matplotlib figure; returns (figure, info dict).

    The info dict reports the realized panel and boundary-line counts so
    callers can check them against the recipe.
    """
    recipe.validate()
    boundary_lines = 0

    if recipe.kind == "heat_contours":
        table = read_sweep_table(recipe.csv_paths["sweep"])
        order = ["heat_M1", "heat_M2", "heat_S1", "heat_S2"]
        missing = [m for m in order if m not in table]
        if missing:
            raise ParseError(f"recipe {recipe.name}: sweep lacks measures {missing}")
        fig, axes = plt.subplots(2, 2, figsize=(9, 6), constrained_layout=True)
        for ax, measure in zip(axes.ravel(), order):
            params, times, grid = table[measure]
            _contour_panel(ax, params, times, grid, measure, recipe.boundary)
            boundary_lines += 1
            ax.set_xlabel(recipe.axis_labels.get("x", ""))
            ax.set_ylabel(recipe.axis_labels.get("y", ""))
        axes_used = 4

    elif recipe.kind == "curve_family":
        curves = read_curve_family(recipe.csv_paths["curves"])
        g_values = _family_g_values(curves)
        fig, axes = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True, sharey=True)
        for ax, cycle in zip(axes, ("A", "B")):
            _family_panel(ax, curves, cycle, recipe.curve_measures, g_values, labels=False)
            ax.set_xlabel(recipe.axis_labels.get("x", ""))
        axes[0].set_ylabel(recipe.axis_labels.get("y", ""))
        _family_legend(axes[1], recipe.curve_measures, g_values)
        axes_used = 2

    elif recipe.kind == "curve_grid":
        curves = read_curve_family(recipe.csv_paths["curves"])
        g_values = _family_g_values(curves)
        fig, axes = plt.subplots(len(recipe.curve_measures), 2, figsize=(10, 6),
                                 constrained_layout=True)
        for row, measure in enumerate(recipe.curve_measures):
            for col, cycle in enumerate(("A", "B")):
                ax = axes[row, col]
                _family_panel(ax, curves, cycle, (measure,), g_values, labels=False)
                ax.set_title(f"{measure}, cycle {cycle}")
                ax.set_xlabel(recipe.axis_labels.get("x", ""))
        _family_legend(axes[0, 1], recipe.curve_measures[:1], g_values)
        axes_used = axes.size

    elif recipe.kind == "backflow_panels":
        curves = read_curve_family(recipe.csv_paths["curves"])
        g_values = _family_g_values(curves)
        fig = plt.figure(figsize=(13, 9), constrained_layout=True)
        grid_spec = fig.add_gridspec(3, 4)
        axes_used = 0
        for row, cycle in enumerate(("A", "B")):
            for col, measure in enumerate(recipe.curve_measures):
                ax = fig.add_subplot(grid_spec[row, col])
                _family_panel(ax, curves, cycle, (measure,), g_values, labels=False)
                ax.set_title(f"{measure}, cycle {cycle}")
                axes_used += 1
        table = read_sweep_table(recipe.csv_paths["contour"])
        for k, measure in enumerate(("concurrence_S1S2", "mutual_information_S1S2")):
            if measure not in table:
                raise ParseError(f"recipe {recipe.name}: contour sweep lacks {measure!r}")
            ax = fig.add_subplot(grid_spec[2, 2 * k:2 * k + 2])
            params, times, grid = table[measure]
            _contour_panel(ax, params, times, grid, measure, recipe.boundary)
            ax.set_xlabel("t")
            ax.set_ylabel("T_M1")
            boundary_lines += 1
            axes_used += 1
        _family_legend(fig.axes[3], ("",), g_values)

    else:
        raise ParseError(f"unknown recipe kind {recipe.kind!r}")

    if axes_used != recipe.panel_count:
        plt.close(fig)
        raise ParseError(
            f"recipe {recipe.name}: produced {axes_used} panels, expected {recipe.panel_count}")
    fig.suptitle(recipe.title or recipe.name)
    return fig, {"panels": axes_used, "boundary_lines": boundary_lines}


def _family_legend(ax, measures, g_values) -> None:
    from matplotlib.lines import Line2D
    handles = [Line2D([], [], color=c, label=f"g = {g:g}")
               for c, g in zip(FAMILY_COLORS, g_values)]
    handles += [Line2D([], [], color="gray", linestyle=s, label=m)
                for s, m in zip(MEASURE_STYLES, measures) if m]
    ax.legend(handles=handles, loc="best")


def render(recipe: FigureRecipe, out_path: str | Path) -> Path:
    """Draw one recipe to a PNG file; returns the written path."""
    fig, _ = build_figure(recipe)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out_path, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return out_path


def render_all(manifest_path: str | Path, out_dir: str | Path) -> list[Path]:
    """Render every canned figure named by the manifest into out_dir."""
    out = Path(out_dir)
    written = []
    for recipe in recipes_from_manifest(manifest_path):
        written.append(render(recipe, out / f"{recipe.name}.png"))
    return written
