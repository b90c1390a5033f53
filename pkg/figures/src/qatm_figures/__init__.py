"""Figure rendering for the thermal-machine CSV datasets.

Reads the manifest and CSV files emitted by the simulation CLI and draws
the five canned multi-panel figures. No numbers are computed here; every
value is read from disk, and the generated images carry no timestamps so
re-rendering identical inputs reproduces identical bytes.
"""

from .io import ParseError, read_curve_family, read_sweep_table
from .render import FigureRecipe, build_figure, recipes_from_manifest, render, render_all

__all__ = [
    "FigureRecipe",
    "ParseError",
    "build_figure",
    "read_curve_family",
    "read_sweep_table",
    "recipes_from_manifest",
    "render",
    "render_all",
]

__version__ = "0.1.0"
