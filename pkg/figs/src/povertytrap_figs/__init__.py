"""Figure regeneration for ``povertytrap``.

Eight figures are built from CSV artifacts of the ``povertytrap`` CLI; the
exact invocations live as shell-agnostic recipe text inside this package.
Each figure has a console-script driver (``figs-<figure-id>``) and
``figs-make-all`` runs the lot.  Rendering is deterministic: identical CSVs
produce byte-identical SVG and PNG files.
"""

from .csvio import CsvTable, FigureDataError, read_table
from .drivers import FIGURE_IDS, build_figure, figure_spec
from .recipes import RecipeError, recipe_lines, run_recipe
from .render import RenderResult, render
from .spec import FigureSpec, PanelSpec, Series

__all__ = [
    "CsvTable",
    "FIGURE_IDS",
    "FigureDataError",
    "FigureSpec",
    "PanelSpec",
    "RecipeError",
    "RenderResult",
    "Series",
    "build_figure",
    "figure_spec",
    "read_table",
    "recipe_lines",
    "render",
    "run_recipe",
]

__version__ = "0.1.0"
