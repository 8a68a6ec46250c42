"""Deterministic plotting style and image writing.

Rendering must be a pure function of the input CSVs: the style is pinned
(no rcParams inherited from the environment), SVG element ids are salted
with a fixed string, and no timestamp or toolchain metadata is written into
either output format.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["PALETTE", "apply_style", "save_figure"]

# One fixed color per series slot; five series per panel is the common case.
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")

_RC = {
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 10,
    "axes.titlesize": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8.5,
    "legend.framealpha": 0.9,
    "lines.linewidth": 1.6,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linewidth": 0.6,
    "svg.hashsalt": "povertytrap-figs",
    "svg.fonttype": "path",
    "path.simplify": False,
}


def apply_style() -> None:
    """Reset to matplotlib defaults, then apply the pinned style."""
    matplotlib.rcdefaults()
    matplotlib.use("Agg")
    matplotlib.rcParams.update(_RC)


def save_figure(fig: plt.Figure, output_stem: Path) -> tuple[Path, Path]:
    """Write ``<stem>.svg`` and ``<stem>.png`` with timestamp-free metadata."""
    output_stem.parent.mkdir(parents=True, exist_ok=True)
    svg_path = output_stem.with_suffix(".svg")
    png_path = output_stem.with_suffix(".png")
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    fig.savefig(png_path, format="png", metadata={"Software": None})
    return svg_path, png_path
