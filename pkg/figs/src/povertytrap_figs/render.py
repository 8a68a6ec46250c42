"""Turn a validated ``FigureSpec`` into SVG and PNG files.

Monte Carlo inputs carry a 99% confidence half-width column; those panels
get a shaded band of ``value ± ci_half_width`` behind each curve.  The
result reports how many series each panel drew so callers can check the
counts against the figure's documented layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib.pyplot as plt

from .spec import FigureSpec, collect_series, load_tables
from .style import PALETTE, apply_style, save_figure

__all__ = ["RenderResult", "render"]


@dataclass(frozen=True)
class RenderResult:
    """Where the images landed and how many series each panel drew."""

    figure_id: str
    svg_path: Path
    png_path: Path
    series_counts: dict[str, int]


def render(spec: FigureSpec) -> RenderResult:
    """Validate the figure's inputs and write its SVG and PNG files."""
    tables = load_tables(spec)
    apply_style()
    nrows = math.ceil(len(spec.panels) / spec.ncols)
    fig, axes = plt.subplots(
        nrows, spec.ncols, figsize=spec.figsize, squeeze=False, layout="constrained"
    )
    counts: dict[str, int] = {}
    for panel, ax in zip(spec.panels, axes.flat):
        series = collect_series(panel, tables)
        for i, s in enumerate(series):
            color = PALETTE[i % len(PALETTE)]
            if s.band and any(w > 0.0 for w in s.band):
                lo = [y - w for y, w in zip(s.y, s.band)]
                hi = [y + w for y, w in zip(s.y, s.band)]
                ax.fill_between(s.x, lo, hi, color=color, alpha=0.22, linewidth=0)
            ax.plot(s.x, s.y, color=color, label=panel.legend_fmt.format(v=s.label_value))
        ax.set_title(panel.title)
        ax.set_xlabel(panel.xlabel)
        ax.set_ylabel(panel.ylabel)
        ax.legend()
        counts[panel.name] = len(series)
    for ax in list(axes.flat)[len(spec.panels):]:
        ax.set_visible(False)
    try:
        svg_path, png_path = save_figure(fig, spec.output_stem)
    finally:
        plt.close(fig)
    return RenderResult(
        figure_id=spec.figure_id,
        svg_path=svg_path,
        png_path=png_path,
        series_counts=counts,
    )
