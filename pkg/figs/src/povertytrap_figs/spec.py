"""Figure descriptions: which CSVs feed which panel, and how to group series.

A ``FigureSpec`` names one figure: its id, the input CSV paths, the key that
groups rows into series (a CSV column such as ``model.delta``, or a config
key looked up per file when each input holds a single series), axis labels,
and the output path stem.  ``collect_series`` turns validated tables into
plottable series; everything here is column selection — no arithmetic
beyond pairing a value column with its confidence half-width.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .csvio import CsvTable, FigureDataError, read_table

__all__ = [
    "EVAL_COLUMNS",
    "REGION_COLUMNS",
    "FigureSpec",
    "PanelSpec",
    "Series",
    "collect_series",
    "load_tables",
]

# Column contracts of the CLI artifacts a figure may consume.
EVAL_COLUMNS = ("x", "value", "ci_half_width", "method", "y", "seed")
REGION_COLUMNS = ("lam", "delta", "b", "mu", "boundary_b", "boundary_lam", "decision")


def sweep_columns(*keys: str, tail: tuple[str, ...] = EVAL_COLUMNS) -> tuple[str, ...]:
    """Header of a long-format sweep artifact: swept keys then result columns."""
    return tuple(keys) + tail


OPTIMIZE_TAIL = ("y_star", "value", "verified")


@dataclass(frozen=True)
class PanelSpec:
    """One axes worth of series drawn from one or more input CSVs."""

    name: str
    title: str
    inputs: tuple[Path, ...]
    columns: tuple[str, ...]
    x: str
    y: str
    group_key: str
    legend_fmt: str
    xlabel: str
    ylabel: str
    band: str | None = None


@dataclass(frozen=True)
class FigureSpec:
    """A figure id, its input CSVs, series grouping, labels, and output stem."""

    figure_id: str
    panels: tuple[PanelSpec, ...]
    output_stem: Path
    ncols: int
    figsize: tuple[float, float]

    @property
    def inputs(self) -> tuple[Path, ...]:
        seen: dict[Path, None] = {}
        for panel in self.panels:
            for path in panel.inputs:
                seen.setdefault(path)
        return tuple(seen)

    @property
    def group_keys(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(panel.group_key for panel in self.panels))


@dataclass(frozen=True)
class Series:
    """One labelled curve: sorted points plus an optional band half-width."""

    label_value: float
    x: tuple[float, ...]
    y: tuple[float, ...]
    band: tuple[float, ...] = field(default=())


def load_tables(spec: FigureSpec) -> dict[Path, CsvTable]:
    """Read and validate every input CSV of a figure.

    Each table must exist, carry exactly the columns its panel documents
    (missing or extra columns are both reported), and hold at least one data
    row — an empty artifact never silently becomes an empty plot.
    """
    tables: dict[Path, CsvTable] = {}
    for panel in spec.panels:
        for path in panel.inputs:
            if path not in tables:
                tables[path] = read_table(path)
            table = tables[path]
            expected, got = set(panel.columns), set(table.header)
            if expected != got:
                missing = sorted(expected - got)
                extra = sorted(got - expected)
                raise FigureDataError(
                    f"{path}: columns do not match the {spec.figure_id}/"
                    f"{panel.name} contract"
                    + (f"; missing {missing}" if missing else "")
                    + (f"; unexpected {extra}" if extra else "")
                )
            if not table.rows:
                raise FigureDataError(
                    f"{path}: no data rows — refusing to render an empty figure"
                )
    return tables


def collect_series(panel: PanelSpec, tables: dict[Path, CsvTable]) -> list[Series]:
    """Group a panel's rows into series, sorted by label then by x.

    If ``group_key`` is a column of the inputs, rows from all inputs are
    pooled and grouped by that column's value.  Otherwise each input file is
    one series and ``group_key`` must appear in its recorded configuration.
    """
    first = tables[panel.inputs[0]]
    grouped: dict[float, list[tuple[float, float, float]]] = {}
    if panel.group_key in first.header:
        for path in panel.inputs:
            table = tables[path]
            _pool_rows(grouped, table, panel, table.column(panel.group_key))
    else:
        for path in panel.inputs:
            table = tables[path]
            if panel.group_key not in table.config:
                raise FigureDataError(
                    f"{path}: series key {panel.group_key!r} is neither a column "
                    "nor a recorded config key"
                )
            label = float(table.config[panel.group_key])
            _pool_rows(grouped, table, panel, [label] * len(table.rows))
    series = []
    for label in sorted(grouped):
        points = sorted(grouped[label])
        xs, ys, bands = zip(*points)
        series.append(
            Series(
                label_value=label,
                x=xs,
                y=ys,
                band=bands if panel.band is not None else (),
            )
        )
    return series


def _pool_rows(
    grouped: dict[float, list[tuple[float, float, float]]],
    table: CsvTable,
    panel: PanelSpec,
    labels: list[float],
) -> None:
    xs = table.column(panel.x)
    ys = table.column(panel.y)
    bands = table.column(panel.band) if panel.band is not None else [0.0] * len(xs)
    for label, x, y, w in zip(labels, xs, ys, bands):
        grouped.setdefault(label, []).append((x, y, w))
