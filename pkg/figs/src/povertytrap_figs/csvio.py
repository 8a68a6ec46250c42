"""Reader for the CSV artifacts the ``povertytrap`` CLI writes.

Every artifact starts with a ``# config: key=value ...`` comment recording
the fully resolved run configuration, followed by a header row, data rows,
and optional trailing ``# ...`` summary comments.  This module parses that
layout back into a small table object; it performs no numerical work.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

__all__ = ["CsvTable", "FigureDataError", "read_table"]

_CONFIG_PREFIX = "# config: "


class FigureDataError(ValueError):
    """An input CSV is missing, malformed, or does not match its contract."""


@dataclass(frozen=True)
class CsvTable:
    """One parsed CLI artifact."""

    path: Path
    config: dict[str, str]
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    trailers: tuple[str, ...]

    def column(self, name: str) -> list[float]:
        """Numeric values of one column, in row order."""
        try:
            idx = self.header.index(name)
        except ValueError:
            raise FigureDataError(
                f"{self.path}: no column named {name!r}; header is {list(self.header)}"
            ) from None
        try:
            return [float(row[idx]) for row in self.rows]
        except ValueError as exc:
            raise FigureDataError(
                f"{self.path}: column {name!r} is not numeric: {exc}"
            ) from None


def read_table(path: Path | str) -> CsvTable:
    """Parse a CLI CSV artifact; raise ``FigureDataError`` on any defect."""
    path = Path(path)
    if not path.is_file():
        raise FigureDataError(
            f"{path}: input CSV not found — build it first via the figure recipe "
            "(run the figure driver or figs-make-all)"
        )
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(_CONFIG_PREFIX):
        raise FigureDataError(
            f"{path}: first line must be a '# config: ...' comment written by the "
            "povertytrap CLI"
        )
    config: dict[str, str] = {}
    for token in lines[0][len(_CONFIG_PREFIX):].split():
        key, sep, val = token.partition("=")
        if not sep:
            raise FigureDataError(f"{path}: malformed config token {token!r}")
        config[key] = val
    if len(lines) < 2 or lines[1].startswith("#") or not lines[1].strip():
        raise FigureDataError(f"{path}: missing header row after the config line")
    header = tuple(lines[1].split(","))
    rows: list[tuple[str, ...]] = []
    trailers: list[str] = []
    for line in lines[2:]:
        if not line.strip():
            continue
        if line.startswith("#"):
            trailers.append(line.lstrip("#").strip())
            continue
        if trailers:
            raise FigureDataError(f"{path}: data row after a trailer comment")
        cells = tuple(line.split(","))
        if len(cells) != len(header):
            raise FigureDataError(
                f"{path}: row has {len(cells)} cells but the header has "
                f"{len(header)} columns: {line!r}"
            )
        rows.append(cells)
    return CsvTable(
        path=path,
        config=config,
        header=header,
        rows=tuple(rows),
        trailers=tuple(trailers),
    )
