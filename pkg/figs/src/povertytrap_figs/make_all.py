"""Build every figure in one go: ``figs-make-all [--workdir DIR] [--fast]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .csvio import FigureDataError
from .drivers import FIGURE_IDS, build_figure
from .recipes import RecipeError

__all__ = ["main"]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="figs-make-all",
        description="Build the recipe CSVs and render all figures.",
    )
    parser.add_argument("--workdir", type=Path, default=Path("figures-out"),
                        help="directory for CSV artifacts and images")
    parser.add_argument("--fast", action="store_true",
                        help="reduced-sampling smoke run (capped paths, thin grids)")
    parser.add_argument("--force", action="store_true",
                        help="rebuild CSVs even when they already exist")
    parser.add_argument("--only", action="append", choices=FIGURE_IDS,
                        metavar="FIGURE_ID",
                        help="restrict to one figure id (repeatable)")
    args = parser.parse_args(argv)
    targets = tuple(args.only) if args.only else FIGURE_IDS
    for figure_id in targets:
        try:
            result = build_figure(
                figure_id, args.workdir, fast=args.fast, force=args.force
            )
        except (FigureDataError, RecipeError) as exc:
            print(f"error building {figure_id}: {exc}", file=sys.stderr)
            return 1
        counts = ", ".join(f"{k}:{v}" for k, v in result.series_counts.items())
        print(f"{figure_id}: {result.svg_path} (series per panel: {counts})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
