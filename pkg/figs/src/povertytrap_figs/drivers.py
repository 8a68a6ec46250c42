"""One driver per figure: build the recipe CSVs, then render the images.

Each figure has a stable descriptive id, a packaged recipe whose artifact
names this module mirrors, and a console-script entry point.  Drivers are
plumbing only: every number in the images comes from the CSVs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .csvio import FigureDataError
from .recipes import RecipeError, run_recipe
from .render import RenderResult, render
from .spec import (
    EVAL_COLUMNS,
    OPTIMIZE_TAIL,
    REGION_COLUMNS,
    FigureSpec,
    PanelSpec,
    sweep_columns,
)

__all__ = ["FIGURE_IDS", "build_figure", "figure_spec"]

FIGURE_IDS = (
    "region_boundaries",
    "beta_value_curves",
    "beta_threshold_map",
    "kuma_value_curves",
    "kuma_threshold_map",
    "insured_prop_values",
    "insured_xl_values",
    "insured_tl_values",
)

_DELTAS = ("0.10", "0.20", "0.30", "0.40", "0.50")
_ALPHAS = ("0.50", "1.00", "1.50", "2.00", "2.50")
_PS = ("0.50", "1.00", "1.50", "2.00", "2.50")
_REGION_MUS_A = tuple(f"{0.05 * k:.2f}" for k in range(1, 19))
_REGION_MUS_B = ("0.1", "0.3", "0.5", "0.7", "0.9")
_COVER_LEVELS = ("0.6", "0.7", "0.8", "0.9", "1.0")
_GAMMAS = ("0.5", "1.5", "2.5", "3.5", "4.5")

_X_LABEL = "capital x"
_V_LABEL = "expected discounted transfers"


def _spec_region_boundaries(workdir: Path) -> FigureSpec:
    lam_inputs = tuple(workdir / f"region_lam_mu{mu}.csv" for mu in _REGION_MUS_A)
    delta_inputs = tuple(workdir / f"region_delta_mu{mu}.csv" for mu in _REGION_MUS_B)
    return FigureSpec(
        figure_id="region_boundaries",
        output_stem=workdir / "region_boundaries",
        ncols=2,
        figsize=(11.0, 4.8),
        panels=(
            PanelSpec(
                name="a",
                title="(a) lump-sum favourable below the curve, δ = 0.2",
                inputs=lam_inputs,
                columns=REGION_COLUMNS,
                x="mu",
                y="boundary_lam",
                group_key="b",
                legend_fmt="b = {v:g}",
                xlabel="expected remaining fraction μ",
                ylabel="boundary shock rate λ",
            ),
            PanelSpec(
                name="b",
                title="(b) lump-sum favourable below the curve, b = 1",
                inputs=delta_inputs,
                columns=REGION_COLUMNS,
                x="boundary_lam",
                y="delta",
                group_key="mu",
                legend_fmt="μ = {v:g}",
                xlabel="shock rate λ",
                ylabel="boundary discount rate δ",
            ),
        ),
    )


def _value_curve_panels(
    workdir: Path,
    stem: str,
    sweep_key: str,
    sweep_tag: str,
    sweep_values: tuple[str, ...],
    legend_fmt: str,
    letters: tuple[str, str, str],
    band: str | None,
) -> tuple[PanelSpec, ...]:
    """Three panels of one row: y = 20, y = 40, and per-curve optimal y."""
    sweep_cols = sweep_columns(sweep_key)
    opt_inputs = tuple(
        workdir / f"{stem}_opt_{sweep_tag}{v}.csv" for v in sweep_values
    )
    return (
        PanelSpec(
            name=letters[0],
            title=f"({letters[0]}) threshold at the critical capital, y = 20",
            inputs=(workdir / f"{stem}_cost_by_{sweep_tag}.csv",),
            columns=sweep_cols,
            x="x",
            y="value",
            group_key=sweep_key,
            legend_fmt=legend_fmt,
            xlabel=_X_LABEL,
            ylabel=_V_LABEL,
            band=band,
        ),
        PanelSpec(
            name=letters[1],
            title=f"({letters[1]}) threshold y = 40",
            inputs=(workdir / f"{stem}_value40_by_{sweep_tag}.csv",),
            columns=sweep_cols,
            x="x",
            y="value",
            group_key=sweep_key,
            legend_fmt=legend_fmt,
            xlabel=_X_LABEL,
            ylabel=_V_LABEL,
            band=band,
        ),
        PanelSpec(
            name=letters[2],
            title=f"({letters[2]}) per-curve optimal threshold",
            inputs=opt_inputs,
            columns=EVAL_COLUMNS,
            x="x",
            y="value",
            group_key=sweep_key,
            legend_fmt=legend_fmt,
            xlabel=_X_LABEL,
            ylabel=_V_LABEL,
            band=band,
        ),
    )


def _spec_beta_value_curves(workdir: Path) -> FigureSpec:
    return FigureSpec(
        figure_id="beta_value_curves",
        output_stem=workdir / "beta_value_curves",
        ncols=3,
        figsize=(13.5, 8.6),
        panels=_value_curve_panels(
            workdir, "beta", "model.delta", "delta", _DELTAS,
            "δ = {v:g}", ("a", "b", "c"), band=None,
        )
        + _value_curve_panels(
            workdir, "beta", "dist.alpha", "alpha", _ALPHAS,
            "α = {v:g}", ("d", "e", "f"), band=None,
        ),
    )


def _spec_kuma_value_curves(workdir: Path) -> FigureSpec:
    return FigureSpec(
        figure_id="kuma_value_curves",
        output_stem=workdir / "kuma_value_curves",
        ncols=3,
        figsize=(13.5, 8.6),
        panels=_value_curve_panels(
            workdir, "kuma", "model.delta", "delta", _DELTAS,
            "δ = {v:g}", ("a", "b", "c"), band="ci_half_width",
        )
        + _value_curve_panels(
            workdir, "kuma", "dist.p", "p", _PS,
            "p = {v:g}", ("d", "e", "f"), band="ci_half_width",
        ),
    )


def _threshold_map_spec(
    figure_id: str, workdir: Path, sweep_key: str, legend_fmt: str, title: str
) -> FigureSpec:
    return FigureSpec(
        figure_id=figure_id,
        output_stem=workdir / figure_id,
        ncols=1,
        figsize=(7.0, 5.4),
        panels=(
            PanelSpec(
                name="main",
                title=title,
                inputs=(workdir / f"{figure_id}.csv",),
                columns=sweep_columns(sweep_key, "model.delta", tail=OPTIMIZE_TAIL),
                x="model.delta",
                y="y_star",
                group_key=sweep_key,
                legend_fmt=legend_fmt,
                xlabel="discount rate δ",
                ylabel="optimal threshold y*",
            ),
        ),
    )


def _spec_beta_threshold_map(workdir: Path) -> FigureSpec:
    return _threshold_map_spec(
        "beta_threshold_map", workdir, "dist.alpha", "α = {v:g}",
        "optimal threshold, Beta(α,1) losses (closed-form search)",
    )


def _spec_kuma_threshold_map(workdir: Path) -> FigureSpec:
    return _threshold_map_spec(
        "kuma_threshold_map", workdir, "dist.p", "p = {v:g}",
        "optimal threshold, Kumaraswamy(p,4) losses (Monte Carlo search)",
    )


def _insured_spec(
    figure_id: str,
    workdir: Path,
    stem: str,
    param_key: str,
    param_tag: str,
    param_symbol: str,
) -> FigureSpec:
    level_inputs = tuple(
        workdir / f"{stem}_{param_tag}{v}.csv" for v in _COVER_LEVELS
    )
    gamma_inputs = tuple(workdir / f"{stem}_gamma{v}.csv" for v in _GAMMAS)
    return FigureSpec(
        figure_id=figure_id,
        output_stem=workdir / figure_id,
        ncols=2,
        figsize=(11.0, 4.8),
        panels=(
            PanelSpec(
                name="a",
                title=f"(a) γ = 0.5, varying {param_symbol}",
                inputs=level_inputs,
                columns=EVAL_COLUMNS,
                x="x",
                y="value",
                group_key=param_key,
                legend_fmt=param_symbol + " = {v:g}",
                xlabel=_X_LABEL,
                ylabel=_V_LABEL,
                band="ci_half_width",
            ),
            PanelSpec(
                name="b",
                title=f"(b) {param_symbol} = 0.5, varying γ",
                inputs=gamma_inputs,
                columns=EVAL_COLUMNS,
                x="x",
                y="value",
                group_key="cover.gamma",
                legend_fmt="γ = {v:g}",
                xlabel=_X_LABEL,
                ylabel=_V_LABEL,
                band="ci_half_width",
            ),
        ),
    )


def _spec_insured_prop_values(workdir: Path) -> FigureSpec:
    return _insured_spec(
        "insured_prop_values", workdir, "insured_prop", "cover.eta", "eta", "η"
    )


def _spec_insured_xl_values(workdir: Path) -> FigureSpec:
    return _insured_spec(
        "insured_xl_values", workdir, "insured_xl", "cover.l", "l", "l"
    )


def _spec_insured_tl_values(workdir: Path) -> FigureSpec:
    return _insured_spec(
        "insured_tl_values", workdir, "insured_tl", "cover.L", "L", "L"
    )


_SPEC_BUILDERS = {
    "region_boundaries": _spec_region_boundaries,
    "beta_value_curves": _spec_beta_value_curves,
    "beta_threshold_map": _spec_beta_threshold_map,
    "kuma_value_curves": _spec_kuma_value_curves,
    "kuma_threshold_map": _spec_kuma_threshold_map,
    "insured_prop_values": _spec_insured_prop_values,
    "insured_xl_values": _spec_insured_xl_values,
    "insured_tl_values": _spec_insured_tl_values,
}


def figure_spec(figure_id: str, workdir: Path | str) -> FigureSpec:
    """The panel layout and input CSV paths of one figure under ``workdir``."""
    try:
        builder = _SPEC_BUILDERS[figure_id]
    except KeyError:
        raise FigureDataError(
            f"unknown figure id {figure_id!r}; known ids: {', '.join(FIGURE_IDS)}"
        ) from None
    return builder(Path(workdir))


def build_figure(
    figure_id: str, workdir: Path | str, *, fast: bool = False, force: bool = False
) -> RenderResult:
    """Ensure the recipe CSVs exist, then render one figure."""
    workdir = Path(workdir)
    run_recipe(figure_id, workdir, fast=fast, force=force)
    return render(figure_spec(figure_id, workdir))


# --------------------------------------------------------------------------
# console entry points
# --------------------------------------------------------------------------


def _driver_main(figure_id: str, argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog=f"figs-{figure_id.replace('_', '-')}",
        description=f"Build the CSVs and render the {figure_id} figure.",
    )
    parser.add_argument("--workdir", type=Path, default=Path("figures-out"),
                        help="directory for CSV artifacts and images")
    parser.add_argument("--fast", action="store_true",
                        help="reduced-sampling smoke run (capped paths, thin grids)")
    parser.add_argument("--force", action="store_true",
                        help="rebuild CSVs even when they already exist")
    args = parser.parse_args(argv)
    try:
        result = build_figure(figure_id, args.workdir, fast=args.fast, force=args.force)
    except (FigureDataError, RecipeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    counts = ", ".join(f"{k}:{v}" for k, v in result.series_counts.items())
    print(f"{figure_id}: wrote {result.svg_path} and {result.png_path} "
          f"(series per panel: {counts})")
    return 0


def main_region_boundaries(argv: list[str] | None = None) -> int:
    return _driver_main("region_boundaries", argv)


def main_beta_value_curves(argv: list[str] | None = None) -> int:
    return _driver_main("beta_value_curves", argv)


def main_beta_threshold_map(argv: list[str] | None = None) -> int:
    return _driver_main("beta_threshold_map", argv)


def main_kuma_value_curves(argv: list[str] | None = None) -> int:
    return _driver_main("kuma_value_curves", argv)


def main_kuma_threshold_map(argv: list[str] | None = None) -> int:
    return _driver_main("kuma_threshold_map", argv)


def main_insured_prop_values(argv: list[str] | None = None) -> int:
    return _driver_main("insured_prop_values", argv)


def main_insured_xl_values(argv: list[str] | None = None) -> int:
    return _driver_main("insured_xl_values", argv)


def main_insured_tl_values(argv: list[str] | None = None) -> int:
    return _driver_main("insured_tl_values", argv)
