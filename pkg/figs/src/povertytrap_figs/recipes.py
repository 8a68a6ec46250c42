"""Recipe files: the exact CLI invocations that build each figure's CSVs.

One text file per figure ships inside this package.  Each non-comment line
is a complete ``povertytrap`` invocation with the literal token ``$WORK``
standing for the artifact directory; the text is shell-agnostic — drivers
substitute ``$WORK`` themselves and call the CLI in-process, so no quoting,
environment, or path conventions are assumed.

``--fast`` smoke runs apply a mechanical transform: Monte Carlo path counts
are capped and dense grids are thinned.  Comma-separated sweep lists are
left untouched because they set the series count, which the figure layouts
pin down.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from povertytrap import cli

__all__ = [
    "RecipeError",
    "execute",
    "fast_transform",
    "output_path",
    "parse_invocation",
    "recipe_lines",
    "run_recipe",
]

FAST_MAX_PATHS = 4000
FAST_MAX_GRID = 9

_GRID_FLAGS = {"--x-grid", "--lam-grid", "--delta-grid", "--b-grid"}
_GRID_RE = re.compile(r"^([-+0-9.eE]+:[-+0-9.eE]+:)(\d+)$")


class RecipeError(RuntimeError):
    """A recipe line is malformed or its execution failed."""


def recipe_lines(figure_id: str) -> list[str]:
    """Non-comment lines of the packaged recipe for one figure."""
    resource = resources.files("povertytrap_figs") / "recipes" / f"{figure_id}.txt"
    if not resource.is_file():
        raise RecipeError(f"no recipe packaged for figure {figure_id!r}")
    lines = []
    for raw in resource.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    if not lines:
        raise RecipeError(f"recipe for {figure_id!r} contains no invocations")
    return lines


def parse_invocation(line: str) -> list[str]:
    """Split one recipe line into argv; it must invoke ``povertytrap``."""
    argv = line.split()
    if not argv or argv[0] != "povertytrap":
        raise RecipeError(f"recipe lines must start with 'povertytrap': {line!r}")
    return argv[1:]


def substitute_work(argv: list[str], workdir: Path) -> list[str]:
    """Replace the ``$WORK`` placeholder with the artifact directory."""
    return [token.replace("$WORK", str(workdir)) for token in argv]


def _thin_grid(value: str) -> str:
    match = _GRID_RE.match(value)
    if match and int(match.group(2)) > FAST_MAX_GRID:
        return match.group(1) + str(FAST_MAX_GRID)
    return value


def fast_transform(argv: list[str]) -> list[str]:
    """Cap path counts and thin dense grids for a quick smoke run."""
    out = list(argv)
    for i, token in enumerate(out[:-1]):
        nxt = out[i + 1]
        if token == "--n" and nxt.isdigit():
            out[i + 1] = str(min(int(nxt), FAST_MAX_PATHS))
        elif token in _GRID_FLAGS:
            out[i + 1] = _thin_grid(nxt)
        elif token == "--sweep" and "=" in nxt:
            key, _, values = nxt.partition("=")
            out[i + 1] = f"{key}={_thin_grid(values)}"
    return out


def output_path(argv: list[str], workdir: Path) -> Path:
    """The ``--out`` target of one invocation, resolved under ``workdir``."""
    for i, token in enumerate(argv[:-1]):
        if token == "--out":
            return Path(argv[i + 1].replace("$WORK", str(workdir)))
    raise RecipeError(f"recipe invocation lacks an --out target: {' '.join(argv)}")


def execute(
    lines: list[str], workdir: Path, *, fast: bool = False, force: bool = False
) -> list[Path]:
    """Run recipe lines through the CLI, skipping outputs that already exist.

    Returns the output CSV paths in recipe order.  A non-zero CLI exit stops
    the run with the failing invocation named.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for line in lines:
        argv = parse_invocation(line)
        out = output_path(argv, workdir)
        outputs.append(out)
        if out.is_file() and not force:
            continue
        if fast:
            argv = fast_transform(argv)
        argv = substitute_work(argv, workdir)
        rc = cli.main(argv)
        if rc != 0:
            raise RecipeError(f"recipe invocation failed with exit {rc}: {line}")
        if not out.is_file():
            raise RecipeError(f"recipe invocation wrote nothing to {out}: {line}")
    return outputs


def run_recipe(
    figure_id: str, workdir: Path, *, fast: bool = False, force: bool = False
) -> list[Path]:
    """Build (or reuse) every CSV of one figure's packaged recipe."""
    return execute(recipe_lines(figure_id), workdir, fast=fast, force=force)
