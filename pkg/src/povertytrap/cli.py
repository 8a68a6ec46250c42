"""Command-line front end: config parsing, runs, and CSV artifacts.

Configuration is a flat ``key=value`` store with section prefixes
(``model.a=0.10``, ``dist.kind=beta``, ``cover.kind=xl``, ``mc.n=1000000``).
Values come from built-in defaults, then an optional ``--config`` file, then
command-line flags — later sources override earlier ones.  Every CSV starts
with a comment line recording the fully resolved configuration and seed, so
any artifact can be regenerated from its own header.

Exit codes: 0 success, 1 numerical failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import re
import sys

import numpy as np

from .closed_form import compare_strategies, value_threshold_closed
from .ide_solver import hjb_residual, solve_fixed_point, verify_supersolution
from .mc_engine import McConfig, estimate_Vy
from .microinsurance import Cover, build_insured_model
from .model_core import BetaAlphaOne, Kumaraswamy, LossLaw, ModelParams
from .threshold_optimizer import (
    ClosedFormEvaluator,
    FixedPointEvaluator,
    MonteCarloEvaluator,
    optimize,
)

__all__ = ["main", "ConfigError"]

_CLOSED_UNAVAILABLE = "closed form unavailable; use mc or fixed-point"

_DEFAULTS = {
    "model.a": "0.10",
    "model.b": "3.0",
    "model.c": "0.40",
    "model.lam": "1.0",
    "model.delta": "0.10",
    "dist.kind": "beta",
    "dist.alpha": "1.25",
    "mc.n": "100000",
    "mc.seed": "0",
    "eval.evaluator": "closed",
    "optimize.tol_y": "0.02",
}

_COVER_KINDS = {
    "prop": "proportional",
    "proportional": "proportional",
    "xl": "excess_of_loss",
    "excess_of_loss": "excess_of_loss",
    "tl": "total_loss",
    "total_loss": "total_loss",
}
_COVER_PARAM_KEYS = ("cover.eta", "cover.l", "cover.L")


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps this to exit code 2."""


# --------------------------------------------------------------------------
# configuration assembly
# --------------------------------------------------------------------------


def _read_config_file(path: str) -> dict:
    cfg = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
                key, _, val = line.partition("=")
                cfg[key.strip()] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return cfg


def _parse_dist_spec(spec: str) -> dict:
    parts = spec.split(":")
    kind = parts[0].lower()
    if kind == "beta":
        if len(parts) != 2:
            raise ConfigError(f"expected beta:ALPHA, got {spec!r}")
        return {"dist.kind": "beta", "dist.alpha": parts[1]}
    if kind in ("kuma", "kumaraswamy"):
        if len(parts) != 3:
            raise ConfigError(f"expected kuma:P:Q, got {spec!r}")
        return {"dist.kind": "kuma", "dist.p": parts[1], "dist.q": parts[2]}
    raise ConfigError(f"unknown loss law {parts[0]!r}; expected beta or kuma")


def _parse_cover_spec(spec: str) -> dict:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"expected KIND:PARAM:GAMMA, got {spec!r}")
    kind = _COVER_KINDS.get(parts[0].lower())
    if kind is None:
        raise ConfigError(f"unknown cover kind {parts[0]!r}; expected prop, xl or tl")
    param_key = {
        "proportional": "cover.eta",
        "excess_of_loss": "cover.l",
        "total_loss": "cover.L",
    }[kind]
    return {"cover.kind": parts[0].lower(), param_key: parts[1], "cover.gamma": parts[2]}


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, and flags into one flat key=value dict."""
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(_read_config_file(args.config))
    flag_map = [
        ("a", "model.a"),
        ("b", "model.b"),
        ("c", "model.c"),
        ("lam", "model.lam"),
        ("delta", "model.delta"),
        ("i_star", "model.I_star"),
        ("x_star", "model.x_star"),
        ("evaluator", "eval.evaluator"),
        ("y", "eval.y"),
        ("x", "eval.x"),
        ("x_grid", "eval.x_grid"),
        ("n", "mc.n"),
        ("horizon", "mc.horizon"),
        ("seed", "mc.seed"),
        ("y_max", "optimize.y_max"),
        ("tol_y", "optimize.tol_y"),
        ("source", "hjb.source"),
        ("lam_grid", "compare.lam_grid"),
        ("delta_grid", "compare.delta_grid"),
        ("b_grid", "compare.b_grid"),
    ]
    for attr, key in flag_map:
        val = getattr(args, attr, None)
        if val is not None:
            cfg[key] = str(val)
    if getattr(args, "dist", None):
        for k in ("dist.kind", "dist.alpha", "dist.p", "dist.q"):
            cfg.pop(k, None)
        cfg.update(_parse_dist_spec(args.dist))
    if getattr(args, "cover", None):
        for k in ("cover.kind", "cover.gamma") + _COVER_PARAM_KEYS:
            cfg.pop(k, None)
        cfg.update(_parse_cover_spec(args.cover))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, val = item.partition("=")
        cfg[key.strip()] = val.strip()
    return cfg


def _get_float(cfg: dict, key: str) -> float:
    try:
        return float(cfg[key])
    except KeyError:
        raise ConfigError(f"missing required key {key}") from None
    except ValueError:
        raise ConfigError(f"key {key} must be a number, got {cfg[key]!r}") from None


def _get_int(cfg: dict, key: str) -> int:
    try:
        return int(cfg[key])
    except KeyError:
        raise ConfigError(f"missing required key {key}") from None
    except ValueError:
        raise ConfigError(f"key {key} must be an integer, got {cfg[key]!r}") from None


def build_model(cfg: dict) -> ModelParams:
    has_i = "model.I_star" in cfg
    has_x = "model.x_star" in cfg
    if has_i and has_x:
        raise ConfigError("give exactly one of model.I_star and model.x_star")
    b = _get_float(cfg, "model.b")
    if has_x:
        i_star = b * _get_float(cfg, "model.x_star")
    elif has_i:
        i_star = _get_float(cfg, "model.I_star")
    else:
        i_star = 60.0
    try:
        return ModelParams(
            a=_get_float(cfg, "model.a"),
            b=b,
            c=_get_float(cfg, "model.c"),
            I_star=i_star,
            lam=_get_float(cfg, "model.lam"),
            delta=_get_float(cfg, "model.delta"),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc


def build_dist(cfg: dict) -> LossLaw:
    kind = cfg.get("dist.kind", "beta").lower()
    try:
        if kind == "beta":
            return BetaAlphaOne(alpha=_get_float(cfg, "dist.alpha"))
        if kind in ("kuma", "kumaraswamy"):
            return Kumaraswamy(p=_get_float(cfg, "dist.p"), q=_get_float(cfg, "dist.q"))
    except ValueError as exc:
        raise ConfigError(f"invalid loss law: {exc}") from exc
    raise ConfigError(f"unknown dist.kind {kind!r}; expected beta or kuma")


def build_cover(cfg: dict) -> Cover | None:
    if "cover.kind" not in cfg:
        if any(k in cfg for k in _COVER_PARAM_KEYS + ("cover.gamma",)):
            raise ConfigError("cover parameters given without cover.kind")
        return None
    kind = _COVER_KINDS.get(cfg["cover.kind"].lower())
    if kind is None:
        raise ConfigError(f"unknown cover.kind {cfg['cover.kind']!r}")
    param_key = {
        "proportional": "cover.eta",
        "excess_of_loss": "cover.l",
        "total_loss": "cover.L",
    }[kind]
    given = [k for k in _COVER_PARAM_KEYS if k in cfg]
    if given != [param_key]:
        raise ConfigError(
            f"cover.kind={cfg['cover.kind']} takes exactly the parameter "
            f"{param_key}; got {given or 'none'}"
        )
    try:
        return Cover(kind, _get_float(cfg, param_key), _get_float(cfg, "cover.gamma"))
    except ValueError as exc:
        raise ConfigError(f"invalid cover: {exc}") from exc


def _economy(cfg: dict):
    """Resolved (params, law, insured-model-or-None) the solvers should run on."""
    params = build_model(cfg)
    dist = build_dist(cfg)
    cover = build_cover(cfg)
    if cover is None:
        return params, dist, None
    try:
        model = build_insured_model(params, cover, dist)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return model.params_R, model.w_law, model


def parse_grid(spec: str) -> np.ndarray:
    """``start:end:count`` with both endpoints included."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"expected start:end:count, got {spec!r}")
    try:
        start, end, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"malformed grid {spec!r}") from None
    if count < 1:
        raise ConfigError(f"grid count must be >= 1, got {count}")
    return np.linspace(start, end, count)


def _x_values(cfg: dict) -> np.ndarray:
    vals = []
    if "eval.x" in cfg:
        try:
            vals.extend(float(tok) for tok in cfg["eval.x"].split(",") if tok)
        except ValueError:
            raise ConfigError(f"eval.x must be a comma list of numbers: {cfg['eval.x']!r}") from None
    if "eval.x_grid" in cfg:
        vals.extend(parse_grid(cfg["eval.x_grid"]))
    if not vals:
        raise ConfigError("no capital points given; use --x or --x-grid")
    return np.asarray(vals, dtype=float)


def _threads(args: argparse.Namespace) -> int:
    if getattr(args, "threads", None) is not None:
        n = args.threads
    elif os.environ.get("CT_THREADS"):
        try:
            n = int(os.environ["CT_THREADS"])
        except ValueError:
            raise ConfigError(
                f"CT_THREADS must be an integer, got {os.environ['CT_THREADS']!r}"
            ) from None
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return n


# --------------------------------------------------------------------------
# CSV output
# --------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _write_csv(out, cfg: dict, header, rows, trailer=None) -> None:
    lines = ["# config: " + " ".join(f"{k}={v}" for k, v in sorted(cfg.items()))]
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    if trailer:
        lines.append("# " + trailer)
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

_EVAL_HEADER = ["x", "value", "ci_half_width", "method", "y", "seed"]


def _eval_rows(cfg: dict, threads: int) -> list:
    params, law, _insured = _economy(cfg)
    evaluator = cfg.get("eval.evaluator", "closed")
    y = _get_float(cfg, "eval.y")
    if y < params.x_star:
        raise ConfigError(
            f"threshold y={y} below the critical capital {params.x_star:.6g}"
            + (" of the premium-adjusted model" if _insured else "")
        )
    xs = _x_values(cfg)
    seed = _get_int(cfg, "mc.seed")
    if evaluator == "closed":
        if _insured is not None or not isinstance(law, BetaAlphaOne):
            raise ConfigError(_CLOSED_UNAVAILABLE)
        return [
            (x, value_threshold_closed(float(x), y, params, law.alpha), 0.0,
             "closed_form", y, seed)
            for x in xs
        ]
    if evaluator == "mc":
        mc_cfg = McConfig(
            n_paths=_get_int(cfg, "mc.n"),
            horizon_T=_get_float(cfg, "mc.horizon") if "mc.horizon" in cfg else None,
            master_seed=seed,
        )
        rows = []
        for x in xs:
            est = estimate_Vy(float(x), y, params, law, mc_cfg, threads=threads)
            rows.append((x, est.value, est.ci_half_width, est.method, y, seed))
        return rows
    if evaluator == "fixed-point":
        V = solve_fixed_point(y, params, law)
        return [(x, float(V(float(x))), 0.0, "fixed_point", y, seed) for x in xs]
    raise ConfigError(
        f"unknown evaluator {evaluator!r}; expected closed, mc or fixed-point"
    )


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    rows = _eval_rows(cfg, _threads(args))
    _write_csv(args.out, cfg, _EVAL_HEADER, rows)
    return 0


def _make_optimizer_evaluator(cfg: dict, threads: int):
    params, law, _insured = _economy(cfg)
    evaluator = cfg.get("eval.evaluator", "closed")
    if evaluator == "closed":
        if _insured is not None or not isinstance(law, BetaAlphaOne):
            raise ConfigError(_CLOSED_UNAVAILABLE)
        return params, law, ClosedFormEvaluator(params, law.alpha)
    if evaluator == "fixed-point":
        return params, law, FixedPointEvaluator(params, law)
    if evaluator == "mc":
        return params, law, MonteCarloEvaluator(
            params,
            law,
            n_paths=_get_int(cfg, "mc.n"),
            seed=_get_int(cfg, "mc.seed"),
            horizon=_get_float(cfg, "mc.horizon") if "mc.horizon" in cfg else None,
            threads=threads,
        )
    raise ConfigError(
        f"unknown evaluator {evaluator!r}; expected closed, mc or fixed-point"
    )


def _optimize_result(cfg: dict, threads: int):
    params, law, evaluator = _make_optimizer_evaluator(cfg, threads)
    y_max = _get_float(cfg, "optimize.y_max") if "optimize.y_max" in cfg else None
    return optimize(
        params,
        law,
        evaluator,
        y_max=y_max,
        tol_y=_get_float(cfg, "optimize.tol_y"),
    )


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    res = _optimize_result(cfg, _threads(args))
    summary = (
        f"y_star={_fmt(res.y_star)} value={_fmt(res.value_at_y_star)} "
        f"verified={_fmt(res.verified)}"
    )
    _write_csv(
        args.out,
        cfg,
        ["y", "objective"],
        [(y, j) for y, j in res.search_trace],
        trailer=summary,
    )
    if args.out:
        print(summary)
    return 0


def cmd_compare_cd(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    params = build_model(cfg)
    dist = build_dist(cfg)
    if build_cover(cfg) is not None:
        raise ConfigError("compare-cd takes no cover; it compares uninsured schemes")
    mu = dist.mean()
    lam_grid = (
        parse_grid(cfg["compare.lam_grid"])
        if "compare.lam_grid" in cfg
        else np.array([params.lam])
    )
    delta_grid = (
        parse_grid(cfg["compare.delta_grid"])
        if "compare.delta_grid" in cfg
        else np.array([params.delta])
    )
    b_grid = (
        parse_grid(cfg["compare.b_grid"])
        if "compare.b_grid" in cfg
        else np.array([params.b])
    )
    rows = []
    for b, delta, lam in itertools.product(b_grid, delta_grid, lam_grid):
        try:
            p = ModelParams(
                a=params.a, b=float(b), c=params.c,
                I_star=params.I_star, lam=float(lam), delta=float(delta),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid swept parameters: {exc}") from exc
        comp = compare_strategies(p, dist)
        boundary_lam = (b - delta) / (1.0 - mu) if mu < 1.0 else math.inf
        rows.append((lam, delta, b, mu, comp.boundary, boundary_lam, comp.decision))
    _write_csv(
        args.out,
        cfg,
        ["lam", "delta", "b", "mu", "boundary_b", "boundary_lam", "decision"],
        rows,
    )
    return 0


def cmd_hjb_check(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    params, law, _insured = _economy(cfg)
    source = cfg.get("hjb.source", "fixed-point")
    y = _get_float(cfg, "eval.y")
    if y < params.x_star:
        raise ConfigError(
            f"threshold y={y} below the critical capital {params.x_star:.6g}"
        )
    if source == "closed":
        if _insured is not None or not isinstance(law, BetaAlphaOne):
            raise ConfigError(_CLOSED_UNAVAILABLE)
        alpha = law.alpha
        candidate = lambda x: value_threshold_closed(float(x), y, params, alpha)  # noqa: E731
        default_top = 50.0 * y
    elif source == "fixed-point":
        candidate = solve_fixed_point(y, params, law)
        default_top = candidate.grid.x_max
    else:
        raise ConfigError(f"unknown hjb source {source!r}; expected closed or fixed-point")
    if "eval.x_grid" in cfg:
        points = parse_grid(cfg["eval.x_grid"])
        if np.any(points <= params.x_star):
            raise ConfigError("hjb sweep points must lie above the critical capital")
    else:
        lo = max(params.x_star * (1.0 + 1e-6), min(y, default_top))
        points = np.geomspace(lo, default_top, 120 if source == "closed" else 160)
    rows = []
    for x in points:
        d, g = hjb_residual(candidate, params, law, float(x))
        rows.append((x, d, g))
    report = verify_supersolution(candidate, params, law, points=points)
    summary = (
        f"passed={_fmt(report.passed)} min_deriv_slack={_fmt(report.min_deriv_slack)} "
        f"min_generator_residual={_fmt(report.min_generator_residual)}"
    )
    _write_csv(
        args.out, cfg, ["x", "deriv_slack", "generator_residual"], rows, trailer=summary
    )
    if args.out:
        print(summary)
    return 0


def cmd_premium(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    params = build_model(cfg)
    dist = build_dist(cfg)
    cover = build_cover(cfg)
    if cover is None:
        raise ConfigError("premium requires a cover; use --cover KIND:PARAM:GAMMA")
    try:
        model = build_insured_model(params, cover, dist)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"p_R={_fmt(model.p_R)}")
    print(f"x_star_R={_fmt(model.x_star_R)}")
    print(f"r_R={_fmt(model.r_R)}")
    if args.out:
        _write_csv(
            args.out,
            cfg,
            ["cover_kind", "cover_param", "gamma", "p_R", "x_star_R", "r_R"],
            [(cover.kind, cover.param, cover.gamma, model.p_R, model.x_star_R, model.r_R)],
        )
    return 0


def _parse_sweep_values(spec: str) -> list[str]:
    if re.fullmatch(r"[-+0-9.eE]+:[-+0-9.eE]+:\d+", spec):
        return [_fmt(v) for v in parse_grid(spec)]
    vals = [tok.strip() for tok in spec.split(",") if tok.strip()]
    if not vals:
        raise ConfigError(f"empty sweep value list: {spec!r}")
    return vals


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if not args.sweep:
        raise ConfigError("sweep requires at least one --sweep key=values")
    keys, value_lists = [], []
    for item in args.sweep:
        if "=" not in item:
            raise ConfigError(f"--sweep expects key=values, got {item!r}")
        key, _, spec = item.partition("=")
        keys.append(key.strip())
        value_lists.append(_parse_sweep_values(spec.strip()))
    threads = _threads(args)
    combos = list(itertools.product(*value_lists))
    if args.long:
        rows = []
        for combo in combos:
            sub = dict(cfg)
            sub.update(zip(keys, combo))
            if args.command_name == "optimize":
                res = _optimize_result(sub, threads)
                rows.append(tuple(combo) + (res.y_star, res.value_at_y_star, res.verified))
            elif args.command_name == "premium":
                params = build_model(sub)
                dist = build_dist(sub)
                cover = build_cover(sub)
                if cover is None:
                    raise ConfigError("sweep over premium requires a cover")
                try:
                    model = build_insured_model(params, cover, dist)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
                rows.append(tuple(combo) + (model.p_R, model.x_star_R, model.r_R))
            else:
                for row in _eval_rows(sub, threads):
                    rows.append(tuple(combo) + row)
        tail = {
            "optimize": ["y_star", "value", "verified"],
            "premium": ["p_R", "x_star_R", "r_R"],
            "eval": _EVAL_HEADER,
        }[args.command_name]
        _write_csv(args.out, cfg, keys + tail, rows)
        return 0
    if not args.out_dir:
        raise ConfigError("per-combo sweep output requires --out-dir (or use --long)")
    os.makedirs(args.out_dir, exist_ok=True)
    for combo in combos:
        sub = dict(cfg)
        sub.update(zip(keys, combo))
        stem = "_".join(
            f"{k.replace('.', '-')}-{v.replace('/', '-')}" for k, v in zip(keys, combo)
        )
        out = os.path.join(args.out_dir, f"{args.command_name}_{stem}.csv")
        if args.command_name == "optimize":
            res = _optimize_result(sub, threads)
            _write_csv(
                out,
                sub,
                ["y", "objective"],
                [(y, j) for y, j in res.search_trace],
                trailer=(
                    f"y_star={_fmt(res.y_star)} value={_fmt(res.value_at_y_star)} "
                    f"verified={_fmt(res.verified)}"
                ),
            )
        elif args.command_name == "premium":
            params = build_model(sub)
            dist = build_dist(sub)
            cover = build_cover(sub)
            if cover is None:
                raise ConfigError("sweep over premium requires a cover")
            try:
                model = build_insured_model(params, cover, dist)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            _write_csv(
                out,
                sub,
                ["cover_kind", "cover_param", "gamma", "p_R", "x_star_R", "r_R"],
                [(cover.kind, cover.param, cover.gamma, model.p_R, model.x_star_R, model.r_R)],
            )
        else:
            _write_csv(out, sub, _EVAL_HEADER, _eval_rows(sub, threads))
    return 0


# --------------------------------------------------------------------------
# argument parsing and entry point
# --------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key (repeatable)")
    p.add_argument("--a", type=float, help="loss-intensity exponent factor")
    p.add_argument("--b", type=float, help="income generation rate")
    p.add_argument("--c", type=float, help="consumption fraction parameter")
    p.add_argument("--lam", type=float, help="shock arrival rate")
    p.add_argument("--delta", type=float, help="discount rate")
    p.add_argument("--i-star", type=float, dest="i_star", help="critical income level")
    p.add_argument("--x-star", type=float, dest="x_star", help="critical capital level")
    p.add_argument("--dist", help="loss law: beta:ALPHA or kuma:P:Q")
    p.add_argument("--cover", help="microinsurance cover: KIND:PARAM:GAMMA "
                                   "(kind prop, xl or tl)")
    p.add_argument("--threads", type=int,
                   help="worker threads (default: CT_THREADS or all cores); "
                        "never affects numerical output")
    p.add_argument("--out", help="output CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="povertytrap",
        description="Capital-transfer cost model: evaluation, optimization, "
                    "and microinsurance CSV artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="tabulate a threshold-strategy value function; "
                                    "CSV columns x,value,ci_half_width,method,y,seed")
    _add_common(p)
    p.add_argument("--evaluator", choices=["closed", "mc", "fixed-point"])
    p.add_argument("--y", type=float, help="transfer threshold")
    p.add_argument("--x", help="comma list of capital points")
    p.add_argument("--x-grid", dest="x_grid", help="capital grid start:end:count")
    p.add_argument("--n", type=int, help="Monte Carlo paths")
    p.add_argument("--horizon", type=float, help="Monte Carlo time horizon")
    p.add_argument("--seed", type=int, help="Monte Carlo master seed")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("optimize", help="search the optimal threshold; CSV columns "
                                        "y,objective plus a summary trailer")
    _add_common(p)
    p.add_argument("--evaluator", choices=["closed", "mc", "fixed-point"])
    p.add_argument("--y-max", type=float, dest="y_max", help="upper search bound")
    p.add_argument("--tol-y", type=float, dest="tol_y", help="threshold tolerance")
    p.add_argument("--n", type=int, help="Monte Carlo paths")
    p.add_argument("--horizon", type=float, help="Monte Carlo time horizon")
    p.add_argument("--seed", type=int, help="Monte Carlo master seed")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compare-cd", help="steady income support vs capital top-ups: "
                                          "decision regions over swept rates")
    _add_common(p)
    p.add_argument("--lam-grid", dest="lam_grid", help="shock-rate grid start:end:count")
    p.add_argument("--delta-grid", dest="delta_grid", help="discount-rate grid")
    p.add_argument("--b-grid", dest="b_grid", help="income-rate grid")
    p.set_defaults(func=cmd_compare_cd)

    p = sub.add_parser("hjb-check", help="sweep variational-inequality residuals of a "
                                         "candidate value function")
    _add_common(p)
    p.add_argument("--source", choices=["closed", "fixed-point"],
                   help="candidate construction (default fixed-point)")
    p.add_argument("--y", type=float, help="transfer threshold")
    p.add_argument("--x-grid", dest="x_grid", help="sweep grid start:end:count")
    p.set_defaults(func=cmd_hjb_check)

    p = sub.add_parser("premium", help="print premium rate and adjusted model constants "
                                       "for a cover")
    _add_common(p)
    p.set_defaults(func=cmd_premium)

    p = sub.add_parser("sweep", help="run a subcommand over a cartesian product of "
                                     "config keys")
    _add_common(p)
    p.add_argument("--command", dest="command_name", required=True,
                   choices=["eval", "optimize", "premium"])
    p.add_argument("--sweep", action="append", metavar="KEY=V1,V2,... or KEY=A:B:N",
                   help="values for one config key (repeatable; cartesian product)")
    p.add_argument("--long", action="store_true",
                   help="one long CSV instead of one file per combination")
    p.add_argument("--out-dir", dest="out_dir", help="directory for per-combo CSVs")
    p.add_argument("--evaluator", choices=["closed", "mc", "fixed-point"])
    p.add_argument("--y", type=float, help="transfer threshold")
    p.add_argument("--x", help="comma list of capital points")
    p.add_argument("--x-grid", dest="x_grid", help="capital grid start:end:count")
    p.add_argument("--y-max", type=float, dest="y_max")
    p.add_argument("--tol-y", type=float, dest="tol_y")
    p.add_argument("--n", type=int, help="Monte Carlo paths")
    p.add_argument("--horizon", type=float)
    p.add_argument("--seed", type=int, help="Monte Carlo master seed")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())