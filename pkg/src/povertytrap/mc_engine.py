"""Vectorised Monte Carlo estimation of transfer costs with reproducible RNG.

Paths are simulated in fixed blocks of :data:`BLOCK_SIZE` in lockstep: every
round draws one (waiting-time, loss) uniform pair per path in the block —
including already-finished paths — so that path ``i`` of block ``j`` consumes
an identical uniform stream no matter what threshold is being evaluated.
That alignment gives common random numbers across thresholds (used by the
optimizer) and, together with a fixed block partition and in-order reduction
of block partial sums, makes every estimate bit-reproducible for a given
``(master_seed, n_paths, horizon_T)`` regardless of thread count.

Per-block generators are spawned as ``SeedSequence(master_seed, spawn_key=
(lane, block_index))``; the lane index separates independent estimator
stages (paths from the threshold, paths from another start, trap-time
paths) so they never share draws.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special as sp_special

from .closed_form import ValueEstimate, perpetual_D
from .model_core import CAPITAL_CAP, LossLaw, ModelParams, Trajectory

__all__ = [
    "BLOCK_SIZE",
    "McConfig",
    "PathOutcome",
    "default_horizon",
    "path_outcome",
    "estimate_Vy_at_y",
    "estimate_Vy",
    "estimate_D",
]

#: paths per simulation block; part of the reproducibility contract
BLOCK_SIZE = 8192

# RNG lanes: separate stages of one estimate must never share uniforms
_LANE_AT_Y = 0
_LANE_FROM_X = 1
_LANE_TRAP = 2


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo run configuration.

    ``horizon_T=None`` selects the default truncation ``8*ln(10)/delta``
    (discount factor 1e-8 at the horizon).
    """

    n_paths: int
    horizon_T: float | None = None
    master_seed: int = 0
    ci_level: float = 0.99

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.horizon_T is not None and self.horizon_T <= 0.0:
            raise ValueError(f"horizon_T must be positive, got {self.horizon_T}")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError(f"ci_level must be in (0, 1), got {self.ci_level}")


@dataclass(frozen=True)
class PathOutcome:
    """First-passage summary of one path: shortfall, time, discount factor."""

    deficit_J: float
    tau_y: float
    discount_factor: float


def default_horizon(params: ModelParams) -> float:
    """Truncation time at which the discount factor reaches 1e-8."""
    return 8.0 * math.log(10.0) / params.delta


def path_outcome(traj: Trajectory, params: ModelParams) -> PathOutcome:
    """Condense a simulated trajectory into its first-passage summary."""
    if traj.truncated:
        return PathOutcome(deficit_J=0.0, tau_y=math.inf, discount_factor=0.0)
    return PathOutcome(
        deficit_J=traj.deficit,
        tau_y=traj.tau_y,
        discount_factor=math.exp(-params.delta * traj.tau_y),
    )


def _z_quantile(ci_level: float) -> float:
    return float(sp_special.ndtri(0.5 + 0.5 * ci_level))


def _n_blocks(n_paths: int) -> int:
    return (n_paths + BLOCK_SIZE - 1) // BLOCK_SIZE


def _first_passage_block(
    x0: float,
    y: float,
    params: ModelParams,
    dist: LossLaw,
    nb: int,
    horizon: float,
    seed_seq: np.random.SeedSequence,
) -> np.ndarray:
    """Moment partial sums (A, B, A^2, B^2, AB) for one block of paths.

    ``A = J * exp(-delta*tau)`` and ``B = exp(-delta*tau)`` at the first
    shock that drops capital strictly below ``y``; both 0 on truncation.
    """
    rng = np.random.default_rng(seed_seq)
    lam, delta, xs, r = params.lam, params.delta, params.x_star, params.r
    x = np.full(nb, float(x0))
    t = np.zeros(nb)
    alive = np.ones(nb, dtype=bool)
    A = np.zeros(nb)
    B = np.zeros(nb)
    while alive.any():
        u = rng.random((nb, 2))
        dt = -np.log1p(-u[:, 0]) / lam
        w = dist.inverse_cdf(u[:, 1])
        t_new = t + dt
        alive &= t_new <= horizon
        with np.errstate(over="ignore", invalid="ignore"):
            grown = (x - xs) * np.exp(r * dt) + xs
        xf = np.where(x > xs, np.minimum(grown, CAPITAL_CAP), x)
        xp = xf * w
        hit = alive & (xp < y)
        disc = np.exp(-delta * t_new[hit])
        A[hit] = (y - xp[hit]) * disc
        B[hit] = disc
        alive &= ~hit
        x = np.where(alive, xp, x)
        t = t_new
    return np.array(
        [A.sum(), B.sum(), (A * A).sum(), (B * B).sum(), (A * B).sum()]
    )


def _trap_block(
    x0: float,
    params: ModelParams,
    dist: LossLaw,
    nb: int,
    horizon: float,
    seed_seq: np.random.SeedSequence,
    d_at_star: float,
    d_slope: float,
) -> np.ndarray:
    """Moment partial sums (V, V^2) of discounted trapped-household costs.

    The uncontrolled process runs to the first shock leaving capital at or
    below ``x_star``; the exact below-trap cost ``d_at_star + d_slope *
    (x_star - x)`` is discounted back.  Truncated paths contribute 0.
    """
    rng = np.random.default_rng(seed_seq)
    lam, delta, xs, r = params.lam, params.delta, params.x_star, params.r
    x = np.full(nb, float(x0))
    t = np.zeros(nb)
    alive = np.ones(nb, dtype=bool)
    V = np.zeros(nb)
    while alive.any():
        u = rng.random((nb, 2))
        dt = -np.log1p(-u[:, 0]) / lam
        w = dist.inverse_cdf(u[:, 1])
        t_new = t + dt
        alive &= t_new <= horizon
        with np.errstate(over="ignore", invalid="ignore"):
            grown = (x - xs) * np.exp(r * dt) + xs
        xf = np.where(x > xs, np.minimum(grown, CAPITAL_CAP), x)
        xp = xf * w
        trapped = alive & (xp <= xs)
        V[trapped] = (d_at_star + d_slope * (xs - xp[trapped])) * np.exp(
            -delta * t_new[trapped]
        )
        alive &= ~trapped
        x = np.where(alive, xp, x)
        t = t_new
    return np.array([V.sum(), (V * V).sum()])


def _run_blocks(kernel, n_paths: int, master_seed: int, lane: int, threads: int):
    """Run per-block kernels and reduce partial sums in fixed block order."""
    blocks = _n_blocks(n_paths)
    sizes = [min(BLOCK_SIZE, n_paths - bi * BLOCK_SIZE) for bi in range(blocks)]
    seqs = [
        np.random.SeedSequence(entropy=master_seed, spawn_key=(lane, bi))
        for bi in range(blocks)
    ]
    if threads > 1 and blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(kernel, sizes, seqs))
    else:
        partials = [kernel(nb, sq) for nb, sq in zip(sizes, seqs)]
    total = partials[0]
    for p in partials[1:]:
        total = total + p
    return total


def _ratio_estimate(
    sums: np.ndarray, n: int, ci_level: float
) -> tuple[float, float]:
    """Value and CI half-width for ``mA / (1 - mB)`` by the delta method."""
    sA, sB, sA2, sB2, sAB = sums
    mA, mB = sA / n, sB / n
    denom = 1.0 - mB
    if denom <= 0.0:
        raise RuntimeError("no transfer events observed; increase T or N")
    value = mA / denom
    if n < 2:
        return value, 0.0
    var_a = max((sA2 - n * mA * mA) / (n - 1), 0.0)
    var_b = max((sB2 - n * mB * mB) / (n - 1), 0.0)
    cov_ab = (sAB - n * mA * mB) / (n - 1)
    var_val = (
        var_a / denom**2
        + (mA**2) * var_b / denom**4
        + 2.0 * mA * cov_ab / denom**3
    ) / n
    return value, _z_quantile(ci_level) * math.sqrt(max(var_val, 0.0))


def estimate_Vy_at_y(
    y: float,
    params: ModelParams,
    dist: LossLaw,
    cfg: McConfig,
    threads: int = 1,
) -> ValueEstimate:
    """Estimate the threshold-strategy cost at its own threshold.

    Simulates paths from ``y`` to the first shock dropping capital below
    ``y`` and applies the ratio estimator ``mean(J e^{-delta tau}) /
    (1 - mean(e^{-delta tau}))``; truncated paths contribute zero to both
    sums.  The confidence half-width comes from the delta method for the
    ratio of correlated means.
    """
    if y < params.x_star:
        raise ValueError(f"threshold y={y} below critical level {params.x_star}")
    horizon = cfg.horizon_T if cfg.horizon_T is not None else default_horizon(params)
    sums = _run_blocks(
        lambda nb, sq: _first_passage_block(y, y, params, dist, nb, horizon, sq),
        cfg.n_paths,
        cfg.master_seed,
        _LANE_AT_Y,
        threads,
    )
    value, ci = _ratio_estimate(sums, cfg.n_paths, cfg.ci_level)
    return ValueEstimate(x=y, value=value, method="monte_carlo", ci_half_width=ci)


def estimate_Vy(
    x: float,
    y: float,
    params: ModelParams,
    dist: LossLaw,
    cfg: McConfig,
    threads: int = 1,
) -> ValueEstimate:
    """Estimate the threshold-strategy cost at any starting capital.

    Below the threshold the shift ``V_y(x) = (y - x) + V_y(y)`` is exact, so
    only the threshold value is simulated.  At or above the threshold, the
    threshold value is estimated first (independent RNG lane) and plugged
    into an average over fresh paths started at ``x``; the confidence
    half-width propagates both independent error sources.
    """
    if y < params.x_star:
        raise ValueError(f"threshold y={y} below critical level {params.x_star}")
    base = estimate_Vy_at_y(y, params, dist, cfg, threads=threads)
    if x < y:
        return ValueEstimate(
            x=x,
            value=(y - x) + base.value,
            method="monte_carlo",
            ci_half_width=base.ci_half_width,
        )
    horizon = cfg.horizon_T if cfg.horizon_T is not None else default_horizon(params)
    sums = _run_blocks(
        lambda nb, sq: _first_passage_block(x, y, params, dist, nb, horizon, sq),
        cfg.n_paths,
        cfg.master_seed,
        _LANE_FROM_X,
        threads,
    )
    n = cfg.n_paths
    sA, sB, sA2, sB2, sAB = sums
    mA, mB = sA / n, sB / n
    value = mA + base.value * mB
    if n < 2:
        return ValueEstimate(x=x, value=value, method="monte_carlo", ci_half_width=0.0)
    var_a = max((sA2 - n * mA * mA) / (n - 1), 0.0)
    var_b = max((sB2 - n * mB * mB) / (n - 1), 0.0)
    cov_ab = (sAB - n * mA * mB) / (n - 1)
    z = _z_quantile(cfg.ci_level)
    se_base = base.ci_half_width / z if base.ci_half_width > 0.0 else 0.0
    var_val = (
        var_a + base.value**2 * var_b + 2.0 * base.value * cov_ab
    ) / n + (mB**2) * se_base**2
    return ValueEstimate(
        x=x,
        value=value,
        method="monte_carlo",
        ci_half_width=z * math.sqrt(max(var_val, 0.0)),
    )


def estimate_D(
    x: float,
    params: ModelParams,
    dist: LossLaw,
    cfg: McConfig,
    threads: int = 1,
) -> ValueEstimate:
    """Estimate the perpetual-support cost for a household above the trap.

    At or below the critical level the closed form is exact and returned
    directly.  Above it, uncontrolled paths run to the first shock landing
    at or below the critical level, where the exact trapped cost is
    discounted back; truncated paths contribute zero.
    """
    xs = params.x_star
    if x <= xs:
        return ValueEstimate(
            x=x, value=perpetual_D(x, params, dist), method="closed_form"
        )
    horizon = cfg.horizon_T if cfg.horizon_T is not None else default_horizon(params)
    mu = dist.mean()
    lam1m = params.lam * (1.0 - mu)
    d_at_star = (params.b * xs / params.delta) * lam1m / (params.delta + lam1m)
    d_slope = params.b / (params.delta + lam1m)
    sums = _run_blocks(
        lambda nb, sq: _trap_block(
            x, params, dist, nb, horizon, sq, d_at_star, d_slope
        ),
        cfg.n_paths,
        cfg.master_seed,
        _LANE_TRAP,
        threads,
    )
    n = cfg.n_paths
    sV, sV2 = sums
    mV = sV / n
    if n < 2:
        return ValueEstimate(x=x, value=mV, method="monte_carlo", ci_half_width=0.0)
    var_v = max((sV2 - n * mV * mV) / (n - 1), 0.0)
    ci = _z_quantile(cfg.ci_level) * math.sqrt(var_v / n)
    return ValueEstimate(x=x, value=mV, method="monte_carlo", ci_half_width=ci)
