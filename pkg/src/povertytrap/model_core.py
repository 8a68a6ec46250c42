"""Household capital dynamics with Poisson shocks and threshold transfers.

A household's capital grows deterministically between shock events: above the
critical level ``x_star`` capital follows ``x'(t) = r (x - x_star)``, below it
capital is stagnant (the poverty trap).  Shocks arrive at Poisson rate ``lam``
and scale capital by a random remaining proportion ``Z`` in (0, 1).  A threshold
strategy with level ``y >= x_star`` instantly tops capital back up to ``y``
whenever a shock knocks it below ``y``; the discounted sum of those top-ups is
the cost to the transfer programme.

This module holds the parameter containers, the loss laws for ``Z``, the
deterministic flow, and a single-path simulator.  Vectorised estimation lives
in :mod:`povertytrap.mc_engine`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special as sp_special

__all__ = [
    "ModelParams",
    "LossLaw",
    "BetaAlphaOne",
    "Kumaraswamy",
    "ThresholdStrategy",
    "JumpEvent",
    "Trajectory",
    "flow",
    "apply_loss",
    "sample_z",
    "mean_z",
    "simulate_path",
]

# Capital is clamped at this level in long simulations; a household this far
# above the trap contributes nothing measurable to discounted transfer costs,
# but letting the exponential flow run free would overflow float64.
CAPITAL_CAP = 1e200


@dataclass(frozen=True)
class ModelParams:
    """Economy constants for the household capital process.

    Parameters
    ----------
    a : float
        Fraction of production consumed, in [0, 1).
    b : float
        Productivity of capital (income per unit capital), > 0.
    c : float
        Fraction of surplus income reinvested, in (0, 1].
    I_star : float
        Subsistence income level, > 0.
    lam : float
        Poisson arrival rate of capital shocks, > 0.
    delta : float
        Discount rate of the transfer programme, > 0.

    Notes
    -----
    The derived quantities are ``r = (1 - a) * b * c`` (net growth rate of
    capital above the trap) and ``x_star = I_star / b`` (critical capital
    level at which income is exactly subsistence).
    """

    a: float
    b: float
    c: float
    I_star: float
    lam: float
    delta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.a < 1.0:
            raise ValueError(f"consumed fraction a must be in [0, 1), got {self.a}")
        if self.b <= 0.0:
            raise ValueError(f"productivity b must be positive, got {self.b}")
        if not 0.0 < self.c <= 1.0:
            raise ValueError(f"investment fraction c must be in (0, 1], got {self.c}")
        if self.I_star <= 0.0:
            raise ValueError(f"subsistence income I_star must be positive, got {self.I_star}")
        if self.lam <= 0.0:
            raise ValueError(f"shock rate lam must be positive, got {self.lam}")
        if self.delta <= 0.0:
            raise ValueError(f"discount rate delta must be positive, got {self.delta}")

    @property
    def r(self) -> float:
        """Net exponential growth rate of capital above ``x_star``."""
        return (1.0 - self.a) * self.b * self.c

    @property
    def x_star(self) -> float:
        """Critical capital level: below it the household is trapped."""
        return self.I_star / self.b

    @classmethod
    def from_x_star(
        cls, a: float, b: float, c: float, x_star: float, lam: float, delta: float
    ) -> "ModelParams":
        """Build params from the critical level instead of subsistence income."""
        return cls(a=a, b=b, c=c, I_star=b * x_star, lam=lam, delta=delta)

    def replace_b(self, b_new: float) -> "ModelParams":
        """Same economy with productivity ``b_new`` (keeps ``I_star`` fixed)."""
        return ModelParams(
            a=self.a, b=b_new, c=self.c, I_star=self.I_star, lam=self.lam, delta=self.delta
        )


class LossLaw:
    """Law of the remaining proportion of capital after a shock.

    A law is a probability distribution on (0, 1] decomposed into an
    absolutely continuous part plus finitely many point masses (``atoms``).
    Plain shock laws have no atoms; insurance-transformed laws may.

    Subclasses provide the continuous-part functions and the atoms; the
    full CDF and partial mean are assembled here.
    """

    #: point masses as ((location, mass), ...)
    atoms: tuple[tuple[float, float], ...] = ()
    #: support intervals of the density part as ((lo, hi), ...)
    cont_intervals: tuple[tuple[float, float], ...] = ()

    # -- continuous part: subclasses override -------------------------------
    def cont_cdf(self, w):
        """CDF of the density part only (total mass may be < 1)."""
        raise NotImplementedError

    def cont_pdf(self, w):
        """Density of the continuous part."""
        raise NotImplementedError

    def cont_partial_mean(self, w):
        """``integral of u * density(u) over u <= w`` (continuous part only)."""
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def inverse_cdf(self, u):
        """Quantile transform; maps uniform (0,1) draws to samples."""
        raise NotImplementedError

    # -- assembled full-law functions ---------------------------------------
    def cdf(self, w):
        """Full CDF including atoms (right-continuous)."""
        out = np.asarray(self.cont_cdf(w), dtype=float)
        for loc, mass in self.atoms:
            out = out + mass * (np.asarray(w) >= loc)
        return out if out.ndim else float(out)

    def partial_mean(self, w):
        """``E[Z * 1{Z <= w}]`` including atoms."""
        out = np.asarray(self.cont_partial_mean(w), dtype=float)
        for loc, mass in self.atoms:
            out = out + loc * mass * (np.asarray(w) >= loc)
        return out if out.ndim else float(out)

    def sample(self, u):
        return self.inverse_cdf(u)


@dataclass(frozen=True)
class BetaAlphaOne(LossLaw):
    """Beta(alpha, 1) remaining proportion: CDF ``G(z) = z**alpha`` on (0, 1)."""

    alpha: float

    def __post_init__(self) -> None:
        if self.alpha <= 0.0:
            raise ValueError(f"shape alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "cont_intervals", ((0.0, 1.0),))

    def cont_cdf(self, w):
        w = np.clip(np.asarray(w, dtype=float), 0.0, 1.0)
        return w**self.alpha

    def cont_pdf(self, w):
        w = np.asarray(w, dtype=float)
        inside = (w > 0.0) & (w < 1.0)
        ws = np.where(inside, w, 0.5)
        return np.where(inside, self.alpha * ws ** (self.alpha - 1.0), 0.0)

    def cont_partial_mean(self, w):
        w = np.clip(np.asarray(w, dtype=float), 0.0, 1.0)
        return self.alpha / (self.alpha + 1.0) * w ** (self.alpha + 1.0)

    def mean(self) -> float:
        return self.alpha / (self.alpha + 1.0)

    def inverse_cdf(self, u):
        return np.asarray(u, dtype=float) ** (1.0 / self.alpha)


@dataclass(frozen=True)
class Kumaraswamy(LossLaw):
    """Kumaraswamy(p, q) remaining proportion: CDF ``G(z) = 1 - (1 - z**p)**q``."""

    p: float
    q: float

    def __post_init__(self) -> None:
        if self.p <= 0.0 or self.q <= 0.0:
            raise ValueError(f"shapes must be positive, got p={self.p}, q={self.q}")
        object.__setattr__(self, "cont_intervals", ((0.0, 1.0),))

    def cont_cdf(self, w):
        w = np.clip(np.asarray(w, dtype=float), 0.0, 1.0)
        return 1.0 - (1.0 - w**self.p) ** self.q

    def cont_pdf(self, w):
        w = np.asarray(w, dtype=float)
        inside = (w > 0.0) & (w < 1.0)
        ws = np.where(inside, w, 0.5)
        d = self.p * self.q * ws ** (self.p - 1.0) * (1.0 - ws**self.p) ** (self.q - 1.0)
        return np.where(inside, d, 0.0)

    def cont_partial_mean(self, w):
        # E[Z 1{Z<=w}] = mean * I_{w**p}(1 + 1/p, q) with I the regularised
        # incomplete beta function.
        w = np.clip(np.asarray(w, dtype=float), 0.0, 1.0)
        return self.mean() * sp_special.betainc(1.0 + 1.0 / self.p, self.q, w**self.p)

    def mean(self) -> float:
        return self.q * sp_special.beta(1.0 + 1.0 / self.p, self.q)

    def inverse_cdf(self, u):
        u = np.asarray(u, dtype=float)
        return (1.0 - (1.0 - u) ** (1.0 / self.q)) ** (1.0 / self.p)


@dataclass(frozen=True)
class ThresholdStrategy:
    """Transfer policy: top capital up to ``y`` whenever it falls below ``y``."""

    y: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.y) or self.y <= 0.0:
            raise ValueError(f"threshold y must be positive and finite, got {self.y}")


@dataclass(frozen=True)
class JumpEvent:
    """One shock: time, loss draw, capital before/after, transfer injected."""

    tau: float
    z: float
    pre_loss_capital: float
    post_loss_capital: float
    transfer: float


@dataclass(frozen=True)
class Trajectory:
    """One simulated path of the controlled capital process.

    ``tau_y`` is the first time a shock drops capital (strictly) below the
    threshold, or ``inf`` if that never happens before the horizon.
    ``deficit`` is the corresponding shortfall ``y - X`` (0 when ``tau_y`` is
    ``inf``).  ``discounted_transfer_total`` accumulates ``e**(-delta*t)``
    times each injected transfer, including a time-zero top-up when the
    initial capital starts below the threshold.
    """

    events: tuple[JumpEvent, ...]
    stop_time: float
    tau_y: float
    deficit: float
    discounted_transfer_total: float

    @property
    def truncated(self) -> bool:
        """True when the path reached the horizon without a transfer shock."""
        return math.isinf(self.tau_y)


def flow(x0, t, params: ModelParams):
    """Deterministic capital at time ``t`` started from ``x0`` with no shocks.

    Above the critical level the capital solves ``x' = r (x - x_star)``; at or
    below it the capital is constant.  Accepts scalars or arrays.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0):
        raise ValueError("time t must be non-negative")
    x_arr = np.asarray(x0, dtype=float)
    xs = params.x_star
    out = np.where(x_arr > xs, (x_arr - xs) * np.exp(params.r * t_arr) + xs, x_arr)
    return out if out.ndim else float(out)


def apply_loss(x, z):
    """Capital after a shock with remaining proportion ``z``: ``x * z``.

    ``z = 1`` is allowed (a shock fully absorbed by insurance leaves capital
    unchanged); ``z`` must otherwise lie in ``(0, 1)``.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr <= 0.0) or np.any(z_arr > 1.0):
        raise ValueError("remaining proportion z must lie in (0, 1]")
    out = np.asarray(x, dtype=float) * z_arr
    return out if out.ndim else float(out)


def sample_z(dist: LossLaw, u):
    """Draw the remaining proportion from ``dist`` by inverse CDF of ``u``."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise ValueError("uniform variate u must lie strictly in (0, 1)")
    out = dist.inverse_cdf(u_arr)
    return out if np.ndim(out) else float(out)


def mean_z(dist: LossLaw) -> float:
    """Expected remaining proportion under ``dist``."""
    return float(dist.mean())


def simulate_path(
    x0: float,
    strategy: ThresholdStrategy,
    params: ModelParams,
    dist: LossLaw,
    horizon: float,
    rng_stream,
) -> Trajectory:
    """Simulate one path of the threshold-controlled capital process.

    The path starts at ``x0`` and runs until the first shock that drops
    capital strictly below the threshold (a transfer event, which stops the
    path) or until ``horizon``, whichever comes first.  If ``x0`` is below
    the threshold, a top-up of ``y - x0`` is booked at time zero and the path
    continues from ``y``; the time-zero top-up does not count as the stopping
    transfer.

    Each shock consumes exactly two uniforms from ``rng_stream`` (via
    ``rng_stream.random(2)``): the first maps to the Exp(lam) waiting time
    through ``-log1p(-u)/lam``, the second to the loss draw through the
    inverse CDF of ``dist``.

    Parameters
    ----------
    x0 : float
        Initial capital; must be at least ``params.x_star``.
    strategy : ThresholdStrategy
        Threshold policy with level ``y >= params.x_star``.
    horizon : float
        Truncation time ``T > 0``; a path that survives past it is marked
        truncated (``tau_y = inf``).
    rng_stream :
        numpy Generator (or any object with a conforming ``random`` method).
    """
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if x0 < params.x_star:
        raise ValueError(f"initial capital {x0} below critical level {params.x_star}")
    y = strategy.y
    if y < params.x_star:
        raise ValueError(f"threshold {y} below critical level {params.x_star}")

    discounted_total = 0.0
    x = float(x0)
    if x < y:
        discounted_total += y - x
        x = y

    events: list[JumpEvent] = []
    t = 0.0
    while True:
        u_wait, u_loss = rng_stream.random(2)
        dt = -math.log1p(-u_wait) / params.lam
        t_next = t + dt
        if t_next > horizon:
            return Trajectory(
                events=tuple(events),
                stop_time=horizon,
                tau_y=math.inf,
                deficit=0.0,
                discounted_transfer_total=discounted_total,
            )
        x_pre = float(flow(x, dt, params))
        if not math.isfinite(x_pre):
            raise FloatingPointError(
                f"capital overflow at t={t_next:.3g} (x={x:.3g}, dt={dt:.3g})"
            )
        z = float(dist.inverse_cdf(u_loss))
        x_post = x_pre * z
        if x_post < y:
            transfer = y - x_post
            events.append(
                JumpEvent(
                    tau=t_next,
                    z=z,
                    pre_loss_capital=x_pre,
                    post_loss_capital=x_post + transfer,
                    transfer=transfer,
                )
            )
            discounted_total += transfer * math.exp(-params.delta * t_next)
            return Trajectory(
                events=tuple(events),
                stop_time=t_next,
                tau_y=t_next,
                deficit=transfer,
                discounted_transfer_total=discounted_total,
            )
        events.append(
            JumpEvent(
                tau=t_next,
                z=z,
                pre_loss_capital=x_pre,
                post_loss_capital=x_post,
                transfer=0.0,
            )
        )
        x = min(x_post, CAPITAL_CAP)
        t = t_next
