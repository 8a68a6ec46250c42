"""Retained-loss covers, premium rates, and the insured-model transform.

A cover splits each proportional capital loss ``U = 1 - Z`` into a retained
part ``R(U)`` kept by the household and a ceded part paid by the insurer.
Three standard covers are provided:

- proportional: ``R(u) = eta * u``;
- excess of loss: ``R(u) = min(u, l)`` (losses above the retention ``l``
  are ceded);
- total loss: ``R(u) = u * 1{u <= L}`` (losses exceeding ``L`` are ceded
  in full, smaller ones fully retained).

The premium follows the expected-value principle with safety loading
``gamma``: ``p_R = (1 + gamma) * lam * E[U - R(U)]``, paid continuously out
of income.  Financing the premium shifts the critical capital up to
``x_star_R = b / (b - p_R) * x_star`` and slows growth to
``r_R = r * (b - p_R) / b`` — the insured household follows exactly the
uninsured dynamics under these adjusted parameters with the transformed
remaining proportion ``W = 1 - R(1 - Z)``, so every solver and estimator
in this package runs unchanged on the insured model.

``W`` generally mixes a density with genuine point masses (e.g. the excess
cover collapses all large losses onto ``w = 1 - l``); the law object exposes
both parts so quadrature and sampling stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .model_core import BetaAlphaOne, LossLaw, ModelParams, sample_z

__all__ = [
    "Cover",
    "TransformedLaw",
    "InsuredModel",
    "premium_rate",
    "build_insured_model",
    "sample_w",
    "cdf_w",
]

_KINDS = ("proportional", "excess_of_loss", "total_loss")


@dataclass(frozen=True)
class Cover:
    """A retained-loss cover: kind, its parameter in [0, 1], and the loading.

    ``param`` is ``eta`` for proportional covers, the retention ``l`` for
    excess-of-loss, and the ceding trigger ``L`` for total-loss.
    """

    kind: str
    param: float
    gamma: float

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown cover kind {self.kind!r}; expected one of {_KINDS}")
        if not 0.0 <= self.param <= 1.0:
            raise ValueError(f"cover parameter must lie in [0, 1], got {self.param}")
        if self.gamma < 0.0:
            raise ValueError(f"safety loading must be non-negative, got {self.gamma}")

    @classmethod
    def proportional(cls, eta: float, gamma: float) -> "Cover":
        return cls("proportional", eta, gamma)

    @classmethod
    def excess_of_loss(cls, l: float, gamma: float) -> "Cover":
        return cls("excess_of_loss", l, gamma)

    @classmethod
    def total_loss(cls, L: float, gamma: float) -> "Cover":
        return cls("total_loss", L, gamma)

    def retained(self, u):
        """Retained part of a proportional loss ``u`` in [0, 1]."""
        u_arr = np.asarray(u, dtype=float)
        if np.any(u_arr < 0.0) or np.any(u_arr > 1.0):
            raise ValueError("loss proportion must lie in [0, 1]")
        if self.kind == "proportional":
            out = self.param * u_arr
        elif self.kind == "excess_of_loss":
            out = np.minimum(u_arr, self.param)
        else:
            out = np.where(u_arr <= self.param, u_arr, 0.0)
        return out if out.ndim else float(out)


class TransformedLaw(LossLaw):
    """Law of the insured remaining proportion ``W = 1 - R(1 - Z)``.

    Built from an atomless base law.  Proportional covers rescale the base
    density onto ``(1 - eta, 1]``; the excess cover adds a point mass at
    ``1 - l`` (all losses above the retention); the total-loss cover adds a
    point mass at ``1`` (all large losses fully ceded).
    """

    def __init__(self, cover: Cover, base: LossLaw):
        if base.atoms:
            raise ValueError("base law must be atomless")
        self.cover = cover
        self.base = base
        k, c = cover.kind, cover.param
        if k == "proportional":
            self.atoms = (((1.0, 1.0),) if c == 0.0 else ())
            self.cont_intervals = (() if c == 0.0 else ((1.0 - c, 1.0),))
        elif k == "excess_of_loss":
            mass = float(base.cdf(1.0 - c))
            self.atoms = ((1.0 - c, mass),) if mass > 0.0 else ()
            self.cont_intervals = ((1.0 - c, 1.0),) if c > 0.0 else ()
        else:
            mass = float(base.cdf(1.0 - c))
            self.atoms = ((1.0, mass),) if mass > 0.0 else ()
            self.cont_intervals = ((1.0 - c, 1.0),) if c > 0.0 else ()

    # -- continuous part -----------------------------------------------------
    def cont_cdf(self, w):
        w_arr = np.asarray(w, dtype=float)
        k, c = self.cover.kind, self.cover.param
        if k == "proportional":
            if c == 0.0:
                out = np.zeros_like(w_arr)
            else:
                zb = np.clip((w_arr - (1.0 - c)) / c, 0.0, 1.0)
                out = np.asarray(self.base.cont_cdf(zb), dtype=float)
        else:
            cut = 1.0 - c
            out = np.clip(
                np.asarray(self.base.cont_cdf(np.clip(w_arr, cut, 1.0)), dtype=float)
                - float(self.base.cont_cdf(cut)),
                0.0,
                None,
            )
        return out if out.ndim else float(out)

    def cont_pdf(self, w):
        w_arr = np.asarray(w, dtype=float)
        k, c = self.cover.kind, self.cover.param
        if k == "proportional":
            if c == 0.0:
                out = np.zeros_like(w_arr)
            else:
                inside = (w_arr > 1.0 - c) & (w_arr < 1.0)
                zb = np.where(inside, (w_arr - (1.0 - c)) / c, 0.5)
                out = np.where(inside, np.asarray(self.base.cont_pdf(zb), dtype=float) / c, 0.0)
        else:
            inside = (w_arr > 1.0 - c) & (w_arr < 1.0)
            ws = np.where(inside, w_arr, 0.5)
            out = np.where(inside, np.asarray(self.base.cont_pdf(ws), dtype=float), 0.0)
        return out if out.ndim else float(out)

    def cont_partial_mean(self, w):
        w_arr = np.asarray(w, dtype=float)
        k, c = self.cover.kind, self.cover.param
        if k == "proportional":
            if c == 0.0:
                out = np.zeros_like(w_arr)
            else:
                zb = np.clip((w_arr - (1.0 - c)) / c, 0.0, 1.0)
                out = (1.0 - c) * np.asarray(self.base.cont_cdf(zb), dtype=float) + c * np.asarray(
                    self.base.cont_partial_mean(zb), dtype=float
                )
        else:
            cut = 1.0 - c
            out = np.clip(
                np.asarray(self.base.cont_partial_mean(np.clip(w_arr, cut, 1.0)), dtype=float)
                - float(self.base.cont_partial_mean(cut)),
                0.0,
                None,
            )
        return out if out.ndim else float(out)

    def mean(self) -> float:
        k, c = self.cover.kind, self.cover.param
        if k == "proportional":
            return (1.0 - c) + c * self.base.mean()
        cut = 1.0 - c
        cont = self.base.mean() - float(self.base.cont_partial_mean(cut))
        mass = float(self.base.cdf(cut))
        loc = cut if k == "excess_of_loss" else 1.0
        return loc * mass + cont

    def inverse_cdf(self, u):
        z = np.asarray(self.base.inverse_cdf(u), dtype=float)
        k, c = self.cover.kind, self.cover.param
        if k == "proportional":
            out = 1.0 - c * (1.0 - z)
        elif k == "excess_of_loss":
            out = np.maximum(1.0 - c, z)
        else:
            out = np.where(z < 1.0 - c, 1.0, z)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class InsuredModel:
    """Adjusted economy for a household financing a cover's premium.

    ``params_R`` carries the shifted critical capital and slowed growth
    (``x_star_R``, ``r_R``); ``w_law`` is the insured remaining-proportion
    law.  Running any solver on ``(params_R, w_law)`` prices the insured
    problem.
    """

    base: ModelParams
    cover: Cover
    p_R: float
    params_R: ModelParams
    w_law: TransformedLaw

    @property
    def x_star_R(self) -> float:
        return self.params_R.x_star

    @property
    def r_R(self) -> float:
        return self.params_R.r


def premium_rate(cover: Cover, lam: float, dist: LossLaw, method: str = "auto") -> float:
    """Expected-value-principle premium ``(1+gamma) * lam * E[ceded loss]``.

    ``method='auto'`` uses closed forms where available (proportional covers
    for any law through the law's mean; excess and total-loss covers for
    Beta(alpha, 1)) and adaptive quadrature otherwise; ``'quadrature'``
    forces the numerical route for cross-checking.
    """
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if lam <= 0.0:
        raise ValueError(f"shock rate must be positive, got {lam}")
    load = (1.0 + cover.gamma) * lam
    c = cover.param
    if method == "auto":
        if cover.kind == "proportional":
            return load * (1.0 - c) * (1.0 - dist.mean())
        if isinstance(dist, BetaAlphaOne):
            al = dist.alpha
            if cover.kind == "excess_of_loss":
                return load * (1.0 - c) ** (al + 1.0) / (al + 1.0)
            u0 = 1.0 - c
            return load * (u0**al - al / (al + 1.0) * u0 ** (al + 1.0))
    return load * _ceded_expectation_quad(cover, dist)


def _ceded_expectation_quad(cover: Cover, dist: LossLaw) -> float:
    """E[(1 - Z) - R(1 - Z)] by adaptive quadrature with kink splitting."""

    def ceded(z: float) -> float:
        u = 1.0 - z
        return u - float(cover.retained(u))

    total = sum(mass * ceded(loc) for loc, mass in dist.atoms)
    kink = 1.0 - cover.param  # z at which the retained-loss rule switches
    for lo, hi in dist.cont_intervals:
        pts = [p for p in (kink,) if lo < p < hi]
        val, _ = integrate.quad(
            lambda z: ceded(z) * float(dist.cont_pdf(z)),
            lo,
            hi,
            points=pts or None,
            limit=200,
            epsabs=1e-13,
            epsrel=1e-13,
        )
        total += val
    return total


def build_insured_model(base: ModelParams, cover: Cover, dist: LossLaw) -> InsuredModel:
    """Adjusted parameters and transformed law for a premium-financed cover."""
    p_R = premium_rate(cover, base.lam, dist)
    if p_R >= base.b:
        raise ValueError(
            f"premium rate {p_R:.4g} is not below the income generation rate "
            f"{base.b:.4g}; the premium exhausts income and the household is "
            "trapped with certainty"
        )
    return InsuredModel(
        base=base,
        cover=cover,
        p_R=p_R,
        params_R=base.replace_b(base.b - p_R),
        w_law=TransformedLaw(cover, dist),
    )


def sample_w(cover: Cover, dist: LossLaw, u):
    """Insured remaining proportion from a uniform variate: ``1 - R(1 - Z)``."""
    z = sample_z(dist, u)
    out = 1.0 - np.asarray(cover.retained(1.0 - np.asarray(z, dtype=float)))
    return out if out.ndim else float(out)


def cdf_w(cover: Cover, dist: LossLaw, w):
    """CDF of the insured remaining proportion, atoms included."""
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr < 0.0) or np.any(w_arr > 1.0):
        raise ValueError("remaining proportion must lie in [0, 1]")
    return TransformedLaw(cover, dist).cdf(w)