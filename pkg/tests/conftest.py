"""Shared fixtures: the reference economy and loss laws used across tests."""

import numpy as np
import pytest

from povertytrap import BetaAlphaOne, Kumaraswamy, ModelParams


@pytest.fixture
def base_params():
    """Reference economy: r = 1.08, x_star = 20."""
    return ModelParams(a=0.10, b=3.0, c=0.40, I_star=60.0, lam=1.0, delta=0.10)


@pytest.fixture
def beta125():
    return BetaAlphaOne(alpha=1.25)


@pytest.fixture
def kuma34():
    return Kumaraswamy(p=3.0, q=4.0)


def random_economy(rng: np.random.Generator) -> ModelParams:
    """A random valid economy for identity and classification sweeps."""
    return ModelParams(
        a=float(rng.uniform(0.0, 0.6)),
        b=float(rng.uniform(0.5, 5.0)),
        c=float(rng.uniform(0.2, 1.0)),
        I_star=float(rng.uniform(5.0, 100.0)),
        lam=float(rng.uniform(0.2, 3.0)),
        delta=float(rng.uniform(0.05, 1.0)),
    )


class ScriptedRng:
    """Deterministic stand-in for a numpy Generator: replays queued uniforms."""

    def __init__(self, values):
        self._values = list(values)

    def random(self, n):
        if len(self._values) < n:
            raise AssertionError("scripted uniform stream exhausted")
        out = np.array(self._values[:n], dtype=float)
        del self._values[:n]
        return out


def ks_distance(samples: np.ndarray, cdf, cdf_left=None) -> float:
    """Kolmogorov-Smirnov distance of an empirical sample against a CDF.

    ``cdf_left`` supplies the left limit ``F(w-)`` for laws with point
    masses; it defaults to ``cdf`` (continuous laws).
    """
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    uniq, counts = np.unique(xs, return_counts=True)
    cum = np.cumsum(counts)
    right = np.asarray(cdf(uniq), dtype=float)
    left_fn = cdf_left if cdf_left is not None else cdf
    left = np.asarray(left_fn(uniq), dtype=float)
    d_right = np.max(np.abs(cum / n - right))
    d_left = np.max(np.abs((cum - counts) / n - left))
    return float(max(d_right, d_left))
