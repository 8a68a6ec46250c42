"""Threshold search over the three value evaluators."""

import numpy as np
import pytest

from povertytrap import (
    BetaAlphaOne,
    ClosedFormEvaluator,
    FixedPointEvaluator,
    ModelParams,
    MonteCarloEvaluator,
    cost_C,
    objective,
    optimize,
)


@pytest.fixture
def closed_eval(base_params):
    return ClosedFormEvaluator(params=base_params, alpha=1.25)


# ---------------------------------------------------------------------------
# objective


def test_objective_at_critical_level(base_params, closed_eval):
    expected = 20.0 + cost_C(20.0, base_params, 1.25)
    assert objective(20.0, closed_eval) == pytest.approx(expected, rel=1e-12)


def test_objective_reference_shift(closed_eval):
    assert objective(30.0, closed_eval, x_ref=15.0) == pytest.approx(
        objective(30.0, closed_eval) - 15.0, rel=1e-12
    )


def test_objective_domain(closed_eval):
    with pytest.raises(ValueError):
        objective(10.0, closed_eval)  # below the critical level
    with pytest.raises(ValueError):
        objective(25.0, closed_eval, x_ref=30.0)  # reference above threshold


def test_objective_dips_at_interior_minimum(closed_eval):
    j_mid = objective(26.66, closed_eval)
    assert j_mid < objective(20.0, closed_eval)
    assert j_mid < objective(40.0, closed_eval)


def test_objective_unimodal_on_sweep(closed_eval):
    ys = np.linspace(21.0, 45.0, 200)
    js = np.array([objective(float(y), closed_eval) for y in ys])
    assert np.all(np.isfinite(js))
    assert np.max(np.abs(np.diff(js))) < 2.0
    # strictly decreasing, then strictly increasing: a single interior dip
    decreasing = np.diff(js) < 0.0
    switch = int(np.argmin(decreasing))  # first False
    assert np.all(decreasing[:switch])
    assert not np.any(decreasing[switch:])


# ---------------------------------------------------------------------------
# search with the closed-form evaluator


def test_closed_search_finds_interior_minimum(base_params, beta125, closed_eval):
    result = optimize(base_params, beta125, closed_eval, tol_y=0.005)
    assert result.y_star == pytest.approx(26.6637, abs=0.01)
    assert result.value_at_y_star == pytest.approx(73.1957, abs=0.01)
    assert result.verified
    assert result.note == ""
    ys = [y for y, _ in result.search_trace]
    assert len(ys) >= 64
    assert min(ys) >= 20.0 and max(ys) <= 80.0
    # the trace minimum is the returned minimum
    best_j = min(j for _, j in result.search_trace)
    assert result.value_at_y_star <= best_j + 1e-12


def test_search_minimizer_invariant_to_reference_capital(
    base_params, beta125, closed_eval
):
    r1 = optimize(base_params, beta125, closed_eval, tol_y=0.005, verify=False)
    r2 = optimize(
        base_params, beta125, closed_eval, tol_y=0.005, x_ref=15.0, verify=False
    )
    assert abs(r1.y_star - r2.y_star) <= 0.01
    assert r2.value_at_y_star == pytest.approx(r1.value_at_y_star - 15.0, abs=1e-9)


def test_search_respects_domain(base_params, beta125, closed_eval):
    with pytest.raises(ValueError):
        optimize(base_params, beta125, closed_eval, y_max=19.0)
    with pytest.raises(ValueError):
        optimize(base_params, beta125, closed_eval, tol_y=-0.1)


def test_boundary_minimum_flagged():
    # with rare, nearly harmless shocks and heavy discounting any threshold
    # above the critical level is pure extra cost: the minimum sits at the
    # lower boundary
    params = ModelParams(a=0.10, b=3.0, c=0.40, I_star=60.0, lam=0.25, delta=2.0)
    dist = BetaAlphaOne(alpha=50.0)
    ev = ClosedFormEvaluator(params=params, alpha=50.0)
    result = optimize(params, dist, ev, verify=False)
    assert result.y_star == pytest.approx(params.x_star, abs=1e-9)
    assert "boundary" in result.note


def test_y_max_minimum_warns(base_params, beta125, closed_eval):
    # cap the search below the interior optimum: the result lands on y_max
    # and says so
    with pytest.warns(UserWarning):
        result = optimize(
            base_params, beta125, closed_eval, y_max=24.0, verify=False
        )
    assert result.y_star == pytest.approx(24.0, abs=0.05)
    assert "y_max" in result.note


# ---------------------------------------------------------------------------
# cross-evaluator agreement


def test_fixed_point_search_agrees_with_closed(base_params, beta125):
    params = ModelParams(a=0.10, b=3.0, c=0.40, I_star=60.0, lam=1.0, delta=0.30)
    closed = optimize(
        params, beta125,
        ClosedFormEvaluator(params=params, alpha=1.25),
        y_max=30.0, tol_y=0.01, verify=False,
    )
    fp = optimize(
        params, beta125,
        FixedPointEvaluator(params=params, dist=beta125),
        y_max=30.0, tol_y=0.01, n_scan=16, verify=False,
    )
    assert abs(fp.y_star - closed.y_star) <= 0.05
    assert fp.evaluator == "fixed_point"
    assert closed.evaluator == "closed_form"


def test_mc_search_agrees_with_closed(base_params, beta125):
    params = ModelParams(a=0.10, b=3.0, c=0.40, I_star=60.0, lam=1.0, delta=0.30)
    ev = MonteCarloEvaluator(
        params=params, dist=beta125, n_paths=50_000, seed=0, threads=4
    )
    result = optimize(params, beta125, ev, y_max=28.0, verify=False)
    assert result.evaluator == "monte_carlo"
    assert abs(result.y_star - 22.164) <= 0.8


def test_verification_attached_and_passes(base_params, beta125, closed_eval):
    result = optimize(base_params, beta125, closed_eval, tol_y=0.01, verify=True)
    assert result.verification is not None
    assert result.verification.passed
    assert result.verified is True
    skipped = optimize(base_params, beta125, closed_eval, tol_y=0.01, verify=False)
    assert skipped.verification is None
    assert skipped.verified is False
