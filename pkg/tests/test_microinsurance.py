"""Covers, premiums, the insured remaining-proportion law, and the adjusted economy."""

import math

import numpy as np
import pytest
import scipy.integrate

from povertytrap import (
    BetaAlphaOne,
    Cover,
    Kumaraswamy,
    McConfig,
    TransformedLaw,
    build_insured_model,
    cdf_w,
    estimate_Vy,
    premium_rate,
    sample_w,
)

from conftest import ks_distance


PROP = Cover(kind="proportional", param=0.5, gamma=0.5)
XL = Cover(kind="excess_of_loss", param=0.5, gamma=0.5)
TL = Cover(kind="total_loss", param=0.5, gamma=0.5)


# ---------------------------------------------------------------------------
# covers


def test_cover_validation():
    with pytest.raises(ValueError):
        Cover(kind="umbrella", param=0.5, gamma=0.5)
    with pytest.raises(ValueError):
        Cover(kind="proportional", param=1.5, gamma=0.5)
    with pytest.raises(ValueError):
        Cover(kind="proportional", param=0.5, gamma=-1.5)


def test_retained_loss_shapes():
    assert PROP.retained(0.6) == pytest.approx(0.3)
    assert XL.retained(0.2) == pytest.approx(0.2)
    assert XL.retained(0.7) == pytest.approx(0.5)  # capped at the retention
    assert TL.retained(0.3) == pytest.approx(0.3)
    assert TL.retained(0.7) == pytest.approx(0.0)  # large losses fully ceded
    with pytest.raises(ValueError):
        PROP.retained(1.2)


# ---------------------------------------------------------------------------
# premiums


def test_premium_closed_oracles(beta125):
    # ceded shares of E[1 - Z] = 1/(alpha+1) = 4/9, loading 1.5x
    assert premium_rate(PROP, 1.0, beta125) == pytest.approx(1.0 / 3.0, rel=1e-12)
    xl_expected = 1.5 * 0.5 ** 2.25 / 2.25
    assert premium_rate(XL, 1.0, beta125) == pytest.approx(xl_expected, rel=1e-12)
    tl_expected = 1.5 * (0.5 ** 1.25 - (1.25 / 2.25) * 0.5 ** 2.25)
    assert premium_rate(TL, 1.0, beta125) == pytest.approx(tl_expected, rel=1e-12)
    assert tl_expected == pytest.approx(0.45549, abs=1e-5)


def test_premium_zero_when_nothing_ceded(beta125):
    assert premium_rate(Cover("proportional", 1.0, 0.5), 1.0, beta125) == 0.0
    assert premium_rate(Cover("excess_of_loss", 1.0, 0.5), 1.0, beta125) == 0.0
    assert premium_rate(Cover("total_loss", 1.0, 0.5), 1.0, beta125) == 0.0


def test_premium_full_proportional_cover(beta125):
    # eta = 0 cedes the whole loss: (1+gamma) * lam * E[1-Z]
    got = premium_rate(Cover("proportional", 0.0, 0.5), 2.0, beta125)
    assert got == pytest.approx(1.5 * 2.0 * (1.0 - 1.25 / 2.25), rel=1e-12)


def test_premium_quadrature_matches_closed(beta125, kuma34):
    for cover in (PROP, XL, TL):
        closed = premium_rate(cover, 1.0, beta125, method="auto")
        quad = premium_rate(cover, 1.0, beta125, method="quadrature")
        assert quad == pytest.approx(closed, abs=1e-12)
    # atomless non-Beta law goes through quadrature automatically; the
    # proportional cover still has the exact mean-based form to compare
    prop_kuma = premium_rate(PROP, 1.0, kuma34, method="auto")
    assert prop_kuma == pytest.approx(
        1.5 * 0.5 * (1.0 - kuma34.mean()), rel=1e-10
    )


# ---------------------------------------------------------------------------
# adjusted economy


def test_insured_model_constants(base_params, beta125):
    m = build_insured_model(base_params, PROP, beta125)
    assert m.p_R == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert m.params_R.x_star == pytest.approx(22.5, rel=1e-12)
    assert m.params_R.r == pytest.approx(0.96, rel=1e-12)
    assert m.params_R.I_star == base_params.I_star


def test_insured_model_identity_when_premium_zero(base_params, beta125):
    null_cover = Cover("proportional", 1.0, 0.5)
    m = build_insured_model(base_params, null_cover, beta125)
    assert m.p_R == 0.0
    assert m.params_R == base_params


def test_insured_model_infeasible_premium(base_params, beta125):
    heavy = Cover("proportional", 0.0, 8.0)  # premium 4 >= b = 3
    with pytest.raises(ValueError, match="premium"):
        build_insured_model(base_params, heavy, beta125)


# ---------------------------------------------------------------------------
# the insured remaining-proportion law


def test_sample_w_oracles(beta125):
    assert sample_w(Cover("proportional", 0.0, 0.5), beta125, 0.42) == pytest.approx(
        1.0
    )
    u_z02 = 0.2 ** 1.25  # maps to z = 0.2
    assert sample_w(XL, beta125, u_z02) == pytest.approx(0.5, rel=1e-12)
    u_z03 = 0.3 ** 1.25
    assert sample_w(TL, beta125, u_z03) == pytest.approx(1.0, rel=1e-12)
    u_z06 = 0.6 ** 1.25
    assert sample_w(TL, beta125, u_z06) == pytest.approx(0.6, rel=1e-12)


def test_cdf_w_oracles(beta125):
    # proportional: support starts at 1 - eta
    assert cdf_w(PROP, beta125, 0.49) == 0.0
    assert cdf_w(PROP, beta125, 1.0) == pytest.approx(1.0, rel=1e-12)
    # excess-of-loss: point mass at 1 - l collects all losses above retention
    assert cdf_w(XL, beta125, 0.4999) == 0.0
    assert cdf_w(XL, beta125, 0.5) == pytest.approx(0.5 ** 1.25, rel=1e-12)
    # total-loss: continuous strictly inside, point mass at 1
    assert cdf_w(TL, beta125, 1.0 - 1e-9) == pytest.approx(
        1.0 - 0.5 ** 1.25, abs=1e-6
    )
    assert cdf_w(TL, beta125, 1.0) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        cdf_w(PROP, beta125, 1.2)


def test_transformed_law_atoms(beta125):
    law_xl = TransformedLaw(XL, beta125)
    assert len(law_xl.atoms) == 1
    loc, mass = law_xl.atoms[0]
    assert loc == pytest.approx(0.5)
    assert mass == pytest.approx(0.5 ** 1.25, rel=1e-12)
    law_tl = TransformedLaw(TL, beta125)
    (loc_tl, mass_tl), = law_tl.atoms
    assert loc_tl == pytest.approx(1.0)
    assert mass_tl == pytest.approx(0.5 ** 1.25, rel=1e-12)
    assert TransformedLaw(PROP, beta125).atoms == ()


def test_transformed_law_rejects_atomic_base(beta125):
    with pytest.raises(ValueError):
        TransformedLaw(PROP, TransformedLaw(XL, beta125))


def test_sampled_w_distribution_matches_cdf(beta125):
    rng = np.random.default_rng(77)
    n = 100_000
    for cover in (PROP, XL, TL):
        u = rng.random(n)
        u[u == 0.0] = 0.5
        w = sample_w(cover, beta125, u)
        law = TransformedLaw(cover, beta125)

        def cdf_left(v, law=law):
            v = np.asarray(v, dtype=float)
            out = np.asarray(law.cont_cdf(v), dtype=float).copy()
            for loc, mass in law.atoms:
                out = out + np.where(v > loc, mass, 0.0)
            return out

        assert ks_distance(w, law.cdf, cdf_left) < 0.01, cover.kind


def test_insurance_softens_shocks(beta125, kuma34):
    # the insured proportion dominates the uninsured one: higher mean and a
    # CDF never above the base law's
    w_grid = np.linspace(0.0, 1.0, 401)
    for base in (beta125, kuma34):
        for cover in (PROP, XL, TL):
            law = TransformedLaw(cover, base)
            assert law.mean() >= base.mean() - 1e-12
            assert np.all(law.cdf(w_grid) <= base.cdf(w_grid) + 1e-12)


def test_transformed_mean_matches_quadrature(beta125):
    for cover in (PROP, XL, TL):
        law = TransformedLaw(cover, beta125)
        tail_integral, _ = scipy.integrate.quad(
            lambda w: 1.0 - law.cdf(w), 0.0, 1.0, limit=200, epsabs=1e-12
        )
        assert law.mean() == pytest.approx(tail_integral, abs=1e-9)


# ---------------------------------------------------------------------------
# value comparisons under insurance (Monte Carlo bands)


def test_proportional_beats_excess_pointwise(base_params, beta125):
    # same premium loading and parameter: the proportional cover removes
    # more tail risk and its threshold-strategy cost sits below the
    # excess-of-loss cost, within joint Monte Carlo bands
    m_prop = build_insured_model(base_params, PROP, beta125)
    m_xl = build_insured_model(base_params, XL, beta125)
    y = 29.0
    cfg = McConfig(n_paths=40_000, master_seed=21)
    for x in (30.0, 40.0, 60.0):
        v_prop = estimate_Vy(x, y, m_prop.params_R, m_prop.w_law, cfg, threads=4)
        v_xl = estimate_Vy(x, y, m_xl.params_R, m_xl.w_law, cfg, threads=4)
        assert (
            v_prop.value
            <= v_xl.value + v_prop.ci_half_width + v_xl.ci_half_width
        ), x


def test_insurance_lowers_programme_cost(base_params, beta125):
    # at their respective optimal thresholds, the insured programme costs no
    # more than the uninsured one (the premium buys down transfer spending)
    m = build_insured_model(base_params, PROP, beta125)
    cfg = McConfig(n_paths=60_000, master_seed=22)
    x = 30.0
    uninsured = estimate_Vy(x, 26.6637, base_params, beta125, cfg, threads=4)
    insured = estimate_Vy(x, 27.9625, m.params_R, m.w_law, cfg, threads=4)
    assert (
        insured.value
        <= uninsured.value + insured.ci_half_width + uninsured.ci_half_width
    )
