import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from rispls.analytic import (FGainLaw, MBGainLaw, MellinComponent, SecrecyParams, cdf_direct, cdf_s1_approx,
                             cdf_s1_exact, cdf_s2_approx, cdf_s2_exact, diversity_order, gain_law, metric,
                             op_metric, pdf_s1_exact, pnsc_metric, sinr_distribution, sop_metric)
from rispls.channel import ScenarioConfig, scale_constant
from rispls.errors import MethodUnavailable, ParameterDomainError
from rispls.fading import FisherFParams, f_power_cdf, f_power_pdf
from rispls.geometry import DistanceLaw
from rispls.links import LinkKind

R0, R2 = 1.0, 400.0
FULL = DistanceLaw(((R0, R2, 1.0),))


def _avg_cdf_quad(cdf, z, a, alpha):
    """Distance average of cdf(z d^alpha / a) by plain adaptive quadrature in log d."""
    f = lambda s: cdf(z * math.exp(alpha * s) / a) * 2 * math.exp(2 * s) / (R2 ** 2 - R0 ** 2)
    return integrate.quad(f, 0.0, math.log(R2), epsabs=1e-13, epsrel=1e-11, limit=400)[0]


@pytest.mark.parametrize("alpha", [2.0, 2.5, 3.0])
@pytest.mark.parametrize("p", [FisherFParams(5, 5, 0.1), FisherFParams(1.5, 3.2, 2.0), FisherFParams(0.8, 12, 0.3)])
def test_single_f_sinr_cdf_against_quadrature(alpha, p):
    law = FGainLaw(p)
    a = 100.0
    zs = a * p.gamma_bar * np.array([1e-6, 1e-4, 1e-2, 1.0]) / 1.0
    got = law.sinr_cdf(zs, a, alpha, FULL)
    ref = [_avg_cdf_quad(lambda x: f_power_cdf(x, p), z, a, alpha) for z in zs]
    np.testing.assert_allclose(got, ref, rtol=1e-7, atol=1e-12)


def test_single_f_sinr_pdf_against_quadrature():
    p = FisherFParams(5, 5, 0.1)
    law = FGainLaw(p)
    a, alpha = 1000.0, 3.0
    for z in (1e-6, 1e-4, 1e-2):
        f = lambda s: (f_power_pdf(z * math.exp(alpha * s) / a, p) * math.exp(alpha * s) / a
                       * 2 * math.exp(2 * s) / (R2 ** 2 - R0 ** 2))
        ref = integrate.quad(f, 0.0, math.log(R2), epsabs=1e-14, epsrel=1e-11, limit=400)[0]
        assert law.sinr_pdf(np.array([z]), a, alpha, FULL)[0] == pytest.approx(ref, rel=1e-7)


def test_lower_and_upper_kernels_meet():
    law = FGainLaw(FisherFParams(3, 4, 1.0))
    c = law.params.scale
    y = c * np.array([1 - 1e-9, 1 + 1e-9])
    k = law.annulus_kernel(y, 2.5, "cdf")
    assert k[0] == pytest.approx(k[1], rel=1e-8)


def test_sum_law_against_convolution():
    p1, p2 = FisherFParams(5, 5, 0.1), FisherFParams(3, 6, 0.3)
    law = MBGainLaw([MellinComponent.of(p1), MellinComponent.of(p2)])
    for x in (0.05, 0.2, 0.4, 1.0, 3.0):
        ref = integrate.quad(lambda t: f_power_cdf(x - t, p1) * f_power_pdf(t, p2), 0, x, epsabs=1e-14, limit=200)[0]
        assert float(law.cdf(x)) == pytest.approx(ref, abs=1e-8)
        dens = integrate.quad(lambda t: f_power_pdf(x - t, p1) * f_power_pdf(t, p2), 0, x, epsabs=1e-14, limit=200)[0]
        assert float(law.pdf(x)) == pytest.approx(dens, rel=1e-4, abs=1e-10)


def test_product_law_against_quadrature():
    a, b = FisherFParams(5, 5, 0.1), FisherFParams(5, 5, 1.0)
    law = MBGainLaw([MellinComponent.of((a, b))])
    for x in (0.01, 0.05, 0.1, 0.5):
        f = lambda s: f_power_cdf(x / math.exp(s), a) * f_power_pdf(math.exp(s), b) * math.exp(s)
        ref = integrate.quad(f, -30, 30, epsabs=1e-13, limit=400)[0]
        assert float(law.cdf(x)) == pytest.approx(ref, abs=1e-8)


def test_sum_law_annulus_kernel_upper_side_matches_mean_rule():
    # for alpha = 2 the kernel tends to 1 - E[X]/y for y far above the bulk
    p1, p2 = FisherFParams(19.0, 6.25, 0.2), FisherFParams(100.0, 13.5, 1.6)
    law = MBGainLaw([MellinComponent.of(p1), MellinComponent.of(p2)])
    y = np.array([200.0, 2000.0])
    k = law.annulus_kernel(y, 2.0, "cdf")
    np.testing.assert_allclose(k, 1.0 - 1.8 / y, rtol=1e-8)


def test_exact_equals_approx_for_one_term():
    cfg = ScenarioConfig(K=3, M=1)
    z = np.geomspace(1e-3, 1e3, 9)
    for kind in (LinkKind.LOS, LinkKind.NLOS):
        np.testing.assert_allclose(cdf_s1_exact(z, cfg, kind), cdf_s1_approx(z, cfg, kind), atol=1e-3)


def test_exact_cdf_monotone_and_pdf_consistent():
    cfg = ScenarioConfig(K=4, M=2)
    z = np.geomspace(1e-3, 1e3, 25)
    F = cdf_s1_exact(z, cfg, LinkKind.LOS)
    assert np.all(np.diff(F) >= -1e-9) and 0 <= F[0] and F[-1] <= 1
    mid = np.sqrt(z[1:] * z[:-1])
    f = pdf_s1_exact(mid, cfg, LinkKind.LOS)
    np.testing.assert_allclose(np.diff(F), f * np.diff(z), rtol=0.05, atol=1e-6)


def test_ris_exact_matches_surrogate_for_lone_product_roughly():
    cfg = ScenarioConfig(K=3, M=1, L=1)
    z = np.geomspace(1e-4, 1e2, 9)
    assert np.max(np.abs(cdf_s2_exact(z, cfg) - cdf_s2_approx(z, cfg))) < 0.02


def test_direct_link_degenerate_ris_limit():
    cfg = ScenarioConfig(K=3, M=1, L=1, nlos_mode="RisWithDirect", fading_bs_ris=FisherFParams(5, 5, 1e-4))
    f1 = cfg.fading_user
    a = scale_constant(cfg, LinkKind.RIS_WITH_DIRECT, cfg.pattern_user.g_main)
    z = np.geomspace(1e-5, 1e-2, 6)
    ref = FGainLaw(f1).sinr_cdf(z, a, 2.0, FULL)
    assert np.max(np.abs(cdf_direct(z, cfg) - ref)) < 1e-3


def test_sinr_distribution_tags():
    cfg = ScenarioConfig(K=3, M=1)
    assert sinr_distribution(cfg, method="exact").method == "ExactFoxH"
    assert sinr_distribution(cfg, method="approx").method == "SingleFApprox"


def test_fold_limit_reported():
    cfg = ScenarioConfig(K=4, M=2, L=16, nlos_mode="RisReflected")
    with pytest.raises(MethodUnavailable):
        gain_law(cfg, "user", LinkKind.RIS_REFLECTED, "exact")


def test_op_limits_and_order():
    cfg = ScenarioConfig(K=3, M=1)
    assert op_metric(cfg, SecrecyParams(z_th=0.0)).value == 0.0
    lo = op_metric(cfg, SecrecyParams(z_th=0.1)).value
    hi = op_metric(cfg, SecrecyParams(z_th=10.0)).value
    assert 0 <= lo <= hi <= 1


@settings(max_examples=8, deadline=None)
@given(st.floats(-10, 40))
def test_op_non_increasing_in_power(p_db):
    cfg = ScenarioConfig(K=3, M=1)
    a = op_metric(cfg.with_(p_un=10 ** (p_db / 10)), SecrecyParams()).value
    b = op_metric(cfg.with_(p_un=10 ** ((p_db + 3) / 10)), SecrecyParams()).value
    assert b <= a + 1e-12


def test_secrecy_complement_and_bounds():
    cfg = ScenarioConfig(K=3, M=1, p_un=100.0)
    sec = SecrecyParams(r_t=0.0)
    sop = sop_metric(cfg, sec).value
    pnsc = pnsc_metric(cfg, sec).value
    assert sop + pnsc == pytest.approx(1.0, abs=1e-6)
    asr = metric("asr", cfg, sec, "approx").value
    assert asr >= 0


def test_pnsc_foxh_matches_quadrature():
    cfg = ScenarioConfig(K=3, M=1, p_un=100.0)
    sec = SecrecyParams()
    assert pnsc_metric(cfg, sec, "foxh").value == pytest.approx(pnsc_metric(cfg, sec, "approx").value, abs=1e-6)


def test_diversity_order_single_term():
    assert diversity_order(ScenarioConfig(K=3, M=1)) == 5.0


def test_asymptotic_tracks_exact_at_high_snr():
    cfg = ScenarioConfig(K=3, M=1, p_un=10 ** 9)
    sec = SecrecyParams()
    exact = op_metric(cfg, sec, "exact").value
    asym = op_metric(cfg, sec, "asymptotic").value
    assert asym / exact == pytest.approx(1.0, abs=0.01)


def test_method_errors():
    cfg = ScenarioConfig(K=3, M=1)
    sec = SecrecyParams()
    with pytest.raises(MethodUnavailable):
        metric("sop", cfg, sec, "asymptotic")
    with pytest.raises(MethodUnavailable):
        metric("asr", cfg, sec, "foxh")
    with pytest.raises(ParameterDomainError):
        metric("capacity", cfg, sec, "approx")
    with pytest.raises(MethodUnavailable):
        metric("sop", ScenarioConfig(K=4, M=2), sec, "foxh")
    with pytest.raises(ParameterDomainError):
        SecrecyParams(r_s_pnsc=0.5)
