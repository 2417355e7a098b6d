import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from rispls.channel import (AntennaPattern, ScenarioConfig, a_constants, antenna_gain, effective_gain_s1,
                            effective_gain_s2, gain_terms, path_exponent, sample_terms, scale_constant, sinr)
from rispls.errors import ParameterDomainError
from rispls.fading import FisherFParams
from rispls.geometry import (AnnulusGeometry, BlockageModel, DistanceLaw, PathLossParams, b2,
                             branch_distance_laws, d_alpha_cdf, d_alpha_pdf, distance_from_uniform, path_loss,
                             prob_los, prob_vectors, sample_user_distance, user_distance_cdf)
from rispls.links import LinkKind

G = AnnulusGeometry()


def test_default_los_probability():
    assert b2(G) == pytest.approx((300 ** 2 - 1) / (400 ** 2 - 1))
    assert prob_los(G, BlockageModel(0.3)) == pytest.approx(0.16875, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1))
def test_distance_inverse(u):
    assert user_distance_cdf(distance_from_uniform(u, G), G) == pytest.approx(u, abs=1e-12)


def test_distance_sampler_ks():
    d = sample_user_distance(G, np.random.default_rng(1), 50000)
    assert stats.kstest(d, lambda r: user_distance_cdf(r, G)).pvalue > 0.001
    assert d.min() >= G.r0 and d.max() <= G.r2


@pytest.mark.parametrize("alpha", [2.0, 2.5, 3.0, 4.0])
def test_d_alpha_law_normalised(alpha):
    lo, hi = G.r0 ** alpha, G.r2 ** alpha
    val, _ = integrate.quad(lambda s: d_alpha_pdf(math.exp(s), alpha, G) * math.exp(s),
                            math.log(lo), math.log(hi), epsrel=1e-12)
    assert val == pytest.approx(1.0, abs=1e-10)
    assert d_alpha_cdf(hi, alpha, G) == pytest.approx(1.0)
    assert d_alpha_cdf(G.r1 ** alpha, alpha, G) == pytest.approx(b2(G))


def test_prob_vectors_sum_and_split():
    p_a, p_b = prob_vectors(G, BlockageModel(0.3), 30.0)
    assert p_a.sum() == pytest.approx(1.0)
    assert p_b.sum() == pytest.approx(1.0)
    assert p_b[0] + p_b[1] == pytest.approx(p_a[0])
    assert p_b[0] / p_a[0] == pytest.approx(30 / 180)
    with pytest.raises(ParameterDomainError):
        prob_vectors(G, BlockageModel(0.3), 0.0)


def test_branch_laws_mix_back_to_annulus():
    bl = BlockageModel(0.3)
    los, nlos = branch_distance_laws(G, bl)
    p = prob_los(G, bl)
    f = lambda d: d ** -3.0
    full = DistanceLaw(((G.r0, G.r2, 1.0),))
    mix = p * los.nodes()[1] @ f(los.nodes()[0]) + (1 - p) * nlos.nodes()[1] @ f(nlos.nodes()[0])
    ref = full.nodes()[1] @ f(full.nodes()[0])
    assert mix == pytest.approx(ref, rel=1e-10)
    ind = branch_distance_laws(G, bl, "independent")
    assert ind[0] == ind[1] == full


def test_distance_law_nodes_integrate_moments():
    law = DistanceLaw(((1.0, 300.0, 0.7), (300.0, 400.0, 1.0)))
    d, w = law.nodes()
    assert w.sum() == pytest.approx(1.0, rel=1e-12)
    exact = (0.7 * (300 ** 4 - 1) + (400 ** 4 - 300 ** 4)) / 2 / law.mass
    assert w @ d ** 2 == pytest.approx(exact, rel=1e-10)


def test_path_loss_kinds():
    plp = PathLossParams(2.0, 3.0, 2.0, 0.5)
    assert path_loss("LoS", 10.0, plp) == pytest.approx(1e-2)
    assert path_loss("NLoS", 10.0, plp) == pytest.approx(1e-3)
    assert path_loss("RisReflected", 10.0, plp, d_uR=30.0) == pytest.approx(1.0 / 300.0 ** 2)
    assert path_loss("RisReflected", (30.0, 10.0), plp) == pytest.approx(1.0 / 300.0 ** 2)


def test_geometry_validation():
    with pytest.raises(ParameterDomainError):
        AnnulusGeometry(r0=10, r1=5, r2=20)
    with pytest.raises(ParameterDomainError):
        BlockageModel(1.5)
    with pytest.raises(ParameterDomainError):
        PathLossParams(3.0, 2.5)
    with pytest.raises(ParameterDomainError):
        AntennaPattern(0.1, 1000)


def test_antenna_gain_sector():
    pat = AntennaPattern(1000.0, 0.1, 30.0)
    np.testing.assert_array_equal(antenna_gain([0.0, 29.9, 30.0, 31.0, -45.0], pat), [1000, 1000, 1000, 0.1, 0.1])
    assert pat.p_main == pytest.approx(1 / 6)


def test_scenario_invariants():
    with pytest.raises(ParameterDomainError):
        ScenarioConfig(K=3, M=2)
    with pytest.raises(ParameterDomainError):
        ScenarioConfig(nlos_mode="LoS")
    with pytest.raises(ParameterDomainError):
        ScenarioConfig(fading_user=(FisherFParams(5, 5, 1),) * 3)
    cfg = ScenarioConfig()
    assert cfg.q_eff == 1
    assert cfg.with_(L=16).L == 16


def test_scale_constants():
    cfg = ScenarioConfig(p_un=10.0, sigma_n_sq=2.0)
    a1, a2 = a_constants(cfg)
    assert a1 == pytest.approx(1000 * 10 / 2)
    assert a2 == pytest.approx(a1 / 30.0 ** 2)
    assert path_exponent(cfg, LinkKind.NLOS) == 3.0
    assert path_exponent(cfg, LinkKind.RIS_WITH_DIRECT) == 2.0


def test_sinr_formula():
    cfg = ScenarioConfig()
    a = scale_constant(cfg, LinkKind.LOS, 1000.0)
    assert sinr("LoS", 2.0, 10.0, cfg, 1000.0) == pytest.approx(a * 2.0 / 100.0)
    both = sinr(LinkKind.RIS_WITH_DIRECT, (1.0, 3.0), 10.0, cfg, 1000.0)
    assert both == pytest.approx(scale_constant(cfg, LinkKind.RIS_WITH_DIRECT, 1000.0) * 4.0 / 100.0)


def test_gain_term_tables():
    cfg = ScenarioConfig(K=5, M=2, L=3)
    assert len(gain_terms(cfg, "user", "LoS")) == 4
    refl = gain_terms(cfg, "eve", "RisReflected")
    assert len(refl) == 6 and refl[0][0] == cfg.fading_eve and refl[0][1] == cfg.fading_bs_ris
    with pytest.raises(ParameterDomainError):
        gain_terms(cfg, "user", "RisWithDirect")


def test_effective_gain_means():
    cfg = ScenarioConfig(K=4, M=2, L=4)
    rng = np.random.default_rng(4)
    g1 = effective_gain_s1(cfg, rng=rng, size=200000)
    assert g1.mean() == pytest.approx(2 * 0.1, rel=0.01)
    g2 = effective_gain_s2(cfg, rng, 200000)
    assert g2.mean() == pytest.approx(4 * 0.1 * 1.0, rel=0.02)
    table = [FisherFParams(5, 5, 1.0), FisherFParams(5, 5, 3.0)]
    assert effective_gain_s1(cfg, table, rng, 200000).mean() == pytest.approx(4.0, rel=0.01)
    with pytest.raises(ParameterDomainError):
        effective_gain_s1(cfg)


def test_sample_terms_scalar():
    x = sample_terms([FisherFParams(5, 5, 1.0)], np.random.default_rng(0))
    assert np.ndim(x) == 0 and x > 0
