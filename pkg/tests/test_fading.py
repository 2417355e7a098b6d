import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from rispls.errors import MomentMatchError, ParameterDomainError
from rispls.fading import (FisherFParams, approx_product_pair, approx_sum_f, f_mellin, f_moment, f_power_cdf,
                           f_power_pdf, f_power_sf, fit_capped, fit_log_cumulants, fit_moments,
                           fit_three_moments, raw_moments, sample_f, sum_moments, surrogate)

params = st.builds(FisherFParams, st.floats(0.3, 30), st.floats(1.2, 30), st.floats(1e-3, 1e3))


def _betaprime(p):
    return stats.betaprime(p.m, p.m_s, scale=p.scale)


@settings(max_examples=80, deadline=None)
@given(params, st.floats(1e-3, 1e3))
def test_cdf_matches_betaprime(p, q):
    x = q * p.gamma_bar
    ref = _betaprime(p)
    assert f_power_cdf(x, p) == pytest.approx(ref.cdf(x), abs=1e-11)
    assert f_power_sf(x, p) == pytest.approx(ref.sf(x), rel=1e-8, abs=1e-300)
    assert f_power_pdf(x, p) == pytest.approx(ref.pdf(x), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(params, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_cdf_monotone_and_complementary(p, a, b):
    lo, hi = sorted((a * p.gamma_bar, b * p.gamma_bar))
    assert f_power_cdf(lo, p) <= f_power_cdf(hi, p) + 1e-15
    assert f_power_cdf(hi, p) + f_power_sf(hi, p) == pytest.approx(1.0, abs=1e-12)


def test_cdf_limits():
    p = FisherFParams(5, 5, 0.1)
    assert f_power_cdf(0.0, p) == 0.0
    assert f_power_sf(np.inf, p) == 0.0
    assert f_power_cdf(np.inf, p) == 1.0
    with pytest.raises(ParameterDomainError):
        f_power_cdf(-1.0, p)


def test_cdf_against_mpmath_integral():
    p = FisherFParams(2.5, 4.0, 0.3)
    for x in (0.05, 0.3, 2.0):
        ref = mpmath.quad(lambda t: mpmath.mpf(f_power_pdf(float(t), p)), [0, p.scale, x])
        assert f_power_cdf(x, p) == pytest.approx(float(ref), abs=1e-12)


def test_pdf_normalisation_random_sets():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = FisherFParams(rng.uniform(0.5, 20), rng.uniform(1.5, 20), 10 ** rng.uniform(-2, 2))
        c = p.scale
        # integrate in log space so all scales are treated alike
        val, _ = integrate.quad(lambda s: f_power_pdf(c * math.exp(s), p) * c * math.exp(s), -80, 80,
                                limit=400, epsabs=1e-13, epsrel=1e-12)
        assert abs(val - 1.0) <= 1e-8


def test_mean_is_gamma_bar():
    p = FisherFParams(3.0, 6.0, 0.7)
    assert f_moment(1, p) == pytest.approx(0.7)
    assert f_mellin(1.0, p) == pytest.approx(0.7, rel=1e-12)
    assert f_moment(2, p) == pytest.approx(_betaprime(p).moment(2), rel=1e-12)
    assert f_moment(3, p) == pytest.approx(_betaprime(p).moment(3), rel=1e-12)
    with pytest.raises(ParameterDomainError):
        f_moment(3, FisherFParams(3.0, 3.0, 1.0))
    with pytest.raises(ParameterDomainError):
        f_mellin(5.0, FisherFParams(3.0, 3.0, 1.0))


def test_invalid_parameters():
    for bad in ((0.0, 5, 1), (5, 1.0, 1), (5, 5, 0.0), (5, float("nan"), 1)):
        with pytest.raises(ParameterDomainError):
            FisherFParams(*bad)


def test_sampler_ks():
    rng = np.random.default_rng(11)
    for i in range(5):
        p = FisherFParams(rng.uniform(0.5, 10), rng.uniform(1.5, 10), 10 ** rng.uniform(-1, 1))
        x = sample_f(p, np.random.default_rng(100 + i), 20000)
        assert stats.kstest(x, lambda v: f_power_cdf(v, p)).pvalue > 0.001


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 40), st.floats(3.5, 40), st.floats(1e-2, 1e2))
def test_three_moment_fit_round_trip(m, ms, gb):
    p = FisherFParams(m, ms, gb)
    q = fit_three_moments(*raw_moments(p))
    assert q.m == pytest.approx(m, rel=1e-7)
    assert q.m_s == pytest.approx(ms, rel=1e-7)
    assert q.gamma_bar == pytest.approx(gb, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 40), st.floats(1.5, 40), st.floats(1e-2, 1e2))
def test_log_cumulant_fit_round_trip(m, ms, gb):
    from rispls.fading import _log_cumulants
    p = FisherFParams(m, ms, gb)
    q = fit_log_cumulants(*_log_cumulants(p), start=(5.0, 5.0))
    assert q.m == pytest.approx(m, rel=1e-6)
    assert q.m_s == pytest.approx(ms, rel=1e-6)


def test_sum_moments_matches_binomial_expansion():
    a = FisherFParams(5, 5, 0.1)
    b = FisherFParams(3, 6, 0.4)
    mu = sum_moments([raw_moments(a), raw_moments(b)])
    ma, mb = raw_moments(a), raw_moments(b)
    assert mu[0] == pytest.approx(ma[0] + mb[0])
    assert mu[1] == pytest.approx(ma[1] + 2 * ma[0] * mb[0] + mb[1])
    assert mu[2] == pytest.approx(ma[2] + 3 * ma[1] * mb[0] + 3 * ma[0] * mb[1] + mb[2])


def test_sum_surrogate_matches_moments_and_monte_carlo():
    comps = [FisherFParams(5, 5, 0.1)] * 2
    s = approx_sum_f(comps)
    np.testing.assert_allclose(raw_moments(s), sum_moments([raw_moments(c) for c in comps]), rtol=1e-9)
    rng = np.random.default_rng(5)
    x = sample_f(comps[0], rng, 100000) + sample_f(comps[1], rng, 100000)
    assert stats.kstest(x, lambda v: f_power_cdf(v, s)).statistic <= 0.02


def test_single_term_surrogate_is_identity():
    p = FisherFParams(5, 5, 0.1)
    assert surrogate([p]) == (p, True)
    assert approx_sum_f([p]) == p


def test_product_surrogate_against_monte_carlo():
    a, b = FisherFParams(5, 5, 0.1), FisherFParams(5, 5, 1.0)
    q = approx_product_pair(a, b)
    rng = np.random.default_rng(8)
    x = sample_f(a, rng, 200000) * sample_f(b, rng, 200000)
    assert stats.kstest(x, lambda v: f_power_cdf(v, q)).statistic <= 0.01
    assert surrogate([(a, b)])[0] == q


def test_two_product_sum_surrogate_against_monte_carlo():
    a, b = FisherFParams(5, 5, 0.1), FisherFParams(5, 5, 1.0)
    q, exact = surrogate([(a, b), (a, b)])
    assert exact
    rng = np.random.default_rng(9)
    n = 200000
    x = sample_f(a, rng, n) * sample_f(b, rng, n) + sample_f(a, rng, n) * sample_f(b, rng, n)
    assert stats.kstest(x, lambda v: f_power_cdf(v, q)).statistic <= 0.03


def test_capped_fit_keeps_two_moments():
    p = fit_capped(1.0, 1.05)
    assert p.m == pytest.approx(100.0)
    np.testing.assert_allclose(raw_moments(p)[:2], [1.0, 1.05], rtol=1e-10)
    q, exact = fit_moments([1.0, 1.05, 1.0])  # third moment no F law can reach
    assert not exact and q == p


def test_moment_match_errors():
    with pytest.raises(MomentMatchError):
        fit_three_moments(1.0, 0.5, 0.2)
    with pytest.raises(MomentMatchError):
        fit_capped(1.0, 0.9)
    with pytest.raises(MomentMatchError):
        fit_log_cumulants(0.0, -1.0, 0.0)
