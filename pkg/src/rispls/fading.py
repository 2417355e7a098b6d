"""Fisher-Snedecor F composite fading in the power (SNR) domain.

The fading power with parameters (m, m_s, gamma_bar) is

    gamma = gamma_bar * (X / m) / (Y / (m_s - 1)),  X ~ Gamma(m),  Y ~ Gamma(m_s)

so gamma / c follows a beta-prime law with c = (m_s - 1) gamma_bar / m.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy import optimize, special

from .errors import MomentMatchError, ParameterDomainError
from .specfun import gauss_2f1, log_beta


@dataclass(frozen=True)
class FisherFParams:
    m: float
    m_s: float
    gamma_bar: float

    def __post_init__(self):
        for name in ("m", "m_s", "gamma_bar"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ParameterDomainError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.m <= 0:
            raise ParameterDomainError("m must be positive")
        if self.m_s <= 1:
            raise ParameterDomainError("m_s must exceed 1")
        if self.gamma_bar <= 0:
            raise ParameterDomainError("gamma_bar must be positive")

    @property
    def scale(self) -> float:
        """c such that gamma / c is beta-prime(m, m_s)."""
        return (self.m_s - 1.0) * self.gamma_bar / self.m

    def scaled(self, factor: float) -> "FisherFParams":
        return FisherFParams(self.m, self.m_s, self.gamma_bar * factor)


def f_power_pdf(gamma, p: FisherFParams):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ParameterDomainError("gamma must be non-negative")
    c = p.scale
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = ((p.m - 1.0) * np.log(g / c) - (p.m + p.m_s) * np.log1p(g / c)
                  - log_beta(p.m, p.m_s) - math.log(c))
        out = np.exp(logpdf)
    if p.m == 1.0:
        out = np.where(g == 0, 1.0 / (c * math.exp(log_beta(p.m, p.m_s))), out)
    elif p.m < 1.0:
        out = np.where(g == 0, np.inf, out)
    else:
        out = np.where(g == 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def _regularized_tails(gamma, p: FisherFParams):
    """(CDF, survival) pair, each from the branch where it is computed accurately."""
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.any(g < 0):
        raise ParameterDomainError("gamma must be non-negative")
    c = p.scale
    lb = log_beta(p.m, p.m_s)
    cdf = np.zeros_like(g)
    sf = np.ones_like(g)
    low = (g > 0) & (g <= c)
    high = g > c
    if np.any(low):
        r = g[low] / c
        # left branch: integrate the density from 0
        val = np.exp(p.m * np.log(r) - lb - math.log(p.m)) * gauss_2f1(p.m, p.m + p.m_s, p.m + 1.0, -r)
        cdf[low] = val
        sf[low] = 1.0 - val
    if np.any(high):
        # right branch: c / gamma is beta-prime with the shapes swapped
        r = c / g[high]
        r = np.where(np.isfinite(g[high]), r, 0.0)
        val = np.exp(p.m_s * np.log(np.maximum(r, 1e-300)) - lb - math.log(p.m_s))
        val = val * gauss_2f1(p.m_s, p.m + p.m_s, p.m_s + 1.0, -r)
        val = np.where(r > 0, val, 0.0)
        sf[high] = val
        cdf[high] = 1.0 - val
    return cdf, sf


def f_power_cdf(gamma, p: FisherFParams):
    """Distribution function of the F power variable via 2F1."""
    cdf, _ = _regularized_tails(gamma, p)
    cdf = np.clip(cdf, 0.0, 1.0)
    return float(cdf[0]) if np.ndim(gamma) == 0 else cdf.reshape(np.shape(gamma))


def f_power_sf(gamma, p: FisherFParams):
    """Survival function 1 - CDF, accurate in the upper tail."""
    _, sf = _regularized_tails(gamma, p)
    sf = np.clip(sf, 0.0, 1.0)
    return float(sf[0]) if np.ndim(gamma) == 0 else sf.reshape(np.shape(gamma))


def f_mellin(s, p: FisherFParams):
    """E[gamma^s] for real -m < s < m_s."""
    if not (-p.m < s < p.m_s):
        raise ParameterDomainError(f"moment of order {s} does not exist")
    return math.exp(s * math.log(p.scale) + math.lgamma(p.m + s) + math.lgamma(p.m_s - s)
                    - math.lgamma(p.m) - math.lgamma(p.m_s))


def f_moment(n: int, p: FisherFParams) -> float:
    if int(n) != n or n < 1:
        raise ParameterDomainError("moment order must be a positive integer")
    if p.m_s <= n:
        raise ParameterDomainError(f"moment of order {n} is infinite for m_s={p.m_s:g}")
    if n == 1:
        return p.gamma_bar
    # c^n B(m+n, m_s-n) / B(m, m_s) as a finite product
    num = 1.0
    for k in range(n):
        num *= (p.m + k) / (p.m_s - 1 - k)
    return (p.scale ** n) * num


def sample_f(p: FisherFParams, rng: np.random.Generator, size=None):
    x = rng.standard_gamma(p.m, size)
    y = rng.standard_gamma(p.m_s, size)
    return p.gamma_bar * (x / p.m) / (y / (p.m_s - 1.0))


# ------------------------------------------------------------ moment matching

def fit_three_moments(mu1: float, mu2: float, mu3: float) -> FisherFParams:
    """Single F law with the given first three raw moments.

    With r2 = mu2/mu1^2 and r3 = mu3/mu1^3 the F moments satisfy
    r2 = (1 + 1/m)(m_s - 1)/(m_s - 2) and r3/r2 = (1 + 2/m)(m_s - 1)/(m_s - 3),
    which is linear in 1/m once 1/(m_s - 2) is eliminated.
    """
    if not (mu1 > 0 and mu2 > 0 and mu3 > 0):
        raise MomentMatchError("moments must be positive")
    r2 = mu2 / mu1 ** 2
    r3 = mu3 / mu1 ** 3
    ratio = r3 / r2
    if ratio <= 1.0:
        raise MomentMatchError("third moment too small for any F law")
    y = (ratio - 2.0 * r2 + 1.0) / (ratio - 1.0)  # 1/(m_s - 2)
    if not (0.0 < y < 1.0):
        raise MomentMatchError("moments imply m_s <= 3")
    x = r2 / (1.0 + y) - 1.0  # 1/m
    if not x > 0.0:
        raise MomentMatchError("moments imply a non-positive m")
    return FisherFParams(1.0 / x, 2.0 + 1.0 / y, mu1)


def fit_two_moments(mu1: float, mu2: float, m_s: float) -> FisherFParams:
    """F law with shadowing m_s fixed and the first two moments matched."""
    if m_s <= 2:
        raise MomentMatchError("m_s must exceed 2 to match a second moment")
    x = (mu2 / mu1 ** 2) * (m_s - 2.0) / (m_s - 1.0) - 1.0
    if not x > 0:
        raise MomentMatchError("variance too small for the requested m_s")
    return FisherFParams(1.0 / x, m_s, mu1)


def sum_moments(component_moments):
    """Raw moments 1..k of a sum of independent terms from their raw moments."""
    comps = [np.asarray(c, dtype=float) for c in component_moments]
    k = len(comps[0])
    acc = np.zeros(k + 1)
    acc[0] = 1.0
    for c in comps:
        full = np.concatenate([[1.0], c])
        nxt = np.zeros(k + 1)
        for n in range(k + 1):
            nxt[n] = sum(comb(n, j) * acc[j] * full[n - j] for j in range(n + 1))
        acc = nxt
    return acc[1:]


SURROGATE_M_CAP = 100.0


def fit_capped(mu1: float, mu2: float, m_cap: float = SURROGATE_M_CAP) -> FisherFParams:
    """Two-moment F fit pinned at the large-m edge of the family.

    Used when no F law matches three moments: for concentrated sums the third
    moment is best approached as m grows, so m is held at ``m_cap`` and m_s
    absorbs the variance.
    """
    r2 = mu2 / mu1 ** 2
    if not r2 > 1.0:
        raise MomentMatchError("a positive variance is required")
    x = min(1.0 / m_cap, 0.5 * (r2 - 1.0))
    q = r2 / (1.0 + x)  # (m_s - 1)/(m_s - 2)
    return FisherFParams(1.0 / x, (2.0 * q - 1.0) / (q - 1.0), mu1)


def raw_moments(p: FisherFParams, k: int = 3):
    """E[gamma^n] for n = 1..k, inf where the moment diverges."""
    return [f_moment(n, p) if p.m_s > n else math.inf for n in range(1, k + 1)]


def fit_moments(mu, m_cap: float = SURROGATE_M_CAP):
    """Single-F surrogate from raw moments; returns (params, exact_three_moment)."""
    mu1, mu2, mu3 = (float(v) for v in mu)
    if not math.isfinite(mu2):
        raise MomentMatchError("second moment is infinite")
    if math.isfinite(mu3):
        try:
            fit = fit_three_moments(mu1, mu2, mu3)
            if fit.m <= m_cap:
                return fit, True
        except MomentMatchError:
            pass
    return fit_capped(mu1, mu2, m_cap), False


def _moments3(p: FisherFParams):
    if p.m_s <= 3:
        raise MomentMatchError(f"m_s={p.m_s:g} leaves the third moment infinite")
    return [f_moment(n, p) for n in (1, 2, 3)]


def approx_sum_f(components) -> FisherFParams:
    """Three-moment single-F surrogate for a sum of independent F variables."""
    comps = list(components)
    if not comps:
        raise ParameterDomainError("at least one component is required")
    if len(comps) == 1:
        return comps[0]
    mu = sum_moments([_moments3(p) for p in comps])
    return fit_three_moments(*mu)


def _log_cumulants(p: FisherFParams):
    """Cumulants 1..3 of ln(gamma), from the log of the Mellin transform."""
    return (math.log(p.scale) + special.digamma(p.m) - special.digamma(p.m_s),
            special.polygamma(1, p.m) + special.polygamma(1, p.m_s),
            special.polygamma(2, p.m) - special.polygamma(2, p.m_s))


def _inverse_trigamma(v: float) -> float:
    """Positive x with polygamma(1, x) = v (trigamma is decreasing on x > 0)."""
    f = lambda lx: float(special.polygamma(1, math.exp(lx))) - v
    lo, hi = -40.0, 40.0
    return math.exp(optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14))


def fit_log_cumulants(k1: float, k2: float, k3: float, start=None) -> FisherFParams:
    """F law whose ln has the given first three cumulants.

    With t = trigamma(m) the variance fixes trigamma(m_s) = k2 - t, and the third
    cumulant polygamma(2, m) - polygamma(2, m_s) is decreasing in t, so one
    bracketed root gives both shapes.  ``start`` is accepted for API symmetry.
    """
    if not k2 > 0:
        raise MomentMatchError("log-variance must be positive")

    def shapes(t):
        return _inverse_trigamma(t), _inverse_trigamma(k2 - t)

    def resid(t):
        m, ms = shapes(t)
        return float(special.polygamma(2, m) - special.polygamma(2, ms)) - k3

    eps = k2 * 1e-12
    lo, hi = eps, k2 - eps
    if resid(lo) * resid(hi) > 0:
        raise MomentMatchError("no F law matches these log-cumulants")
    t = optimize.brentq(resid, lo, hi, xtol=1e-15 * k2, rtol=1e-14)
    m, ms = shapes(t)
    if ms <= 1.0:
        raise MomentMatchError("log-cumulants imply m_s <= 1")
    c = math.exp(k1 - special.digamma(m) + special.digamma(ms))
    return FisherFParams(m, ms, c * m / (ms - 1.0))


def approx_product_pair(p1: FisherFParams, p2: FisherFParams) -> FisherFParams:
    """Single-F surrogate for the product of two independent F variables.

    Log-cumulants of a product add, so the fit is closed-form on the left side;
    this tracks the product far better than raw moments, whose tail the F
    family cannot follow with one shadowing parameter.
    """
    k = np.add(_log_cumulants(p1), _log_cumulants(p2))
    start = (0.5 * (p1.m + p2.m), 0.5 * (p1.m_s + p2.m_s))
    return fit_log_cumulants(*k, start=start)


def surrogate(terms):
    """Best available single-F law for a sum of F variables or F products.

    ``terms`` holds FisherFParams (single factors) or pairs of them (products).
    Returns (params, exact_fit).  A single plain term is returned as is and a
    lone product goes through the log-cumulant fit.
    """
    terms = list(terms)
    if len(terms) == 1 and isinstance(terms[0], FisherFParams):
        return terms[0], True
    if len(terms) == 1:
        try:
            return approx_product_pair(*terms[0]), True
        except MomentMatchError:
            pass
    moms = []
    for t in terms:
        if isinstance(t, FisherFParams):
            moms.append(raw_moments(t))
        else:
            a, b = raw_moments(t[0]), raw_moments(t[1])
            moms.append([x * y for x, y in zip(a, b)])
    return fit_moments(sum_moments(moms))
