"""Closed-form SINR distributions and the four secrecy metrics.

Channel gains are sums of independent F variables (direct links) or of F
products (RIS links).  Their laws are handled through Mellin transforms: for a
term X with E[X^-z] = c^-z prod Gamma(m_i - z) prod Gamma(ms_i + z) / norm,

    P(sum X_l <= x) = (2 pi i)^-N  int prod_l [E[X_l^-z_l] Gamma(z_l)] x^u / Gamma(1 + u),

with u = sum z_l.  Averaging SINR = A X / d^alpha over a user distance that is
uniform in d^2 turns 1/Gamma(1+u) into Gamma(u + 2/a) / (Gamma(1+u) Gamma(u + 2/a + 1))
and leaves the familiar r^2 (.)|_{r0}^{r2} structure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .channel import ScenarioConfig, gain_terms, path_exponent, scale_constant
from .errors import ContourSeparationError, FoldLimitExceeded, MethodUnavailable, ParameterDomainError
from .fading import FisherFParams, f_power_cdf, f_power_pdf, f_power_sf, surrogate
from .geometry import DistanceLaw, branch_distance_laws, prob_vectors
from .links import LinkKind
from .specfun import (FOLD_LIMIT, BivariateMeijerGSpec, ContourConfig, FoxHMultivarSpec,
                      GammaFactorGroup, GammaTerm, MeijerBlock, bivariate_to_fox,
                      mellin_barnes_adaptive, mellin_barnes_batch, saddle_anchors)

METHODS = ("exact", "approx", "foxh", "asymptotic")


@dataclass(frozen=True)
class SecrecyParams:
    r_t: float = 1.0
    z_th: float = 1.0
    e_reg: float = 1e-6
    r_s_pnsc: float = 1.0  # rate factor inside the nonzero-capacity event

    def __post_init__(self):
        if not self.r_t >= 0:
            raise ParameterDomainError("r_t must be non-negative")
        if not self.z_th >= 0:
            raise ParameterDomainError("z_th must be non-negative")
        if not (0 < self.e_reg <= 1e-3):
            raise ParameterDomainError("e_reg must lie in (0, 1e-3]")
        if not self.r_s_pnsc >= 1:
            raise ParameterDomainError("r_s_pnsc must be at least 1")

    @property
    def r_s(self) -> float:
        return 2.0 ** self.r_t


@dataclass
class MetricResult:
    value: float
    method: str
    error_estimate: float = 0.0
    diagnostics: dict = field(default_factory=dict)


# ------------------------------------------------------------ Mellin components

@dataclass(frozen=True)
class MellinComponent:
    """Positive variable with E[X^-z] = scale^-z prod Gamma(right - z) prod Gamma(left + z) / norm."""
    scale: float
    right: tuple
    left: tuple

    @classmethod
    def of(cls, term) -> "MellinComponent":
        if isinstance(term, FisherFParams):
            return cls(term.scale, (term.m,), (term.m_s,))
        a, b = term
        return cls(a.scale * b.scale, (a.m, b.m), (a.m_s, b.m_s))

    @property
    def log_norm(self) -> float:
        return sum(math.lgamma(v) for v in self.right + self.left)

    def log_moment(self, s: float) -> float:
        """ln E[X^s] for -min(right) < s < min(left)."""
        return (s * math.log(self.scale) + sum(math.lgamma(m + s) for m in self.right)
                + sum(math.lgamma(m - s) for m in self.left) - self.log_norm)

    def fold_group(self, extra_num=(), extra_den=()) -> GammaFactorGroup:
        num = tuple(GammaTerm((1.0,), m, -1) for m in self.right)
        num += tuple(GammaTerm((1.0,), ms, 1) for ms in self.left)
        return GammaFactorGroup(num + tuple(extra_num), tuple(extra_den))


def _sum_spec(comps, kind: str, alpha: float | None = None, left: bool = False) -> FoxHMultivarSpec:
    """Mellin-Barnes layout of the CDF/PDF of a sum, optionally averaged over the annulus.

    With ``left`` the first fold is moved across its pole at zero, where
    Gamma(z) = -Gamma(1+z) Gamma(-z) / Gamma(1-z) (the minus sign is left to the caller).
    """
    n = len(comps)
    ones = (1.0,) * n
    per_fold = []
    for k, c in enumerate(comps):
        if left and k == 0:
            per_fold.append(c.fold_group(extra_num=(GammaTerm((1.0,), 1.0, 1), GammaTerm((1.0,), 0.0, -1)),
                                         extra_den=(GammaTerm((1.0,), 1.0, -1),)))
        else:
            per_fold.append(c.fold_group(extra_num=(GammaTerm((1.0,), 0.0, 1),)))
    num, den = [], []
    den.append(GammaTerm(ones, 1.0 if kind.startswith("cdf") else 0.0, 1))
    if kind.endswith("annulus"):
        num.append(GammaTerm(ones, 2.0 / alpha, 1))
        den.append(GammaTerm(ones, 2.0 / alpha + 1.0, 1))
    return FoxHMultivarSpec(n, GammaFactorGroup(tuple(num), tuple(den)), tuple(per_fold), ones)


def _contour(rel_tol=1e-10) -> ContourConfig:
    return ContourConfig(rel_tol=rel_tol, abs_tol=1e-13)


def _total_at_origin(kind, alpha):
    """Value of the kernel once every fold has crossed its pole at zero."""
    if kind == "cdf":
        return 1.0
    if kind == "cdf_annulus":
        return alpha / 2.0
    return 0.0


def _left_sum(comps, logs, kind, alpha, contour):
    """Sum over k of the integrals with fold k shifted left and folds before k removed."""
    total = np.zeros(logs.shape[0])
    err = np.zeros(logs.shape[0])
    conv = np.ones(logs.shape[0], dtype=bool)
    for k in range(len(comps)):
        rest = comps[k:]
        res = mellin_barnes_adaptive(_sum_spec(rest, kind, alpha, left=True), logs[:, k:], contour)
        scale = math.exp(-sum(c.log_norm for c in rest))
        total += res.values * scale
        err += res.errors * scale
        conv &= res.converged
    return total, err, conv


def _upper_mask(comps, x):
    """Arguments beyond the mean of the sum take the left-shifted (upper-tail) form."""
    mean = sum(math.exp(c.log_moment(1.0)) if min(c.left) > 1 else c.scale for c in comps)
    return np.asarray(x, dtype=float) > mean


def sum_law_two_sided(comps, x, kind="cdf", alpha=None, contour=None):
    """(value, complement, error, converged) of the sum law at each x.

    ``complement`` is base - value where base is 1 for a CDF (alpha/2 for the
    annulus kernel) and 0 for densities.  Arguments below the bulk use the
    standard contour, those above it the left-shifted one, so neither side has
    to recover a small number from a difference.
    """
    comps = list(comps)
    if len(comps) > FOLD_LIMIT:
        raise FoldLimitExceeded(f"{len(comps)} folds requested, at most {FOLD_LIMIT} are evaluated exactly")
    contour = contour or _contour()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    logs = np.log(x)[:, None] - np.log([c.scale for c in comps])[None, :]
    base = _total_at_origin(kind, alpha)
    upper = _upper_mask(comps, x)
    val = np.empty(len(x))
    comp = np.empty(len(x))
    err = np.zeros(len(x))
    conv = np.ones(len(x), dtype=bool)
    if np.any(~upper):
        res = mellin_barnes_adaptive(_sum_spec(comps, kind, alpha), logs[~upper], contour)
        scale = math.exp(-sum(c.log_norm for c in comps))
        val[~upper] = res.values * scale
        comp[~upper] = base - val[~upper]
        err[~upper] = res.errors * scale
        conv[~upper] = res.converged
    if np.any(upper):
        lsum, lerr, lconv = _left_sum(comps, logs[upper], kind, alpha, contour)
        comp[upper] = lsum
        val[upper] = base - lsum
        err[upper] = lerr
        conv[upper] = lconv
    return val, comp, err, conv


def sum_law_mb(comps, x, kind="cdf", alpha=None, contour=None):
    """Mellin-Barnes evaluation of the sum law at each x (pdf kinds still need a 1/x)."""
    val, _, err, conv = sum_law_two_sided(comps, x, kind, alpha, contour)
    return val, err, conv


# ------------------------------------------------------------ gain laws

def _markov_bounds(comps, lo_prob=1e-13, hi_prob=1e-11):
    """Range outside of which the sum has negligible probability (moment bounds)."""
    s_lo = [0.9 * min(c.right) for c in comps]
    log_lo = (math.log(lo_prob) - sum(c.log_moment(-s) for c, s in zip(comps, s_lo))) / sum(s_lo)
    n = len(comps)

    def excess(logx):
        tot = 0.0
        for c in comps:
            s = 0.9 * min(c.left)
            tot += math.exp(c.log_moment(s) - s * (logx - math.log(n)))
        return tot - hi_prob

    hi = max(c.log_moment(1.0) if min(c.left) > 1 else math.log(c.scale) for c in comps) + math.log(n)
    while excess(hi) > 0:
        hi += 1.0
    lo_b, hi_b = hi - 1.0, hi
    for _ in range(40):
        mid = 0.5 * (lo_b + hi_b)
        if excess(mid) > 0:
            lo_b = mid
        else:
            hi_b = mid
    return math.exp(log_lo), math.exp(hi_b)


class GainLaw:
    """Law of a channel gain; subclasses supply cdf/sf/pdf and the annulus kernel."""
    method = "exact"
    flags: tuple = ()
    folds = 1

    def support(self):
        return _markov_bounds(self.components)

    def sinr_cdf(self, z, a_const, alpha, law: DistanceLaw):
        return _annulus_combine(lambda y: self.annulus_kernel(y, alpha, "cdf"), z, a_const, alpha, law, False)

    def sinr_pdf(self, z, a_const, alpha, law: DistanceLaw):
        return _annulus_combine(lambda y: self.annulus_kernel(y, alpha, "pdf"), z, a_const, alpha, law, True)


class FGainLaw(GainLaw):
    """Single F law: closed-form CDF/PDF, Meijer-G kernel for the SINR average."""

    def __init__(self, params: FisherFParams, method="exact", flags=()):
        self.params = params
        self.method = method
        self.flags = tuple(flags)
        self.components = [MellinComponent.of(params)]

    def cdf(self, x):
        return f_power_cdf(np.maximum(x, 0.0), self.params)

    def sf(self, x):
        return f_power_sf(np.maximum(x, 0.0), self.params)

    def pdf(self, x):
        return f_power_pdf(np.maximum(x, 0.0), self.params)

    def annulus_kernel(self, y, alpha, kind):
        """Kernel K with F_Z = sum over r of (2 r^2/alpha) K(z r^alpha / A)."""
        p = self.params
        y = np.atleast_1d(np.asarray(y, dtype=float))
        norm = math.exp(math.lgamma(p.m) + math.lgamma(p.m_s))
        logs = (np.log(y) - math.log(p.scale))[:, None]
        if kind != "cdf":
            return _meijer_eval(meijer_pdf_block(p, alpha), logs) / norm
        out = np.empty(len(y))
        upper = logs[:, 0] > 0.0
        if np.any(~upper):
            out[~upper] = _meijer_eval(meijer_cdf_block(p, alpha), logs[~upper]) / norm
        if np.any(upper):
            out[upper] = alpha / 2.0 - _meijer_eval(meijer_cdf_upper_block(p, alpha), logs[upper]) / norm
        return out


def _meijer_eval(block: MeijerBlock, logs):
    spec = FoxHMultivarSpec(1, GammaFactorGroup(), (block.terms((1.0,)),), (1.0,))
    return mellin_barnes_adaptive(spec, logs, _contour()).values


def meijer_cdf_block(p: FisherFParams, alpha: float) -> MeijerBlock:
    """Meijer-G kernel G^{1,3}_{3,3}(. | 1, 1-m_s, 1-2/alpha ; m, 0, -2/alpha) of the averaged CDF."""
    return MeijerBlock(1, 3, (1.0, 1.0 - p.m_s, 1.0 - 2.0 / alpha), (p.m, 0.0, -2.0 / alpha))


def meijer_cdf_upper_block(p: FisherFParams, alpha: float) -> MeijerBlock:
    """G^{2,2}_{3,3}(. | 1-m_s, 1-2/alpha, 1 ; m, 0, -2/alpha): the same kernel seen from the upper tail.

    K = alpha/2 - G^{2,2}/(Gamma(m) Gamma(m_s)); the integrand is the one above with the
    contour moved across the pole at zero.
    """
    return MeijerBlock(2, 2, (1.0 - p.m_s, 1.0 - 2.0 / alpha, 1.0), (p.m, 0.0, -2.0 / alpha))


def meijer_pdf_block(p: FisherFParams, alpha: float) -> MeijerBlock:
    """G^{1,2}_{2,2}(. | 1-m_s, 1-2/alpha ; m, -2/alpha), the density kernel (times z)."""
    return MeijerBlock(1, 2, (1.0 - p.m_s, 1.0 - 2.0 / alpha), (p.m, -2.0 / alpha))


class MBGainLaw(GainLaw):
    """Sum of several Mellin components; the gain CDF/PDF are tabulated once."""

    def __init__(self, comps, method="exact", flags=(), points=320):
        self.components = list(comps)
        self.method = method
        self.flags = tuple(flags)
        self.folds = len(self.components)
        self.points = points
        self._table = None
        if self.folds > FOLD_LIMIT:
            raise FoldLimitExceeded(f"{self.folds} folds exceed the limit of {FOLD_LIMIT}")

    def _build(self):
        lo, _ = self.support()
        # past S ~ 1e-9 the power-law tail below takes over
        hi = _markov_bounds(self.components, hi_prob=1e-9)[1]
        x = np.geomspace(lo, hi, self.points)
        F, S, _, _ = sum_law_two_sided(self.components, x, "cdf")
        xf, _, _ = sum_law_mb(self.components, x, "pdf")
        F = np.clip(F, 0.0, 1.0)
        S = np.clip(S, 0.0, 1.0)
        lx = np.log(x)
        left_exp = sum(min(c.right) for c in self.components)
        right_exp = min(min(c.left) for c in self.components)
        okF = (F > 1e-13) & (F < 0.9)
        okS = (S > 1e-11) & (S < 0.9)
        okf = xf > 1e-12
        self._table = dict(
            lx=lx, left_exp=left_exp, right_exp=right_exp,
            F=CubicSpline(lx[okF], np.log(F[okF])), F_rng=(lx[okF][0], lx[okF][-1]),
            S=CubicSpline(lx[okS], np.log(S[okS])), S_rng=(lx[okS][0], lx[okS][-1]),
            f=CubicSpline(lx[okf], np.log(xf[okf])), f_rng=(lx[okf][0], lx[okf][-1]),
            split=0.5 * (lx[okF][-1] + lx[okS][0]),
        )

    @property
    def table(self):
        if self._table is None:
            self._build()
        return self._table

    def _log_tail(self, key, lx, lo_exp, hi_exp):
        t = self.table
        spl, (a, b) = t[key], t[key + "_rng"]
        out = spl(np.clip(lx, a, b))
        out = np.where(lx < a, spl(a) + lo_exp * (lx - a), out)
        out = np.where(lx > b, spl(b) + hi_exp * (lx - b), out)
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            lx = np.log(np.maximum(x, 1e-300))
        t = self.table
        low = np.exp(self._log_tail("F", lx, t["left_exp"], 0.0))
        high = 1.0 - np.exp(self._log_tail("S", lx, 0.0, -t["right_exp"]))
        out = np.where(lx <= t["split"], low, high)
        return np.clip(np.where(x > 0, out, 0.0), 0.0, 1.0)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        lx = np.log(np.maximum(x, 1e-300))
        t = self.table
        low = 1.0 - np.exp(self._log_tail("F", lx, t["left_exp"], 0.0))
        high = np.exp(self._log_tail("S", lx, 0.0, -t["right_exp"]))
        out = np.where(lx <= t["split"], low, high)
        return np.clip(np.where(x > 0, out, 1.0), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        lx = np.log(np.maximum(x, 1e-300))
        t = self.table
        xf = np.exp(self._log_tail("f", lx, t["left_exp"], -t["right_exp"]))
        return np.where(x > 0, xf / np.maximum(x, 1e-300), 0.0)

    def annulus_kernel(self, y, alpha, kind):
        vals, _, _ = sum_law_mb(self.components, y, kind + "_annulus", alpha)
        return vals


class DirectGainLaw(MBGainLaw):
    """Sum of the direct-link and RIS surrogates; SINR average through a bivariate Meijer-G."""

    def __init__(self, direct: FisherFParams, reflected: FisherFParams, flags=()):
        super().__init__([MellinComponent.of(direct), MellinComponent.of(reflected)], "approx", flags)
        self.direct = direct
        self.reflected = reflected

    def annulus_kernel(self, y, alpha, kind):
        if kind != "cdf":
            return super().annulus_kernel(y, alpha, kind)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        logs = np.log(y)[:, None] - np.log([c.scale for c in self.components])[None, :]
        upper = _upper_mask(self.components, y)
        out = np.empty(len(y))
        norm = math.exp(-sum(c.log_norm for c in self.components))
        if np.any(~upper):
            # the kernel blocks do not depend on y, only the two arguments do
            spec = bivariate_to_fox(direct_bivariate_spec(self.direct, self.reflected, alpha, 1.0))
            out[~upper] = mellin_barnes_adaptive(spec, logs[~upper], _contour()).values * norm
        if np.any(upper):
            out[upper] = super().annulus_kernel(y[upper], alpha, kind)
        return out


def direct_bivariate_spec(p1: FisherFParams, p2: FisherFParams, alpha: float, y: float) -> BivariateMeijerGSpec:
    """Bivariate Meijer-G whose value times the usual prefactor is the averaged CDF of A(F1+F2)/d^alpha."""
    outer = MeijerBlock(0, 1, (1.0 - 2.0 / alpha,), (0.0, -2.0 / alpha))
    k1 = MeijerBlock(1, 2, (1.0, 1.0 - p1.m_s), (p1.m,))
    k2 = MeijerBlock(1, 2, (1.0, 1.0 - p2.m_s), (p2.m,))
    return BivariateMeijerGSpec(outer, k1, k2, (y / p1.scale, y / p2.scale))


def _annulus_combine(kernel, z, a_const, alpha, law: DistanceLaw, density: bool):
    """sum over segments of w/M [H(b) - H(a)], H(r) = (2 r^2/alpha) K(z r^alpha / A)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    coef = {}
    mass = law.mass
    for a, b, w in law.segments:
        coef[b] = coef.get(b, 0.0) + w / mass
        coef[a] = coef.get(a, 0.0) - w / mass
    radii = [r for r, c in coef.items() if c != 0.0]
    pos = z > 0
    out = np.zeros_like(z)
    if not np.any(pos) or not radii:
        return out
    zp = z[pos]
    ys = np.concatenate([zp * r ** alpha / a_const for r in radii])
    vals = kernel(ys).reshape(len(radii), len(zp))
    tot = sum(coef[r] * 2.0 * r ** 2 / alpha * vals[i] for i, r in enumerate(radii))
    out[pos] = tot / zp if density else tot
    return out


@lru_cache(maxsize=256)
def _exact_law(comps: tuple) -> GainLaw:
    if len(comps) == 1 and len(comps[0].right) == 1:
        c = comps[0]
        m, ms = c.right[0], c.left[0]
        return FGainLaw(FisherFParams(m, ms, c.scale * m / (ms - 1.0)), "exact")
    return MBGainLaw(list(comps), "exact")


def gain_law(cfg: ScenarioConfig, who: str, kind, method: str = "exact") -> GainLaw:
    """Law of the effective gain of ``who`` over a link of the given kind."""
    kind = LinkKind.parse(kind)
    if method not in ("exact", "approx"):
        raise MethodUnavailable(f"no gain law for method {method!r}")
    if kind is LinkKind.RIS_WITH_DIRECT:
        direct = gain_terms(cfg, who, LinkKind.NLOS)
        refl = gain_terms(cfg, who, LinkKind.RIS_REFLECTED)
        if method == "exact":
            comps = tuple(MellinComponent.of(t) for t in direct + refl)
            if len(comps) > FOLD_LIMIT:
                raise MethodUnavailable(f"exact law needs {len(comps)} folds (limit {FOLD_LIMIT})")
            return _exact_law(comps)
        f1, ok1 = surrogate(direct)
        f2, ok2 = surrogate(refl)
        flags = () if (ok1 and ok2) else ("capped_surrogate",)
        return _direct_law(f1, f2, flags)
    terms = gain_terms(cfg, who, kind)
    comps = tuple(MellinComponent.of(t) for t in terms)
    if method == "exact":
        if len(comps) > FOLD_LIMIT:
            raise MethodUnavailable(f"exact law needs {len(comps)} folds (limit {FOLD_LIMIT})")
        return _exact_law(comps)
    params, exact3 = surrogate(terms)
    if exact3:
        return _surrogate_law(params, ())
    if len(comps) <= FOLD_LIMIT:
        law = _exact_law(comps)
        return _FlaggedLaw(law, ("exact_gain_fallback",))
    return _surrogate_law(params, ("capped_surrogate",))


@lru_cache(maxsize=256)
def _surrogate_law(params, flags):
    return FGainLaw(params, "approx", flags)


@lru_cache(maxsize=64)
def _direct_law(f1, f2, flags):
    return DirectGainLaw(f1, f2, flags)


class _FlaggedLaw(GainLaw):
    """Delegates to another law while carrying extra diagnostic flags."""

    def __init__(self, inner: GainLaw, flags):
        self.inner = inner
        self.flags = tuple(inner.flags) + tuple(flags)
        self.method = "approx"
        self.components = inner.components
        self.folds = inner.folds

    def cdf(self, x):
        return self.inner.cdf(x)

    def sf(self, x):
        return self.inner.sf(x)

    def pdf(self, x):
        return self.inner.pdf(x)

    def annulus_kernel(self, y, alpha, kind):
        return self.inner.annulus_kernel(y, alpha, kind)


def surrogate_params(cfg: ScenarioConfig, who: str, kind):
    """Single-F surrogate of the gain (direct or RIS group); returns (params, exact_three_moment)."""
    kind = LinkKind.parse(kind)
    if kind is LinkKind.RIS_WITH_DIRECT:
        raise ParameterDomainError("RisWithDirect has two surrogates, one per gain group")
    return surrogate(gain_terms(cfg, who, kind))


# ------------------------------------------------------------ SINR distributions

_METHOD_TAG = {"exact": "ExactFoxH", "approx": "SingleFApprox", "empirical": "Empirical"}


@dataclass
class SinrDistribution:
    """CDF/PDF of SINR = A * gain / d^alpha with the user distance law ``law``."""
    method: str
    scenario: LinkKind
    gain: object
    a_const: float
    alpha: float
    law: DistanceLaw
    provenance: dict = field(default_factory=dict)

    def cdf(self, z):
        if self.method == "Empirical":
            return self.gain.cdf(z)
        return np.clip(self.gain.sinr_cdf(z, self.a_const, self.alpha, self.law), 0.0, 1.0)

    def pdf(self, z):
        if self.method == "Empirical":
            raise MethodUnavailable("the empirical law has no density")
        return np.maximum(self.gain.sinr_pdf(z, self.a_const, self.alpha, self.law), 0.0)


def _full_law(cfg: ScenarioConfig) -> DistanceLaw:
    g = cfg.geometry
    return DistanceLaw(((g.r0, g.r2, 1.0),))


def sinr_distribution(cfg: ScenarioConfig, who="user", kind=LinkKind.LOS, method="exact",
                      antenna_gain=None, law: DistanceLaw | None = None) -> SinrDistribution:
    kind = LinkKind.parse(kind)
    if antenna_gain is None:
        pat = cfg.pattern_user if who == "user" else cfg.pattern_eve
        antenna_gain = pat.g_main
    gl = gain_law(cfg, who, kind, method)
    return SinrDistribution(_METHOD_TAG[method], kind, gl, scale_constant(cfg, kind, antenna_gain),
                            path_exponent(cfg, kind), law or _full_law(cfg),
                            {"who": who, "antenna_gain": antenna_gain, "flags": gl.flags, "folds": gl.folds})


def cdf_s1_exact(z, cfg: ScenarioConfig, kind=LinkKind.LOS, who="user", law=None):
    """CDF of the direct-link SINR from the multi-fold Mellin-Barnes form."""
    return sinr_distribution(cfg, who, kind, "exact", law=law).cdf(z)


def pdf_s1_exact(z, cfg: ScenarioConfig, kind=LinkKind.LOS, who="user", law=None):
    return sinr_distribution(cfg, who, kind, "exact", law=law).pdf(z)


def cdf_s2_exact(z, cfg: ScenarioConfig, who="user", law=None):
    """CDF of the RIS-reflected SINR (products of F terms, path exponent 2)."""
    return sinr_distribution(cfg, who, LinkKind.RIS_REFLECTED, "exact", law=law).cdf(z)


def pdf_s2_exact(z, cfg: ScenarioConfig, who="user", law=None):
    return sinr_distribution(cfg, who, LinkKind.RIS_REFLECTED, "exact", law=law).pdf(z)


def _approx_direct_cdf(z, cfg, kind, who, law):
    params, ok = surrogate_params(cfg, who, kind)
    gl = FGainLaw(params, "approx", () if ok else ("capped_surrogate",))
    a = scale_constant(cfg, kind, (cfg.pattern_user if who == "user" else cfg.pattern_eve).g_main)
    return np.clip(gl.sinr_cdf(z, a, path_exponent(cfg, kind), law or _full_law(cfg)), 0.0, 1.0)


def cdf_s1_approx(z, cfg: ScenarioConfig, kind=LinkKind.LOS, who="user", law=None):
    """Single-F surrogate CDF of the direct-link SINR (Meijer-G form)."""
    return _approx_direct_cdf(z, cfg, LinkKind.parse(kind), who, law)


def cdf_s2_approx(z, cfg: ScenarioConfig, who="user", law=None):
    """Single-F surrogate CDF of the RIS-reflected SINR."""
    return _approx_direct_cdf(z, cfg, LinkKind.RIS_REFLECTED, who, law)


def cdf_direct(z, cfg: ScenarioConfig, who="user", law=None, surrogates=None):
    """CDF of the RIS-plus-direct SINR with one surrogate per gain group.

    ``surrogates`` may supply the (direct, reflected) FisherFParams pair.
    """
    if surrogates is None:
        f1, _ = surrogate(gain_terms(cfg, who, LinkKind.NLOS))
        f2, _ = surrogate(gain_terms(cfg, who, LinkKind.RIS_REFLECTED))
    else:
        f1, f2 = surrogates
    gl = DirectGainLaw(f1, f2)
    pat = cfg.pattern_user if who == "user" else cfg.pattern_eve
    a = scale_constant(cfg, LinkKind.RIS_WITH_DIRECT, pat.g_main)
    return np.clip(gl.sinr_cdf(z, a, 2.0, law or _full_law(cfg)), 0.0, 1.0)


# ------------------------------------------------------------ metrics

def _branch_setup(cfg: ScenarioConfig):
    law_los, law_nlos = branch_distance_laws(cfg.geometry, cfg.blockage, cfg.blockage_mode)
    p_a, p_b = prob_vectors(cfg.geometry, cfg.blockage, cfg.pattern_eve.theta_c)
    kinds = ((LinkKind.LOS, law_los), (cfg.nlos_mode, law_nlos))
    return p_a, p_b, kinds


def _check_method(method, allowed):
    if method not in allowed:
        raise MethodUnavailable(f"method {method!r} is not available here (choose from {allowed})")


def op_metric(cfg: ScenarioConfig, secrecy: SecrecyParams, method: str = "approx") -> MetricResult:
    """Outage probability: link-state mixture of the user SINR CDFs at z_th."""
    if method == "asymptotic":
        return op_asymptotic(cfg, secrecy)
    _check_method(method, ("exact", "approx"))
    p_a, _, kinds = _branch_setup(cfg)
    total, flags, folds = 0.0, set(), []
    for weight, (kind, law) in zip(p_a, kinds):
        if weight == 0:
            continue
        dist = sinr_distribution(cfg, "user", kind, method, law=law)
        total += weight * float(dist.cdf(secrecy.z_th)[0])
        flags.update(dist.provenance["flags"])
        folds.append(dist.provenance["folds"])
    return MetricResult(float(np.clip(total, 0, 1)), method, 1e-8,
                        {"flags": sorted(flags), "folds": folds})


def op_asymptotic(cfg: ScenarioConfig, secrecy: SecrecyParams) -> MetricResult:
    """High-SNR power law of the outage probability from the single-F surrogates."""
    p_a, _, kinds = _branch_setup(cfg)
    total, orders = 0.0, []
    for weight, (kind, law) in zip(p_a, kinds):
        if weight == 0:
            continue
        if kind is LinkKind.RIS_WITH_DIRECT:
            raise MethodUnavailable("no asymptotic form for the RIS-plus-direct link")
        p, _ = surrogate_params(cfg, "user", kind)
        alpha = path_exponent(cfg, kind)
        a = scale_constant(cfg, kind, cfg.pattern_user.g_main)
        total += weight * asymptotic_branch_cdf(secrecy.z_th, p, a, alpha, law)
        orders.append(p.m)
    return MetricResult(float(total), "asymptotic", 0.0, {"diversity_order": min(orders)})


def asymptotic_branch_cdf(z, p: FisherFParams, a_const: float, alpha: float, law: DistanceLaw) -> float:
    """Leading small-argument term of the averaged single-F SINR CDF."""
    m, ms, gb = p.m, p.m_s, p.gamma_bar
    k = 2.0 + alpha * m
    moment = sum(w * (b ** k - a ** k) for a, b, w in law.segments) / law.mass
    log_b = math.lgamma(m) + math.lgamma(ms) - math.lgamma(m + ms)
    return (2.0 * m ** (m - 1.0) * z ** m * gb ** (-m) * moment
            / (k * math.exp(log_b) * (ms - 1.0) ** m * a_const ** m))


def diversity_order(cfg: ScenarioConfig) -> float:
    """Surrogate m of the user gain, minimised over the active link states."""
    p_a, _, kinds = _branch_setup(cfg)
    orders = []
    for weight, (kind, _) in zip(p_a, kinds):
        if weight == 0:
            continue
        if kind is LinkKind.RIS_WITH_DIRECT:
            orders.append(min(surrogate(gain_terms(cfg, "user", LinkKind.NLOS))[0].m,
                              surrogate(gain_terms(cfg, "user", LinkKind.RIS_REFLECTED))[0].m))
        else:
            orders.append(surrogate_params(cfg, "user", kind)[0].m)
    return float(min(orders))


def _secrecy_branches(cfg: ScenarioConfig):
    """(weight, kind, law, eve antenna gain) for the four link-state x lobe cases."""
    _, p_b, kinds = _branch_setup(cfg)
    pe = cfg.pattern_eve
    out = []
    for i, (kind, law) in enumerate(kinds):
        for j, g in enumerate((pe.g_main, pe.g_side)):
            out.append((p_b[2 * i + j], kind, law, g))
    return out


def _laws_for(cfg, kind, method):
    return gain_law(cfg, "user", kind, method), gain_law(cfg, "eve", kind, method)


def _expect_cdf_shift(user: GainLaw, eve: GainLaw, alpha_vec, beta_vec, tol=1e-9):
    """E over the eve gain X of F_user(alpha + beta X), for vectors alpha, beta."""
    lo, hi = eve.support()

    def f(s):
        x = math.exp(s)
        return user.cdf(alpha_vec + beta_vec * x) * (eve.pdf(x) * x)

    val, err = integrate.quad_vec(f, math.log(lo), math.log(hi), epsabs=tol, epsrel=1e-9, limit=400)
    val = val + float(eve.sf(hi)) * user.cdf(alpha_vec + beta_vec * hi)
    val = val + float(eve.cdf(lo)) * user.cdf(alpha_vec)
    return val, float(np.max(err))


def _metric_over_branches(cfg, method, branch_fn):
    total, err, flags = 0.0, 0.0, set()
    for weight, kind, law, g_eve in _secrecy_branches(cfg):
        if weight == 0:
            continue
        val, e, fl = branch_fn(kind, law, g_eve)
        total += weight * val
        err += weight * e
        flags.update(fl)
    return total, err, sorted(flags)


def sop_metric(cfg: ScenarioConfig, secrecy: SecrecyParams, method: str = "approx") -> MetricResult:
    """Secrecy outage probability P(C_s < R_t), mixed over link state and eavesdropper lobe."""
    _check_method(method, ("exact", "approx", "foxh"))
    r_s = secrecy.r_s

    def branch(kind, law, g_eve):
        a_u = scale_constant(cfg, kind, cfg.pattern_user.g_main)
        a_e = scale_constant(cfg, kind, g_eve)
        alpha = path_exponent(cfg, kind)
        if method == "foxh":
            return sop_branch_foxh(cfg, kind, law, a_u, a_e, alpha, secrecy)
        user, eve = _laws_for(cfg, kind, method)
        d, w = law.nodes()
        big_d = d ** alpha
        shift = big_d * (r_s - 1.0) / a_u
        slope = np.full_like(big_d, r_s * a_e / a_u)  # shared distance: D cancels here
        vals, err = _expect_cdf_shift(user, eve, shift, slope)
        return float(w @ vals), err, user.flags + eve.flags

    total, err, flags = _metric_over_branches(cfg, method, branch)
    return MetricResult(float(np.clip(total, 0, 1)), method, err, {"flags": flags})


def pnsc_metric(cfg: ScenarioConfig, secrecy: SecrecyParams, method: str = "approx") -> MetricResult:
    """Probability of non-zero secrecy capacity P(Z_user > r_s_pnsc * Z_eve)."""
    _check_method(method, ("exact", "approx", "foxh"))
    rs = secrecy.r_s_pnsc

    def branch(kind, law, g_eve):
        a_u = scale_constant(cfg, kind, cfg.pattern_user.g_main)
        a_e = scale_constant(cfg, kind, g_eve)
        if method == "foxh":
            return pnsc_branch_foxh(cfg, kind, a_u, a_e, secrecy)
        user, eve = _laws_for(cfg, kind, method)
        kappa = np.array([rs * a_e / a_u])
        vals, err = _expect_cdf_shift(user, eve, np.zeros(1), kappa)
        return 1.0 - float(vals[0]), err, user.flags + eve.flags

    total, err, flags = _metric_over_branches(cfg, method, branch)
    return MetricResult(float(np.clip(total, 0, 1)), method, err, {"flags": flags})


def asr_metric(cfg: ScenarioConfig, secrecy: SecrecyParams, method: str = "approx") -> MetricResult:
    """Average secrecy rate E[(log2(1+Z_u) - log2(1+Z_e))^+] as I1 + I2 - I3."""
    _check_method(method, ("exact", "approx"))

    def branch(kind, law, g_eve):
        a_u = scale_constant(cfg, kind, cfg.pattern_user.g_main)
        a_e = scale_constant(cfg, kind, g_eve)
        alpha = path_exponent(cfg, kind)
        user, eve = _laws_for(cfg, kind, method)
        d, w = law.nodes()
        big_d = d ** alpha
        i1, i2, i3, err = asr_terms(user, eve, a_u, a_e, big_d)
        return float(w @ (i1 + i2 - i3)), err, user.flags + eve.flags

    total, err, flags = _metric_over_branches(cfg, method, branch)
    return MetricResult(float(max(total, 0.0)), method, err, {"flags": flags})


def asr_terms(user: GainLaw, eve: GainLaw, a_u: float, a_e: float, big_d):
    """The three conditional log-rate integrals, one value per distance node."""
    ratio = a_u / a_e  # shared distance, so D cancels inside the CDF arguments
    ulo, uhi = user.support()
    elo, ehi = eve.support()
    ln2 = math.log(2.0)
    opts = dict(epsabs=1e-9, epsrel=1e-9, limit=400)

    def f1(s):
        x = math.exp(s)
        return np.log1p(a_u * x / big_d) / ln2 * (user.pdf(x) * x) * float(eve.cdf(ratio * x))

    def f2(s):
        x = math.exp(s)
        return np.log1p(a_e * x / big_d) / ln2 * (eve.pdf(x) * x) * float(user.cdf(x / ratio))

    def f3(s):
        x = math.exp(s)
        return np.log1p(a_e * x / big_d) / ln2 * (eve.pdf(x) * x)

    i1, e1 = integrate.quad_vec(f1, math.log(ulo), math.log(uhi), **opts)
    i2, e2 = integrate.quad_vec(f2, math.log(elo), math.log(ehi), **opts)
    i3, e3 = integrate.quad_vec(f3, math.log(elo), math.log(ehi), **opts)
    return i1, i2, i3, float(np.max(e1) + np.max(e2) + np.max(e3))


# ------------------------------------------------------------ full Fox-H paths

def _single_component(cfg, who, kind) -> MellinComponent:
    terms = gain_terms(cfg, who, kind) if kind is not LinkKind.RIS_WITH_DIRECT else None
    if terms is None or len(terms) != 1:
        raise MethodUnavailable("the full Fox-H secrecy forms are evaluated for a single gain term only")
    return MellinComponent.of(terms[0])


def sop_foxh_spec(cu: MellinComponent, ce: MellinComponent, alpha: float) -> FoxHMultivarSpec:
    """Three-fold layout (user survival, eve density, regularised binomial split)."""
    fz = cu.fold_group(extra_den=(GammaTerm((1.0,), 1.0, -1),))
    fe = ce.fold_group()
    fs = GammaFactorGroup((GammaTerm((1.0,), 0.0, 1),), ())
    outer = GammaFactorGroup(
        (GammaTerm((0.0, 1.0, -1.0), 0.0, 1), GammaTerm((-1.0, -1.0, 1.0), 0.0, 1),
         GammaTerm((1.0, 1.0, -1.0), 2.0 / alpha, 1)),
        (GammaTerm((1.0, 1.0, -1.0), 2.0 / alpha + 1.0, 1),))
    return FoxHMultivarSpec(3, outer, (fz, fe, fs), (1.0, 1.0, 1.0))


def sop_branch_foxh(cfg, kind, law: DistanceLaw, a_u, a_e, alpha, secrecy: SecrecyParams,
                    rel_tol=1e-5, abs_tol=1e-7):
    r_s = secrecy.r_s
    if r_s <= 1.0:
        raise MethodUnavailable("the full Fox-H secrecy outage form needs a positive target rate")
    cu = _single_component(cfg, "user", kind)
    ce = _single_component(cfg, "eve", kind)
    spec = sop_foxh_spec(cu, ce, alpha)
    a = (r_s - 1.0) / a_u
    b = r_s * a_e / a_u
    eps = secrecy.e_reg
    # keep zeta + eta - s = -1/alpha, eta - s = delta > 0 and s > 0
    w = -1.0 / alpha
    delta = min(0.75, 0.5 * (min(cu.left) + w))
    s = max(min(0.75, 0.5 * (min(ce.right) - delta)), 0.05)
    eta = s + delta
    zeta = w - delta
    anchors = (zeta, eta, s)
    coef = {}
    for lo_r, hi_r, wt in law.segments:
        coef[hi_r] = coef.get(hi_r, 0.0) + wt / law.mass
        coef[lo_r] = coef.get(lo_r, 0.0) - wt / law.mass
    radii = [r for r, c in coef.items() if c != 0.0]
    norm = math.exp(-(cu.log_norm + ce.log_norm))
    surv, err, conv, nodes = 0.0, 0.0, True, 0
    for r in radii:
        big_r = r ** alpha
        logs = np.array([math.log(a * big_r / cu.scale), math.log(a * big_r / (b * ce.scale)),
                         math.log(b / (eps * a * big_r))])
        weight = abs(coef[r]) * 2.0 * r ** 2 / alpha * norm
        start = saddle_anchors(spec, logs, anchors, margin=0.5)
        res = mellin_barnes_batch(spec, logs[None, :],
                                  ContourConfig(anchors=start, rel_tol=rel_tol, abs_tol=abs_tol / weight))
        surv += math.copysign(weight, coef[r]) * res.values[0]
        err += weight * res.errors[0]
        conv = conv and bool(res.converged[0])
        nodes += res.nodes_used
    return 1.0 - surv, err, (() if conv else ("foxh_unconverged",))


def pnsc_foxh_spec(cu: MellinComponent, ce: MellinComponent) -> FoxHMultivarSpec:
    """Two-fold layout of E[F_user(kappa X_eve)] with an exp(-e X) regulariser."""
    fz = cu.fold_group(extra_num=(GammaTerm((1.0,), 0.0, 1),), extra_den=(GammaTerm((1.0,), 1.0, 1),))
    fe = ce.fold_group()
    outer = GammaFactorGroup((GammaTerm((1.0, 1.0), 0.0, 1),), ())
    return FoxHMultivarSpec(2, outer, (fz, fe), (1.0, 1.0))


def pnsc_branch_foxh(cfg, kind, a_u, a_e, secrecy: SecrecyParams, rel_tol=1e-8):
    cu = _single_component(cfg, "user", kind)
    ce = _single_component(cfg, "eve", kind)
    spec = pnsc_foxh_spec(cu, ce)
    kappa = secrecy.r_s_pnsc * a_e / a_u
    eps = secrecy.e_reg
    zeta = min(1.0, 0.5 * min(cu.right))
    eta = max(0.6 - zeta, -0.5 * min(ce.left))
    logs = np.array([math.log(kappa / (cu.scale * eps)), math.log(1.0 / (ce.scale * eps))])
    try:
        start = saddle_anchors(spec, logs, (zeta, eta), margin=0.5)
    except ContourSeparationError:
        start = (zeta, eta)
    res = mellin_barnes_batch(spec, logs[None, :], ContourConfig(anchors=start, rel_tol=rel_tol, abs_tol=1e-12))
    norm = math.exp(-(cu.log_norm + ce.log_norm))
    val = 1.0 - res.values[0] * norm
    return val, res.errors[0] * norm, (() if bool(res.converged[0]) else ("foxh_unconverged",))


def metric(name: str, cfg: ScenarioConfig, secrecy: SecrecyParams, method: str) -> MetricResult:
    fn = {"op": op_metric, "sop": sop_metric, "pnsc": pnsc_metric, "asr": asr_metric}.get(name)
    if fn is None:
        raise ParameterDomainError(f"unknown metric {name!r}")
    if method == "asymptotic" and name != "op":
        raise MethodUnavailable("the asymptotic form exists for the outage probability only")
    return fn(cfg, secrecy, method)
