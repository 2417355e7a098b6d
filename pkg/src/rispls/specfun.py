"""Special functions behind the closed-form SINR distributions.

Log-gamma (Lanczos), the Gauss hypergeometric series and a generic
N-fold Mellin-Barnes integrator that covers Meijer-G, bivariate Meijer-G and
multivariate Fox-H functions.  Contour integrals are summed with the
trapezoidal rule on vertical lines: the integrands are analytic in a strip
around each line and decay exponentially along it, so the rule converges
geometrically in the step size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import (ContourSeparationError, ConvergenceError, FoldLimitExceeded,
                     GammaPoleError, ParameterDomainError)

FOLD_LIMIT = 4

# Lanczos approximation with g = 7 and nine coefficients
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


# ---------------------------------------------------------------- log-gamma

def _lanczos_log_gamma(z):
    w = z - 1.0
    acc = np.full(w.shape, _LANCZOS_COEF[0], dtype=complex)
    for k in range(1, 9):
        acc += _LANCZOS_COEF[k] / (w + k)
    t = w + (_LANCZOS_G + 0.5)
    return _HALF_LOG_2PI + (w + 0.5) * np.log(t) - t + np.log(acc)


def _log_gamma(z):
    """ln Gamma on a complex array, no pole checks.

    Arguments with Re z < 1/2 are shifted right with the recurrence, which keeps
    the branch cut on the negative real axis.
    """
    z = np.asarray(z, dtype=complex)
    shift = np.ceil(0.5 - z.real)
    shift = np.where(shift > 0, shift, 0.0)
    nmax = int(shift.max()) if shift.size else 0
    if nmax == 0:
        return _lanczos_log_gamma(z)
    corr = np.zeros(z.shape, dtype=complex)
    with np.errstate(divide="ignore"):
        for k in range(nmax):
            idx = shift > k
            corr[idx] += np.log(z[idx] + k)
    return _lanczos_log_gamma(z + shift) - corr


def complex_log_gamma(z):
    """Principal branch of ln Gamma(z) for scalar or array input.

    The branch cut lies on the negative real axis, matching the analytic
    continuation of the real log-gamma from the positive axis.
    """
    arr = np.asarray(z, dtype=complex)
    bad = (arr.imag == 0) & (arr.real <= 0) & (arr.real == np.round(arr.real))
    if np.any(bad):
        raise GammaPoleError(f"gamma has a pole at {arr[bad].ravel()[0].real:g}")
    out = _log_gamma(arr)
    if np.ndim(z) == 0:
        return complex(out)
    return out


# ----------------------------------------------------------------- 2F1

def _hyp2f1_series(a, b, c, x, max_terms):
    x = np.asarray(x, dtype=float)
    term = np.ones_like(x)
    total = np.ones_like(x)
    quiet = np.zeros(x.shape, dtype=int)
    for k in range(max_terms):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * x
        total = total + term
        small = np.abs(term) <= 1e-17 * np.abs(total)
        quiet = np.where(small, quiet + 1, 0)
        if np.all(quiet >= 2):
            return total
    raise ConvergenceError(f"2F1 series did not converge in {max_terms} terms")


def gauss_2f1(a, b, c, x, max_terms=200_000):
    """Gauss hypergeometric function 2F1(a, b; c; x) for real x < 1.

    Non-negative x uses the series directly.  Negative x is mapped into [0, 1)
    by one of the two Pfaff transformations,
    (1-x)^(-a) 2F1(a, c-b; c; x/(x-1)) or (1-x)^(-b) 2F1(c-a, b; c; x/(x-1)),
    preferring the one whose series has positive terms so nothing cancels.
    Full double precision holds when such a form exists (c >= min(a, b) for
    positive a, b); otherwise the alternating series can lose a few digits.
    """
    if c <= 0 and float(c).is_integer():
        raise ParameterDomainError("c must not be a non-positive integer")
    xa = np.asarray(x, dtype=float)
    if np.any(xa >= 1):
        raise ParameterDomainError("2F1 is only evaluated for x < 1")
    flat = np.atleast_1d(xa).ravel()
    out = np.empty_like(flat)
    neg = flat < 0
    if np.any(~neg):
        out[~neg] = _hyp2f1_series(a, b, c, flat[~neg], max_terms)
    if np.any(neg):
        xn = flat[neg]
        w = xn / (xn - 1.0)
        if c - a >= 0 and b >= 0 and not (a >= 0 and c - b >= 0 and a * (c - b) < (c - a) * b):
            out[neg] = (1.0 - xn) ** (-b) * _hyp2f1_series(c - a, b, c, w, max_terms)
        else:
            out[neg] = (1.0 - xn) ** (-a) * _hyp2f1_series(a, c - b, c, w, max_terms)
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


# ------------------------------------------------------------ spec types

@dataclass(frozen=True)
class GammaTerm:
    """Gamma(shift + sign * sum_i coefficients[i] * s_i)."""
    coefficients: tuple
    shift: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ParameterDomainError("sign must be +1 or -1")
        coeffs = tuple(float(c) for c in self.coefficients)
        if not all(math.isfinite(c) for c in coeffs) or not math.isfinite(self.shift):
            raise ParameterDomainError("gamma term coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "shift", float(self.shift))

    def slopes(self):
        return np.array(self.coefficients) * self.sign


@dataclass(frozen=True)
class GammaFactorGroup:
    numerator: tuple = ()
    denominator: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "numerator", tuple(self.numerator))
        object.__setattr__(self, "denominator", tuple(self.denominator))

    @property
    def terms(self):
        return self.numerator + self.denominator


@dataclass(frozen=True)
class FoxHMultivarSpec:
    """N-fold Mellin-Barnes integrand.

    (2 pi i)^-N  int  outer(s) * prod_l fold_l(s_l) * x_l^(sign_l s_l)  ds
    """
    folds: int
    outer_factors: GammaFactorGroup
    per_fold_factors: tuple
    arguments: tuple
    argument_exponent_sign: tuple = None

    def __post_init__(self):
        n = int(self.folds)
        if n < 1:
            raise ParameterDomainError("folds must be at least 1")
        object.__setattr__(self, "per_fold_factors", tuple(self.per_fold_factors))
        object.__setattr__(self, "arguments", tuple(float(a) for a in self.arguments))
        signs = self.argument_exponent_sign
        signs = (1,) * n if signs is None else tuple(int(s) for s in signs)
        object.__setattr__(self, "argument_exponent_sign", signs)
        if len(self.per_fold_factors) != n or len(self.arguments) != n or len(signs) != n:
            raise ParameterDomainError("per-fold groups, arguments and signs must have one entry per fold")
        if any(not (a > 0) or not math.isfinite(a) for a in self.arguments):
            raise ParameterDomainError("arguments must be positive and finite")
        if any(s not in (1, -1) for s in signs):
            raise ParameterDomainError("argument exponent signs must be +1 or -1")
        for t in self.outer_factors.terms:
            if len(t.coefficients) != n:
                raise ParameterDomainError("outer gamma terms need one coefficient per fold")
        for g in self.per_fold_factors:
            for t in g.terms:
                if len(t.coefficients) != 1:
                    raise ParameterDomainError("per-fold gamma terms take a single coefficient")


@dataclass(frozen=True)
class MeijerGSpec:
    """G^{m,n}_{p,q}(x | a; b) with the x^s Mellin-Barnes convention."""
    m: int
    n: int
    p: int
    q: int
    a_params: tuple
    b_params: tuple
    argument: float

    def __post_init__(self):
        object.__setattr__(self, "a_params", tuple(float(v) for v in self.a_params))
        object.__setattr__(self, "b_params", tuple(float(v) for v in self.b_params))
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise ParameterDomainError("need 0 <= m <= q and 0 <= n <= p")
        if len(self.a_params) != self.p or len(self.b_params) != self.q:
            raise ParameterDomainError("parameter list lengths must equal p and q")
        if not (self.argument > 0):
            raise ParameterDomainError("argument must be positive")

    def block(self):
        return MeijerBlock(self.m, self.n, self.a_params, self.b_params)


@dataclass(frozen=True)
class MeijerBlock:
    """Orders and parameters of one Meijer-G kernel (p, q implied by lengths)."""
    m: int
    n: int
    a_params: tuple = ()
    b_params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "a_params", tuple(float(v) for v in self.a_params))
        object.__setattr__(self, "b_params", tuple(float(v) for v in self.b_params))
        if not (0 <= self.m <= len(self.b_params) and 0 <= self.n <= len(self.a_params)):
            raise ParameterDomainError("need 0 <= m <= q and 0 <= n <= p")

    def terms(self, coefficients):
        """Gamma terms of the kernel in the variable u = coefficients . s."""
        a, b = self.a_params, self.b_params
        num = [GammaTerm(coefficients, b[j], -1) for j in range(self.m)]
        num += [GammaTerm(coefficients, 1.0 - a[j], 1) for j in range(self.n)]
        den = [GammaTerm(coefficients, 1.0 - b[j], 1) for j in range(self.m, len(b))]
        den += [GammaTerm(coefficients, a[j], -1) for j in range(self.n, len(a))]
        return GammaFactorGroup(tuple(num), tuple(den))


@dataclass(frozen=True)
class BivariateMeijerGSpec:
    """Two-fold integral outer(s+t) * K1(s) * K2(t) * x^s * y^t.

    Each of the three blocks is a Meijer-G kernel; the outer one acts on the
    sum of the two fold variables.
    """
    outer: MeijerBlock
    first: MeijerBlock
    second: MeijerBlock
    arguments: tuple

    def __post_init__(self):
        object.__setattr__(self, "arguments", tuple(float(v) for v in self.arguments))
        if len(self.arguments) != 2 or any(not (v > 0) for v in self.arguments):
            raise ParameterDomainError("bivariate Meijer-G needs two positive arguments")


@dataclass(frozen=True)
class ContourConfig:
    anchors: tuple = None
    half_height: float = 200.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_nodes_per_fold: int = 20_000
    step: tuple = None  # optional coarse step per fold, chosen automatically otherwise
    max_total_nodes: int = 60_000_000

    def __post_init__(self):
        if self.anchors is not None:
            object.__setattr__(self, "anchors", tuple(float(a) for a in self.anchors))
        if not (self.half_height > 0 and self.rel_tol > 0 and self.abs_tol > 0):
            raise ParameterDomainError("half_height and tolerances must be positive")
        if self.max_nodes_per_fold < 16:
            raise ParameterDomainError("max_nodes_per_fold too small")


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    nodes_used: int
    converged: bool
    imag_residue: float = 0.0


@dataclass
class BatchResult:
    values: np.ndarray
    errors: np.ndarray
    converged: np.ndarray
    nodes_used: int
    imag: np.ndarray = field(default=None)

    def item(self, i=0):
        im = 0.0 if self.imag is None else float(self.imag[i])
        return QuadratureResult(float(self.values[i]), float(self.errors[i]),
                                int(self.nodes_used), bool(self.converged[i]), im)


# ------------------------------------------------------------ spec translation

def meijer_to_fox(spec: MeijerGSpec) -> FoxHMultivarSpec:
    fold = spec.block().terms((1.0,))
    return FoxHMultivarSpec(1, GammaFactorGroup(), (fold,), (spec.argument,))


def bivariate_to_fox(spec: BivariateMeijerGSpec) -> FoxHMultivarSpec:
    outer = spec.outer.terms((1.0, 1.0))
    return FoxHMultivarSpec(2, outer, (spec.first.terms((1.0,)), spec.second.terms((1.0,))),
                            spec.arguments)


# ------------------------------------------------------------ integrator

class _Integrand:
    """Log of the gamma-product part of a Mellin-Barnes integrand."""

    def __init__(self, spec: FoxHMultivarSpec):
        self.n = spec.folds
        self.signs = np.array(spec.argument_exponent_sign, dtype=float)
        self.fold_terms = []
        for g in spec.per_fold_factors:
            num = [(t.shift, t.slopes()[0]) for t in g.numerator]
            den = [(t.shift, t.slopes()[0]) for t in g.denominator]
            self.fold_terms.append((num, den))
        self.outer_num = [(t.shift, t.slopes()) for t in spec.outer_factors.numerator]
        self.outer_den = [(t.shift, t.slopes()) for t in spec.outer_factors.denominator]

    def fold_bounds(self):
        bounds = []
        for num, _ in self.fold_terms:
            lo, hi = -math.inf, math.inf
            for shift, a in num:
                if a == 0:
                    continue
                pole = -shift / a
                if a > 0:
                    lo = max(lo, pole)
                else:
                    hi = min(hi, pole)
            bounds.append((lo, hi))
        return bounds

    def default_anchors(self):
        anchors = []
        for lo, hi in self.fold_bounds():
            if lo >= hi:
                raise ContourSeparationError(f"pole families overlap: left {lo:g} >= right {hi:g}")
            if math.isinf(lo) and math.isinf(hi):
                anchors.append(0.0)
            elif math.isinf(lo):
                anchors.append(hi - 0.5)
            elif math.isinf(hi):
                anchors.append(lo + 0.5)
            else:
                anchors.append(0.5 * (lo + hi))
        return tuple(anchors)

    def check(self, anchors):
        if len(anchors) != self.n:
            raise ContourSeparationError("one anchor per fold is required")
        for k, ((lo, hi), c) in enumerate(zip(self.fold_bounds(), anchors)):
            if not (lo < c < hi):
                raise ContourSeparationError(
                    f"anchor {c:g} of fold {k} is not strictly between poles {lo:g} and {hi:g}")
        for shift, a in self.outer_num:
            if shift + float(np.dot(a, anchors)) <= 0:
                raise ContourSeparationError("an outer gamma factor has poles on both sides of the contour")

    def pole_distance(self, anchors):
        d = []
        for k, ((lo, hi), c) in enumerate(zip(self.fold_bounds(), anchors)):
            dk = min(c - lo, hi - c)
            for shift, a in self.outer_num:
                if a[k] != 0:
                    dk = min(dk, (shift + float(np.dot(a, anchors))) / abs(a[k]))
            d.append(min(dk, 2.0))
        return np.array(d)

    def fold_log(self, k, s):
        num, den = self.fold_terms[k]
        out = np.zeros(np.shape(s), dtype=complex)
        for shift, a in num:
            out += _log_gamma(shift + a * s)
        for shift, a in den:
            out -= _log_gamma(shift + a * s)
        return out

    def outer_log(self, grids, shape):
        out = np.zeros(shape, dtype=complex)
        if not (self.outer_num or self.outer_den):
            return out
        for terms, sgn in ((self.outer_num, 1.0), (self.outer_den, -1.0)):
            for shift, a in terms:
                arg = np.full(shape, shift, dtype=complex)
                for k in range(self.n):
                    if a[k] != 0:
                        arg = arg + a[k] * grids[k]
                with np.errstate(divide="ignore", invalid="ignore"):
                    out += sgn * _log_gamma(arg)
        return out

    def axis_logabs(self, k, anchors, t):
        """log|integrand| along fold k with the other folds at their anchors."""
        grids = []
        for j in range(self.n):
            if j == k:
                grids.append(anchors[j] + 1j * t)
            else:
                grids.append(np.full(t.shape, anchors[j], dtype=complex))
        val = self.fold_log(k, grids[k]).real
        for j in range(self.n):
            if j != k:
                val = val + self.fold_log(j, np.array([anchors[j]], dtype=complex)).real[0]
        with np.errstate(invalid="ignore"):
            val = val + self.outer_log(grids, t.shape).real
        return np.nan_to_num(val, nan=-np.inf)


def _scan_extent(logabs, h, log_rel, tmax, block=64):
    """Walk outwards until |f| stays below rel_tol * running peak for 16 nodes."""
    peak = -math.inf
    quiet = 0
    k0 = 0
    while k0 * h <= tmax:
        t = h * np.arange(k0, k0 + block)
        vals = logabs(t)
        for i, v in enumerate(vals):
            if v > peak:
                peak = v
            if v < peak + log_rel:
                quiet += 1
                if quiet >= 16:
                    return float(t[i]), peak
            else:
                quiet = 0
        k0 += block
    return None, peak


def _contract(F, powers):
    """sum over the grid of F times prod_l powers[l][a, k_l] for each argument a."""
    n_args = powers[0].shape[0]
    rest = int(np.prod(F.shape[1:])) if F.ndim > 1 else 1
    out = np.empty(n_args, dtype=complex)
    step = max(1, int(4_000_000 // max(rest, 1)))
    for a0 in range(0, n_args, step):
        M = np.tensordot(powers[0][a0:a0 + step], F, axes=(1, 0))
        for l in range(1, len(powers)):
            M = np.einsum("ak...,ak->a...", M, powers[l][a0:a0 + step])
        out[a0:a0 + step] = M
    return out


def mellin_barnes_batch(spec: FoxHMultivarSpec, log_arguments, contour: ContourConfig = None,
                        hermitian: bool = True) -> BatchResult:
    """Evaluate the integral of ``spec`` for many argument vectors at once.

    ``log_arguments`` has shape (n_args, folds) and holds ln x_l; the gamma
    product is computed once and contracted against each x^s pattern.
    """
    contour = contour or ContourConfig()
    integ = _Integrand(spec)
    n = spec.folds
    logx = np.atleast_2d(np.asarray(log_arguments, dtype=float))
    if logx.shape[1] != n:
        raise ParameterDomainError("log_arguments must have one column per fold")
    anchors = contour.anchors if contour.anchors is not None else integ.default_anchors()
    integ.check(anchors)
    anchors = np.array(anchors, dtype=float)
    dist = 0.85 * integ.pole_distance(anchors)
    spread = np.max(np.abs(logx), axis=0)
    big_k = math.log(1.0 / contour.rel_tol) + 3.0
    if contour.step is not None:
        h = np.broadcast_to(np.asarray(contour.step, dtype=float), (n,)).copy()
    else:
        h = 2.0 * math.pi * dist / (dist * spread + big_k)
    log_rel = math.log(contour.rel_tol)
    signs = integ.signs

    # truncation is measured once on the initial step so refinement cannot shrink it
    base_extents, peak, ok_scan = [], -math.inf, True
    for k in range(n):
        tk, pk = _scan_extent(lambda t, k=k: integ.axis_logabs(k, anchors, t),
                              h[k], log_rel, contour.half_height)
        if tk is None:
            ok_scan = False
            tk = contour.half_height
        base_extents.append(tk)
        peak = max(peak, pk)
    scale_up = 1.0
    result = None
    prev_err = None
    for attempt in range(4):
        ok_trunc = ok_scan
        extents = [min(e * scale_up, contour.half_height) for e in base_extents]
        hf = h / 2.0
        counts = []
        for k in range(n):
            c = int(math.ceil(extents[k] / hf[k]))
            c += c % 2
            if 2 * c + 1 > contour.max_nodes_per_fold:
                c = (contour.max_nodes_per_fold - 1) // 2
                c -= c % 2
                ok_trunc = False
            counts.append(max(c, 2))
        total = float(np.prod([2 * c + 1 for c in counts]))
        if total > contour.max_total_nodes:
            if result is None:
                raise ConvergenceError(f"grid of {total:.3g} nodes exceeds the budget of {contour.max_total_nodes}")
            break
        result, boundary = _trapezoid(integ, anchors, hf, counts, logx, signs, peak, hermitian)
        tol = np.maximum(contour.abs_tol, contour.rel_tol * np.abs(result.values))
        result.converged = (result.errors <= tol) & ok_trunc
        bnd_ok = boundary <= max(contour.rel_tol, 1e-15) * 10
        if np.all(result.converged) and bnd_ok:
            break
        # a halved step that barely helps means cancellation, not resolution, limits the sum
        bad = result.errors > tol
        if prev_err is not None and bnd_ok and np.all(result.errors[bad] > 0.25 * prev_err[bad]):
            break
        prev_err = result.errors
        if not bnd_ok:
            scale_up *= 1.5
        if np.any(result.errors > tol):
            h = h / 2.0
    result.converged = result.converged & bnd_ok
    return result


def _trapezoid(integ, anchors, hf, counts, logx, signs, ref, hermitian):
    n = integ.n
    ts, weights = [], []
    for k in range(n):
        c = counts[k]
        if k == 0 and hermitian:
            t = hf[k] * np.arange(0, c + 1)
            w = np.full(t.shape, 2.0)
            w[0] = 1.0
        else:
            t = hf[k] * np.arange(-c, c + 1)
            w = np.ones(t.shape)
        ts.append(t)
        weights.append(w)
    s = [anchors[k] + 1j * ts[k] for k in range(n)]
    fold_logs = [integ.fold_log(k, s[k]) for k in range(n)]
    powers = [np.exp(signs[k] * np.outer(logx[:, k], s[k])) for k in range(n)]
    # coarse grid: every other node, t = 0 is always kept
    sub = []
    for k in range(n):
        zero = 0 if (k == 0 and hermitian) else counts[k]
        idx = np.arange(len(ts[k]))
        sub.append((idx - zero) % 2 == 0)

    other_shape = tuple(len(t) for t in ts[1:])
    rest = int(np.prod(other_shape)) if other_shape else 1
    chunk = max(1, int(2_000_000 // rest))
    fine = np.zeros(logx.shape[0], dtype=complex)
    coarse = np.zeros(logx.shape[0], dtype=complex)
    boundary = 0.0
    n0 = len(ts[0])
    for j0 in range(0, n0, chunk):
        j1 = min(n0, j0 + chunk)
        shape = (j1 - j0,) + other_shape
        grids = []
        for k in range(n):
            sk = s[k][j0:j1] if k == 0 else s[k]
            view = [1] * n
            view[k] = len(sk)
            grids.append(sk.reshape(view))
        logf = integ.outer_log(grids, shape)
        for k in range(n):
            gk = fold_logs[k][j0:j1] if k == 0 else fold_logs[k]
            view = [1] * n
            view[k] = len(gk)
            logf = logf + gk.reshape(view)
        with np.errstate(over="ignore", invalid="ignore"):
            F = np.exp(logf - ref)
        F = np.nan_to_num(F, nan=0.0, posinf=0.0, neginf=0.0)
        absF = np.abs(F)
        for k in range(1, n):
            edge = np.take(absF, [0, -1], axis=k)
            boundary = max(boundary, float(edge.max()))
        if j1 == n0:
            boundary = max(boundary, float(absF[-1].max()))
            if not hermitian:
                pass
        if j0 == 0 and not hermitian:
            boundary = max(boundary, float(absF[0].max()))
        Fw = F * weights[0][j0:j1].reshape((-1,) + (1,) * (n - 1))
        fine += _contract(Fw, [powers[0][:, j0:j1]] + powers[1:])
        sel0 = sub[0][j0:j1]
        if np.any(sel0):
            Fc = Fw[sel0]
            pw = [powers[0][:, j0:j1][:, sel0]]
            for k in range(1, n):
                Fc = np.compress(sub[k], Fc, axis=k)
                pw.append(powers[k][:, sub[k]])
            coarse += _contract(Fc, pw)
    scale = math.exp(ref) * float(np.prod(hf)) / (2.0 * math.pi) ** n
    fine_v = fine * scale
    coarse_v = coarse * scale * 2.0 ** n
    if hermitian:
        vals = fine_v.real
        imag = np.zeros_like(vals)
        err = np.abs(fine_v.real - coarse_v.real)
    else:
        vals = fine_v.real
        imag = fine_v.imag
        err = np.abs(fine_v - coarse_v)
    nodes = int(np.prod([len(t) for t in ts]))
    res = BatchResult(values=vals, errors=err, converged=np.ones(len(vals), bool),
                      nodes_used=nodes, imag=imag)
    return res, boundary


def mellin_barnes_adaptive(spec: FoxHMultivarSpec, log_arguments, contour: ContourConfig = None,
                           thetas=None, hermitian: bool = True) -> BatchResult:
    """Batch evaluation with the contour moved towards each argument's saddle point.

    Every fold uses the same fraction theta of its pole-free interval; theta is
    picked per argument to minimise |integrand| on the real axis, which keeps the
    oscillating sum from cancelling when the result is far smaller than the
    integrand at the midpoint.  Arguments sharing a theta are evaluated together.
    """
    contour = contour or ContourConfig()
    integ = _Integrand(spec)
    logx = np.atleast_2d(np.asarray(log_arguments, dtype=float))
    bounds = integ.fold_bounds()
    if contour.anchors is not None or not all(math.isfinite(a) and math.isfinite(b) for a, b in bounds):
        return mellin_barnes_batch(spec, logx, contour, hermitian)
    thetas = np.linspace(0.1, 0.9, 9) if thetas is None else np.asarray(thetas, dtype=float)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    cands, base = [], []
    for th in thetas:
        c = lo + th * (hi - lo)
        try:
            integ.check(tuple(c))
        except ContourSeparationError:
            continue
        grids = [np.array([ck], dtype=complex) for ck in c]
        val = integ.outer_log(grids, (1,)).real[0]
        val += sum(integ.fold_log(k, grids[k]).real[0] for k in range(integ.n))
        cands.append(c)
        base.append(val)
    if not cands:
        return mellin_barnes_batch(spec, logx, contour, hermitian)
    cands = np.array(cands)
    score = np.array(base)[None, :] + logx @ (cands * integ.signs[None, :]).T
    pick = np.argmin(score, axis=1)
    if integ.n > 1:
        # coupled folds: start every argument from its own saddle, then batch
        # the arguments whose saddles round to the same point
        cands, pick = _saddle_groups(spec, logx, cands[pick])
    n_args = logx.shape[0]
    values = np.empty(n_args)
    errors = np.empty(n_args)
    conv = np.empty(n_args, dtype=bool)
    imag = np.zeros(n_args)
    nodes = 0
    for j in np.unique(pick):
        idx = np.nonzero(pick == j)[0]
        cfg = replace(contour, anchors=tuple(cands[j]))
        res = mellin_barnes_batch(spec, logx[idx], cfg, hermitian)
        values[idx] = res.values
        errors[idx] = res.errors
        conv[idx] = res.converged
        imag[idx] = res.imag
        nodes += res.nodes_used
    # stragglers: one argument at a time on its own saddle
    for i in np.nonzero(~conv)[0]:
        try:
            start = saddle_anchors(spec, logx[i], cands[pick[i]])
            if np.max(np.abs(np.subtract(start, cands[pick[i]]))) < 0.05:
                continue  # same contour as its group, a rerun cannot help
            res = mellin_barnes_batch(spec, logx[i:i + 1], replace(contour, anchors=start), hermitian)
        except (ContourSeparationError, ConvergenceError):
            continue
        nodes += res.nodes_used
        if res.converged[0] or res.errors[0] < errors[i]:
            values[i], errors[i], conv[i], imag[i] = res.values[0], res.errors[0], res.converged[0], res.imag[0]
    return BatchResult(values, errors, conv, nodes, imag)


def _saddle_groups(spec, logx, starts, resolution=0.05):
    anchors = []
    for i in range(logx.shape[0]):
        try:
            a = np.array(saddle_anchors(spec, logx[i], starts[i]))
        except ContourSeparationError:
            a = np.asarray(starts[i], dtype=float)
        anchors.append(np.round(a / resolution) * resolution)
    uniq, pick = np.unique(np.array(anchors), axis=0, return_inverse=True)
    return uniq, pick.ravel()


def saddle_anchors(spec: FoxHMultivarSpec, log_arguments, start=None, margin: float = 0.25):
    """Anchors at the real-axis minimum of |integrand| for one argument vector.

    The search keeps every fold and every outer numerator ``margin`` away from
    its poles.  Starting from the saddle keeps the oscillating integrand close
    in size to the result, which matters when several folds are coupled.
    """
    integ = _Integrand(spec)
    n = integ.n
    logx = np.asarray(log_arguments, dtype=float).reshape(n)
    x0 = np.array(start if start is not None else integ.default_anchors(), dtype=float)
    rows, lower = [], []
    for k, (lo, hi) in enumerate(integ.fold_bounds()):
        e = np.zeros(n)
        e[k] = 1.0
        if math.isfinite(lo):
            rows.append(e)
            lower.append(lo + margin)
        if math.isfinite(hi):
            rows.append(-e)
            lower.append(margin - hi)
    for shift, a in integ.outer_num:
        rows.append(np.asarray(a, dtype=float))
        lower.append(margin - shift)
    rows = np.array(rows)
    lower = np.array(lower)
    slack = rows @ x0 - (lower - margin)  # distance of the start from each pole family
    if np.any(slack <= 0):
        raise ContourSeparationError("starting anchors are not between the pole families")
    # never demand more room than the start already has
    lower = lower - margin + np.minimum(margin, 0.9 * slack)

    def objective(c):
        grids = [np.array([ck], dtype=complex) for ck in c]
        val = integ.outer_log(grids, (1,)).real[0]
        val += sum(integ.fold_log(k, grids[k]).real[0] for k in range(n))
        return float(val + np.dot(integ.signs * logx, c))

    res = optimize.minimize(objective, x0, method="SLSQP",
                            constraints=[{"type": "ineq", "fun": lambda c: rows @ c - lower,
                                          "jac": lambda c: rows}])
    c = res.x
    if not (np.all(rows @ c >= lower - 1e-9) and objective(c) <= objective(x0)):
        return tuple(x0)
    return tuple(c)


def _check_folds(n):
    if n > FOLD_LIMIT:
        raise FoldLimitExceeded(f"{n} folds requested, at most {FOLD_LIMIT} are evaluated exactly")


def fox_h_batch(spec: FoxHMultivarSpec, arguments, contour: ContourConfig = None,
                hermitian: bool = True) -> BatchResult:
    """Multivariate Fox-H integral of ``spec`` at each row of ``arguments``."""
    _check_folds(spec.folds)
    args = np.atleast_2d(np.asarray(arguments, dtype=float))
    if np.any(args <= 0):
        raise ParameterDomainError("arguments must be positive")
    return mellin_barnes_batch(spec, np.log(args), contour, hermitian)


def fox_h_multivariate(spec: FoxHMultivarSpec, contour: ContourConfig = None,
                       hermitian: bool = True) -> QuadratureResult:
    """N-fold Mellin-Barnes (multivariate Fox-H) integral, N <= FOLD_LIMIT."""
    return fox_h_batch(spec, [spec.arguments], contour, hermitian).item()


def meijer_g(spec: MeijerGSpec, contour: ContourConfig = None, hermitian: bool = True) -> QuadratureResult:
    """Univariate Meijer-G function by one-fold contour quadrature."""
    fox = meijer_to_fox(spec)
    return mellin_barnes_batch(fox, [[math.log(spec.argument)]], contour, hermitian).item()


def meijer_g_batch(block: MeijerBlock, arguments, contour: ContourConfig = None) -> BatchResult:
    args = np.asarray(arguments, dtype=float).reshape(-1, 1)
    fox = FoxHMultivarSpec(1, GammaFactorGroup(), (block.terms((1.0,)),), (1.0,))
    return mellin_barnes_batch(fox, np.log(args), contour)


def bivariate_meijer_g(spec: BivariateMeijerGSpec, contour: ContourConfig = None,
                       hermitian: bool = True) -> QuadratureResult:
    """Bivariate Meijer-G function by two-fold nested contour quadrature."""
    fox = bivariate_to_fox(spec)
    return mellin_barnes_batch(fox, [np.log(spec.arguments)], contour, hermitian).item()


def log_gamma_real(x: float) -> float:
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


__all__ = [
    "FOLD_LIMIT", "complex_log_gamma", "gauss_2f1", "GammaTerm", "GammaFactorGroup",
    "FoxHMultivarSpec", "MeijerGSpec", "MeijerBlock", "BivariateMeijerGSpec",
    "ContourConfig", "QuadratureResult", "BatchResult", "meijer_g", "meijer_g_batch",
    "bivariate_meijer_g", "fox_h_multivariate", "fox_h_batch", "mellin_barnes_batch",
    "meijer_to_fox", "bivariate_to_fox", "log_beta", "mellin_barnes_adaptive",
]
