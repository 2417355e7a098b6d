"""User placement in an annulus, LoS blockage, path loss and the law of D = d^alpha."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterDomainError
from .links import LinkKind


@dataclass(frozen=True)
class AnnulusGeometry:
    r0: float = 1.0
    r1: float = 300.0
    r2: float = 400.0
    d_uR: float = 30.0
    density_lambda: float = 1e-4  # kept for completeness, no metric depends on it

    def __post_init__(self):
        if not (0 < self.r0 < self.r1 <= self.r2):
            raise ParameterDomainError("need 0 < r0 < r1 <= r2")
        if not self.d_uR > 0:
            raise ParameterDomainError("d_uR must be positive")
        if not self.density_lambda > 0:
            raise ParameterDomainError("density_lambda must be positive")

    @property
    def area_span(self) -> float:
        return self.r2 ** 2 - self.r0 ** 2


@dataclass(frozen=True)
class BlockageModel:
    b1: float = 0.3

    def __post_init__(self):
        if not (0.0 <= self.b1 <= 1.0):
            raise ParameterDomainError("b1 must be a probability")


@dataclass(frozen=True)
class PathLossParams:
    alpha1: float = 2.0
    alpha2: float = 3.0
    c_l1: float = 1.0
    c_l2: float = 1.0

    def __post_init__(self):
        if not (2.0 <= self.alpha1 <= self.alpha2):
            raise ParameterDomainError("need 2 <= alpha1 <= alpha2")
        if not (self.c_l1 > 0 and self.c_l2 > 0):
            raise ParameterDomainError("path-loss intercepts must be positive")


def user_distance_cdf(r, g: AnnulusGeometry):
    r = np.asarray(r, dtype=float)
    if np.any(r < g.r0 * (1 - 1e-12)) or np.any(r > g.r2 * (1 + 1e-12)):
        raise ParameterDomainError("distance outside [r0, r2]")
    out = np.clip((r ** 2 - g.r0 ** 2) / g.area_span, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def distance_from_uniform(u, g: AnnulusGeometry):
    """Inverse of user_distance_cdf."""
    u = np.asarray(u, dtype=float)
    out = np.sqrt(u * g.area_span + g.r0 ** 2)
    return float(out) if out.ndim == 0 else out


def sample_user_distance(g: AnnulusGeometry, rng: np.random.Generator, size=None):
    return distance_from_uniform(rng.random(size), g)


def b2(g: AnnulusGeometry) -> float:
    """Probability that the user lies inside the LoS ball."""
    return (g.r1 ** 2 - g.r0 ** 2) / g.area_span


def prob_los(g: AnnulusGeometry, blockage: BlockageModel) -> float:
    return blockage.b1 * b2(g)


def prob_vectors(g: AnnulusGeometry, blockage: BlockageModel, theta_c: float):
    """(P_A, P_B): link-state and link-state x eavesdropper-lobe probabilities."""
    if not (0 < theta_c <= 180):
        raise ParameterDomainError("theta_c must lie in (0, 180] degrees")
    p_los = prob_los(g, blockage)
    p_main = theta_c / 180.0
    p_a = np.array([p_los, 1.0 - p_los])
    p_b = np.array([p_los * p_main, p_los * (1.0 - p_main),
                    (1.0 - p_los) * p_main, (1.0 - p_los) * (1.0 - p_main)])
    return p_a, p_b


def d_alpha_pdf(x, alpha: float, g: AnnulusGeometry):
    x = np.asarray(x, dtype=float)
    lo, hi = g.r0 ** alpha, g.r2 ** alpha
    if np.any(x < lo * (1 - 1e-12)) or np.any(x > hi * (1 + 1e-12)):
        raise ParameterDomainError("x outside [r0^alpha, r2^alpha]")
    out = 2.0 * x ** (2.0 / alpha - 1.0) / (g.area_span * alpha)
    return float(out) if out.ndim == 0 else out


def d_alpha_cdf(x, alpha: float, g: AnnulusGeometry):
    x = np.clip(np.asarray(x, dtype=float), g.r0 ** alpha, g.r2 ** alpha)
    out = (x ** (2.0 / alpha) - g.r0 ** 2) / g.area_span
    return float(out) if out.ndim == 0 else out


def path_loss(link_kind, distances, plp: PathLossParams, d_uR: float | None = None):
    """Large-scale gain of a link.

    For RIS links ``distances`` is the RIS-user distance and ``d_uR`` the fixed
    BS-RIS distance (a (d_uR, d) pair is also accepted).
    """
    kind = LinkKind.parse(link_kind)
    if kind is LinkKind.LOS:
        d = np.asarray(distances, dtype=float)
        return d ** (-plp.alpha1)
    if kind is LinkKind.NLOS:
        d = np.asarray(distances, dtype=float)
        return d ** (-plp.alpha2)
    if d_uR is None:
        d_uR, d = distances
    else:
        d = distances
    d = np.asarray(d, dtype=float)
    return plp.c_l1 * plp.c_l2 * (d_uR * d) ** (-2.0)


# ------------------------------------------------------------ distance laws

@dataclass(frozen=True)
class DistanceLaw:
    """Density on d that is uniform in d^2 on each segment, with relative weights.

    Segments are (a, b, w): on a <= d <= b the density of d^2 is proportional to
    w.  A single full segment is the plain annulus law; blockage conditioning
    splits the annulus at r1.
    """
    segments: tuple

    @property
    def mass(self) -> float:
        return sum(w * (b * b - a * a) for a, b, w in self.segments)

    def nodes(self, per_segment: int = 24, panels: int = 4):
        """Quadrature nodes/weights for E[h(d)], Gauss-Legendre in log d^2."""
        x, w = np.polynomial.legendre.leggauss(per_segment)
        ds, ws = [], []
        total = self.mass
        for a, b, wt in self.segments:
            if wt == 0 or b <= a:
                continue
            edges = np.linspace(2 * math.log(a), 2 * math.log(b), panels + 1)
            for lo, hi in zip(edges[:-1], edges[1:]):
                s = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
                ds.append(np.exp(0.5 * s))
                ws.append(0.5 * (hi - lo) * w * np.exp(s) * wt / total)
        return np.concatenate(ds), np.concatenate(ws)


def branch_distance_laws(g: AnnulusGeometry, blockage: BlockageModel, mode: str = "ball"):
    """(LoS law, non-LoS law) of the user distance given the link state.

    ``ball``: LoS with probability b1 only inside r1, so the two states see
    different distance laws.  ``independent``: the link state is drawn
    independently of the distance with probability b1*b2.
    """
    full = DistanceLaw(((g.r0, g.r2, 1.0),))
    if mode == "independent":
        return full, full
    if mode != "ball":
        raise ParameterDomainError(f"unknown blockage mode {mode!r}")
    los = DistanceLaw(((g.r0, g.r1, 1.0),)) if blockage.b1 > 0 else full
    nlos_segments = ((g.r0, g.r1, 1.0 - blockage.b1), (g.r1, g.r2, 1.0))
    nlos = DistanceLaw(tuple(s for s in nlos_segments if s[2] > 0 and s[1] > s[0]))
    if not nlos.segments:
        nlos = full
    return los, nlos
