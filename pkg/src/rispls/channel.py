"""Sectored antennas, effective channel gains and the effective SINR models."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ParameterDomainError
from .fading import FisherFParams, sample_f
from .geometry import AnnulusGeometry, BlockageModel, PathLossParams
from .links import LinkKind

__all__ = ["LinkKind", "AntennaPattern", "ScenarioConfig", "antenna_gain", "a_constants",
           "scale_constant", "sinr", "gain_terms", "sample_terms", "effective_gain_s1",
           "effective_gain_s2", "path_exponent"]


@dataclass(frozen=True)
class AntennaPattern:
    g_main: float = 1000.0
    g_side: float = 0.1
    theta_c: float = 30.0

    def __post_init__(self):
        if not (self.g_main >= self.g_side > 0):
            raise ParameterDomainError("need g_main >= g_side > 0")
        if not (0 < self.theta_c <= 180):
            raise ParameterDomainError("theta_c must lie in (0, 180] degrees")

    @property
    def p_main(self) -> float:
        return self.theta_c / 180.0


def antenna_gain(theta, pattern: AntennaPattern):
    theta = np.asarray(theta, dtype=float)
    out = np.where(np.abs(theta) <= pattern.theta_c, pattern.g_main, pattern.g_side)
    return float(out) if out.ndim == 0 else out


def _table(value, count: int, name: str):
    if isinstance(value, FisherFParams):
        return (value,) * count
    vals = tuple(value)
    if len(vals) == 1:
        return vals * count
    if len(vals) != count:
        raise ParameterDomainError(f"{name} lists {len(vals)} elements, {count} are needed")
    return vals


def _check_table(value, allowed, name):
    if isinstance(value, FisherFParams):
        return
    vals = tuple(value)
    if len(vals) not in allowed or not all(isinstance(v, FisherFParams) for v in vals):
        raise ParameterDomainError(f"{name} must be one FisherFParams or a list of {allowed[1:]} of them")


_USER = FisherFParams(5.0, 5.0, 0.1)
_EVE = FisherFParams(3.0, 3.0, 0.1)
_BS_RIS = FisherFParams(5.0, 5.0, 1.0)


@dataclass(frozen=True)
class ScenarioConfig:
    K: int = 4
    M: int = 2
    L: int = 36
    beta_max: float = 1.0
    sigma_n_sq: float = 1.0
    p_un: float = 1.0
    path_loss: PathLossParams = field(default_factory=PathLossParams)
    geometry: AnnulusGeometry = field(default_factory=AnnulusGeometry)
    blockage: BlockageModel = field(default_factory=BlockageModel)
    pattern_user: AntennaPattern = field(default_factory=AntennaPattern)
    pattern_eve: AntennaPattern = field(default_factory=AntennaPattern)
    fading_user: object = _USER
    fading_eve: object = _EVE
    fading_bs_ris: object = _BS_RIS
    nlos_mode: LinkKind = LinkKind.NLOS
    blockage_mode: str = "ball"

    def __post_init__(self):
        if int(self.K) != self.K or int(self.M) != self.M or int(self.L) != self.L:
            raise ParameterDomainError("K, M and L must be integers")
        if self.M < 1 or self.K < self.M + 2:
            raise ParameterDomainError("need K >= M + 2 so that Q = K - M - 1 >= 1")
        if self.L < 1:
            raise ParameterDomainError("L must be at least 1")
        if not (0 < self.beta_max <= 1):
            raise ParameterDomainError("beta_max must lie in (0, 1]")
        if not (self.sigma_n_sq > 0 and self.p_un > 0):
            raise ParameterDomainError("powers must be positive")
        object.__setattr__(self, "nlos_mode", LinkKind.parse(self.nlos_mode))
        if self.nlos_mode is LinkKind.LOS:
            raise ParameterDomainError("nlos_mode must be NLoS, RisReflected or RisWithDirect")
        if self.blockage_mode not in ("ball", "independent"):
            raise ParameterDomainError("blockage_mode must be 'ball' or 'independent'")
        q = self.q_eff
        _check_table(self.fading_user, (1, q * self.M, q * self.L), "fading_user")
        _check_table(self.fading_eve, (1, q * self.M, q * self.L), "fading_eve")
        _check_table(self.fading_bs_ris, (1, q * self.L), "fading_bs_ris")

    @property
    def q_eff(self) -> int:
        return self.K - self.M - 1

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def scale_constant(cfg: ScenarioConfig, kind: LinkKind, gain: float) -> float:
    """A such that SINR = A * channel_gain / D for the given link kind and antenna gain."""
    base = gain * cfg.p_un / (cfg.beta_max ** 2 * cfg.q_eff ** 2 * cfg.sigma_n_sq)
    if LinkKind.parse(kind) in (LinkKind.LOS, LinkKind.NLOS):
        return base
    plp = cfg.path_loss
    return base * plp.c_l1 * plp.c_l2 / cfg.geometry.d_uR ** 2


def a_constants(cfg: ScenarioConfig, gain: float | None = None):
    """(A1, A2) for the user's main-lobe gain unless ``gain`` is given."""
    g = cfg.pattern_user.g_main if gain is None else gain
    return scale_constant(cfg, LinkKind.LOS, g), scale_constant(cfg, LinkKind.RIS_REFLECTED, g)


def path_exponent(cfg: ScenarioConfig, kind: LinkKind) -> float:
    kind = LinkKind.parse(kind)
    if kind is LinkKind.LOS:
        return cfg.path_loss.alpha1
    if kind is LinkKind.NLOS:
        return cfg.path_loss.alpha2
    return 2.0


def sinr(link_kind, gain, distance, cfg: ScenarioConfig, antenna_gain: float):
    """Effective SINR; for RisWithDirect ``gain`` is a (direct, reflected) pair."""
    kind = LinkKind.parse(link_kind)
    a = scale_constant(cfg, kind, antenna_gain)
    d = np.asarray(distance, dtype=float)
    if kind is LinkKind.RIS_WITH_DIRECT:
        g = np.asarray(gain[0], dtype=float) + np.asarray(gain[1], dtype=float)
    else:
        g = np.asarray(gain, dtype=float)
    out = a * g * d ** (-path_exponent(cfg, kind))
    return float(out) if out.ndim == 0 else out


# ------------------------------------------------------------ gains

def gain_terms(cfg: ScenarioConfig, who: str, kind) -> list:
    """Independent terms of the effective channel gain.

    Plain FisherFParams for direct links (Q*M of them), (access, bs_ris) pairs for
    the Q*L reflected products.  RisWithDirect is handled by the callers as the
    two groups (direct, reflected).
    """
    kind = LinkKind.parse(kind)
    fad = cfg.fading_user if who == "user" else cfg.fading_eve
    q = cfg.q_eff
    if kind in (LinkKind.LOS, LinkKind.NLOS):
        return list(_table(fad, q * cfg.M, f"fading_{who}"))
    if kind is LinkKind.RIS_REFLECTED:
        access = _table(fad, q * cfg.L, f"fading_{who}")
        bs = _table(cfg.fading_bs_ris, q * cfg.L, "fading_bs_ris")
        return list(zip(access, bs))
    raise ParameterDomainError("RisWithDirect has two gain groups; ask for each separately")


def sample_terms(terms, rng: np.random.Generator, size=None):
    """One draw (or ``size`` draws) of the sum of independent terms."""
    total = 0.0
    for t in terms:
        if isinstance(t, FisherFParams):
            total = total + sample_f(t, rng, size)
        else:
            total = total + sample_f(t[0], rng, size) * sample_f(t[1], rng, size)
    return total


def effective_gain_s1(cfg: ScenarioConfig, link_index_table=None, rng=None, size=None, who="user"):
    """Sum of Q*M independent F draws; ``link_index_table`` overrides the element table."""
    if rng is None:
        raise ParameterDomainError("an explicit random generator is required")
    terms = list(link_index_table) if link_index_table is not None else gain_terms(cfg, who, LinkKind.LOS)
    return sample_terms(terms, rng, size)


def effective_gain_s2(cfg: ScenarioConfig, rng, size=None, who="user"):
    """Sum of Q*L products of independent access-link and BS-RIS F draws."""
    return sample_terms(gain_terms(cfg, who, LinkKind.RIS_REFLECTED), rng, size)
