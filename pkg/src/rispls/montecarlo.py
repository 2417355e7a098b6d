"""Monte-Carlo reference engine for the SINR laws and the secrecy metrics.

Trials are generated in fixed-size blocks.  Block b draws from
Philox(SeedSequence(seed, spawn_key=(b,))), so the numbers a trial sees depend
only on (seed, trial index) and never on how blocks are spread over workers.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ScenarioConfig, gain_terms, sample_terms, sinr
from .errors import InsufficientTrials, ParameterDomainError
from .geometry import b2, sample_user_distance
from .links import LinkKind

METRICS = ("op", "sop", "pnsc", "asr")
MIN_TRIALS = 1000


@dataclass(frozen=True)
class McConfig:
    trials: int = 1_000_000
    master_seed: int = 20240601
    batch_size: int = 8192
    workers: int = 1
    mirror_eve: bool = False  # diagnostic: eavesdropper reuses the user's draws

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ParameterDomainError("trials must be a positive integer")
        if not (0 <= int(self.master_seed) < 2 ** 64):
            raise ParameterDomainError("master_seed must fit in 64 bits")
        if self.batch_size < 1 or self.workers < 1:
            raise ParameterDomainError("batch_size and workers must be positive")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials_used: int


def worker_count(requested: int) -> int:
    cap = os.environ.get("RIS_PLS_THREADS")
    if cap:
        try:
            return max(1, min(requested, int(cap)))
        except ValueError:
            pass
    return max(1, requested)


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


# ------------------------------------------------------------ trial sampling

def _los_mask(cfg: ScenarioConfig, d, u):
    g, bl = cfg.geometry, cfg.blockage
    if cfg.blockage_mode == "independent":
        return u < bl.b1 * b2(g)
    return (d <= g.r1) & (u < bl.b1)


def _gains(cfg, who, kind, rng, size):
    if kind is LinkKind.RIS_WITH_DIRECT:
        direct = sample_terms(gain_terms(cfg, who, LinkKind.NLOS), rng, size)
        refl = sample_terms(gain_terms(cfg, who, LinkKind.RIS_REFLECTED), rng, size)
        return (direct, refl)
    return sample_terms(gain_terms(cfg, who, kind), rng, size)


def _branch_sinr(cfg, who, kind, d, gain_ant, rng):
    n = len(d)
    if n == 0:
        return np.empty(0)
    return np.atleast_1d(sinr(kind, _gains(cfg, who, kind, rng, n), d, cfg, gain_ant))


def sample_trials(cfg: ScenarioConfig, rng: np.random.Generator, size: int, mirror_eve: bool = False):
    """Joint draws of (sinr_user, sinr_eve, is_los, eve_main_lobe)."""
    d = sample_user_distance(cfg.geometry, rng, size)
    los = _los_mask(cfg, d, rng.random(size))
    main = rng.random(size) < cfg.pattern_eve.p_main
    zu = np.empty(size)
    ze = np.empty(size)
    g_user = cfg.pattern_user.g_main
    g_eve = np.where(main, cfg.pattern_eve.g_main, cfg.pattern_eve.g_side)
    for mask, kind in ((los, LinkKind.LOS), (~los, cfg.nlos_mode)):
        idx = np.nonzero(mask)[0]
        zu[idx] = _branch_sinr(cfg, "user", kind, d[idx], g_user, rng)
        if not mirror_eve:
            # unit antenna gain here, the lobe gain is applied below
            ze[idx] = _branch_sinr(cfg, "eve", kind, d[idx], 1.0, rng) * g_eve[idx]
    if mirror_eve:
        ze = zu.copy()
    return zu, ze, los, main


def simulate_trial(cfg: ScenarioConfig, secrecy, rng: np.random.Generator):
    """One joint draw: (sinr_user, sinr_eve, link_kind, eve_lobe) with eve_lobe in {'main', 'side'}."""
    zu, ze, los, main = sample_trials(cfg, rng, 1)
    kind = LinkKind.LOS if los[0] else cfg.nlos_mode
    return float(zu[0]), float(ze[0]), kind, "main" if main[0] else "side"


def sample_sinr(cfg: ScenarioConfig, kind, rng: np.random.Generator, size: int, who: str = "user",
                antenna_gain=None, law_segments=None):
    """SINR draws of one link kind with the distance drawn from the annulus (or given segments)."""
    kind = LinkKind.parse(kind)
    if antenna_gain is None:
        antenna_gain = (cfg.pattern_user if who == "user" else cfg.pattern_eve).g_main
    if law_segments is None:
        d = sample_user_distance(cfg.geometry, rng, size)
    else:
        d = _sample_segments(law_segments, rng, size)
    return np.atleast_1d(sinr(kind, _gains(cfg, who, kind, rng, size), d, cfg, antenna_gain))


def _sample_segments(segments, rng, size):
    w = np.array([wt * (b * b - a * a) for a, b, wt in segments])
    pick = rng.choice(len(segments), size=size, p=w / w.sum())
    a = np.array([s[0] for s in segments])[pick]
    b = np.array([s[1] for s in segments])[pick]
    u = rng.random(size)
    return np.sqrt(a * a + u * (b * b - a * a))


# ------------------------------------------------------------ estimators

def _indicators(zu, ze, secrecy):
    rs = secrecy.r_s
    return {
        "op": (zu < secrecy.z_th).astype(float),
        "sop": ((1.0 + zu) < rs * (1.0 + ze)).astype(float),
        "pnsc": (zu > secrecy.r_s_pnsc * ze).astype(float),
        "asr": np.maximum(0.0, np.log2(1.0 + zu) - np.log2(1.0 + ze)),
    }


def _block_sums(cfg, secrecy, mc: McConfig, block: int, size: int, metrics):
    rng = block_rng(mc.master_seed, block)
    zu, ze, _, _ = sample_trials(cfg, rng, size, mc.mirror_eve)
    ind = _indicators(zu, ze, secrecy)
    return {k: (float(np.sum(ind[k])), float(np.sum(ind[k] ** 2))) for k in metrics}


def estimate_metrics(cfg: ScenarioConfig, secrecy, mc: McConfig, metrics=METRICS) -> dict:
    """All requested metrics from one shared set of trials."""
    if mc.trials < MIN_TRIALS:
        raise InsufficientTrials(f"at least {MIN_TRIALS} trials are needed, got {mc.trials}")
    metrics = tuple(metrics)
    for k in metrics:
        if k not in METRICS:
            raise ParameterDomainError(f"unknown metric {k!r}")
    n_blocks = math.ceil(mc.trials / mc.batch_size)
    sizes = [min(mc.batch_size, mc.trials - b * mc.batch_size) for b in range(n_blocks)]
    workers = worker_count(mc.workers)
    if workers == 1:
        parts = [_block_sums(cfg, secrecy, mc, b, sizes[b], metrics) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _block_sums(cfg, secrecy, mc, b, sizes[b], metrics),
                                  range(n_blocks)))
    n = mc.trials
    out = {}
    for k in metrics:
        s = s2 = 0.0
        for p in parts:  # fixed block order keeps the sums bit-identical
            s += p[k][0]
            s2 += p[k][1]
        mean = s / n
        var = max(0.0, (s2 - n * mean * mean) / (n - 1))
        out[k] = McEstimate(mean, math.sqrt(var / n), n)
    return out


def estimate_op(cfg, secrecy, mc: McConfig) -> McEstimate:
    return estimate_metrics(cfg, secrecy, mc, ("op",))["op"]


def estimate_sop(cfg, secrecy, mc: McConfig) -> McEstimate:
    return estimate_metrics(cfg, secrecy, mc, ("sop",))["sop"]


def estimate_pnsc(cfg, secrecy, mc: McConfig) -> McEstimate:
    return estimate_metrics(cfg, secrecy, mc, ("pnsc",))["pnsc"]


def estimate_asr(cfg, secrecy, mc: McConfig) -> McEstimate:
    return estimate_metrics(cfg, secrecy, mc, ("asr",))["asr"]


# ------------------------------------------------------------ empirical CDF

class EmpiricalCdf:
    """Right-continuous empirical CDF with a Dvoretzky-Kiefer-Wolfowitz band."""

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size < MIN_TRIALS:
            raise InsufficientTrials(f"at least {MIN_TRIALS} samples are needed, got {x.size}")
        self.samples = x
        self.n = x.size

    def __call__(self, z):
        return np.searchsorted(self.samples, np.asarray(z, dtype=float), side="right") / self.n

    def dkw_epsilon(self, confidence: float = 0.99) -> float:
        return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * self.n))

    def band(self, z, confidence: float = 0.99):
        f = self(z)
        eps = self.dkw_epsilon(confidence)
        return np.clip(f - eps, 0, 1), np.clip(f + eps, 0, 1)

    def stderr(self, z):
        f = self(z)
        return np.sqrt(f * (1.0 - f) / self.n)

    def sup_distance(self, cdf) -> float:
        """sup |F_n - F| for a continuous reference cdf, checked on both sides of each jump."""
        ref = np.asarray(cdf(self.samples), dtype=float)
        i = np.arange(1, self.n + 1)
        return float(max(np.max(np.abs(i / self.n - ref)), np.max(np.abs((i - 1) / self.n - ref))))


def empirical_cdf(samples) -> EmpiricalCdf:
    return EmpiricalCdf(samples)
