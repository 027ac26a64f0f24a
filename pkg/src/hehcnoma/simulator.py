"""Bit-true Monte Carlo of the two-hop chain.

Per frame: superposed BPSK at the source, MLD + SIC at the relay, re-encoding
of the relay's decisions, forwarding with harvested (or own) power, then MLD
at the first user and SIC at the second. One fresh power gain per hop per
frame (block fading). Noise on the real decision statistic has variance
sigma^2 = N_0 = 1, so total transmit power equals the total SNR.
"""
from __future__ import annotations

import math
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .channel import Scenario, sample_power_gain
from .protocol import EhProtocol, PowerAllocation, derive_power, relay_power

__all__ = [
    "BerEstimate",
    "SimConfig",
    "StoppingRule",
    "TrialCounts",
    "derive_batch_seed",
    "detect_s1",
    "run_point",
    "sic_detect_s2",
    "simulate_batch",
]

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # splitmix64 finaliser: a bijection on 64-bit words
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def derive_batch_seed(master_seed: int, batch_index: int) -> int:
    """Seed of batch ``batch_index``: a bijective mix of master + (index + 1) * golden.

    For a fixed master the counter step is odd, so distinct indices below 2**64
    give distinct seeds.
    """
    if batch_index < 0:
        raise ValueError("batch_index must be non-negative")
    return _mix64((master_seed + (batch_index + 1) * GOLDEN64) & MASK64)


def batch_rng(master_seed: int, batch_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_batch_seed(master_seed, batch_index)))


# ---------------------------------------------------------------------------
# detectors
# ---------------------------------------------------------------------------

def detect_s1(y, h_gain, tx_power, pa: PowerAllocation):
    """MLD of the strong symbol with the weak one treated as noise.

    For superposed BPSK with alpha1 >= alpha2 this is a sign decision on the
    coherently combined observable; ``h_gain``, ``tx_power`` and ``pa`` do not
    move the threshold. y == 0 decides +1.
    """
    return np.where(np.asarray(y) >= 0, 1, -1).astype(np.int8)[()]


def sic_detect_s2(y, h_gain, tx_power, s1_hat, pa: PowerAllocation):
    """Subtract the reconstructed strong symbol, then decide the weak one by sign."""
    residual = np.asarray(y) - np.sqrt(tx_power * pa.alpha1 * h_gain) * s1_hat
    return np.where(residual >= 0, 1, -1).astype(np.int8)[()]


# ---------------------------------------------------------------------------
# configuration and tallies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StoppingRule:
    """Stop once every tracked counter has ``min_errors`` errors or ``max_bits``
    frames have been simulated. Frames are drawn in batches of ``batch_bits``."""

    min_errors: int = 400
    max_bits: int = 10**8
    batch_bits: int = 1 << 18

    def __post_init__(self):
        if self.min_errors < 100:
            raise ValueError("min_errors must be at least 100")
        if self.max_bits < 1 or self.batch_bits < 1:
            raise ValueError("bit budgets must be positive")


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    protocol: EhProtocol
    pa: PowerAllocation
    total_snr_db: float
    master_seed: int = 0
    stop: StoppingRule = field(default_factory=StoppingRule)

    def __post_init__(self):
        if not math.isfinite(self.total_snr_db):
            raise ValueError("total_snr_db must be finite")
        if not 0 <= self.master_seed <= MASK64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class BerEstimate:
    ber: float
    n_bits: int
    n_errors: int
    ci95_halfwidth: float

    @classmethod
    def from_counts(cls, n_errors: int, n_bits: int) -> "BerEstimate":
        if n_bits == 0:
            return cls(math.nan, 0, n_errors, math.nan)
        p = n_errors / n_bits
        return cls(p, n_bits, n_errors, 1.96 * math.sqrt(p * (1.0 - p) / n_bits))


_COUNTERS = (
    "relay_err_s1", "relay_err_s2", "phase2_err_u1", "phase2_err_u2", "e2e_err_u1", "e2e_err_u2",
)


@dataclass(frozen=True)
class TrialCounts:
    """Error tallies over ``bits`` frames (one bit per user per frame).

    relay_*: relay decisions vs source bits; phase2_*: user decisions vs the
    bits the relay forwarded; e2e_*: user decisions vs source bits.
    """

    bits: int = 0
    relay_err_s1: int = 0
    relay_err_s2: int = 0
    phase2_err_u1: int = 0
    phase2_err_u2: int = 0
    e2e_err_u1: int = 0
    e2e_err_u2: int = 0
    budget_exhausted: bool = False

    def __add__(self, other: "TrialCounts") -> "TrialCounts":
        if not isinstance(other, TrialCounts):
            return NotImplemented
        kw = {f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)
              if f.name != "budget_exhausted"}
        return TrialCounts(**kw, budget_exhausted=self.budget_exhausted or other.budget_exhausted)

    def min_errors(self) -> int:
        return min(getattr(self, name) for name in _COUNTERS)

    def errors(self, stage: str, user: int) -> int:
        prefix = {"relay": "relay_err_s", "phase2": "phase2_err_u", "e2e": "e2e_err_u"}[stage]
        return getattr(self, f"{prefix}{user}")

    def estimate(self, stage: str, user: int) -> BerEstimate:
        return BerEstimate.from_counts(self.errors(stage, user), self.bits)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def _n_frames(stop: StoppingRule, batch_index: int) -> int:
    return max(0, min(stop.batch_bits, stop.max_bits - batch_index * stop.batch_bits))


def simulate_batch(cfg: SimConfig, batch_index: int) -> TrialCounts:
    """Simulate one batch of frames with its own derived random stream."""
    n = _n_frames(cfg.stop, batch_index)
    if n == 0:
        return TrialCounts()
    rng = batch_rng(cfg.master_seed, batch_index)
    sc, pa = cfg.scenario, cfg.pa
    dp = derive_power(cfg.protocol)
    p_s = dp.phi * 10.0 ** (cfg.total_snr_db / 10.0)
    a1, a2 = math.sqrt(pa.alpha1), math.sqrt(pa.alpha2)

    bits = rng.integers(0, 2, size=(2, n), dtype=np.int8) * 2 - 1
    s1, s2 = bits[0], bits[1]
    g_r = sample_power_gain(sc.relay_link, rng, n)
    g_1 = sample_power_gain(sc.user1_link, rng, n)
    g_2 = sample_power_gain(sc.user2_link, rng, n)
    noise = rng.standard_normal((3, n))

    # first hop: only the information share of the received power is decoded
    p_info = p_s * dp.varpi
    y_r = np.sqrt(p_info * g_r) * (a1 * s1 + a2 * s2) + noise[0]
    r1 = detect_s1(y_r, g_r, p_info, pa)
    r2 = sic_detect_s2(y_r, g_r, p_info, r1, pa)

    # second hop: fresh superposition of the relay's decisions
    p_r = relay_power(p_s, g_r, dp)
    x_relay = a1 * r1 + a2 * r2
    y_1 = np.sqrt(p_r * g_1) * x_relay + noise[1]
    y_2 = np.sqrt(p_r * g_2) * x_relay + noise[2]
    u1 = detect_s1(y_1, g_1, p_r, pa)
    u2_first = detect_s1(y_2, g_2, p_r, pa)
    u2 = sic_detect_s2(y_2, g_2, p_r, u2_first, pa)

    return TrialCounts(
        bits=n,
        relay_err_s1=int(np.count_nonzero(r1 != s1)),
        relay_err_s2=int(np.count_nonzero(r2 != s2)),
        phase2_err_u1=int(np.count_nonzero(u1 != r1)),
        phase2_err_u2=int(np.count_nonzero(u2 != r2)),
        e2e_err_u1=int(np.count_nonzero(u1 != s1)),
        e2e_err_u2=int(np.count_nonzero(u2 != s2)),
    )


def _done(total: TrialCounts, stop: StoppingRule) -> bool:
    return total.min_errors() >= stop.min_errors or total.bits >= stop.max_bits


def run_point(cfg: SimConfig, workers: int = 1, executor: Executor | None = None) -> TrialCounts:
    """Simulate batches until the slowest counter reaches ``min_errors`` or the
    bit budget runs out.

    Batches are evaluated in rounds of ``workers`` but folded strictly in index
    order, and batches past the stopping point are discarded, so the result is
    identical for any worker count. ``budget_exhausted`` marks a result that
    stopped on the budget with some counter still short of ``min_errors``.
    """
    stop = cfg.stop
    n_batches = -(-stop.max_bits // stop.batch_bits)
    total = TrialCounts()
    own_pool = None
    if executor is None and workers > 1:
        executor = own_pool = ProcessPoolExecutor(max_workers=workers)
    try:
        index = 0
        while index < n_batches and not _done(total, stop):
            width = workers if executor is not None else 1
            batch_ids = range(index, min(index + width, n_batches))
            if executor is None:
                results = [simulate_batch(cfg, i) for i in batch_ids]
            else:
                results = list(executor.map(simulate_batch, [cfg] * len(batch_ids), batch_ids))
            for counts in results:
                total = total + counts
                index += 1
                if _done(total, stop):
                    break
    finally:
        if own_pool is not None:
            own_pool.shutdown()
    short = total.min_errors() < stop.min_errors
    return TrialCounts(**{f.name: getattr(total, f.name) for f in fields(total) if f.name != "budget_exhausted"},
                       budget_exhausted=short)
