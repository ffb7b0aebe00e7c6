"""Monte Carlo oracle: sample user placements and evaluate the rate equations directly.

Trials are processed in fixed-size blocks.  Block ``j`` always draws from the
Philox stream ``(seed, j)``, so a trial's randomness depends only on the seed
and its index; workers only change which thread computes a block.  Per-block
partial results are reduced in block order (integer counts for outage, Chan's
pairwise update for means), which makes the output bitwise independent of the
worker count.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .model import NomaPowerAllocation, RateTargets, SystemGeometry

BLOCK_SIZE = 1 << 16


class Scheme(str, enum.Enum):
    OMA = "oma"
    NOMA = "noma"


class Direction(str, enum.Enum):
    DOWN = "down"
    UP = "up"


@dataclass(frozen=True)
class SimConfig:
    geometry: SystemGeometry
    M: int
    scheme: Scheme
    direction: Direction
    targets: RateTargets
    rho: float
    alloc: Optional[NomaPowerAllocation] = None
    trials: int = 10**6
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.M < 1:
            raise ValueError("user count must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if len(self.targets) != self.M:
            raise ValueError(f"{len(self.targets)} target rates for {self.M} users")
        if self.scheme is Scheme.NOMA and self.direction is Direction.DOWN:
            if self.alloc is None or len(self.alloc) != self.M:
                raise ValueError("downlink NOMA needs a power allocation with M entries")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "SimConfig":
        from dataclasses import replace

        return replace(self, **changes)


class Estimate(NamedTuple):
    mean: float
    std_error: float
    trials: int


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(block))


def sample_gains(geometry: SystemGeometry, M: int, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """``size x M`` iid channel gains ``eta / (y**2 + d**2)`` with ``y ~ U[-D/2, D/2]``."""
    half = geometry.room_side / 2.0
    y = rng.uniform(-half, half, size=(size, M))
    return geometry.eta / (y * y + geometry.z_min)


# -- per-trial rates -----------------------------------------------------------

def _rates(cfg: SimConfig, gains: np.ndarray, rho: float) -> np.ndarray:
    """Achievable rate of each user in each trial (``trials x M``).

    For NOMA, column ``m-1`` belongs to the user with the m-th smallest gain.
    """
    M = cfg.M
    if cfg.scheme is Scheme.OMA:
        return np.log2(1.0 + rho * gains) / M
    if cfg.direction is Direction.DOWN:
        # the user's own signal, decoded last at its receiver
        alphas = np.asarray(cfg.alloc.alphas)
        tails = np.array([cfg.alloc.tail(m) for m in range(1, M + 1)])
        p = gains * (rho / M)
        return np.log2(1.0 + p * alphas / (p * tails + 1.0))
    # uplink: weaker users remain as interference when user m is decoded
    weaker = np.cumsum(gains, axis=1) - gains
    return np.log2(1.0 + gains / (weaker + 1.0 / rho))


def _outage(cfg: SimConfig, gains: np.ndarray, rho: float) -> np.ndarray:
    """Boolean ``trials x M`` outage indicator."""
    M = cfg.M
    targets = np.asarray(cfg.targets.targets)
    if cfg.scheme is Scheme.OMA:
        return _rates(cfg, gains, rho) < targets
    if cfg.direction is Direction.DOWN:
        # user m must decode every k <= m; each R_{m,k} uses user m's own gain
        alphas = np.asarray(cfg.alloc.alphas)
        tails = np.array([cfg.alloc.tail(k) for k in range(1, M + 1)])
        p = gains * (rho / M)
        out = np.zeros(gains.shape, dtype=bool)
        failed = np.zeros(gains.shape, dtype=bool)
        for k in range(M):
            failed |= np.log2(1.0 + p * alphas[k] / (p * tails[k] + 1.0)) < targets[k]
            # column k has now seen every k' <= k
            out[:, k] = failed[:, k]
        return out
    # uplink: user m is in outage if any of users m..M (decoded before or at m) fails
    miss = _rates(cfg, gains, rho) < targets
    return np.flip(np.logical_or.accumulate(np.flip(miss, axis=1), axis=1), axis=1)


# -- block engine ----------------------------------------------------------------

class _BlockResult(NamedTuple):
    n: int
    counts: np.ndarray  # rho x M
    means: np.ndarray
    m2: np.ndarray


def _run_block(cfg: SimConfig, rhos: np.ndarray, block: int, n: int, want_er: bool) -> _BlockResult:
    gains = sample_gains(cfg.geometry, cfg.M, block_rng(cfg.seed, block), n)
    if cfg.scheme is Scheme.NOMA:
        # stable sort: ties keep the lower index first
        gains = np.sort(gains, axis=1, kind="stable")
    R, M = len(rhos), cfg.M
    counts = np.zeros((R, M), dtype=np.int64)
    means = np.zeros((R, M))
    m2 = np.zeros((R, M))
    for i, rho in enumerate(rhos):
        counts[i] = _outage(cfg, gains, rho).sum(axis=0)
        if want_er:
            rates = _rates(cfg, gains, rho)
            mu = rates.mean(axis=0)
            means[i] = mu
            m2[i] = ((rates - mu) ** 2).sum(axis=0)
    return _BlockResult(n, counts, means, m2)


@dataclass
class SimResult:
    """Outage counts and rate moments for every SNR and user, trials merged in block order."""

    rhos: np.ndarray
    trials: int
    counts: np.ndarray
    er_mean: np.ndarray
    er_m2: np.ndarray
    has_er: bool = field(default=True)

    def op(self, m: int) -> list[Estimate]:
        n = self.trials
        out = []
        for c in self.counts[:, m - 1]:
            p = int(c) / n
            out.append(Estimate(p, math.sqrt(p * (1.0 - p) / n), n))
        return out

    def er(self, m: int) -> list[Estimate]:
        if not self.has_er:
            raise ValueError("rates were not recorded for this run")
        n = self.trials
        out = []
        for mu, m2 in zip(self.er_mean[:, m - 1], self.er_m2[:, m - 1]):
            var = m2 / (n - 1) if n > 1 else 0.0
            out.append(Estimate(float(mu), math.sqrt(var / n), n))
        return out


def simulate(
    cfg: SimConfig,
    rhos: Optional[Sequence[float]] = None,
    workers: int = 1,
    want_er: bool = True,
    block_size: int = BLOCK_SIZE,
) -> SimResult:
    """Run ``cfg.trials`` placements once and evaluate every SNR in ``rhos`` on them."""
    rhos = np.atleast_1d(np.asarray(cfg.rho if rhos is None else rhos, dtype=float))
    sizes = [block_size] * (cfg.trials // block_size)
    if cfg.trials % block_size:
        sizes.append(cfg.trials % block_size)
    jobs = list(enumerate(sizes))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda j: _run_block(cfg, rhos, j[0], j[1], want_er), jobs))
    else:
        blocks = [_run_block(cfg, rhos, j, n, want_er) for j, n in jobs]

    counts = np.zeros((len(rhos), cfg.M), dtype=np.int64)
    n_acc = 0
    mean = np.zeros((len(rhos), cfg.M))
    m2 = np.zeros((len(rhos), cfg.M))
    for blk in blocks:
        counts += blk.counts
        if want_er:
            # Chan et al. pairwise merge, applied in fixed block order
            total = n_acc + blk.n
            delta = blk.means - mean
            mean = mean + delta * (blk.n / total)
            m2 = m2 + blk.m2 + delta * delta * (n_acc * blk.n / total)
        n_acc += blk.n
    return SimResult(rhos, cfg.trials, counts, mean, m2, want_er)


def simulate_op(cfg: SimConfig, user_index: int, workers: int = 1) -> Estimate:
    _check(cfg, user_index)
    return simulate(cfg, workers=workers, want_er=False).op(user_index)[0]


def simulate_er(cfg: SimConfig, user_index: int, workers: int = 1) -> Estimate:
    _check(cfg, user_index)
    return simulate(cfg, workers=workers).er(user_index)[0]


def _check(cfg: SimConfig, m: int):
    if not 1 <= m <= cfg.M:
        raise IndexError(f"user index m={m} outside 1..{cfg.M}")
