"""Monte-Carlo simulation of the shelve / expose / interrogate lifetime loop.

Each trial prepares the ion in the metastable state, draws an exponential
decay time with the total rate (scattering plus natural decay) and is
checked at the end of every interrogation bin. Detection is perfect and
decay is absorbing.

Random numbers come from numpy's Philox4x64-10 counter-based generator.
Trials are processed in fixed blocks of ``BLOCK`` trials; block ``b`` of
stream ``s`` is seeded from ``SeedSequence(seed, spawn_key=(s, b))``, so
every trial's draw depends only on (seed, stream, trial index) and not on
how blocks are distributed over threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .atomdata import HyperfineState, SpeciesData
from .fitting import SurvivalCurve
from .gates import _leak_levels
from .scattering import LaserDrive, total_rate

__all__ = [
    "BLOCK",
    "SequenceConfig",
    "simulate_survival",
    "simulate_on_off",
    "simulate_campaign",
    "campaign_srs_rate",
]

BLOCK = 4096

_STREAM_SURVIVAL = 0
_STREAM_ON = 1
_STREAM_OFF = 2


@dataclass(frozen=True)
class SequenceConfig:
    """Settings of one lifetime measurement.

    Parameters
    ----------
    total_rate : float
        Decay rate out of the shelved state in 1/s (scattering plus natural).
    bin_duration : float
        Interrogation interval in s; 0.1 s, or 0.01 s for fast decays.
    max_bins : int
        Number of interrogations; delays are ``n * bin_duration``, n = 1..max_bins.
    trials : int
        Number of repetitions.
    seed : int
        Non-negative 64-bit seed.
    """

    total_rate: float = 0.0
    bin_duration: float = 0.1
    max_bins: int = 50
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.total_rate) or self.total_rate < 0:
            raise ValueError("total_rate must be finite and non-negative")
        if not self.bin_duration > 0:
            raise ValueError("bin_duration must be positive")
        if int(self.max_bins) != self.max_bins or self.max_bins < 1:
            raise ValueError("max_bins must be a positive integer")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an integer in [0, 2**64)")

    @property
    def delays(self) -> np.ndarray:
        return self.bin_duration * np.arange(1, self.max_bins + 1)


def _block_decay_times(seed: int, stream: int, block: int, n: int, rate: float) -> np.ndarray:
    ss = np.random.SeedSequence(seed, spawn_key=(stream, block))
    u = np.random.Generator(np.random.Philox(ss)).random(n)
    if rate == 0:
        return np.full(n, np.inf)
    return -np.log1p(-u) / rate


def _simulate(config: SequenceConfig, stream: int, workers: int | None) -> SurvivalCurve:
    delays = config.delays
    nblocks = -(-config.trials // BLOCK)

    def count(b):
        n = min(BLOCK, config.trials - b * BLOCK)
        t = np.sort(_block_decay_times(config.seed, stream, b, n, config.total_rate))
        # survivors at each delay: decay strictly after the check
        return n - np.searchsorted(t, delays, side="right")

    if workers == 1 or nblocks == 1:
        parts = [count(b) for b in range(nblocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(count, range(nblocks)))
    survivors = np.sum(parts, axis=0)
    return SurvivalCurve(delays, np.full(delays.size, config.trials), survivors)


def simulate_survival(config: SequenceConfig, workers: int | None = 1) -> SurvivalCurve:
    """Survival curve for ``config``; identical for equal configs at any ``workers``."""
    return _simulate(config, _STREAM_SURVIVAL, workers)


def simulate_on_off(
    srs_rate: float, natural_rate: float, config: SequenceConfig, workers: int | None = 1
) -> tuple[SurvivalCurve, SurvivalCurve]:
    """Curves with the scattering light on (``srs + natural``) and off (``natural``).

    ``config.total_rate`` is ignored. The two curves use separate random
    streams.
    """
    if srs_rate < 0 or natural_rate < 0:
        raise ValueError("rates must be non-negative")
    on = _simulate(replace(config, total_rate=srs_rate + natural_rate), _STREAM_ON, workers)
    off = _simulate(replace(config, total_rate=natural_rate), _STREAM_OFF, workers)
    return on, off


def campaign_srs_rate(
    species: SpeciesData,
    initial: HyperfineState,
    drives: LaserDrive | Sequence[LaserDrive],
    intermediates: Sequence[str] | None = None,
) -> float:
    """Measured scattering rate: summed over drives, into every level outside the shelved one."""
    if isinstance(drives, LaserDrive):
        drives = [drives]
    leak = _leak_levels(species, initial.level, intermediates)
    finals = "+".join(leak)
    return float(sum(total_rate(species, initial, d, finals, intermediates) for d in drives))


def simulate_campaign(
    species: SpeciesData,
    initial: HyperfineState,
    drives: LaserDrive | Sequence[LaserDrive],
    natural_rate: float,
    config: SequenceConfig,
    intermediates: Sequence[str] | None = None,
    workers: int | None = 1,
) -> tuple[SurvivalCurve, SurvivalCurve]:
    """On/off survival curves for a shelved state under the given drive(s).

    The on-curve rate is the predicted scattering rate out of the shelved
    level plus ``natural_rate``.
    """
    srs = campaign_srs_rate(species, initial, drives, intermediates)
    return simulate_on_off(srs, natural_rate, config, workers)
