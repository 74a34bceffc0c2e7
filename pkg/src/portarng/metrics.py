"""Time-to-solution statistics and performance-portability arithmetic.

Portability of an application over a platform set is the harmonic mean of
its per-platform efficiencies, and zero as soon as any platform in the set
is unsupported. Efficiency here is the native-to-portable time ratio, i.e.
the reciprocal of the portable/native slowdown ratio, so values above 1 mean
the portable build was faster than the native baseline on that platform.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Iterable, List, Mapping, Optional, Sequence

from .errors import ConfigError, EmptyPlatformSet, EmptySamples, NonPositiveTime

# EfficiencyTable: platform label -> efficiency, with None marking an
# unsupported platform.
EfficiencyTable = Mapping[str, Optional[float]]


@dataclass
class RunRecord:
    """One benchmark measurement series for a fixed configuration."""

    platform: str
    api_mode: str
    backend: str
    engine: str
    dist: str
    batch: int
    samples: List[int]  # per-iteration time-to-solution, nanoseconds

    def __post_init__(self):
        if not self.samples:
            raise EmptySamples("a run record needs at least one sample")
        if self.batch < 1:
            raise ConfigError(f"batch must be >= 1, got {self.batch}")


@dataclass(frozen=True)
class TtsStats:
    mean: float
    stddev: float
    min: float
    median: float


def tts_stats(samples: Sequence[float]) -> TtsStats:
    """Mean, sample standard deviation (0 for n=1), min and median."""
    if not samples:
        raise EmptySamples("cannot aggregate an empty sample list")
    stddev = statistics.stdev(samples) if len(samples) > 1 else 0.0
    return TtsStats(
        mean=statistics.fmean(samples),
        stddev=stddev,
        min=min(samples),
        median=statistics.median(samples),
    )


def vavs(tts_portable: float, tts_native: float) -> float:
    """Portable-to-native time-to-solution ratio; 1.0 means parity."""
    if tts_portable <= 0 or tts_native <= 0:
        raise NonPositiveTime(f"times must be positive, got ({tts_portable}, {tts_native})")
    return tts_portable / tts_native


def application_efficiency(tts_portable: float, tts_native: float) -> float:
    """Per-platform efficiency: native over portable time, i.e. 1 / vavs."""
    return 1.0 / vavs(tts_portable, tts_native)


def perf_portability(effs: EfficiencyTable, platforms: Iterable[str]) -> float:
    """Harmonic mean of efficiencies over the platform set, 0 if any unsupported."""
    labels = list(platforms)
    if not labels:
        raise EmptyPlatformSet("performance portability needs at least one platform")
    values = []
    for label in labels:
        e = effs.get(label)
        if e is None or e <= 0:
            return 0.0
        values.append(e)
    if len(values) == 1:
        return values[0]  # degenerate case is exact, no reciprocal round-trip
    return len(values) / sum(1.0 / e for e in values)
