"""Delay summaries, replication confidence intervals and state occupancy."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PS_PER_S
from .port import PortState, ServiceLog

# two-sided 95% Student-t quantiles t_{0.975, df} for df = 1..99
T975 = (
    12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912, 2.364624, 2.306004,
    2.262157, 2.228139, 2.200985, 2.178813, 2.160369, 2.144787, 2.131450, 2.119905,
    2.109816, 2.100922, 2.093024, 2.085963, 2.079614, 2.073873, 2.068658, 2.063899,
    2.059539, 2.055529, 2.051831, 2.048407, 2.045230, 2.042272, 2.039513, 2.036933,
    2.034515, 2.032245, 2.030108, 2.028094, 2.026192, 2.024394, 2.022691, 2.021075,
    2.019541, 2.018082, 2.016692, 2.015368, 2.014103, 2.012896, 2.011741, 2.010635,
    2.009575, 2.008559, 2.007584, 2.006647, 2.005746, 2.004879, 2.004045, 2.003241,
    2.002465, 2.001717, 2.000995, 2.000298, 1.999624, 1.998972, 1.998341, 1.997730,
    1.997138, 1.996564, 1.996008, 1.995469, 1.994945, 1.994437, 1.993943, 1.993464,
    1.992997, 1.992543, 1.992102, 1.991673, 1.991254, 1.990847, 1.990450, 1.990063,
    1.989686, 1.989319, 1.988960, 1.988610, 1.988268, 1.987934, 1.987608, 1.987290,
    1.986979, 1.986675, 1.986377, 1.986086, 1.985802, 1.985523, 1.985251, 1.984984,
    1.984723, 1.984467, 1.984217,
)

CHUNK = 1 << 16


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class DelaySample:
    frame_id: int
    hop: int
    waiting: int  # ps
    end_to_end: int  # ps


@dataclass(frozen=True)
class SummaryStats:
    count: int
    mean: float  # s
    variance: float  # s^2, unbiased
    min: float  # s
    max: float  # s
    min_ps: int
    max_ps: int

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def _as_ps_array(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        return samples
    samples = list(samples)
    if samples and isinstance(samples[0], DelaySample):
        return np.fromiter((s.waiting for s in samples), dtype=np.int64, count=len(samples))
    return np.asarray(samples, dtype=np.int64)


def summarize(samples, warmup_discard: float = 0.0) -> SummaryStats:
    """Moments of waiting times (ps) after dropping the earliest ``warmup_discard`` fraction.

    Moments are accumulated chunk by chunk with the pairwise update of
    Chan, Golub and LeVeque, so a single pass suffices for any length.
    """
    if not 0 <= warmup_discard < 1:
        raise StatsError(f"warmup fraction must lie in [0, 1), got {warmup_discard}")
    x = _as_ps_array(samples)
    x = x[int(len(x) * warmup_discard):]
    n = len(x)
    if n == 0:
        raise StatsError("no samples left after warmup discard")
    count = 0
    mean = 0.0
    m2 = 0.0
    for lo in range(0, n, CHUNK):
        chunk = x[lo:lo + CHUNK].astype(np.float64)
        nb = len(chunk)
        mb = chunk.mean()
        m2b = float(np.dot(chunk - mb, chunk - mb))
        delta = mb - mean
        total = count + nb
        mean += delta * nb / total
        m2 += m2b + delta * delta * count * nb / total
        count = total
    var = m2 / (count - 1) if count > 1 else 0.0
    lo_ps = int(x.min())
    hi_ps = int(x.max())
    return SummaryStats(
        count=count,
        mean=mean / PS_PER_S,
        variance=var / PS_PER_S**2,
        min=lo_ps / PS_PER_S,
        max=hi_ps / PS_PER_S,
        min_ps=lo_ps,
        max_ps=hi_ps,
    )


def t_quantile(df: int) -> float:
    if df < 1:
        raise StatsError("need at least one degree of freedom")
    # beyond the table the df=99 value is a slightly conservative stand-in
    return T975[min(df, 99) - 1]


def confidence_interval(means: Sequence[float], level: float = 0.95) -> tuple[float, float]:
    """Student-t interval ``(center, half_width)`` over per-replication means."""
    if level != 0.95:
        raise StatsError("only 95% intervals are tabulated")
    k = len(means)
    if k < 2:
        raise StatsError("a confidence interval needs at least 2 replications")
    arr = np.asarray(means, dtype=np.float64)
    center = float(arr.mean())
    sd = float(arr.std(ddof=1))
    return center, t_quantile(k - 1) * sd / math.sqrt(k)


@dataclass
class ReplicationSet:
    runs: list[SummaryStats]

    @property
    def means(self) -> list[float]:
        return [r.mean for r in self.runs]

    @property
    def mean(self) -> float:
        return float(np.mean(self.means))

    @property
    def ci_half_width(self) -> float:
        if len(self.runs) < 2:
            return float("nan")
        return confidence_interval(self.means)[1]

    @property
    def min(self) -> float:
        return min(r.min for r in self.runs)

    @property
    def max(self) -> float:
        return max(r.max for r in self.runs)


def state_occupancy(log: ServiceLog, total_time: int) -> dict[PortState, float]:
    """Fraction of ``[0, total_time]`` spent in each power state."""
    if total_time <= 0:
        raise StatsError("total time must be positive")
    occ = log.occupancy_until(total_time)
    return {state: occ[state] / total_time for state in PortState}
