"""Arrival processes, frame-size distributions and trace replay."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .core import PS_PER_NS, PS_PER_S, RngStream


class TrafficError(ValueError):
    pass


class TraceFormatError(TrafficError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Poisson:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise TrafficError(f"Poisson rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class Pareto:
    alpha: float
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise TrafficError(f"Pareto rate must be positive, got {self.rate}")
        if not self.alpha > 2:
            raise TrafficError(f"Pareto shape must exceed 2 for finite variance, got {self.alpha}")

    @property
    def scale(self) -> float:
        return pareto_scale_for_rate(self.alpha, self.rate)


@dataclass(frozen=True)
class Deterministic:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise TrafficError(f"deterministic rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class TraceRecord:
    timestamp: int  # ps
    size: int  # bits


@dataclass(frozen=True)
class Trace:
    records: tuple[TraceRecord, ...]


ArrivalProcess = Union[Poisson, Pareto, Deterministic, Trace]


@dataclass(frozen=True)
class Constant:
    bits: int

    def __post_init__(self):
        _check_size(self.bits)

    @property
    def mean_bits(self) -> float:
        return float(self.bits)

    @property
    def max_bits(self) -> int:
        return self.bits

    @property
    def min_bits(self) -> int:
        return self.bits

    def second_moment_bits(self) -> float:
        return float(self.bits) ** 2


@dataclass(frozen=True)
class Bimodal:
    size_a: int
    p_a: float
    size_b: int

    def __post_init__(self):
        _check_size(self.size_a)
        _check_size(self.size_b)
        if not 0 < self.p_a < 1:
            raise TrafficError(f"bimodal probability must lie in (0, 1), got {self.p_a}")

    @property
    def mean_bits(self) -> float:
        return self.p_a * self.size_a + (1 - self.p_a) * self.size_b

    @property
    def max_bits(self) -> int:
        return max(self.size_a, self.size_b)

    @property
    def min_bits(self) -> int:
        return min(self.size_a, self.size_b)

    def second_moment_bits(self) -> float:
        return self.p_a * self.size_a**2 + (1 - self.p_a) * self.size_b**2


FrameSizeDist = Union[Constant, Bimodal]


def _check_size(bits):
    if not isinstance(bits, (int, np.integer)) or bits <= 0 or bits % 8:
        raise TrafficError(f"frame size must be a positive multiple of 8 bits, got {bits}")


# 100 B with probability 0.54, 1500 B otherwise
DEFAULT_FRAME_MIX = Bimodal(800, 0.54, 12000)


def pareto_scale_for_rate(alpha: float, rate: float) -> float:
    """Scale x_m (seconds) giving a Pareto(alpha) interarrival mean of 1/rate."""
    if not alpha > 1:
        raise TrafficError(f"Pareto mean diverges for alpha <= 1, got {alpha}")
    if not rate > 0:
        raise TrafficError(f"rate must be positive, got {rate}")
    return (alpha - 1) / (alpha * rate)


def _seconds_to_ps(x: np.ndarray) -> np.ndarray:
    out = np.rint(x * PS_PER_S).astype(np.int64)
    np.maximum(out, 1, out=out)
    return out


def draw_interarrivals(process: ArrivalProcess, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` interarrival gaps in picoseconds (int64, all >= 1)."""
    if isinstance(process, Poisson):
        return _seconds_to_ps(rng.exponential(1.0 / process.rate, n))
    if isinstance(process, Pareto):
        # numpy's pareto() is the Lomax form; shift by one for classical Pareto
        return _seconds_to_ps((rng.pareto(process.alpha, n) + 1.0) * process.scale)
    if isinstance(process, Deterministic):
        gap = max(1, int(round(PS_PER_S / process.rate)))
        return np.full(n, gap, dtype=np.int64)
    raise TrafficError(f"{type(process).__name__} is not a generated process")


def next_interarrival(process: ArrivalProcess, rng: np.random.Generator) -> int:
    return int(draw_interarrivals(process, rng, 1)[0])


def draw_frame_sizes(dist: FrameSizeDist, rng: np.random.Generator, n: int) -> np.ndarray:
    if isinstance(dist, Constant):
        return np.full(n, dist.bits, dtype=np.int64)
    if isinstance(dist, Bimodal):
        return np.where(rng.random(n) < dist.p_a, dist.size_a, dist.size_b).astype(np.int64)
    raise TrafficError(f"unknown frame size distribution {dist!r}")


def sample_frame_size(dist: FrameSizeDist, rng: np.random.Generator) -> int:
    return int(draw_frame_sizes(dist, rng, 1)[0])


def mean_rate_for_load(load: float, dist: FrameSizeDist, rate_bps: float) -> float:
    """Frames per second giving utilisation ``load`` on a ``rate_bps`` link."""
    return load * rate_bps / dist.mean_bits


def read_trace(stream: Union[str, bytes, io.IOBase, Iterable[str]]) -> list[TraceRecord]:
    """Parse ``<timestamp_ns>,<size_bytes>`` lines.

    Blank lines and lines starting with ``#`` are skipped.  Timestamps must
    be non-decreasing integers.
    """
    if isinstance(stream, bytes):
        stream = stream.decode("utf-8")
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    records = []
    last = None
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise TraceFormatError(lineno, f"expected 2 comma-separated fields, got {len(fields)}")
        try:
            ts_ns = int(fields[0])
            size_bytes = int(fields[1])
        except ValueError:
            raise TraceFormatError(lineno, f"non-numeric field in {line!r}") from None
        if ts_ns < 0:
            raise TraceFormatError(lineno, "negative timestamp")
        if size_bytes <= 0:
            raise TraceFormatError(lineno, "frame size must be positive")
        if last is not None and ts_ns < last:
            raise TraceFormatError(lineno, f"timestamp {ts_ns} precedes previous {last}")
        last = ts_ns
        records.append(TraceRecord(ts_ns * PS_PER_NS, size_bytes * 8))
    return records


@dataclass
class TrafficSpec:
    """What one source emits: an arrival process plus a size distribution.

    For trace replay the sizes come from the trace and ``sizes`` is ignored.
    """

    process: ArrivalProcess
    sizes: FrameSizeDist | None = None

    def __post_init__(self):
        if not isinstance(self.process, Trace) and self.sizes is None:
            raise TrafficError("generated traffic needs a frame size distribution")

    def scaled(self, factor: float) -> "TrafficSpec":
        """Same traffic with its rate multiplied by ``factor``."""
        p = self.process
        if isinstance(p, Poisson):
            p = Poisson(p.rate * factor)
        elif isinstance(p, Pareto):
            p = Pareto(p.alpha, p.rate * factor)
        elif isinstance(p, Deterministic):
            p = Deterministic(p.rate * factor)
        else:
            raise TrafficError("trace traffic cannot be rescaled")
        return TrafficSpec(p, self.sizes)


def generate_arrivals(spec: TrafficSpec, stream: RngStream, count: int) -> tuple[np.ndarray, np.ndarray]:
    """First ``count`` arrival instants (ps, from t=0) and sizes (bits) of one source."""
    if isinstance(spec.process, Trace):
        recs = spec.process.records[:count]
        times = np.fromiter((r.timestamp for r in recs), dtype=np.int64, count=len(recs))
        sizes = np.fromiter((r.size for r in recs), dtype=np.int64, count=len(recs))
        return times, sizes
    gaps = draw_interarrivals(spec.process, stream.generator(0), count)
    sizes = draw_frame_sizes(spec.sizes, stream.generator(1), count)
    return np.cumsum(gaps), sizes


def generate_superposition(specs: list[TrafficSpec], seed: int, total: int):
    """Draw independent sources and keep the ``total`` earliest frames overall.

    Every source is drawn past the cut instant so the tail of the merged
    stream is not depleted.  Returns per-source ``(times, sizes)`` arrays
    whose lengths sum to ``total``.
    """
    n = len(specs)
    if any(isinstance(s.process, Trace) for s in specs):
        raise TrafficError("trace replay supports a single source only")
    per = total / n
    want = [int(math.ceil(per * 1.05 + 8 * math.sqrt(per) + 64))] * n
    while True:
        drawn = [generate_arrivals(s, RngStream(seed, j), want[j]) for j, s in enumerate(specs)]
        horizon = min(t[-1] for t, _ in drawn)
        merged = np.sort(np.concatenate([t for t, _ in drawn]), kind="stable")
        if len(merged) >= total and merged[total - 1] < horizon:
            break
        # regenerating with a larger count reproduces the same prefix
        want = [w * 2 for w in want]
    cut = merged[total - 1]
    out = []
    kept = 0
    for times, sizes in drawn:
        k = int(np.searchsorted(times, cut, side="right"))
        out.append((times[:k], sizes[:k]))
        kept += k
    if kept != total:
        # equal timestamps straddling the cut: trim the last sources that contributed
        excess = kept - total
        for j in range(n - 1, -1, -1):
            if excess == 0:
                break
            times, sizes = out[j]
            drop = int(min(excess, np.count_nonzero(times == cut)))
            if drop:
                out[j] = (times[: len(times) - drop], sizes[: len(sizes) - drop])
                excess -= drop
    return out
