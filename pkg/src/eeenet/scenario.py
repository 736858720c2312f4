"""Scenario files: ``key = value`` lines under ``[section]`` headers.

A key ``k`` under ``[s]`` is addressed as ``s.k``; dotted keys may also be
written in full at any point.  ``#`` starts a comment.  See
``docs/scenario-keys.md`` for the full key list.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .core import ns
from .port import EeeConfig, Mode
from .traffic import (
    Bimodal,
    Constant,
    Deterministic,
    Pareto,
    Poisson,
    Trace,
    TrafficSpec,
    read_trace,
)


class ScenarioError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key:
            where.append(f"key {key!r}")
        if line:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


KEYS = {
    "topology.kind",
    "topology.n_sources",
    "topology.first_stage",
    "topology.chain",
    "topology.chain_points",
    "link.rate_bps",
    "link.hop_rates_bps",
    "eee.t_sleep_ns",
    "eee.t_wake_ns",
    "traffic.process",
    "traffic.alpha",
    "traffic.loads",
    "traffic.rates_fps",
    "traffic.trace",
    "frames.dist",
    "frames.size_a_bytes",
    "frames.p_a",
    "frames.size_b_bytes",
    "frames.size_bytes",
    "run.replications",
    "run.frames",
    "run.seed",
    "run.warmup",
    "run.backend",
    "validate.tolerance",
    "output.csv",
    "output.plot_data",
}


@dataclass
class Scenario:
    name: str = "scenario"
    kind: str = "aggregation"
    n_sources: int = 1
    first_stage: Mode = Mode.REGULAR
    chain: list[Mode] = field(default_factory=lambda: [Mode.REGULAR, Mode.EEE])
    chain_points: list[int] | None = None
    rate_bps: int = 10_000_000_000
    hop_rates_bps: list[int] | None = None
    t_sleep: int = ns(2880)
    t_wake: int = ns(4480)
    process: str = "poisson"
    alpha: float = 2.5
    loads: list[float] | None = None
    rates_fps: list[float] | None = None
    trace_path: str | None = None
    sizes: Constant | Bimodal = field(default_factory=lambda: Bimodal(800, 0.54, 12000))
    replications: int = 10
    frames: int = 1_000_000
    seed: int = 1
    warmup: float = 0.05
    backend: str = "kernel"
    tolerance: float = 0.05
    csv: str | None = None
    plot_data: bool = False
    base_dir: str = "."
    _trace: Trace | None = field(default=None, repr=False, compare=False)

    def eee_config(self, mode: Mode = Mode.EEE) -> EeeConfig:
        if mode is Mode.REGULAR:
            return EeeConfig.regular(self.rate_bps)
        return EeeConfig(self.rate_bps, self.t_sleep, self.t_wake, Mode.EEE)

    @property
    def is_chain_run(self) -> bool:
        return self.kind == "tandem" and bool(self.chain_points)

    def trace(self) -> Trace:
        if self._trace is None:
            path = Path(self.trace_path)
            if not path.is_absolute():
                path = Path(self.base_dir) / path
            with open(path, encoding="utf-8") as fh:
                self._trace = Trace(tuple(read_trace(fh)))
        return self._trace

    def sweep(self) -> list[tuple[float, float]]:
        """``(load, total_rate_fps)`` per sweep point."""
        mean = self.sizes.mean_bits
        if self.process == "trace":
            recs = self.trace().records
            if len(recs) < 2 or recs[-1].timestamp == recs[0].timestamp:
                raise ScenarioError("trace needs at least two distinct timestamps", "traffic.trace")
            n = min(len(recs), self.frames)
            span = (recs[n - 1].timestamp - recs[0].timestamp) / 1e12
            lam = (n - 1) / span
            bits = sum(r.size for r in recs[:n]) / n
            return [(lam * bits / self.rate_bps, lam)]
        if self.loads is not None:
            return [(r, r * self.rate_bps / mean) for r in self.loads]
        return [(lam * mean / self.rate_bps, lam) for lam in self.rates_fps]

    def traffic_for(self, total_rate: float) -> TrafficSpec:
        """Per-source traffic for a sweep point."""
        per = total_rate / (self.n_sources if self.kind == "aggregation" else 1)
        if self.process == "poisson":
            return TrafficSpec(Poisson(per), self.sizes)
        if self.process == "pareto":
            return TrafficSpec(Pareto(self.alpha, per), self.sizes)
        if self.process == "deterministic":
            return TrafficSpec(Deterministic(per), self.sizes)
        return TrafficSpec(self.trace())

    def with_overrides(self, **kw) -> "Scenario":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _floats(key, value, line):
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise ScenarioError(f"expected a comma-separated list of numbers, got {value!r}", key, line) from None


def _int(key, value, line):
    try:
        return int(value.replace("_", ""))
    except ValueError:
        try:
            f = float(value)
        except ValueError:
            f = None
        if f is not None and f.is_integer():
            return int(f)
        raise ScenarioError(f"expected an integer, got {value!r}", key, line) from None


def _float(key, value, line):
    try:
        return float(value)
    except ValueError:
        raise ScenarioError(f"expected a number, got {value!r}", key, line) from None


def _mode(key, value, line):
    try:
        return Mode(value.strip().lower())
    except ValueError:
        raise ScenarioError(f"expected 'eee' or 'regular', got {value!r}", key, line) from None


def _chain(key, value, line):
    modes = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, times = item.partition("*")
        count = _int(key, times, line) if times else 1
        if count < 1:
            raise ScenarioError(f"repeat count must be positive in {item!r}", key, line)
        modes.extend([_mode(key, name, line)] * count)
    return modes


def _bool(key, value, line):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ScenarioError(f"expected a boolean, got {value!r}", key, line)


def read_pairs(text: str) -> list[tuple[str, str, int]]:
    section = ""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ScenarioError(f"malformed section header {raw.strip()!r}", line=lineno)
            section = line[1:-1].strip().lower()
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ScenarioError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key = key.strip().lower()
        if "." not in key and section:
            key = f"{section}.{key}"
        if key not in KEYS:
            raise ScenarioError("unknown key", key, lineno)
        out.append((key, value.strip(), lineno))
    return out


def parse_scenario(text: str, name: str = "scenario", base_dir: str = ".") -> Scenario:
    pairs = read_pairs(text)
    seen: dict[str, int] = {}
    raw: dict[str, tuple[str, int]] = {}
    for key, value, line in pairs:
        if key in seen:
            raise ScenarioError(f"duplicate key (first set on line {seen[key]})", key, line)
        seen[key] = line
        raw[key] = (value, line)

    sc = Scenario(name=name, base_dir=base_dir)

    def get(key, conv):
        if key not in raw:
            return None
        value, line = raw[key]
        return conv(key, value, line)

    def line_of(key):
        return raw[key][1] if key in raw else None

    kind = get("topology.kind", lambda k, v, l: v.lower())
    if kind is not None:
        if kind not in ("aggregation", "tandem"):
            raise ScenarioError(f"expected 'aggregation' or 'tandem', got {kind!r}", "topology.kind", line_of("topology.kind"))
        sc.kind = kind
    for key, attr, conv in (
        ("topology.n_sources", "n_sources", _int),
        ("topology.first_stage", "first_stage", _mode),
        ("topology.chain", "chain", _chain),
        ("link.rate_bps", "rate_bps", _int),
        ("traffic.alpha", "alpha", _float),
        ("traffic.loads", "loads", _floats),
        ("traffic.rates_fps", "rates_fps", _floats),
        ("run.replications", "replications", _int),
        ("run.frames", "frames", _int),
        ("run.seed", "seed", _int),
        ("run.warmup", "warmup", _float),
        ("validate.tolerance", "tolerance", _float),
        ("output.plot_data", "plot_data", _bool),
    ):
        v = get(key, conv)
        if v is not None:
            setattr(sc, attr, v)
    rates = get("link.hop_rates_bps", _floats)
    if rates is not None:
        sc.hop_rates_bps = [int(r) for r in rates]
        if "link.rate_bps" not in raw and rates:
            sc.rate_bps = sc.hop_rates_bps[0]
    pts = get("topology.chain_points", _floats)
    if pts is not None:
        sc.chain_points = [int(p) for p in pts]
    t = get("eee.t_sleep_ns", _float)
    if t is not None:
        sc.t_sleep = ns(t)
    t = get("eee.t_wake_ns", _float)
    if t is not None:
        sc.t_wake = ns(t)
    proc = get("traffic.process", lambda k, v, l: v.lower())
    if proc is not None:
        sc.process = proc
    trace = get("traffic.trace", lambda k, v, l: v)
    if trace is not None:
        sc.trace_path = trace
    backend = get("run.backend", lambda k, v, l: v.lower())
    if backend is not None:
        sc.backend = backend
    csv = get("output.csv", lambda k, v, l: v)
    if csv is not None:
        sc.csv = csv

    dist = get("frames.dist", lambda k, v, l: v.lower()) or "bimodal"
    try:
        if dist == "bimodal":
            a = get("frames.size_a_bytes", _int)
            p = get("frames.p_a", _float)
            b = get("frames.size_b_bytes", _int)
            sc.sizes = Bimodal(8 * (100 if a is None else a), 0.54 if p is None else p, 8 * (1500 if b is None else b))
        elif dist == "constant":
            s = get("frames.size_bytes", _int)
            sc.sizes = Constant(8 * (1500 if s is None else s))
        else:
            raise ScenarioError(f"expected 'bimodal' or 'constant', got {dist!r}", "frames.dist", line_of("frames.dist"))
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc), "frames.dist", line_of("frames.dist")) from None

    check_scenario(sc, line_of)
    return sc


def check_scenario(sc: Scenario, line_of=lambda key: None):
    def fail(msg, key):
        raise ScenarioError(msg, key, line_of(key))

    if sc.process not in ("poisson", "pareto", "deterministic", "trace"):
        fail(f"unknown process {sc.process!r}", "traffic.process")
    if sc.process == "pareto" and not sc.alpha > 2:
        fail(f"Pareto shape must exceed 2, got {sc.alpha}", "traffic.alpha")
    if sc.process == "trace":
        if not sc.trace_path:
            fail("trace replay needs traffic.trace", "traffic.trace")
        if sc.kind == "aggregation" and sc.n_sources != 1:
            fail("trace replay supports a single source", "topology.n_sources")
    else:
        if (sc.loads is None) == (sc.rates_fps is None):
            fail("give exactly one of traffic.loads or traffic.rates_fps", "traffic.loads")
        if sc.loads is not None:
            if not sc.loads:
                fail("empty load sweep", "traffic.loads")
            for r in sc.loads:
                if not 0 < r < 1:
                    fail(f"load {r} outside (0, 1)", "traffic.loads")
        else:
            for lam in sc.rates_fps:
                if not lam > 0:
                    fail(f"rate {lam} must be positive", "traffic.rates_fps")
                if not lam * sc.sizes.mean_bits / sc.rate_bps < 1:
                    fail(f"rate {lam} frames/s overloads the link", "traffic.rates_fps")
    if sc.rate_bps <= 0:
        fail("link rate must be positive", "link.rate_bps")
    if sc.t_sleep < 0:
        fail("must be non-negative", "eee.t_sleep_ns")
    if sc.t_wake < 0:
        fail("must be non-negative", "eee.t_wake_ns")
    if sc.kind == "aggregation" and sc.n_sources < 1:
        fail("need at least one source", "topology.n_sources")
    if sc.kind == "tandem":
        if not sc.chain:
            fail("chain must have at least one hop", "topology.chain")
        if sc.hop_rates_bps is not None:
            if len(sc.hop_rates_bps) != len(sc.chain):
                fail(f"{len(sc.hop_rates_bps)} rates for {len(sc.chain)} hops", "link.hop_rates_bps")
            if set(sc.hop_rates_bps) != {sc.rate_bps}:
                fail("all tandem hops must share one link rate", "link.hop_rates_bps")
        if sc.chain_points:
            for n in sc.chain_points:
                if not 1 <= n < len(sc.chain):
                    fail(f"chain point {n} needs 1 <= n < {len(sc.chain)} hops", "topology.chain_points")
    if sc.replications < 1:
        fail("need at least one replication", "run.replications")
    if sc.frames < 1:
        fail("need at least one frame", "run.frames")
    if not 0 <= sc.warmup < 1:
        fail("warmup fraction must lie in [0, 1)", "run.warmup")
    if sc.backend not in ("kernel", "events"):
        fail(f"unknown backend {sc.backend!r}", "run.backend")
    if not sc.tolerance > 0:
        fail("tolerance must be positive", "validate.tolerance")
    for size in {sc.sizes.min_bits, sc.sizes.max_bits}:
        if (size * 10**12) % sc.rate_bps:
            fail(f"{size} bits at {sc.rate_bps} bit/s is not a whole number of picoseconds", "link.rate_bps")


def preset_names() -> list[str]:
    root = resources.files("eeenet") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".scn"))


def preset_text(name: str) -> str:
    path = resources.files("eeenet") / "presets" / f"{name}.scn"
    if not path.is_file():
        raise ScenarioError(f"no preset named {name!r}; available: {', '.join(preset_names())}")
    return path.read_text(encoding="utf-8")


def load_scenario(ref: str) -> Scenario:
    """Parse a scenario file, or a built-in preset when ``ref`` is not a file."""
    if os.path.isfile(ref):
        path = Path(ref)
        return parse_scenario(path.read_text(encoding="utf-8"), path.stem, str(path.parent))
    return parse_scenario(preset_text(ref), ref)
