"""The two canonical networks: N-source aggregation and equal-rate tandems.

Frames move between hops with zero propagation and switching delay: a
departure at ``t`` from hop ``k`` is an arrival at ``t`` at hop ``k + 1``.

``simulate`` runs a network either through the event engine
(``backend="events"``) or through the per-port FIFO recursion
(``backend="kernel"``).  Both consume identical arrival streams and
produce identical per-frame logs; the kernel is the one to use for long
runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Engine, EventKind, RngStream
from .port import ConfigError, EeeConfig, EeePort, Mode, ServiceLog, serve_fifo, transmission_times
from .traffic import Trace, TrafficSpec, generate_arrivals, generate_superposition

SOURCE_SHIFT = 32


def frame_id(source: int, k) -> int:
    return (source << SOURCE_SHIFT) | k


class Frame:
    __slots__ = ("fid", "size", "created", "arrivals", "starts", "departures")

    def __init__(self, fid: int, size: int, created: int):
        self.fid = fid
        self.size = size
        self.created = created
        self.arrivals: list[int] = []
        self.starts: list[int] = []
        self.departures: list[int] = []

    def waiting(self, hop: int) -> int:
        return self.starts[hop] - self.arrivals[hop]


class Source:
    """Replays one source's pre-drawn arrival stream into a port."""

    def __init__(self, index: int, times: np.ndarray, sizes: np.ndarray, port: EeePort):
        self.index = index
        self.times = times
        self.sizes = sizes
        self.port = port
        self.k = 0

    def start(self, engine: Engine):
        self._emit(engine)

    def _emit(self, engine: Engine):
        k = self.k
        if k < len(self.times):
            t = int(self.times[k])
            frame = Frame(frame_id(self.index, k), int(self.sizes[k]), t)
            engine.schedule_at(t, EventKind.FRAME_ARRIVAL, self, frame)
            self.k = k + 1

    def on_event(self, engine: Engine, event):
        self.port.on_frame_arrival(engine, event.payload)
        self._emit(engine)


class Sink:
    def __init__(self):
        self.frames: list[Frame] = []

    def accept(self, engine: Engine, frame: Frame):
        engine.departures += 1
        self.frames.append(frame)


@dataclass
class Network:
    kind: str  # "aggregation" or "tandem"
    rate: int
    traffic: list[TrafficSpec]
    first_stage: list[EeeConfig] = field(default_factory=list)
    aggregator: EeeConfig | None = None
    chain: list[EeeConfig] = field(default_factory=list)

    @property
    def n_sources(self) -> int:
        return len(self.traffic)


def _offered_load(specs: list[TrafficSpec], rate: int) -> float:
    total = 0.0
    for s in specs:
        if isinstance(s.process, Trace):
            continue
        total += s.process.rate * s.sizes.mean_bits / rate
    return total


def build_aggregation(
    n_sources: int, first_stage_mode: Mode, agg_config: EeeConfig, traffic
) -> Network:
    """``n_sources`` first-stage ports, each fed by its own source, into one aggregator.

    ``traffic`` is either one per-source :class:`TrafficSpec` used for every
    source or a list with one spec per source.  First-stage EEE ports use
    the aggregator's timers.
    """
    if n_sources < 1:
        raise ConfigError("aggregation needs at least one source")
    specs = list(traffic) if isinstance(traffic, (list, tuple)) else [traffic] * n_sources
    if len(specs) != n_sources:
        raise ConfigError(f"{len(specs)} traffic specs for {n_sources} sources")
    if n_sources > 1 and any(isinstance(s.process, Trace) for s in specs):
        raise ConfigError("trace replay supports a single source only")
    rho = _offered_load(specs, agg_config.rate)
    if rho >= 1:
        raise ConfigError(f"aggregate load {rho:.4f} must be below 1")
    if first_stage_mode is Mode.EEE:
        first = EeeConfig(agg_config.rate, agg_config.t_sleep, agg_config.t_wake, Mode.EEE)
    else:
        first = EeeConfig.regular(agg_config.rate)
    return Network("aggregation", agg_config.rate, specs, first_stage=[first] * n_sources, aggregator=agg_config)


def build_tandem(configs: list[EeeConfig], traffic: TrafficSpec) -> Network:
    if not configs:
        raise ConfigError("a tandem needs at least one hop")
    rates = {c.rate for c in configs}
    if len(rates) != 1:
        raise ConfigError(f"tandem hops must share one link rate, got {sorted(rates)}")
    rate = configs[0].rate
    rho = _offered_load([traffic], rate)
    if rho >= 1:
        raise ConfigError(f"offered load {rho:.4f} must be below 1")
    return Network("tandem", rate, [traffic], chain=list(configs))


@dataclass
class SimResult:
    """Per-port logs of one replication.

    For a tandem ``hops`` lists every hop; for an aggregation ``hops`` is
    ``[aggregator]`` and ``first_stage`` holds the first-stage ports.
    """

    hops: list[ServiceLog]
    first_stage: list[ServiceLog]
    end_time: int
    frames: int
    events: int | None = None

    @property
    def measured(self) -> ServiceLog:
        """The interface the experiments report on."""
        if self.first_stage:
            return self.hops[0]
        return self.hops[1] if len(self.hops) > 1 else self.hops[0]


def draw_sources(network: Network, seed: int, frames: int):
    if network.n_sources == 1:
        return [generate_arrivals(network.traffic[0], RngStream(seed, 0), frames)]
    return generate_superposition(network.traffic, seed, frames)


def simulate(network: Network, seed: int, frames: int, backend: str = "kernel") -> SimResult:
    streams = draw_sources(network, seed, frames)
    if backend == "kernel":
        return _simulate_kernel(network, streams)
    if backend == "events":
        return _simulate_events(network, streams)
    raise ValueError(f"unknown backend {backend!r}")


def _kernel_log(arrival, start, service, fids, tail: ServiceLog) -> ServiceLog:
    tail.frame_ids = fids
    tail.arrival = arrival
    tail.start = start
    tail.departure = start + service
    return tail


def _simulate_kernel(network: Network, streams) -> SimResult:
    rate = network.rate
    if network.kind == "aggregation":
        first_logs = []
        deps, svcs, ids = [], [], []
        for j, ((times, sizes), cfg) in enumerate(zip(streams, network.first_stage)):
            svc = transmission_times(sizes, rate)
            start, tail = serve_fifo(times, svc, cfg)
            fids = frame_id(j, np.arange(len(times), dtype=np.int64))
            log = _kernel_log(times, start, svc, fids, tail)
            first_logs.append(log)
            deps.append(log.departure)
            svcs.append(svc)
            ids.append(fids)
        dep = np.concatenate(deps)
        order = np.argsort(dep, kind="stable")
        arrival = dep[order]
        svc = np.concatenate(svcs)[order]
        fids = np.concatenate(ids)[order]
        start, tail = serve_fifo(arrival, svc, network.aggregator)
        agg = _kernel_log(arrival, start, svc, fids, tail)
        logs = [agg]
        end = max(l.since for l in first_logs + logs)
        return SimResult(logs, first_logs, end, len(arrival))

    (times, sizes), = streams
    svc = transmission_times(sizes, rate)
    fids = frame_id(0, np.arange(len(times), dtype=np.int64))
    arrival = times
    logs = []
    for cfg in network.chain:
        start, tail = serve_fifo(arrival, svc, cfg)
        log = _kernel_log(arrival, start, svc, fids, tail)
        logs.append(log)
        arrival = log.departure
    end = max(l.since for l in logs)
    return SimResult(logs, [], end, len(times))


def _finish_log(port: EeePort) -> ServiceLog:
    log = port.log
    log.frame_ids = np.asarray(log.frame_ids, dtype=np.int64)
    log.arrival = np.asarray(log.arrival, dtype=np.int64)
    log.start = np.asarray(log.start, dtype=np.int64)
    log.departure = np.asarray(log.departure, dtype=np.int64)
    return log


def build_engine(network: Network, streams) -> tuple[Engine, list[EeePort], list[EeePort], Sink]:
    engine = Engine()
    sink = Sink()
    if network.kind == "aggregation":
        agg = EeePort(network.aggregator, "aggregator", downstream=sink)
        first = [EeePort(cfg, f"first{j}", downstream=agg) for j, cfg in enumerate(network.first_stage)]
        hops = [agg]
        entry = first
    else:
        hops = []
        downstream = sink
        for k in range(len(network.chain) - 1, -1, -1):
            downstream = EeePort(network.chain[k], f"hop{k}", downstream=downstream)
            hops.append(downstream)
        hops.reverse()
        first = []
        entry = [hops[0]]
    for port in first + hops:
        engine.nodes[port.name] = port
    engine.nodes["sink"] = sink
    for j, ((times, sizes), port) in enumerate(zip(streams, entry)):
        Source(j, times, sizes, port).start(engine)
    return engine, first, hops, sink


def _simulate_events(network: Network, streams) -> SimResult:
    engine, first, hops, sink = build_engine(network, streams)
    report = engine.run()
    first_logs = [_finish_log(p) for p in first]
    logs = [_finish_log(p) for p in hops]
    return SimResult(logs, first_logs, report.clock, len(sink.frames), report.events_processed)


@dataclass
class HopSummary:
    count: int
    mean: float  # seconds
    min: int  # ps
    max: int  # ps


def simulate_chain_summary(network: Network, seed: int, frames: int, warmup: float = 0.0) -> list[HopSummary]:
    """Per-hop waiting summaries of a tandem without keeping per-frame logs."""
    from .stats import summarize

    if network.kind != "tandem":
        raise ValueError("chain summaries need a tandem network")
    (times, sizes), = draw_sources(network, seed, frames)
    svc = transmission_times(sizes, network.rate)
    arrival = times
    out = []
    for cfg in network.chain:
        start, _ = serve_fifo(arrival, svc, cfg)
        st = summarize(start - arrival, warmup)
        out.append(HopSummary(st.count, st.mean, st.min_ps, st.max_ps))
        arrival = start + svc
    return out
