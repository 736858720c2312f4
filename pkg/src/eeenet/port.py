"""EEE interface: FIFO queue plus the four-state power machine.

Two implementations share the same semantics:

* :class:`EeePort` is an event-driven node for :class:`eeenet.core.Engine`.
* :func:`serve_fifo` computes the same per-frame service starts directly
  from an arrival sequence.  The port is a single FIFO server whose only
  memory is the last departure instant, so one pass over the arrivals is
  enough.  It is compiled with numba and used for the long runs.

Both start EEE ports in LPI and Regular ports in idle ACTIVE at t=0.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import PS_PER_S, Engine, EventKind, SimulationError, ns


class ConfigError(ValueError):
    pass


class Mode(enum.Enum):
    EEE = "eee"
    REGULAR = "regular"


class PortState(enum.Enum):
    ACTIVE = "active"
    TRANSITION_TO_SLEEP = "to_sleep"
    LPI = "lpi"
    TRANSITION_TO_ACTIVE = "to_active"


T_SLEEP_10GBASE_T = ns(2880)
T_WAKE_10GBASE_T = ns(4480)


@dataclass(frozen=True)
class EeeConfig:
    rate: int = 10_000_000_000  # bits/s
    t_sleep: int = T_SLEEP_10GBASE_T  # ps
    t_wake: int = T_WAKE_10GBASE_T  # ps
    mode: Mode = Mode.EEE

    def __post_init__(self):
        if self.rate <= 0:
            raise ConfigError(f"link rate must be positive, got {self.rate}")
        if self.t_sleep < 0 or self.t_wake < 0:
            raise ConfigError("transition times must be non-negative")

    @classmethod
    def regular(cls, rate: int = 10_000_000_000) -> "EeeConfig":
        return cls(rate=rate, t_sleep=0, t_wake=0, mode=Mode.REGULAR)

    @property
    def effective_timers(self) -> tuple[int, int]:
        if self.mode is Mode.REGULAR:
            return 0, 0
        return self.t_sleep, self.t_wake


def transmission_time(size: int, rate: int) -> int:
    """Exact transmission time in ps of ``size`` bits at ``rate`` bits/s."""
    if size <= 0 or rate <= 0:
        raise ConfigError("size and rate must be positive")
    q, r = divmod(size * PS_PER_S, rate)
    if r:
        raise ConfigError(f"{size} bits at {rate} bit/s is not a whole number of picoseconds")
    return q


def transmission_times(sizes: np.ndarray, rate: int) -> np.ndarray:
    sizes = np.asarray(sizes, dtype=np.int64)
    uniq, inv = np.unique(sizes, return_inverse=True)
    table = np.array([transmission_time(int(s), rate) for s in uniq], dtype=np.int64)
    return table[inv.reshape(sizes.shape)]


@dataclass
class ServiceLog:
    """Per-frame timestamps at one port plus its state-occupancy account.

    ``occupancy`` holds closed intervals; the port has been in ``state``
    since ``since`` (an open interval).
    """

    frame_ids: list = field(default_factory=list)
    arrival: list = field(default_factory=list)
    start: list = field(default_factory=list)
    departure: list = field(default_factory=list)
    occupancy: dict = field(default_factory=lambda: {s: 0 for s in PortState})
    state: PortState = PortState.ACTIVE
    since: int = 0

    def waiting(self) -> np.ndarray:
        return np.asarray(self.start, dtype=np.int64) - np.asarray(self.arrival, dtype=np.int64)

    def occupancy_until(self, t: int) -> dict:
        if t < self.since:
            raise ValueError(f"log was last updated at {self.since} ps, cannot close at {t} ps")
        occ = dict(self.occupancy)
        occ[self.state] += t - self.since
        return occ

    def __len__(self):
        return len(self.arrival)


class EeePort:
    def __init__(self, config: EeeConfig, name: str = "port", downstream=None, record: bool = True):
        self.config = config
        self.name = name
        self.downstream = downstream
        self.record = record
        self.t_sleep, self.t_wake = config.effective_timers
        self.eee = config.mode is Mode.EEE
        self.queue: deque = deque()
        self.busy = False
        self.transition_started = 0
        self.transition_ends = 0
        self.log = ServiceLog(state=PortState.LPI if self.eee else PortState.ACTIVE)
        self._service_cache: dict[int, int] = {}

    @property
    def state(self) -> PortState:
        return self.log.state

    def _set_state(self, state: PortState, now: int):
        log = self.log
        log.occupancy[log.state] += now - log.since
        log.state = state
        log.since = now

    def _service_time(self, size: int) -> int:
        t = self._service_cache.get(size)
        if t is None:
            t = self._service_cache[size] = transmission_time(size, self.config.rate)
        return t

    def on_event(self, engine: Engine, event):
        if event.kind is EventKind.FRAME_ARRIVAL:
            self.on_frame_arrival(engine, event.payload)
        elif event.kind is EventKind.SERVICE_COMPLETE:
            self.on_service_complete(engine, event.payload)
        else:
            self.on_transition_complete(engine)

    def on_frame_arrival(self, engine: Engine, frame):
        now = engine.now
        frame.arrivals.append(now)
        self.queue.append(frame)
        state = self.log.state
        if state is PortState.ACTIVE:
            if not self.busy:
                self._serve_next(engine)
        elif state is PortState.LPI:
            self._begin(PortState.TRANSITION_TO_ACTIVE, self.t_wake, engine)
        # in either transition the frame waits; the completion handler picks it up

    def on_service_complete(self, engine: Engine, frame):
        now = engine.now
        self.busy = False
        frame.departures.append(now)
        if self.record:
            log = self.log
            log.frame_ids.append(frame.fid)
            log.arrival.append(frame.arrivals[-1])
            log.start.append(frame.starts[-1])
            log.departure.append(now)
        if self.downstream is None:
            engine.departures += 1
        else:
            self.downstream.accept(engine, frame)
        if self.queue:
            self._serve_next(engine)
        elif self.eee:
            self._begin(PortState.TRANSITION_TO_SLEEP, self.t_sleep, engine)

    def on_transition_complete(self, engine: Engine):
        now = engine.now
        state = self.log.state
        if now != self.transition_ends:
            raise SimulationError(f"{self.name}: transition completion at {now} ps, expected {self.transition_ends} ps")
        if state is PortState.TRANSITION_TO_SLEEP:
            if self.queue:
                self._begin(PortState.TRANSITION_TO_ACTIVE, self.t_wake, engine)
            else:
                self._set_state(PortState.LPI, now)
        elif state is PortState.TRANSITION_TO_ACTIVE:
            self._set_state(PortState.ACTIVE, now)
            self._serve_next(engine)
        else:
            raise SimulationError(f"{self.name}: transition completed while {state.name}")

    def accept(self, engine: Engine, frame):
        """Receive a frame from an upstream port at the current instant."""
        engine.schedule_at(engine.now, EventKind.FRAME_ARRIVAL, self, frame)

    def _begin(self, state: PortState, duration: int, engine: Engine):
        now = engine.now
        self._set_state(state, now)
        self.transition_started = now
        self.transition_ends = now + duration
        engine.schedule_at(self.transition_ends, EventKind.TRANSITION_COMPLETE, self)

    def _serve_next(self, engine: Engine):
        frame = self.queue.popleft()
        now = engine.now
        frame.starts.append(now)
        self.busy = True
        engine.schedule_at(now + self._service_time(frame.size), EventKind.SERVICE_COMPLETE, self, frame)


@numba.njit(cache=True)
def _serve_fifo(arrival, service, t_sleep, t_wake, eee, start):
    n = arrival.shape[0]
    lpi = 0
    to_sleep = 0
    to_active = 0
    if n == 0:
        return 0, 0, 0, 0
    a = arrival[0]
    if eee:
        lpi += a
        to_active += t_wake
        s = a + t_wake
    else:
        s = a
    start[0] = s
    d = s + service[0]
    for i in range(1, n):
        a = arrival[i]
        if a < d:
            s = d
        elif eee:
            # a completion at d is processed before an arrival at d
            wake_from = d + t_sleep
            to_sleep += t_sleep
            if a > wake_from:
                lpi += a - wake_from
                wake_from = a
            to_active += t_wake
            s = wake_from + t_wake
        else:
            s = a
        start[i] = s
        d = s + service[i]
    return lpi, to_sleep, to_active, d


def serve_fifo(arrival: np.ndarray, service: np.ndarray, config: EeeConfig):
    """Service start instants for frames arriving (in FIFO order) at one port.

    Returns ``(start, log)`` where ``log`` is a :class:`ServiceLog` without
    per-frame lists whose occupancy matches an event-driven run that drains
    naturally: EEE ports end in LPI after their final sleep transition.
    """
    arrival = np.ascontiguousarray(arrival, dtype=np.int64)
    service = np.ascontiguousarray(service, dtype=np.int64)
    t_sleep, t_wake = config.effective_timers
    eee = config.mode is Mode.EEE
    start = np.empty_like(arrival)
    lpi, to_sleep, to_active, last = _serve_fifo(arrival, service, t_sleep, t_wake, eee, start)
    log = ServiceLog()
    if eee:
        if len(arrival) == 0:
            log.state, log.since = PortState.LPI, 0
        else:
            closed = last + t_sleep
            log.occupancy[PortState.LPI] = lpi
            log.occupancy[PortState.TRANSITION_TO_SLEEP] = to_sleep + t_sleep
            log.occupancy[PortState.TRANSITION_TO_ACTIVE] = to_active
            log.occupancy[PortState.ACTIVE] = closed - lpi - to_sleep - t_sleep - to_active
            log.state, log.since = PortState.LPI, closed
    else:
        log.occupancy[PortState.ACTIVE] = last
        log.state, log.since = PortState.ACTIVE, last
    return start, log
