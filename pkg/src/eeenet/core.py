"""Discrete-event engine.

All times are integer picoseconds.  Events are ordered by
``(fire_at, rank, sequence)`` where ``rank`` places completions
(service and power transitions) ahead of frame arrivals that occur at
the same instant.  Within one rank, ties are broken by insertion order.

Event decomposition used by the ports in :mod:`eeenet.port`:

* ``FRAME_ARRIVAL`` -- a frame reaches a node; starting service on an
  idle ACTIVE port is folded into this event.
* ``SERVICE_COMPLETE`` -- a transmission ends; the next service start
  (or the start of the sleep transition) is folded into it.
* ``TRANSITION_COMPLETE`` -- a sleep or wake transition ends.

A single frame entering an idle Regular port therefore costs exactly two
events; on an EEE port starting in LPI it costs four (arrival, wake
complete, service complete, sleep complete).
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any

import numpy as np

PS_PER_NS = 1_000
PS_PER_US = 1_000_000
PS_PER_S = 1_000_000_000_000


def ns(value) -> int:
    """Nanoseconds to SimTime (picoseconds)."""
    return int(round(value * PS_PER_NS))


def us(value) -> int:
    return int(round(value * PS_PER_US))


def to_seconds(t: int) -> float:
    return t / PS_PER_S


def from_seconds(seconds: float) -> int:
    return int(round(seconds * PS_PER_S))


class SimulationError(RuntimeError):
    """A logic error inside a replication (causality violation, bad state)."""


class EventKind(IntEnum):
    # value doubles as the tie-break rank at equal timestamps
    SERVICE_COMPLETE = 0
    TRANSITION_COMPLETE = 1
    FRAME_ARRIVAL = 2


@dataclass(slots=True)
class Event:
    fire_at: int
    kind: EventKind
    target: Any
    payload: Any = None
    sequence: int = -1


@dataclass(frozen=True)
class RngStream:
    """Identifies one independent random stream.

    ``substream`` separates the draws of one source (interarrivals vs.
    frame sizes) so that vectorised and one-at-a-time consumers see the
    same values.
    """

    seed: int
    stream_id: int

    def generator(self, substream: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, substream))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class RunReport:
    clock: int
    events_processed: int
    events_scheduled: int
    events_pending: int
    early_termination: bool
    departures: int
    nodes: dict[str, Any] = field(default_factory=dict)


class Engine:
    """One engine per replication; never shared."""

    def __init__(self):
        self.now = 0
        self._queue: list[tuple[int, int, int, Event]] = []
        self._sequence = itertools.count()
        self.scheduled = 0
        self.processed = 0
        self.departures = 0
        self.nodes: dict[str, Any] = {}

    def schedule(self, event: Event) -> Event:
        if event.fire_at < self.now:
            raise SimulationError(
                f"cannot schedule {event.kind.name} at {event.fire_at} ps; clock is {self.now} ps"
            )
        event.sequence = next(self._sequence)
        heapq.heappush(self._queue, (event.fire_at, int(event.kind), event.sequence, event))
        self.scheduled += 1
        return event

    def schedule_at(self, fire_at: int, kind: EventKind, target, payload=None) -> Event:
        return self.schedule(Event(fire_at, kind, target, payload))

    def __len__(self):
        return len(self._queue)

    def pop(self) -> Event:
        return heapq.heappop(self._queue)[3]

    def run(self, max_time: int | None = None, max_departures: int | None = None) -> RunReport:
        """Process events until a stop condition or until the queue drains.

        ``early_termination`` is set when the queue empties before the
        requested stop condition is met.  With no stop condition, draining
        the queue is the normal end of a run.
        """
        early = False
        queue = self._queue
        while True:
            if max_departures is not None and self.departures >= max_departures:
                break
            if not queue:
                early = max_time is not None or max_departures is not None
                break
            if max_time is not None and queue[0][0] > max_time:
                self.now = max_time
                break
            fire_at, _, _, event = heapq.heappop(queue)
            self.now = fire_at
            self.processed += 1
            event.target.on_event(self, event)
        return RunReport(
            clock=self.now,
            events_processed=self.processed,
            events_scheduled=self.scheduled,
            events_pending=len(queue),
            early_termination=early,
            departures=self.departures,
            nodes=dict(self.nodes),
        )
