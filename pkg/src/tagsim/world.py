"""Deterministic discrete-event world shared by all scenario runs.

Time is integer seconds from scenario start. Events are (time, priority,
sequence) heap entries; at each timestamp attack directives run first
(priority 0), then frame emissions (priority 1, shuffled within the second
so no emitter systematically wins last-report ties), then owner polls
(priority 2). Every observable action appends one record to an append-only
trace; metrics fold over trace records and nothing else, so any report can
be recomputed from the trace alone.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass
from typing import Callable

from . import crypto
from .codec import AdvertisementFrame
from .geo import Fix, distance_m

PRIO_DIRECTIVE = 0
PRIO_EMIT = 1
PRIO_POLL = 2

TraceRecord = tuple[int, str, str, str]


class TraceLog:
    """Append-only, time-monotonic event log with a stable digest."""

    def __init__(self) -> None:
        self.records: list[TraceRecord] = []
        self._last_t = 0

    def append(self, t: int, kind: str, actor: str, detail: str) -> TraceRecord:
        if t < self._last_t:
            raise ValueError(f"trace time went backwards: {t} < {self._last_t}")
        self._last_t = t
        rec = (t, kind, actor, detail)
        self.records.append(rec)
        return rec

    def lines(self) -> list[str]:
        return [f"{t:010d} {kind} {actor} {detail}" for t, kind, actor, detail in self.records]

    def digest(self) -> str:
        h = hashlib.sha256()
        for line in self.lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()


@dataclass(frozen=True)
class JamZone:
    """Circular suppression zone active on the closed window [t_start, t_end]."""

    zone_id: str
    center: Fix
    radius_m: float
    t_start: int
    t_end: int

    def active(self, t: int) -> bool:
        return self.t_start <= t <= self.t_end


class WorldState:
    """Mutable simulation state: devices, radio model, clock, event heap."""

    def __init__(self, *, seed: int, start_time: int, horizon: int,
                 ble_range_m: float = 50.0):
        self.rng = random.Random(seed)
        self.start_time = start_time
        self.horizon = horizon
        self.ble_range_m = ble_range_m
        self.now = 0
        self.trackers: dict[str, object] = {}
        self.helpers: dict[str, object] = {}
        self.owners: dict[str, object] = {}
        self.attackers: dict[str, object] = {}
        self.cloud = None
        self.jam_zones: list[JamZone] = []
        self.trace = TraceLog()
        self.record_sink: Callable[[TraceRecord], None] | None = None
        self.handlers: dict[str, Callable[[WorldState, tuple], None]] = {}
        self._heap: list[tuple[int, int, int, str, tuple]] = []
        self._seq = 0
        self._receiver_cache: dict[str, list[tuple[str, object]]] = {}
        self._zone_cache: dict[tuple[str, str], bool] = {}
        self._points: dict[bytes, tuple[tuple[int, int], object | None, int]] = {}

    # ------------------------------------------------------------- clock

    def abs_time(self, t: int | None = None) -> int:
        return self.start_time + (self.now if t is None else t)

    # ------------------------------------------------------------- trace

    def record(self, kind: str, actor: str, detail: str) -> None:
        rec = self.trace.append(self.now, kind, actor, detail)
        if self.record_sink is not None:
            self.record_sink(rec)

    # ------------------------------------------------------------ events

    def schedule(self, t: int, prio: int, kind: str, payload: tuple = ()) -> None:
        """Queue an event; silently drops anything past the horizon."""
        if t < self.now:
            raise ValueError(f"cannot schedule into the past ({t} < {self.now})")
        if t > self.horizon:
            return
        heapq.heappush(self._heap, (t, prio, self._seq, kind, payload))
        self._seq += 1

    def step(self) -> bool:
        """Process every event at the next pending timestamp."""
        if not self._heap:
            return False
        t = self._heap[0][0]
        batch = []
        while self._heap and self._heap[0][0] == t:
            batch.append(heapq.heappop(self._heap))
        self.now = t
        by_prio: dict[int, list] = {}
        for ev in batch:
            by_prio.setdefault(ev[1], []).append(ev)
        for prio in sorted(by_prio):
            group = by_prio[prio]
            if prio == PRIO_EMIT and len(group) > 1:
                self.rng.shuffle(group)
            for _, _, _, kind, payload in group:
                self.handlers[kind](self, payload)
        return True

    def run(self) -> None:
        while self.step():
            pass
        self.now = self.horizon

    # ------------------------------------------------------------- radio

    def _in_zone(self, zone: JamZone, device_id: str, pos: Fix) -> bool:
        key = (zone.zone_id, device_id)
        hit = self._zone_cache.get(key)
        if hit is None:
            hit = distance_m(zone.center, pos) <= zone.radius_m
            self._zone_cache[key] = hit
        return hit

    def jam_suppressed(self, a_id: str, a_pos: Fix, b_id: str, b_pos: Fix) -> bool:
        """A link is suppressed when either endpoint sits in an active zone."""
        for zone in self.jam_zones:
            if zone.active(self.now) and (self._in_zone(zone, a_id, a_pos)
                                          or self._in_zone(zone, b_id, b_pos)):
                return True
        return False

    def _receivers(self, emitter_id: str, pos: Fix) -> list[tuple[str, object]]:
        """Devices within BLE range of a static emitter (cached)."""
        cached = self._receiver_cache.get(emitter_id)
        if cached is None:
            cached = []
            for helper in self.helpers.values():
                if distance_m(pos, helper.position) <= self.ble_range_m:
                    cached.append(("helper", helper))
            for attacker in self.attackers.values():
                if attacker.device_id != emitter_id and \
                        distance_m(pos, attacker.position) <= self.ble_range_m:
                    cached.append(("attacker", attacker))
            self._receiver_cache[emitter_id] = cached
        return cached

    def deliver(self, frame: AdvertisementFrame, emitter_pos: Fix) -> None:
        """Radio propagation for one emitted frame."""
        for kind, dev in self._receivers(frame.emitter_id, emitter_pos):
            if self.jam_suppressed(frame.emitter_id, emitter_pos,
                                   dev.device_id, dev.position):
                self.record("jam", dev.device_id, f"from={frame.emitter_id}")
                continue
            if kind == "helper":
                dev.receive(frame, self)
            else:
                dev.capture(frame, self)

    # ----------------------------------------------------- point caching

    def lift_beacon_key(self, x_bytes: bytes):
        """Helper-side x-coordinate lift with memoized window tables.

        Returns (point, table_or_None) or None when x is off-curve. A window
        table is built once a key has been seen a few times, when its build
        cost starts paying for itself.
        """
        entry = self._points.get(x_bytes, -1)
        if entry == -1:
            pt = crypto.recover_point(int.from_bytes(x_bytes, "big"))
            if pt is None:
                self._points[x_bytes] = None
                return None
            entry = (pt, None, 0)
        elif entry is None:
            return None
        pt, table, uses = entry
        uses += 1
        if table is None and uses >= 3:
            table = crypto.kernel.make_table(pt[0], pt[1])
        self._points[x_bytes] = (pt, table, uses)
        return pt, table
