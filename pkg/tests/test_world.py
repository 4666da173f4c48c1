"""Event loop, trace log, radio model, jam zones."""

from __future__ import annotations

import random

import pytest

from tagsim import crypto
from tagsim.backend import kernel
from tagsim.geo import Fix
from tagsim.world import (PRIO_DIRECTIVE, PRIO_EMIT, PRIO_POLL, JamZone,
                          TraceLog, WorldState)


def make_world(**kw):
    args = dict(seed=1, start_time=1700000000, horizon=100, ble_range_m=50.0)
    args.update(kw)
    return WorldState(**args)


# ----------------------------------------------------------------- trace log

def test_trace_line_format_and_digest():
    log = TraceLog()
    log.append(0, "scenario", "demo", "seed=1")
    log.append(7, "emit", "t1", "arch=airtag via=tag")
    assert log.lines() == ["0000000000 scenario demo seed=1",
                           "0000000007 emit t1 arch=airtag via=tag"]
    import hashlib
    want = hashlib.sha256()
    for line in log.lines():
        want.update(line.encode() + b"\n")
    assert log.digest() == want.hexdigest()


def test_trace_rejects_time_reversal():
    log = TraceLog()
    log.append(5, "emit", "a", "x=1")
    log.append(5, "emit", "a", "x=2")
    with pytest.raises(ValueError):
        log.append(4, "emit", "a", "x=3")


def test_record_sink_sees_every_record():
    world = make_world()
    seen = []
    world.record_sink = seen.append
    world.record("mode", "t1", "state=lost")
    assert seen == [(0, "mode", "t1", "state=lost")]


# ---------------------------------------------------------------- event heap

def test_schedule_past_raises_and_horizon_drops():
    world = make_world(horizon=10)
    world.handlers["noop"] = lambda w, p: None
    world.schedule(11, PRIO_EMIT, "noop")   # beyond horizon: dropped
    world.schedule(10, PRIO_EMIT, "noop")
    assert world.step()
    assert world.now == 10
    with pytest.raises(ValueError):
        world.schedule(9, PRIO_EMIT, "noop")
    assert not world.step()


def test_priorities_order_within_second():
    world = make_world()
    order = []
    world.handlers["mark"] = lambda w, p: order.append(p[0])
    world.schedule(5, PRIO_POLL, "mark", ("poll",))
    world.schedule(5, PRIO_EMIT, "mark", ("emit",))
    world.schedule(5, PRIO_DIRECTIVE, "mark", ("directive",))
    world.step()
    assert order == ["directive", "emit", "poll"]


def test_same_second_emits_shuffle_deterministically():
    def run(seed):
        world = make_world(seed=seed)
        order = []
        world.handlers["mark"] = lambda w, p: order.append(p[0])
        for name in "abcdefgh":
            world.schedule(3, PRIO_EMIT, "mark", (name,))
        world.step()
        return order

    assert run(1) == run(1)             # deterministic per seed
    runs = {tuple(run(s)) for s in range(8)}
    assert len(runs) > 1                # and the order does vary by seed
    assert all(sorted(r) == list("abcdefgh") for r in runs)


def test_run_advances_to_horizon():
    world = make_world(horizon=42)
    world.handlers["noop"] = lambda w, p: None
    world.schedule(3, PRIO_EMIT, "noop")
    world.run()
    assert world.now == 42
    assert world.abs_time() == 1700000000 + 42


# ----------------------------------------------------------------- jam zones

def test_jam_zone_window_is_closed():
    zone = JamZone("z", Fix(0, 0), 100.0, t_start=10, t_end=20)
    assert not zone.active(9)
    assert zone.active(10)
    assert zone.active(20)
    assert not zone.active(21)


def test_jam_suppressed_when_either_endpoint_inside():
    world = make_world()
    world.jam_zones.append(JamZone("z", Fix(35.0, -80.0), 500.0, 0, 100))
    inside = Fix(35.001, -80.0)     # ~111 m from center
    outside = Fix(36.0, -80.0)      # ~111 km away
    # containment is cached per (zone, device): an id is bound to one spot
    assert world.jam_suppressed("in1", inside, "out1", outside)
    assert world.jam_suppressed("out1", outside, "in1", inside)
    assert not world.jam_suppressed("out1", outside, "out2", outside)
    world.now = 101                 # zone expired
    assert not world.jam_suppressed("in1", inside, "in2", inside)


# -------------------------------------------------------------- radio model

class _Probe:
    """Minimal receiver double for delivery tests."""

    def __init__(self, device_id, position):
        self.device_id = device_id
        self.position = position
        self.frames = []

    def receive(self, frame, world):
        self.frames.append(frame)

    def capture(self, frame, world):
        self.frames.append(frame)


def _frame(emitter_id, pos):
    from tagsim.codec import AdvertisementFrame
    return AdvertisementFrame(b"\xc0" + bytes(5), bytes(32), 0, pos,
                              emitter_id)


def test_deliver_respects_range_and_self_exclusion():
    world = make_world()
    near = _Probe("near", Fix(35.0001, -80.0))
    far = _Probe("far", Fix(35.1, -80.0))
    world.helpers["near"] = near
    world.helpers["far"] = far
    world.attackers["self"] = _Probe("self", Fix(35.0, -80.0))
    world.deliver(_frame("self", Fix(35.0, -80.0)), Fix(35.0, -80.0))
    assert len(near.frames) == 1
    assert far.frames == []
    assert world.attackers["self"].frames == []


def test_deliver_jam_records_instead_of_delivery():
    world = make_world()
    probe = _Probe("h", Fix(35.0001, -80.0))
    world.helpers["h"] = probe
    world.jam_zones.append(JamZone("z", Fix(35.0, -80.0), 500.0, 0, 100))
    world.deliver(_frame("t", Fix(35.0, -80.0)), Fix(35.0, -80.0))
    assert probe.frames == []
    assert world.trace.records == [(0, "jam", "h", "from=t")]


def test_attackers_capture_when_helpers_receive():
    world = make_world()
    helper = _Probe("h", Fix(35.0001, -80.0))
    agent = _Probe("a", Fix(35.0002, -80.0))
    world.helpers["h"] = helper
    world.attackers["a"] = agent
    world.deliver(_frame("t", Fix(35.0, -80.0)), Fix(35.0, -80.0))
    assert len(helper.frames) == 1 and len(agent.frames) == 1


# ------------------------------------------------------------ point caching

def test_lift_beacon_key_caches_and_builds_tables():
    world = make_world()
    x, y = kernel.base_mult(random.Random(2).randrange(1, crypto.P224.n))
    x_bytes = x.to_bytes(28, "big")
    pt, table = world.lift_beacon_key(x_bytes)
    assert pt[0] == x and kernel.is_on_curve(*pt)
    assert table is None
    _, table = world.lift_beacon_key(x_bytes)
    assert table is None
    _, table = world.lift_beacon_key(x_bytes)   # third use builds the table
    assert table is not None
    assert kernel.table_mult(table, 5) == kernel.scalar_mult(pt[0], pt[1], 5)


def test_lift_beacon_key_off_curve_negative_cache():
    world = make_world()
    x = next(x for x in range(2, 1000) if crypto.recover_point(x) is None)
    x_bytes = x.to_bytes(28, "big")
    assert world.lift_beacon_key(x_bytes) is None
    assert world.lift_beacon_key(x_bytes) is None
