"""Scenario execution: build a world from a parsed scenario, run it, report.

Construction order is fixed (trackers, owners, helpers, attackers, zones, in
declaration order) so that every secret drawn from the seeded generator, and
therefore the whole trace, is a pure function of (scenario text, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import attacks, crypto
from .devices import CloudServer, HelperDevice, OwnerDevice, TrackerDevice
from .geo import Fix
from .metrics import MetricsAccumulator
from .scenario import Scenario
from .world import (PRIO_DIRECTIVE, PRIO_POLL, JamZone, WorldState)


@dataclass
class RunResult:
    report: dict
    world: WorldState


def build_world(scenario: Scenario, seed: int | None = None) -> tuple[WorldState, MetricsAccumulator]:
    """Assemble devices, wire handlers, schedule the initial events."""
    eff_seed = scenario.seed if seed is None else seed
    world = WorldState(seed=eff_seed, start_time=scenario.start_time,
                       horizon=scenario.duration,
                       ble_range_m=scenario.ble_range)
    world.cloud = CloudServer(ip_threshold_m=scenario.ip_threshold_km * 1000.0)
    acc = MetricsAccumulator()
    world.record_sink = acc.apply

    owner_of = {o.tracker: o for o in scenario.owners}
    for spec in scenario.trackers:
        owner = owner_of.get(spec.device_id)
        tracker = TrackerDevice(
            device_id=spec.device_id, arch=spec.arch,
            position=Fix(spec.lat, spec.lon),
            lost_threshold=spec.threshold, adv_interval=spec.interval,
            owner_id=owner.device_id if owner else None)
        if spec.arch == "airtag":
            tracker.chain = crypto.KeyChain(crypto.generate_master(world.rng))
        else:
            tracker.tag_keys = crypto.generate_smarttag_keys(world.rng)
            world.cloud.register_smarttag(spec.device_id, tracker.tag_keys)
        world.trackers[spec.device_id] = tracker

    for spec in scenario.owners:
        tracker = world.trackers[spec.tracker]
        world.owners[spec.device_id] = OwnerDevice(
            device_id=spec.device_id, position=Fix(spec.lat, spec.lon),
            tracker_id=spec.tracker, arch=tracker.arch,
            poll_interval=spec.poll, chain=tracker.chain,
            tag_id=spec.tracker if tracker.arch == "smarttag" else None)

    for spec in scenario.helpers:
        world.helpers[spec.device_id] = HelperDevice(
            device_id=spec.device_id, position=Fix(spec.lat, spec.lon),
            auth_token=world.rng.randbytes(8).hex(),
            scan_interval=spec.scan, dedupe=scenario.dedupe)

    for spec in scenario.attackers:
        world.attackers[spec.device_id] = attacks.AttackerDevice(
            device_id=spec.device_id, position=Fix(spec.lat, spec.lon),
            adversary_class=spec.adversary_class, rate=spec.rate)

    for spec in scenario.zones:
        world.jam_zones.append(JamZone(
            zone_id=spec.zone_id, center=Fix(spec.lat, spec.lon),
            radius_m=spec.radius, t_start=spec.t_from, t_end=spec.t_to))

    _write_head_records(world, scenario, eff_seed)
    _register_handlers(world, scenario)
    _schedule_initial(world, scenario)
    return world, acc


def _write_head_records(world: WorldState, sc: Scenario, seed: int) -> None:
    world.record("scenario", sc.name,
                 f"seed={seed} arch={sc.architecture} duration={sc.duration} "
                 f"start={sc.start_time} ble={sc.ble_range:g}")
    for t in sc.trackers:
        owner = world.trackers[t.device_id].owner_id or "-"
        world.record("device", t.device_id,
                     f"role=tracker arch={t.arch} lat={t.lat:.6f} "
                     f"lon={t.lon:.6f} threshold={t.threshold} "
                     f"interval={t.interval} owner={owner}")
    for o in sc.owners:
        world.record("device", o.device_id,
                     f"role=owner tracker={o.tracker} lat={o.lat:.6f} "
                     f"lon={o.lon:.6f} poll={o.poll}")
    for h in sc.helpers:
        helper = world.helpers[h.device_id]
        world.record("device", h.device_id,
                     f"role=helper lat={h.lat:.6f} lon={h.lon:.6f} "
                     f"scan={h.scan} token={helper.auth_token}")
    for a in sc.attackers:
        world.record("device", a.device_id,
                     f"role=attacker class={a.adversary_class} "
                     f"lat={a.lat:.6f} lon={a.lon:.6f} rate={a.rate}")
    for z in sc.zones:
        world.record("zone", z.zone_id,
                     f"lat={z.lat:.6f} lon={z.lon:.6f} radius={z.radius:g} "
                     f"from={z.t_from} to={z.t_to}")


def _register_handlers(world: WorldState, scenario: Scenario) -> None:
    def attack_exec(w: WorldState, payload: tuple) -> None:
        _execute_attack(w, scenario.attacks[payload[0]])

    world.handlers.update({
        "tracker-step": lambda w, p: w.trackers[p[0]].step(w),
        "poll": lambda w, p: w.owners[p[0]].poll(w),
        "owner-query": lambda w, p: w.owners[p[0]].full_query(w, 0, w.horizon),
        "campaign-tick": lambda w, p: w.attackers[p[0]].tick(w, p[1]),
        "attack-exec": attack_exec,
    })


def _schedule_initial(world: WorldState, sc: Scenario) -> None:
    for tracker in world.trackers.values():
        tracker.schedule_step(world, 0)
        if tracker.lost_threshold > 0:
            # exact wake for the no-contact-at-all lost transition
            tracker.schedule_step(world, tracker.lost_threshold)
    for owner in world.owners.values():
        times = set(range(owner.poll_interval, sc.duration + 1,
                          owner.poll_interval))
        times.add(sc.duration)
        for t in sorted(times):
            world.schedule(t, PRIO_POLL, "poll", (owner.device_id,))
    for i, spec in enumerate(sc.attacks):
        world.schedule(spec.t, PRIO_DIRECTIVE, "attack-exec", (i,))
    if sc.final_query == "full":
        for owner in world.owners.values():
            world.schedule(sc.duration, PRIO_POLL, "owner-query",
                           (owner.device_id,))


def _execute_attack(world: WorldState, spec) -> None:
    args = spec.args
    if spec.verb in ("gps-spoof", "vpn"):
        helper = world.helpers[spec.actor]
        fake = Fix(args["lat"], args["lon"])
        if spec.verb == "gps-spoof":
            attacks.gps_spoof(world, helper, fake)
        else:
            attacks.vpn_override(world, helper, fake)
        return
    actor = world.attackers[spec.actor]
    if spec.verb == "spoof":
        sweep = args["sweep"] or attacks.FULL_SWEEP
        actor.start_spoof(world, duration=args["duration"],
                          rate=args["rate"], sweep=sweep)
    elif spec.verb == "replay":
        actor.replay(world, index=args["index"])
    elif spec.verb == "flood":
        actor.start_flood(world, duration=args["duration"], rate=args["rate"])
    elif spec.verb == "distribute":
        targets = [world.attackers[t] for t in args["to"]]
        attacks.distribute(world, actor, targets, index=args["index"])
    elif spec.verb == "botnet":
        bots = [world.attackers[b] for b in args["bots"]]
        attacks.botnet_campaign(world, actor, bots,
                                duration=args["duration"], rate=args["rate"])
    elif spec.verb == "sendmy-send":
        actor.channel_send(world, payload=args["payload"],
                           secret=args["secret"], rate=args["rate"])
    elif spec.verb == "sendmy-recv":
        actor.channel_recv(world, secret=args["secret"], bits=args["bits"])


def run_scenario(scenario: Scenario, seed: int | None = None) -> RunResult:
    """Build, run to the horizon, and fold the final report."""
    world, acc = build_world(scenario, seed)
    world.run()
    return RunResult(report=acc.finalize(), world=world)
