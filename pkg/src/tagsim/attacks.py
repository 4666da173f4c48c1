"""Attack actors and directives.

An attacker is a device like any other: it obeys range and jamming physics,
captures frames it can hear, and re-broadcasts from its own position.
Directives arrive from the scenario file with start times; campaigns that
span time pre-schedule one tick event per second and emit `rate` frames per
tick.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import crypto
from .codec import (AdvertisementFrame, AirTagBeacon, SmartTagBeacon,
                    aging_counter, classify, encode_airtag, encode_smarttag)
from .devices import TAG_STATE_LOST, CloudServer, OwnerDevice
from .geo import Fix
from .world import PRIO_EMIT, WorldState

FULL_SWEEP = tuple(range(256))  # every value of the one free payload byte


@dataclass
class Campaign:
    """One scheduled broadcast activity on a single attacker."""

    via: str                      # "spoof" | "flood" | "channel"
    rate: int
    source: AdvertisementFrame | None = None  # spoof only
    sweep: tuple[int, ...] = FULL_SWEEP
    cursor: int = 0
    frames: list[tuple[bytes, bytes]] = field(default_factory=list)  # channel


@dataclass
class AttackerDevice:
    """A hostile radio at a fixed position."""

    device_id: str
    position: Fix
    adversary_class: str = "A2"
    rate: int = 10

    def __post_init__(self) -> None:
        self.captured: list[tuple[int, AdvertisementFrame]] = []
        self.spoof_source: AdvertisementFrame | None = None
        self.campaigns: list[Campaign] = []

    # ------------------------------------------------------------ capture

    def capture(self, frame: AdvertisementFrame, world: WorldState) -> None:
        self.captured.append((world.now, frame))
        world.record("capture", self.device_id,
                     f"from={frame.emitter_id} via={frame.via}")

    def _source(self) -> AdvertisementFrame | None:
        if self.spoof_source is not None:
            return self.spoof_source
        return self.captured[-1][1] if self.captured else None

    # ---------------------------------------------------------- campaigns

    def _schedule_ticks(self, world: WorldState, start: int, seconds: int) -> None:
        idx = len(self.campaigns) - 1
        for t in range(start, start + seconds):
            world.schedule(t, PRIO_EMIT, "campaign-tick", (self.device_id, idx))

    def start_spoof(self, world: WorldState, *, duration: int, rate: int,
                    sweep: tuple[int, ...] = FULL_SWEEP) -> bool:
        source = self._source()
        if source is None:
            world.record("attack", self.device_id, "op=spoof error=no-capture")
            return False
        arch = classify(source.payload)
        self.campaigns.append(Campaign(via="spoof", rate=rate, source=source,
                                       sweep=sweep))
        self._schedule_ticks(world, world.now, duration)
        world.record("attack", self.device_id,
                     f"op=spoof arch={arch} duration={duration} rate={rate}")
        return True

    def start_flood(self, world: WorldState, *, duration: int, rate: int) -> None:
        self.campaigns.append(Campaign(via="flood", rate=rate))
        self._schedule_ticks(world, world.now, duration)
        world.record("attack", self.device_id,
                     f"op=flood duration={duration} rate={rate}")

    def replay(self, world: WorldState, *, index: int = 0) -> bool:
        if not self.captured:
            world.record("attack", self.device_id, "op=replay error=no-capture")
            return False
        captured_at, frame = self.captured[index]
        world.record("attack", self.device_id,
                     f"op=replay from={frame.emitter_id} "
                     f"captured_at={captured_at} age={world.now - captured_at}")
        self._emit(world, frame.address, frame.payload, "replay")
        return True

    # ------------------------------------------------------------- emission

    def _emit(self, world: WorldState, address: bytes, payload: bytes,
              via: str) -> None:
        arch = classify(payload) or "unknown"
        world.record("emit", self.device_id,
                     f"arch={arch} via={via} addr={address.hex()} "
                     f"payload={payload.hex()}")
        world.deliver(AdvertisementFrame(address, payload, world.now,
                                         self.position, self.device_id,
                                         via=via),
                      self.position)

    def tick(self, world: WorldState, campaign_index: int) -> None:
        camp = self.campaigns[campaign_index]
        if camp.via == "spoof":
            self._spoof_tick(world, camp)
        elif camp.via == "flood":
            self._flood_tick(world, camp)
        else:
            self._channel_tick(world, camp)

    def _spoof_tick(self, world: WorldState, camp: Campaign) -> None:
        src = camp.source
        airtag = classify(src.payload) == "airtag"
        for _ in range(camp.rate):
            if airtag:
                # the counter byte is the only field free to vary in-window
                payload = bytearray(src.payload)
                payload[31] = camp.sweep[camp.cursor % len(camp.sweep)]
                camp.cursor += 1
                payload = bytes(payload)
            else:
                payload = src.payload
            self._emit(world, src.address, payload, "spoof")

    def _flood_tick(self, world: WorldState, camp: Campaign) -> None:
        window = aging_counter(world.abs_time())
        for _ in range(camp.rate):
            payload = encode_smarttag(SmartTagBeacon(
                tag_state=TAG_STATE_LOST, aging_counter=window,
                privacy_id=world.rng.randbytes(8), flags=0x00,
                signature=world.rng.randbytes(4)))
            addr = bytearray(world.rng.randbytes(6))
            addr[0] |= 0xC0
            self._emit(world, bytes(addr), payload, "flood")

    def _channel_tick(self, world: WorldState, camp: Campaign) -> None:
        for _ in range(camp.rate):
            if camp.cursor >= len(camp.frames):
                return
            address, payload = camp.frames[camp.cursor]
            camp.cursor += 1
            self._emit(world, address, payload, "channel")

    # ------------------------------------------------------ covert channel

    def channel_send(self, world: WorldState, *, payload: bytes,
                     secret: bytes, rate: int) -> None:
        """Encode payload bits as crafted beacon keys, MSB first per byte."""
        bits = [(byte >> (7 - k)) & 1 for byte in payload for k in range(8)]
        frames = []
        for k, bit in enumerate(bits):
            x, _y = crypto.channel_point(secret, k, bit)
            frames.append(encode_airtag(AirTagBeacon(key=x.to_bytes(28, "big"))))
        camp = Campaign(via="channel", rate=rate, frames=frames)
        self.campaigns.append(camp)
        seconds = max(1, -(-len(frames) // rate)) if frames else 0
        self._schedule_ticks(world, world.now, seconds)
        world.record("attack", self.device_id,
                     f"op=sendmy-send payload={payload.hex() or '-'} "
                     f"bits={len(bits)} rate={rate}")

    def channel_recv(self, world: WorldState, *, secret: bytes,
                     bits: int) -> tuple[bytes | None, int]:
        """Read bits back out of the report store by key-index presence.

        A bit resolves only when exactly one of its two candidate indexes
        holds reports; anything else is an erasure.
        """
        store = world.cloud.airtag_store
        values: list[int | None] = []
        for k in range(bits):
            present = []
            for v in (0, 1):
                idx = crypto.key_index(crypto.channel_point(secret, k, v))
                present.append(bool(store.get(idx)))
            if present[0] == present[1]:
                values.append(None)
            else:
                values.append(1 if present[1] else 0)
        erasures = sum(1 for v in values if v is None)
        decoded: bytes | None = None
        if erasures == 0 and bits % 8 == 0:
            out = bytearray(bits // 8)
            for k, v in enumerate(values):
                out[k // 8] |= v << (7 - k % 8)
            decoded = bytes(out)
        world.record("attack", self.device_id,
                     f"op=sendmy-recv bits={bits} "
                     f"decoded={decoded.hex() if decoded else '-'} "
                     f"erasures={erasures}")
        return decoded, erasures


# ----------------------------------------------------------- coordination

def distribute(world: WorldState, agent: AttackerDevice,
               targets: list[AttackerDevice], *, index: int = -1) -> bool:
    """Relay a captured beacon to other attackers out-of-band."""
    if not agent.captured:
        world.record("attack", agent.device_id, "op=distribute error=no-capture")
        return False
    frame = agent.captured[index][1]
    for target in targets:
        target.spoof_source = frame
    world.record("attack", agent.device_id,
                 f"op=distribute from={frame.emitter_id} n={len(targets)} "
                 f"to={','.join(t.device_id for t in targets)}")
    return True


def botnet_campaign(world: WorldState, agent: AttackerDevice,
                    bots: list[AttackerDevice], *, duration: int,
                    rate: int) -> bool:
    """Distribute the agent's latest capture, then spoof from every bot."""
    if not distribute(world, agent, bots):
        return False
    for bot in bots:
        bot.start_spoof(world, duration=duration, rate=rate)
    world.record("attack", agent.device_id,
                 f"op=botnet bots={len(bots)} duration={duration} rate={rate}")
    return True


def gps_spoof(world: WorldState, helper, fake: Fix) -> None:
    """Falsify the position a helper attaches to its uploads."""
    helper.reported_position = fake
    world.record("attack", helper.device_id,
                 f"op=gps-spoof lat={fake.lat:.6f} lon={fake.lon:.6f}")


def vpn_override(world: WorldState, helper, apparent: Fix) -> None:
    """Move a helper's apparent network origin (VPN exit)."""
    helper.ip_position = apparent
    world.record("attack", helper.device_id,
                 f"op=vpn lat={apparent.lat:.6f} lon={apparent.lon:.6f}")


def dos_report(cloud: CloudServer, owners: list[OwnerDevice]) -> dict:
    """Cost summary: who paid for verification, split by architecture."""
    return {
        "server_cost_units": cloud.verify_cost_units,
        "airtag_reports": sum(len(v) for v in cloud.airtag_store.values()),
        "smarttag_reports": sum(len(v) for v in cloud.smarttag_store.values()),
        "owner_decrypt_attempts": {o.device_id: o.decrypt_attempts
                                   for o in owners},
    }
