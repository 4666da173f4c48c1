"""Device state machines: trackers, helper phones, owners, and the cloud.

Both network architectures share the same world plumbing and differ only in
what the tracker broadcasts, what the server checks on ingest, and what the
owner must do to read a report:

* curve-key path ("airtag"): rotating public-key beacons, the server stores
  sealed reports blindly at zero verification cost, the owner decrypts.
* identifier path ("smarttag"): authenticated pseudonym beacons, the server
  does the matching and signature work, fixes are stored in the clear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import crypto
from .codec import (AdvertisementFrame, AirTagBeacon, FrameFormatError,
                    SmartTagBeacon, aging_counter, classify, decode_airtag,
                    decode_smarttag, encode_airtag, encode_smarttag,
                    smarttag_signed_prefix)
from .geo import Fix, distance_m, grid_center
from .world import PRIO_EMIT, WorldState

EPOCH_SECONDS = 86400       # curve-key rotation cadence
COUNTER_WINDOW_S = 900      # crypto-counter re-randomization cadence
TAG_STATE_LOST = 0x02       # identifier-beacon state byte while lost


@dataclass
class TrackerDevice:
    """A tag: paired while the owner stays in range, beaconing once lost."""

    device_id: str
    arch: str                           # "airtag" | "smarttag"
    position: Fix
    lost_threshold: int
    adv_interval: int
    owner_id: str | None = None
    chain: crypto.KeyChain | None = None          # curve-key path
    tag_keys: crypto.SmartTagKeys | None = None   # identifier path
    last_owner_contact: int = 0

    def __post_init__(self) -> None:
        self._was_lost: bool | None = None
        self._pending: set[int] = set()
        self._epoch_index = 0
        self._epoch_key = b""
        self._counter_window = -1
        self._counter = 0
        self._frame_window = -1
        self._frame: tuple[bytes, bytes] | None = None

    # ------------------------------------------------------------- state

    def lost(self, now: int) -> bool:
        return now - self.last_owner_contact >= self.lost_threshold

    def lost_since(self) -> int:
        return self.last_owner_contact + self.lost_threshold

    # ---------------------------------------------------------- stepping

    def schedule_step(self, world: WorldState, t: int) -> None:
        if t in self._pending or t > world.horizon:
            return
        self._pending.add(t)
        world.schedule(t, PRIO_EMIT, "tracker-step", (self.device_id,))

    def step(self, world: WorldState) -> None:
        t = world.now
        owner = world.owners.get(self.owner_id) if self.owner_id else None
        if owner is not None \
                and distance_m(self.position, owner.position) <= world.ble_range_m \
                and not world.jam_suppressed(self.device_id, self.position,
                                             owner.device_id, owner.position):
            self.last_owner_contact = t
            if self.lost_threshold > 0:
                # exact wake at the moment this contact would expire
                self.schedule_step(world, t + self.lost_threshold)
        lost = self.lost(t)
        if lost != self._was_lost:
            self._was_lost = lost
            world.record("mode", self.device_id,
                         f"state={'lost' if lost else 'paired'}")
        if lost and (t - self.lost_since()) % self.adv_interval == 0:
            self.emit(world)
        self.schedule_step(world, t + self.adv_interval)
        self._pending.discard(t)

    # ---------------------------------------------------------- emission

    def _airtag_frame(self, world: WorldState) -> tuple[bytes, bytes]:
        epoch = world.now // EPOCH_SECONDS + 1
        if epoch != self._epoch_index:
            self._epoch_index = epoch
            self._epoch_key = self.chain.at(epoch).pub[0].to_bytes(28, "big")
        window = world.abs_time() // COUNTER_WINDOW_S
        if window != self._counter_window:
            self._counter_window = window
            self._counter = world.rng.randrange(256)
        return encode_airtag(AirTagBeacon(key=self._epoch_key,
                                          counter=self._counter))

    def _smarttag_frame(self, world: WorldState) -> tuple[bytes, bytes]:
        window = aging_counter(world.abs_time())
        if window != self._frame_window:
            self._frame_window = window
            pid = crypto.derive_privacy_id(self.tag_keys.id_secret, window)
            prefix = smarttag_signed_prefix(TAG_STATE_LOST, window, pid, 0x00)
            sig = crypto.sign_frame_prefix(prefix, self.tag_keys.device_key)
            payload = encode_smarttag(SmartTagBeacon(
                tag_state=TAG_STATE_LOST, aging_counter=window,
                privacy_id=pid, flags=0x00, signature=sig))
            addr = bytearray(world.rng.randbytes(6))
            addr[0] |= 0xC0
            self._frame = (bytes(addr), payload)
        return self._frame

    def emit(self, world: WorldState) -> None:
        if self.arch == "airtag":
            address, payload = self._airtag_frame(world)
        else:
            address, payload = self._smarttag_frame(world)
        world.record("emit", self.device_id,
                     f"arch={self.arch} via=tag addr={address.hex()} "
                     f"payload={payload.hex()}")
        world.deliver(AdvertisementFrame(address, payload, world.now,
                                         self.position, self.device_id),
                      self.position)


@dataclass
class HelperDevice:
    """A bystander phone that relays sighted lost-mode beacons."""

    device_id: str
    position: Fix
    auth_token: str
    scan_interval: int = 1
    dedupe: bool = False
    reported_position: Fix = None
    ip_position: Fix = None

    def __post_init__(self) -> None:
        if self.reported_position is None:
            self.reported_position = self.position
        if self.ip_position is None:
            self.ip_position = grid_center(self.position)
        self._seen_second = -1
        self._seen: set[tuple[bytes, bytes]] = set()

    def scanning(self, t: int) -> bool:
        return t % self.scan_interval == 0

    def receive(self, frame: AdvertisementFrame, world: WorldState) -> None:
        t = world.now
        if not self.scanning(t):
            return
        if self.dedupe:
            if self._seen_second != t:
                self._seen_second = t
                self._seen.clear()
            key = (frame.address, frame.payload)
            if key in self._seen:
                return
            self._seen.add(key)
        arch = classify(frame.payload)
        world.record("deliver", self.device_id,
                     f"from={frame.emitter_id} arch={arch or 'unknown'} "
                     f"via={frame.via}")
        if arch is None:
            world.record("drop", self.device_id,
                         f"from={frame.emitter_id} cause=undecodable")
        elif arch == "airtag":
            self._relay_airtag(frame, world)
        else:
            self._relay_smarttag(frame, world)

    def _relay_airtag(self, frame: AdvertisementFrame, world: WorldState) -> None:
        beacon = decode_airtag(frame.address, frame.payload)
        lifted = world.lift_beacon_key(beacon.key)
        if lifted is None:
            world.record("drop", self.device_id,
                         f"from={frame.emitter_id} cause=off-curve")
            return
        point, table = lifted
        report = crypto.encrypt_fix(self.reported_position, point,
                                    world.rng, table)
        world.cloud.ingest_airtag(report, world, helper=self,
                                  emitter=frame.emitter_id, via=frame.via)

    def _relay_smarttag(self, frame: AdvertisementFrame, world: WorldState) -> None:
        try:
            beacon = decode_smarttag(frame.payload)
        except FrameFormatError:
            world.record("drop", self.device_id,
                         f"from={frame.emitter_id} cause=undecodable")
            return
        world.cloud.ingest_smarttag(beacon, self.reported_position, world,
                                    helper=self, emitter=frame.emitter_id,
                                    via=frame.via)


@dataclass
class SmartTagRecord:
    """One accepted identifier-path report as the server stores it."""

    seq: int
    server_time: int
    fix: Fix
    counter: int
    helper_token: str


class CloudServer:
    """Backend stores for both paths, with explicit verification accounting.

    Curve-key reports are stored blindly (cost 0: the owner carries the
    decryption burden). Identifier reports cost one unit per candidate
    pseudonym comparison in a linear scan over registered tags, in
    registration order, then a signature check and an IP-consistency check.
    """

    def __init__(self, *, ip_threshold_m: float = 25000.0):
        self.ip_threshold_m = ip_threshold_m
        self.airtag_store: dict[bytes, list[tuple[int, int, crypto.EncryptedReport]]] = {}
        self.smarttag_store: dict[str, list[SmartTagRecord]] = {}
        self.verify_cost_units = 0
        self._registry: list[tuple[str, crypto.SmartTagKeys]] = []
        self._keys: dict[str, crypto.SmartTagKeys] = {}
        self._seq = 0
        self._pid_window = -1
        self._pid_table: list[tuple[str, bytes]] = []

    def register_smarttag(self, tag_id: str, keys: crypto.SmartTagKeys) -> None:
        if tag_id in self._keys:
            raise ValueError(f"tag {tag_id!r} already registered")
        self._registry.append((tag_id, keys))
        self._keys[tag_id] = keys
        self.smarttag_store[tag_id] = []

    # ------------------------------------------------------------ ingest

    def ingest_airtag(self, report: crypto.EncryptedReport, world: WorldState,
                      *, helper: HelperDevice, emitter: str, via: str) -> str:
        seq = self._seq
        self._seq += 1
        self.airtag_store.setdefault(report.key_index, []).append(
            (seq, world.now, report))
        fix = helper.reported_position
        world.record("ingest", "cloud",
                     f"arch=airtag outcome=accepted seq={seq} cost=0 "
                     f"helper={helper.device_id} from={emitter} via={via} "
                     f"idx={report.key_index.hex()[:12]} "
                     f"lat={fix.lat:.6f} lon={fix.lon:.6f}")
        return "accepted"

    def _candidates(self, window: int) -> list[tuple[str, bytes]]:
        if window != self._pid_window:
            self._pid_window = window
            self._pid_table = [
                (tag_id, crypto.derive_privacy_id(keys.id_secret, window))
                for tag_id, keys in self._registry]
        return self._pid_table

    def ingest_smarttag(self, beacon: SmartTagBeacon, reported_fix: Fix,
                        world: WorldState, *, helper: HelperDevice,
                        emitter: str, via: str) -> str:
        seq = self._seq
        self._seq += 1
        cost = 0
        match: str | None = None
        for tag_id, pid in self._candidates(aging_counter(world.abs_time())):
            cost += 1
            if pid == beacon.privacy_id:
                match = tag_id
                break
        self.verify_cost_units += cost
        if match is None:
            outcome = "signature-mismatch"
        else:
            prefix = smarttag_signed_prefix(beacon.tag_state,
                                            beacon.aging_counter,
                                            beacon.privacy_id, beacon.flags)
            if not crypto.verify_frame_sig(prefix, beacon.signature,
                                           self._keys[match].device_key):
                outcome = "signature-mismatch"
            elif distance_m(reported_fix, helper.ip_position) > self.ip_threshold_m:
                outcome = "ip-inconsistency"
            else:
                outcome = "accepted"
                self.smarttag_store[match].append(SmartTagRecord(
                    seq=seq, server_time=world.now, fix=reported_fix,
                    counter=beacon.aging_counter,
                    helper_token=helper.auth_token))
        world.record("ingest", "cloud",
                     f"arch=smarttag outcome={outcome} seq={seq} cost={cost} "
                     f"helper={helper.device_id} from={emitter} via={via} "
                     f"tag={match or '-'} "
                     f"lat={reported_fix.lat:.6f} lon={reported_fix.lon:.6f}")
        return outcome

    # --------------------------------------------------------- breach view

    def serialize(self) -> dict:
        """Everything a server-side breach would expose, JSON-shaped."""
        air = {}
        for idx in sorted(self.airtag_store):
            air[idx.hex()] = [
                {"seq": seq, "time": t, "ephemeral": rep.ephemeral.hex(),
                 "ciphertext": rep.ciphertext.hex(), "tag": rep.tag.hex()}
                for seq, t, rep in self.airtag_store[idx]]
        smart = {}
        for tag_id in sorted(self.smarttag_store):
            smart[tag_id] = [
                {"seq": r.seq, "time": r.server_time,
                 "lat": round(r.fix.lat, 6), "lon": round(r.fix.lon, 6),
                 "counter": r.counter, "helper_token": r.helper_token}
                for r in self.smarttag_store[tag_id]]
        return {"airtag": air, "smarttag": smart}


@dataclass
class OwnerDevice:
    """The paired phone: polls the cloud and keeps a location estimate.

    A routine poll fetches new records and decrypts only the newest one
    (what a finder app shows); full_query is the exhaustive audit that
    decrypts everything in a window.
    """

    device_id: str
    position: Fix
    tracker_id: str
    arch: str
    poll_interval: int
    chain: crypto.KeyChain | None = None    # curve-key path
    tag_id: str | None = None               # identifier path
    decrypt_attempts: int = 0
    polls: int = 0
    estimate: tuple[Fix, int] | None = None

    def __post_init__(self) -> None:
        self._epoch_keys: list[tuple[bytes, int]] = []
        self._epoch_days = 0
        self._cursors: dict[bytes, int] = {}
        self._latest: tuple[int, int] | None = None
        self._latest_report: tuple[crypto.EncryptedReport, int] | None = None
        self._decrypted: tuple[int, int] | None = None

    def _ensure_epochs(self, upto: int) -> None:
        needed = upto // EPOCH_SECONDS + 1
        while self._epoch_days < needed:
            self._epoch_days += 1
            ek = self.chain.at(self._epoch_days)
            self._epoch_keys.append((crypto.key_index(ek.pub), ek.d))

    def poll(self, world: WorldState) -> None:
        self.polls += 1
        before = self.decrypt_attempts
        new = 0
        if self.arch == "airtag":
            self._ensure_epochs(world.now)
            for kidx, _d in self._epoch_keys:
                recs = world.cloud.airtag_store.get(kidx)
                if not recs:
                    continue
                cur = self._cursors.get(kidx, 0)
                for seq, st, rep in recs[cur:]:
                    new += 1
                    if self._latest is None or (st, seq) > self._latest:
                        self._latest = (st, seq)
                        self._latest_report = (rep, _d)
                self._cursors[kidx] = len(recs)
            if self._latest is not None and self._latest != self._decrypted:
                rep, d = self._latest_report
                fix = crypto.decrypt_report(rep, d)
                self.decrypt_attempts += 1
                self._decrypted = self._latest
                self.estimate = (fix, self._latest[0])
        else:
            recs = world.cloud.smarttag_store.get(self.tag_id, [])
            cur = self._cursors.get(b"", 0)
            for rec in recs[cur:]:
                new += 1
                key = (rec.server_time, rec.seq)
                if self._latest is None or key > self._latest:
                    self._latest = key
                    self.estimate = (rec.fix, rec.server_time)
            self._cursors[b""] = len(recs)
        world.record("poll", self.device_id, self._poll_detail(new, before))

    def _poll_detail(self, new: int, attempts_before: int) -> str:
        detail = (f"tracker={self.tracker_id} new={new} "
                  f"attempts={self.decrypt_attempts - attempts_before}")
        if self.estimate is not None:
            fix, t = self.estimate
            detail += f" est_lat={fix.lat:.6f} est_lon={fix.lon:.6f} est_t={t}"
        else:
            detail += " est=-"
        return detail

    def full_query(self, world: WorldState, t0: int, t1: int) -> list[Fix]:
        """Fetch and open every report in [t0, t1], oldest first."""
        before = self.decrypt_attempts
        results: list[tuple[int, int, Fix]] = []
        if self.arch == "airtag":
            self._ensure_epochs(t1)
            for kidx, d in self._epoch_keys:
                for seq, st, rep in world.cloud.airtag_store.get(kidx, []):
                    if t0 <= st <= t1:
                        fix = crypto.decrypt_report(rep, d)
                        self.decrypt_attempts += 1
                        results.append((st, seq, fix))
        else:
            for rec in world.cloud.smarttag_store.get(self.tag_id, []):
                if t0 <= rec.server_time <= t1:
                    results.append((rec.server_time, rec.seq, rec.fix))
        results.sort(key=lambda r: (r[0], r[1]))
        if results:
            st, _seq, fix = results[-1]
            self.estimate = (fix, st)
        world.record("query", self.device_id,
                     f"tracker={self.tracker_id} t0={t0} t1={t1} "
                     f"found={len(results)} "
                     f"attempts={self.decrypt_attempts - before}")
        return [fix for _st, _seq, fix in results]
