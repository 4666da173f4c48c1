"""Scenario files: a line-oriented declarative format for world setups.

The header is `key = value` pairs; three optional sections follow, started
by `[devices]`, `[zones]`, and `[attacks]`. Blank lines and `#` comments are
ignored anywhere. Validation collects every error with its line number
rather than stopping at the first.

Example::

    name = baseline
    seed = 42
    architecture = airtag
    duration = 3600

    [devices]
    tracker t1 lat=35.0 lon=-80.0
    owner o1 tracker=t1 lat=36.0 lon=-81.0 poll=30
    helper h1 lat=35.0001 lon=-80.0

    [zones]
    zone z1 lat=35.0 lon=-80.0 radius=500 from=0 to=3600

    [attacks]
    at 20 spoof a1 duration=300 rate=10
"""

from __future__ import annotations

import importlib.resources
import re
from dataclasses import dataclass, field

_ID_RE = re.compile(r"^[A-Za-z0-9_.-]+$")

ARCHITECTURES = ("airtag", "smarttag", "both")
ADVERSARY_CLASSES = ("A1", "A2", "A3", "A4")
ATTACK_VERBS = ("distribute", "spoof", "replay", "flood", "botnet",
                "gps-spoof", "vpn", "sendmy-send", "sendmy-recv")

HEADER_DEFAULTS = {
    "start-time": 1700000100,
    "ble-range": 50.0,
    "lost-threshold": 900,
    "adv-interval": 2,
    "poll-interval": 30,
    "ip-threshold-km": 25.0,
    "final-query": "none",
    "dedupe": "off",
}


class ScenarioParseError(ValueError):
    """All validation problems for one file, with line context."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class TrackerSpec:
    line: int
    device_id: str
    lat: float
    lon: float
    arch: str
    threshold: int
    interval: int


@dataclass(frozen=True)
class OwnerSpec:
    line: int
    device_id: str
    tracker: str
    lat: float
    lon: float
    poll: int


@dataclass(frozen=True)
class HelperSpec:
    line: int
    device_id: str
    lat: float
    lon: float
    scan: int


@dataclass(frozen=True)
class AttackerSpec:
    line: int
    device_id: str
    lat: float
    lon: float
    adversary_class: str
    rate: int


@dataclass(frozen=True)
class ZoneSpec:
    line: int
    zone_id: str
    lat: float
    lon: float
    radius: float
    t_from: int
    t_to: int


@dataclass(frozen=True)
class AttackSpec:
    line: int
    t: int
    verb: str
    actor: str
    args: dict


@dataclass
class Scenario:
    name: str
    seed: int
    architecture: str
    duration: int
    start_time: int = HEADER_DEFAULTS["start-time"]
    ble_range: float = HEADER_DEFAULTS["ble-range"]
    lost_threshold: int = HEADER_DEFAULTS["lost-threshold"]
    adv_interval: int = HEADER_DEFAULTS["adv-interval"]
    poll_interval: int = HEADER_DEFAULTS["poll-interval"]
    ip_threshold_km: float = HEADER_DEFAULTS["ip-threshold-km"]
    final_query: str = HEADER_DEFAULTS["final-query"]
    dedupe: bool = False
    trackers: list[TrackerSpec] = field(default_factory=list)
    owners: list[OwnerSpec] = field(default_factory=list)
    helpers: list[HelperSpec] = field(default_factory=list)
    attackers: list[AttackerSpec] = field(default_factory=list)
    zones: list[ZoneSpec] = field(default_factory=list)
    attacks: list[AttackSpec] = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.errors: list[str] = []
        self.lines = text.splitlines()
        self.header: dict[str, str] = {}
        self.header_lines: dict[str, int] = {}
        self.devices: list[tuple] = []      # (kind, line, id, kv)
        self.zones: list[tuple] = []        # (line, id, kv)
        self.attacks: list[tuple] = []      # (line, t_raw, verb, actor, kv)

    def err(self, line: int, message: str) -> None:
        self.errors.append(f"line {line}: {message}")

    # ------------------------------------------------------------ passes

    def split_sections(self) -> None:
        section = "header"
        for i, raw in enumerate(self.lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                if line in ("[devices]", "[zones]", "[attacks]"):
                    section = line[1:-1]
                else:
                    self.err(i, f"unknown section {line}")
                    section = "skip"
                continue
            getattr(self, f"_line_{section}", self._line_skip)(i, line)

    def _line_skip(self, i: int, line: str) -> None:
        pass

    def _line_header(self, i: int, line: str) -> None:
        if "=" not in line:
            self.err(i, f"expected 'key = value', got {line!r}")
            return
        key, value = (part.strip() for part in line.split("=", 1))
        known = ("name", "seed", "architecture", "duration",
                 *HEADER_DEFAULTS)
        if key not in known:
            self.err(i, f"unknown header key {key!r}")
            return
        if key in self.header:
            self.err(i, f"duplicate header key {key!r}")
            return
        self.header[key] = value
        self.header_lines[key] = i

    def _kv(self, i: int, tokens: list[str]) -> dict[str, str] | None:
        out = {}
        for tok in tokens:
            if "=" not in tok:
                self.err(i, f"expected key=value, got {tok!r}")
                return None
            k, v = tok.split("=", 1)
            if k in out:
                self.err(i, f"duplicate parameter {k!r}")
                return None
            out[k] = v
        return out

    def _line_devices(self, i: int, line: str) -> None:
        tokens = line.split()
        if len(tokens) < 2 or tokens[0] not in ("tracker", "owner", "helper",
                                                "attacker"):
            self.err(i, f"expected 'tracker|owner|helper|attacker <id> "
                        f"k=v ...', got {line!r}")
            return
        kv = self._kv(i, tokens[2:])
        if kv is not None:
            self.devices.append((tokens[0], i, tokens[1], kv))

    def _line_zones(self, i: int, line: str) -> None:
        tokens = line.split()
        if len(tokens) < 2 or tokens[0] != "zone":
            self.err(i, f"expected 'zone <id> k=v ...', got {line!r}")
            return
        kv = self._kv(i, tokens[2:])
        if kv is not None:
            self.zones.append((i, tokens[1], kv))

    def _line_attacks(self, i: int, line: str) -> None:
        tokens = line.split()
        if len(tokens) < 4 or tokens[0] != "at":
            self.err(i, f"expected 'at <t> <verb> <actor> k=v ...', "
                        f"got {line!r}")
            return
        kv = self._kv(i, tokens[4:])
        if kv is not None:
            self.attacks.append((i, tokens[1], tokens[2], tokens[3], kv))

    # ----------------------------------------------------------- typing

    def _typed(self, line: int, name: str, raw: str, kind, check=None,
               want: str = ""):
        try:
            value = kind(raw)
        except ValueError:
            label = {"_hexbytes": "hex bytes", "_sweep": "a counter sweep"}
            kind_name = label.get(kind.__name__, kind.__name__)
            self.err(line, f"{name}: expected {kind_name}, got {raw!r}")
            return None
        if check is not None and not check(value):
            self.err(line, f"{name}: {want}, got {raw!r}")
            return None
        return value

    def _take(self, line: int, kv: dict, name: str, kind, *, default=None,
              required=False, check=None, want: str = ""):
        if name not in kv:
            if required:
                self.err(line, f"missing required parameter {name!r}")
                return None
            return default
        return self._typed(line, name, kv.pop(name), kind, check, want)

    def _leftover(self, line: int, kv: dict) -> None:
        for key in kv:
            self.err(line, f"unknown parameter {key!r}")

    def _hexbytes(self, raw: str) -> bytes:
        if raw == "-":
            return b""
        return bytes.fromhex(raw)

    def _sweep(self, raw: str) -> tuple[int, ...]:
        if ".." in raw:
            lo, hi = raw.split("..", 1)
            values = tuple(range(int(lo), int(hi) + 1))
        else:
            values = tuple(int(part) for part in raw.split(","))
        if not values or not all(0 <= v <= 255 for v in values):
            raise ValueError(raw)
        return values

    # ------------------------------------------------------------ build

    def build(self) -> Scenario:
        self.split_sections()
        sc = self._build_header()
        ids: dict[str, int] = {}

        def claim(line: int, device_id: str) -> bool:
            if not _ID_RE.match(device_id):
                self.err(line, f"invalid id {device_id!r}")
                return False
            if device_id in ids:
                self.err(line, f"duplicate id {device_id!r} "
                               f"(first defined on line {ids[device_id]})")
                return False
            ids[device_id] = line
            return True

        kinds: dict[str, str] = {}
        for kind, line, device_id, kv in self.devices:
            if not claim(line, device_id):
                continue
            kinds[device_id] = kind
            getattr(self, f"_build_{kind}")(sc, line, device_id, kv)
        for line, zone_id, kv in self.zones:
            if claim(line, zone_id):
                self._build_zone(sc, line, zone_id, kv)
        self._crosscheck_devices(sc, kinds)
        for line, t_raw, verb, actor, kv in self.attacks:
            self._build_attack(sc, line, t_raw, verb, actor, kv, kinds)
        if self.errors:
            raise ScenarioParseError(self.errors)
        return sc

    def _build_header(self) -> Scenario:
        h, hl = self.header, self.header_lines

        def need(key: str, kind, check=None, want: str = ""):
            if key not in h:
                self.err(1, f"missing required header {key!r}")
                return None
            return self._typed(hl[key], key, h[key], kind, check, want)

        def opt(key: str, kind, check=None, want: str = ""):
            if key not in h:
                return HEADER_DEFAULTS[key]
            return self._typed(hl[key], key, h[key], kind, check, want)

        name = need("name", str, lambda s: bool(_ID_RE.match(s)),
                    "must be letters, digits, ., _, -")
        seed = need("seed", int, lambda v: 0 <= v < 1 << 64,
                    "must fit in 64 bits")
        arch = need("architecture", str, lambda s: s in ARCHITECTURES,
                    f"must be one of {'/'.join(ARCHITECTURES)}")
        duration = need("duration", int, lambda v: v > 0, "must be positive")
        sc = Scenario(name=name or "invalid", seed=seed or 0,
                      architecture=arch or "airtag",
                      duration=duration if duration and duration > 0 else 1)
        sc.start_time = opt("start-time", int, lambda v: v >= 0,
                            "must be non-negative")
        sc.ble_range = opt("ble-range", float, lambda v: v > 0,
                           "must be positive")
        sc.lost_threshold = opt("lost-threshold", int, lambda v: v >= 0,
                                "must be non-negative")
        sc.adv_interval = opt("adv-interval", int, lambda v: v >= 1,
                              "must be at least 1")
        sc.poll_interval = opt("poll-interval", int, lambda v: v >= 1,
                               "must be at least 1")
        sc.ip_threshold_km = opt("ip-threshold-km", float, lambda v: v > 0,
                                 "must be positive")
        final = opt("final-query", str, lambda s: s in ("none", "full"),
                    "must be none or full")
        sc.final_query = final or "none"
        dedupe = opt("dedupe", str, lambda s: s in ("on", "off"),
                     "must be on or off")
        sc.dedupe = dedupe == "on"
        return sc

    def _pos(self, line: int, kv: dict) -> tuple[float, float] | None:
        lat = self._take(line, kv, "lat", float, required=True,
                         check=lambda v: -90 <= v <= 90,
                         want="must be a latitude in [-90, 90]")
        lon = self._take(line, kv, "lon", float, required=True,
                         check=lambda v: -180 <= v <= 180,
                         want="must be a longitude in [-180, 180]")
        if lat is None or lon is None:
            return None
        return lat, lon

    def _build_tracker(self, sc: Scenario, line: int, device_id: str,
                       kv: dict) -> None:
        pos = self._pos(line, kv)
        arch = self._take(line, kv, "arch", str,
                          check=lambda s: s in ("airtag", "smarttag"),
                          want="must be airtag or smarttag")
        threshold = self._take(line, kv, "threshold", int,
                               default=sc.lost_threshold,
                               check=lambda v: v >= 0,
                               want="must be non-negative")
        interval = self._take(line, kv, "interval", int,
                              default=sc.adv_interval,
                              check=lambda v: v >= 1, want="must be >= 1")
        self._leftover(line, kv)
        if arch is None:
            if sc.architecture == "both":
                self.err(line, "tracker must declare arch=airtag|smarttag "
                               "in an architecture=both scenario")
                return
            arch = sc.architecture
        elif sc.architecture != "both" and arch != sc.architecture:
            self.err(line, f"tracker arch {arch!r} conflicts with scenario "
                           f"architecture {sc.architecture!r}")
            return
        if pos is None or threshold is None or interval is None:
            return
        sc.trackers.append(TrackerSpec(line, device_id, pos[0], pos[1],
                                       arch, threshold, interval))

    def _build_owner(self, sc: Scenario, line: int, device_id: str,
                     kv: dict) -> None:
        tracker = self._take(line, kv, "tracker", str, required=True)
        pos = self._pos(line, kv)
        poll = self._take(line, kv, "poll", int, default=sc.poll_interval,
                          check=lambda v: v >= 1, want="must be >= 1")
        self._leftover(line, kv)
        if tracker is None or pos is None or poll is None:
            return
        sc.owners.append(OwnerSpec(line, device_id, tracker, pos[0], pos[1],
                                   poll))

    def _build_helper(self, sc: Scenario, line: int, device_id: str,
                      kv: dict) -> None:
        pos = self._pos(line, kv)
        scan = self._take(line, kv, "scan", int, default=1,
                          check=lambda v: v >= 1, want="must be >= 1")
        self._leftover(line, kv)
        if pos is None or scan is None:
            return
        sc.helpers.append(HelperSpec(line, device_id, pos[0], pos[1], scan))

    def _build_attacker(self, sc: Scenario, line: int, device_id: str,
                        kv: dict) -> None:
        pos = self._pos(line, kv)
        cls = self._take(line, kv, "class", str, default="A2",
                         check=lambda s: s in ADVERSARY_CLASSES,
                         want=f"must be one of {'/'.join(ADVERSARY_CLASSES)}")
        rate = self._take(line, kv, "rate", int, default=10,
                          check=lambda v: v >= 1, want="must be >= 1")
        self._leftover(line, kv)
        if pos is None or cls is None or rate is None:
            return
        sc.attackers.append(AttackerSpec(line, device_id, pos[0], pos[1],
                                         cls, rate))

    def _build_zone(self, sc: Scenario, line: int, zone_id: str,
                    kv: dict) -> None:
        pos = self._pos(line, kv)
        radius = self._take(line, kv, "radius", float, required=True,
                            check=lambda v: v > 0, want="must be positive")
        t_from = self._take(line, kv, "from", int, required=True,
                            check=lambda v: 0 <= v <= sc.duration,
                            want="must be within [0, duration]")
        t_to = self._take(line, kv, "to", int, required=True,
                          check=lambda v: 0 <= v <= sc.duration,
                          want="must be within [0, duration]")
        self._leftover(line, kv)
        if None in (pos, radius, t_from, t_to):
            return
        if t_from >= t_to:
            self.err(line, f"zone window is empty ({t_from} >= {t_to})")
            return
        sc.zones.append(ZoneSpec(line, zone_id, pos[0], pos[1], radius,
                                 t_from, t_to))

    def _crosscheck_devices(self, sc: Scenario, kinds: dict) -> None:
        tracker_arch = {t.device_id: t.arch for t in sc.trackers}
        owned: dict[str, str] = {}
        for o in sc.owners:
            if kinds.get(o.tracker) != "tracker":
                self.err(o.line, f"owner {o.device_id!r} references unknown "
                                 f"tracker {o.tracker!r}")
            elif o.tracker in owned:
                self.err(o.line, f"tracker {o.tracker!r} already owned by "
                                 f"{owned[o.tracker]!r}")
            elif o.tracker in tracker_arch:
                owned[o.tracker] = o.device_id

    def _build_attack(self, sc: Scenario, line: int, t_raw: str, verb: str,
                      actor: str, kv: dict, kinds: dict) -> None:
        t = self._typed(line, "time", t_raw, int,
                        lambda v: 0 <= v <= sc.duration,
                        "must be within [0, duration]")
        if verb not in ATTACK_VERBS:
            self.err(line, f"unknown attack verb {verb!r}")
            return
        needs = "helper" if verb in ("gps-spoof", "vpn") else "attacker"
        if kinds.get(actor) != needs:
            self.err(line, f"{verb} requires a {needs} actor; "
                           f"{actor!r} is {kinds.get(actor, 'undefined')}")
            return
        args = self._attack_args(sc, line, verb, kv, kinds)
        if t is None or args is None:
            return
        sc.attacks.append(AttackSpec(line, t, verb, actor, args))

    def _attack_args(self, sc: Scenario, line: int, verb: str, kv: dict,
                     kinds: dict) -> dict | None:
        args: dict = {}
        ok = True

        def take(name, kind, **kw):
            nonlocal ok
            value = self._take(line, kv, name, kind, **kw)
            if value is None and (kw.get("required") or "default" not in kw):
                ok = False
            args[name] = value
            return value

        def id_list(name):
            nonlocal ok
            raw = self._take(line, kv, name, str, required=True)
            if raw is None:
                ok = False
                return
            targets = raw.split(",")
            for tid in targets:
                if kinds.get(tid) != "attacker":
                    self.err(line, f"{name} entry {tid!r} is not a "
                                   f"defined attacker")
                    ok = False
            args[name] = targets

        if verb == "spoof":
            take("duration", int, required=True, check=lambda v: v >= 1,
                 want="must be >= 1")
            take("rate", int, required=True, check=lambda v: v >= 1,
                 want="must be >= 1")
            take("sweep", self._sweep, default=None)
        elif verb == "flood":
            take("duration", int, required=True, check=lambda v: v >= 1,
                 want="must be >= 1")
            take("rate", int, required=True, check=lambda v: v >= 1,
                 want="must be >= 1")
        elif verb == "replay":
            take("index", int, default=0)
        elif verb == "distribute":
            id_list("to")
            take("index", int, default=-1)
        elif verb == "botnet":
            id_list("bots")
            take("duration", int, required=True, check=lambda v: v >= 1,
                 want="must be >= 1")
            take("rate", int, required=True, check=lambda v: v >= 1,
                 want="must be >= 1")
        elif verb in ("gps-spoof", "vpn"):
            pos = self._pos(line, kv)
            if pos is None:
                ok = False
            else:
                args["lat"], args["lon"] = pos
        elif verb == "sendmy-send":
            take("payload", self._hexbytes, required=True)
            take("secret", self._hexbytes, required=True,
                 check=lambda b: len(b) > 0, want="must be non-empty hex")
            take("rate", int, default=8, check=lambda v: v >= 1,
                 want="must be >= 1")
        elif verb == "sendmy-recv":
            take("bits", int, required=True, check=lambda v: v >= 0,
                 want="must be non-negative")
            take("secret", self._hexbytes, required=True,
                 check=lambda b: len(b) > 0, want="must be non-empty hex")
        self._leftover(line, kv)
        return args if ok else None


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate; raises ScenarioParseError listing every
    problem found."""
    return _Parser(text).build()


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def bundled_scenarios() -> dict[str, str]:
    """Name -> text of every scenario file shipped with the package."""
    root = importlib.resources.files("tagsim") / "scenarios"
    out = {}
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".scenario"):
            out[entry.name.removesuffix(".scenario")] = entry.read_text()
    return out
