"""Metrics: a single fold over trace records.

The accumulator consumes the same (time, kind, actor, detail) tuples the
world writes, whether streamed live during a run or replayed from a stored
trace, so every reported number is recomputable from the trace alone. The
finished report is a plain dict with a canonical JSON form (sorted keys,
fixed float rounding) so equal runs are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json

from .geo import Fix, distance_m

CLUSTER_RADIUS_M = 100.0   # fixes within this of a representative co-cluster
ATTACK_VIAS = ("spoof", "replay", "flood", "channel")


def _parse_detail(detail: str) -> dict[str, str]:
    out = {}
    for token in detail.split():
        if "=" in token:
            key, value = token.split("=", 1)
            out[key] = value
    return out


def cluster_positions(fixes: list[tuple[float, float]],
                      radius_m: float = CLUSTER_RADIUS_M) -> list[tuple[float, float]]:
    """Greedy first-match clustering; returns the representatives."""
    reps: list[tuple[float, float]] = []
    for lat, lon in fixes:
        fix = Fix(lat, lon)
        for rep in reps:
            if distance_m(fix, Fix(rep[0], rep[1])) <= radius_m:
                break
        else:
            reps.append((lat, lon))
    return reps


class MetricsAccumulator:
    """Folds trace records into counters and series."""

    def __init__(self) -> None:
        self._hash = hashlib.sha256()
        self.events = 0
        self.scenario: dict = {}
        self.trackers: dict[str, dict] = {}
        self.owners: dict[str, dict] = {}
        self.counters = {
            "emits": {}, "delivers": 0, "jams": 0, "captures": 0,
            "drops": {}, "ingests": {},
        }
        self.per_helper: dict[str, dict[str, int]] = {}
        self.spoof = {"delivered": 0, "accepted": 0}
        self.replay: list[tuple[int, str]] = []
        self.server = {"cost_units": 0, "airtag_reports": 0,
                       "smarttag_reports": 0}
        self.lost_transitions: list[tuple[str, int, str]] = []
        self.accepted_fixes: dict[tuple[float, float], int] = {}
        self.poll_series: list[dict] = []
        self.sendmy: dict | None = None

    # -------------------------------------------------------------- fold

    def apply(self, rec: tuple[int, str, str, str]) -> None:
        t, kind, actor, detail = rec
        self._hash.update(f"{t:010d} {kind} {actor} {detail}\n".encode())
        self.events += 1
        handler = getattr(self, f"_on_{kind.replace('-', '_')}", None)
        if handler is not None:
            handler(t, actor, _parse_detail(detail))

    def _on_scenario(self, t: int, actor: str, kv: dict) -> None:
        self.scenario = {"name": actor, **kv}

    def _on_device(self, t: int, actor: str, kv: dict) -> None:
        if kv.get("role") == "tracker":
            self.trackers[actor] = {"lat": float(kv["lat"]),
                                    "lon": float(kv["lon"]),
                                    "arch": kv["arch"]}
        elif kv.get("role") == "owner":
            self.owners[actor] = {
                "tracker": kv["tracker"], "decrypt_attempts": 0, "polls": 0,
                "estimates": [],  # (t, lat, lon, est_time)
            }

    def _on_mode(self, t: int, actor: str, kv: dict) -> None:
        self.lost_transitions.append((actor, t, kv["state"]))

    def _on_emit(self, t: int, actor: str, kv: dict) -> None:
        key = kv.get("via", "tag")
        emits = self.counters["emits"]
        emits[key] = emits.get(key, 0) + 1

    def _on_deliver(self, t: int, actor: str, kv: dict) -> None:
        self.counters["delivers"] += 1
        if kv.get("via") == "spoof":
            self.spoof["delivered"] += 1

    def _on_jam(self, t: int, actor: str, kv: dict) -> None:
        self.counters["jams"] += 1

    def _on_capture(self, t: int, actor: str, kv: dict) -> None:
        self.counters["captures"] += 1

    def _on_drop(self, t: int, actor: str, kv: dict) -> None:
        drops = self.counters["drops"]
        cause = kv.get("cause", "unknown")
        drops[cause] = drops.get(cause, 0) + 1

    def _on_ingest(self, t: int, actor: str, kv: dict) -> None:
        outcome = kv["outcome"]
        ingests = self.counters["ingests"]
        ingests[outcome] = ingests.get(outcome, 0) + 1
        self.server["cost_units"] += int(kv.get("cost", 0))
        helper = kv.get("helper", "?")
        per = self.per_helper.setdefault(helper, {})
        per[outcome] = per.get(outcome, 0) + 1
        via = kv.get("via", "tag")
        if accepted := outcome == "accepted":
            arch_key = f"{kv.get('arch', '?')}_reports"
            if arch_key in self.server:
                self.server[arch_key] += 1
            pos = (round(float(kv["lat"]), 6), round(float(kv["lon"]), 6))
            self.accepted_fixes[pos] = self.accepted_fixes.get(pos, 0) + 1
        if via == "spoof" and accepted:
            self.spoof["accepted"] += 1
        if via == "replay":
            self.replay.append((t, outcome))

    def _on_poll(self, t: int, actor: str, kv: dict) -> None:
        owner = self.owners.setdefault(
            actor, {"tracker": kv.get("tracker", "?"), "decrypt_attempts": 0,
                    "polls": 0, "estimates": []})
        owner["polls"] += 1
        owner["decrypt_attempts"] += int(kv.get("attempts", 0))
        est = None
        if "est_lat" in kv:
            est = (float(kv["est_lat"]), float(kv["est_lon"]),
                   int(kv["est_t"]))
        owner["estimates"].append((t, est))
        self.poll_series.append({"t": t, "owner": actor,
                                 "tracker": owner["tracker"], "est": est})

    def _on_query(self, t: int, actor: str, kv: dict) -> None:
        owner = self.owners.setdefault(
            actor, {"tracker": kv.get("tracker", "?"), "decrypt_attempts": 0,
                    "polls": 0, "estimates": []})
        owner["decrypt_attempts"] += int(kv.get("attempts", 0))

    def _on_attack(self, t: int, actor: str, kv: dict) -> None:
        op = kv.get("op")
        if op == "sendmy-send":
            payload = kv.get("payload", "-")
            self.sendmy = {"payload": "" if payload == "-" else payload,
                           "sent_bits": int(kv.get("bits", 0)),
                           "decoded": None, "erasures": None,
                           "roundtrip_ok": False}
        elif op == "sendmy-recv" and self.sendmy is not None:
            decoded = kv.get("decoded", "-")
            self.sendmy["decoded"] = None if decoded == "-" else decoded
            self.sendmy["erasures"] = int(kv.get("erasures", 0))
            self.sendmy["roundtrip_ok"] = (
                self.sendmy["erasures"] == 0
                and self.sendmy["decoded"] == self.sendmy["payload"])

    # ---------------------------------------------------------- finalize

    def _owner_report(self, owner_id: str, data: dict) -> dict:
        tracker = self.trackers.get(data["tracker"])
        true_pos = Fix(tracker["lat"], tracker["lon"]) if tracker else None
        final = None
        final_err = None
        within = 0
        alternations = 0
        prev = None
        for _t, est in data["estimates"]:
            if est is None:
                continue
            pos = Fix(est[0], est[1])
            if prev is not None and distance_m(pos, prev) > CLUSTER_RADIUS_M:
                alternations += 1
            prev = pos
            if true_pos is not None and \
                    distance_m(pos, true_pos) <= CLUSTER_RADIUS_M:
                within += 1
            final = est
        if final is not None and true_pos is not None:
            final_err = round(distance_m(Fix(final[0], final[1]), true_pos), 2)
        polls = data["polls"]
        return {
            "tracker": data["tracker"],
            "decrypt_attempts": data["decrypt_attempts"],
            "polls": polls,
            "final_estimate": ([round(final[0], 6), round(final[1], 6),
                                final[2]] if final else None),
            "final_error_m": final_err,
            "alternations": alternations,
            "estimate_within_100m_fraction":
                round(within / polls, 6) if polls else None,
        }

    def finalize(self) -> dict:
        delivered = self.spoof["delivered"]
        spoof = {
            "delivered": delivered,
            "accepted": self.spoof["accepted"],
            "acceptance_rate": (round(self.spoof["accepted"] / delivered, 6)
                                if delivered else None),
        }
        series = []
        for row in self.poll_series:
            est = row["est"]
            err = None
            tracker = self.trackers.get(row["tracker"])
            if est is not None and tracker is not None:
                err = round(distance_m(Fix(est[0], est[1]),
                                       Fix(tracker["lat"], tracker["lon"])), 2)
            series.append({
                "t": row["t"], "owner": row["owner"],
                "tracker": row["tracker"],
                "est_lat": round(est[0], 6) if est else None,
                "est_lon": round(est[1], 6) if est else None,
                "est_time": est[2] if est else None,
                "error_m": err,
            })
        return {
            "scenario": self.scenario,
            "events": self.events,
            "trace_digest": self._hash.hexdigest(),
            "counters": self.counters,
            "server": self.server,
            "per_helper": self.per_helper,
            "spoof": spoof,
            "replay": [[t, outcome] for t, outcome in self.replay],
            "owners": {oid: self._owner_report(oid, data)
                       for oid, data in sorted(self.owners.items())},
            "accepted_fix_clusters":
                len(cluster_positions(list(self.accepted_fixes))),
            "lost_transitions": [[a, t, s]
                                 for a, t, s in self.lost_transitions],
            "sendmy": self.sendmy,
            "poll_series": series,
        }


def report_from_trace(records) -> dict:
    """Recompute the full report from stored trace records."""
    acc = MetricsAccumulator()
    for rec in records:
        acc.apply(rec)
    return acc.finalize()


# ------------------------------------------------------------- emission

def to_json(report: dict) -> str:
    """Canonical machine form: sorted keys, no whitespace, '\\n' terminated."""
    return json.dumps(report, sort_keys=True, separators=(",", ":"),
                      allow_nan=False) + "\n"


def to_csv(report: dict) -> str:
    """The location-error series, one row per owner poll."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "owner", "tracker", "est_lat", "est_lon",
                     "est_time", "error_m"])
    for row in report["poll_series"]:
        writer.writerow([
            row["t"], row["owner"], row["tracker"],
            "" if row["est_lat"] is None else row["est_lat"],
            "" if row["est_lon"] is None else row["est_lon"],
            "" if row["est_time"] is None else row["est_time"],
            "" if row["error_m"] is None else row["error_m"],
        ])
    return buf.getvalue()


def to_text(report: dict) -> str:
    """Human summary."""
    sc = report["scenario"]
    lines = [
        f"scenario {sc.get('name', '?')} seed={sc.get('seed', '?')} "
        f"arch={sc.get('arch', '?')} duration={sc.get('duration', '?')}s",
        f"events {report['events']}  digest {report['trace_digest'][:16]}..",
        "counters:",
    ]
    for key in ("emits", "delivers", "jams", "captures", "drops", "ingests"):
        lines.append(f"  {key}: {report['counters'][key]}")
    srv = report["server"]
    lines.append(f"server: cost={srv['cost_units']} "
                 f"airtag_reports={srv['airtag_reports']} "
                 f"smarttag_reports={srv['smarttag_reports']}")
    if report["spoof"]["delivered"]:
        sp = report["spoof"]
        lines.append(f"spoof: delivered={sp['delivered']} "
                     f"accepted={sp['accepted']} "
                     f"rate={sp['acceptance_rate']}")
    for t, outcome in report["replay"]:
        lines.append(f"replay at t={t}: {outcome}")
    lines.append(f"accepted fix clusters: {report['accepted_fix_clusters']}")
    for oid, own in report["owners"].items():
        est = own["final_estimate"]
        where = (f"({est[0]}, {est[1]}) from t={est[2]}, "
                 f"err {own['final_error_m']} m" if est else "none")
        lines.append(f"owner {oid}: polls={own['polls']} "
                     f"attempts={own['decrypt_attempts']} estimate {where}")
    if report["sendmy"] is not None:
        sm = report["sendmy"]
        lines.append(f"sendmy: bits={sm['sent_bits']} "
                     f"decoded={sm['decoded'] or '-'} "
                     f"erasures={sm['erasures']} ok={sm['roundtrip_ok']}")
    for actor, t, state in report["lost_transitions"]:
        lines.append(f"mode: {actor} -> {state} at t={t}")
    return "\n".join(lines) + "\n"
