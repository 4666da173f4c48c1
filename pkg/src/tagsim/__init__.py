"""tagsim: a deterministic simulator of crowd-sourced BLE finding networks.

Two architectures are modeled end to end: rotating-public-key beacons
sealed for the owner, and authenticated pseudonym beacons verified by the
server, together with the attack surface both expose: beacon spoofing and
replay, jamming zones, GPS/IP location spoofing, botnet-scale ambiguity
flooding, verification-cost denial of service, and covert data exfiltration
through the report store.
"""

from .backend import kernel, select
from .codec import (AdvertisementFrame, AirTagBeacon, SmartTagBeacon,
                    aging_counter, classify, decode_airtag, decode_smarttag,
                    encode_airtag, encode_smarttag)
from .geo import Fix, distance_m, grid_center
from .metrics import (MetricsAccumulator, cluster_positions,
                      report_from_trace, to_csv, to_json, to_text)
from .runner import RunResult, build_world, run_scenario
from .scenario import Scenario, ScenarioParseError, load_scenario, parse_scenario
from .world import JamZone, TraceLog, WorldState

__version__ = "0.1.0"

__all__ = [
    "AdvertisementFrame", "AirTagBeacon", "Fix", "JamZone",
    "MetricsAccumulator", "RunResult", "Scenario", "ScenarioParseError",
    "SmartTagBeacon", "TraceLog", "WorldState", "aging_counter",
    "build_world", "classify", "cluster_positions", "decode_airtag",
    "decode_smarttag", "distance_m", "encode_airtag", "encode_smarttag",
    "grid_center", "kernel", "load_scenario", "parse_scenario",
    "report_from_trace", "run_scenario", "select", "to_csv", "to_json",
    "to_text",
]
