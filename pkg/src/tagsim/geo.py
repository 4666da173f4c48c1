"""Flat-earth-adequate geometry for site-scale simulations."""

from __future__ import annotations

import math
from typing import NamedTuple

EARTH_RADIUS_M = 6371000.0


class Fix(NamedTuple):
    """A geographic position in decimal degrees."""

    lat: float
    lon: float


def distance_m(a: Fix, b: Fix) -> float:
    """Equirectangular distance in meters.

    Good to well under 1% at the sub-1000 km scales simulated here; not
    meaningful across poles or the antimeridian.
    """
    mean_lat = math.radians((a.lat + b.lat) / 2.0)
    dx = math.radians(b.lon - a.lon) * math.cos(mean_lat)
    dy = math.radians(b.lat - a.lat)
    return math.hypot(dx, dy) * EARTH_RADIUS_M


def grid_center(fix: Fix, cell_m: float = 10000.0) -> Fix:
    """Snap a position to the center of a lat/lon grid cell ~cell_m wide.

    Models the coarseness of IP-based geolocation: every client in a cell
    appears to be at its center.
    """
    step_lat = math.degrees(cell_m / EARTH_RADIUS_M)
    lat_idx = math.floor(fix.lat / step_lat)
    lat_c = (lat_idx + 0.5) * step_lat
    step_lon = math.degrees(cell_m / (EARTH_RADIUS_M * max(math.cos(math.radians(lat_c)), 1e-9)))
    lon_idx = math.floor(fix.lon / step_lon)
    return Fix(lat_c, (lon_idx + 0.5) * step_lon)
