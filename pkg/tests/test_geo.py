"""Flat-earth-locally distance model and IP-origin grid."""

from __future__ import annotations

import math

from hypothesis import given, settings
from hypothesis import strategies as st

from tagsim.geo import EARTH_RADIUS_M, Fix, distance_m, grid_center

MERIDIAN_DEGREE_M = math.pi * EARTH_RADIUS_M / 180.0  # 111194.9..


def test_identity():
    assert distance_m(Fix(35.0, -80.0), Fix(35.0, -80.0)) == 0.0


def test_meridian_degree():
    got = distance_m(Fix(0.0, 0.0), Fix(1.0, 0.0))
    assert abs(got - MERIDIAN_DEGREE_M) / MERIDIAN_DEGREE_M < 0.005
    got = distance_m(Fix(0.0, 0.0), Fix(0.0, 1.0))
    assert abs(got - MERIDIAN_DEGREE_M) / MERIDIAN_DEGREE_M < 0.005


def test_longitude_shrinks_with_latitude():
    at_equator = distance_m(Fix(0.0, 10.0), Fix(0.0, 11.0))
    at_sixty = distance_m(Fix(60.0, 10.0), Fix(60.0, 11.0))
    assert abs(at_sixty / at_equator - 0.5) < 0.01  # cos(60 deg)


@settings(max_examples=100, deadline=None)
@given(lat1=st.floats(-80, 80), lon1=st.floats(-179, 179),
       lat2=st.floats(-80, 80), lon2=st.floats(-179, 179))
def test_symmetry_and_positivity(lat1, lon1, lat2, lon2):
    a, b = Fix(lat1, lon1), Fix(lat2, lon2)
    assert distance_m(a, b) == distance_m(b, a)
    assert distance_m(a, b) >= 0.0


def test_small_offsets_scale_linearly():
    base = Fix(35.0, -80.0)
    one = distance_m(base, Fix(35.0001, -80.0))
    two = distance_m(base, Fix(35.0002, -80.0))
    assert abs(two - 2 * one) < 0.01
    assert 10.0 < one < 12.0  # 0.0001 deg latitude is ~11.1 m


def test_grid_center_quantizes():
    a = grid_center(Fix(35.0001, -80.0001))
    b = grid_center(Fix(35.0399, -80.0299))
    assert a == b  # same ~10 km cell
    far = grid_center(Fix(35.5, -80.0))
    assert far != a
    # center is stable under re-quantization
    assert grid_center(a) == a
