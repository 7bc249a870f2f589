import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chebmap.errors import DegenerateCenters, NoIntersection, PoleError
from chebmap.geo import (
    GeoPoint,
    Region,
    angle_between,
    from_xyz,
    geodesic_cap,
    geodesic_distance,
    gudermannian,
    isometric_latitude,
    latlon_quadrangle,
    mercator_forward,
    mercator_inverse,
    plane_circle_intersect,
    resample_boundary,
    sphere_circle_intersect,
    to_xyz,
    wrap_lon,
)

lats = st.floats(-1.4, 1.4)
lons = st.floats(-math.pi, math.pi)


def test_geopoint_wraps_and_rejects_poles():
    p = GeoPoint(3 * math.pi / 2, 0.1)
    assert p.lon == pytest.approx(-math.pi / 2)
    assert wrap_lon(-math.pi) == math.pi
    with pytest.raises(PoleError):
        GeoPoint(0.0, math.pi / 2)
    with pytest.raises(ValueError):
        GeoPoint(float("nan"), 0.0)


@given(lons, lats)
def test_xyz_round_trip(lon, lat):
    v = to_xyz(lon, lat)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    lo, la = from_xyz(v)
    assert la == pytest.approx(lat, abs=1e-12)
    assert math.cos(lo - lon) == pytest.approx(1.0, abs=1e-12)


@given(lats)
def test_isometric_latitude_inverse(lat):
    assert gudermannian(isometric_latitude(lat)) == pytest.approx(lat, abs=1e-13)


def test_isometric_latitude_closed_form():
    # ln tan(pi/4 + lat/2) at 45 degrees
    assert isometric_latitude(math.radians(45)) == pytest.approx(math.log(1 + math.sqrt(2)), rel=1e-14)


def test_mercator_round_trip_and_cap():
    p = GeoPoint.from_degrees(40.0, -60.0)
    q = mercator_forward(p)
    back = mercator_inverse(q)
    assert back.lon == pytest.approx(p.lon, abs=1e-14)
    assert back.lat == pytest.approx(p.lat, abs=1e-14)
    with pytest.raises(PoleError):
        mercator_forward(GeoPoint.from_degrees(0, 85.0))


def test_geodesic_distance_quarter_circle():
    a = GeoPoint(0.0, 0.0)
    b = GeoPoint(math.pi / 2, 0.0)
    assert geodesic_distance(a, b) == pytest.approx(math.pi / 2, abs=1e-15)
    # tiny angles stay accurate
    assert angle_between([1, 0, 0], [1, 1e-12, 0]) == pytest.approx(1e-12, rel=1e-9)


def test_sphere_circle_intersect_octant():
    # x and y axes, 90 deg circles: they meet at the poles
    roots = sphere_circle_intersect([1, 0, 0], math.pi / 2, [0, 1, 0], math.pi / 2)
    assert len(roots) == 2
    assert np.allclose(roots[0], [0, 0, 1], atol=1e-15)  # positive side of c1 x c2 first
    assert np.allclose(roots[1], [0, 0, -1], atol=1e-15)


@settings(max_examples=50)
@given(lons, st.floats(-1.2, 1.2), st.floats(0.05, 0.6), st.floats(0.3, 0.9))
def test_sphere_circle_intersect_distances(lon, lat, sep, r):
    c1 = to_xyz(lon, lat)
    c2 = to_xyz(lon + sep, lat)
    try:
        roots = sphere_circle_intersect(c1, r, c2, r)
    except NoIntersection:
        assert angle_between(c1, c2) > 2 * r - 1e-9
        return
    for p in roots:
        assert angle_between(p, c1) == pytest.approx(r, abs=1e-9)
        assert angle_between(p, c2) == pytest.approx(r, abs=1e-9)


def test_sphere_circle_errors():
    with pytest.raises(NoIntersection):
        sphere_circle_intersect([1, 0, 0], 0.1, [0, 1, 0], 0.1)
    with pytest.raises(DegenerateCenters):
        sphere_circle_intersect([1, 0, 0], 0.1, [1, 0, 0], 0.2)
    # tangent circles give a single point
    roots = sphere_circle_intersect([1, 0, 0], math.pi / 4, [0, 1, 0], math.pi / 4)
    assert len(roots) == 1
    assert np.allclose(roots[0], np.array([1, 1, 0]) / math.sqrt(2), atol=1e-6)


def test_plane_circle_intersect():
    r = plane_circle_intersect(0j, 1.0, 1 + 0j, 1.0)
    assert r[0] == pytest.approx(0.5 + 1j * math.sqrt(3) / 2)
    assert r[1] == pytest.approx(0.5 - 1j * math.sqrt(3) / 2)
    with pytest.raises(NoIntersection):
        plane_circle_intersect(0j, 1.0, 3 + 0j, 1.0)


def test_region_orientation_and_closing_point():
    lon = [0, 10, 10, 0, 0]
    lat = [0, 0, 10, 10, 0]
    ccw = Region.from_degrees(lon, lat)
    cw = Region.from_degrees(lon[::-1], lat[::-1])
    assert len(ccw) == 4
    assert np.allclose(ccw.lon, [0, math.radians(10), math.radians(10), 0])
    assert set(np.round(np.degrees(cw.lon), 9)) == {0.0, 10.0}
    # both are stored counterclockwise: first turn is to the left
    for reg in (ccw, cw):
        z = reg.lon + 1j * isometric_latitude(reg.lat)
        assert (np.conj(z[1] - z[0]) * (z[2] - z[1])).imag > 0


def test_region_rejects_bad_input():
    with pytest.raises(ValueError):
        Region.from_degrees([0, 1], [0, 1])
    with pytest.raises(PoleError):
        Region.from_degrees([0, 10, 5], [80, 80, 89])


def test_cap_centroid_and_radius():
    c = GeoPoint.from_degrees(20.0, 35.0)
    cap = geodesic_cap(c, math.radians(25.0), 128)
    d = angle_between(cap.xyz(), c.to_xyz())
    assert np.allclose(d, math.radians(25.0), atol=1e-13)
    cen = cap.centroid()
    assert geodesic_distance(cen, c) < 1e-6


def test_quadrangle_edges_follow_parallels():
    q = latlon_quadrangle(*map(math.radians, (-20, 20, 30, 50)))
    assert np.max(q.edge_lengths()) <= math.radians(0.5) + 1e-12
    assert math.degrees(q.lat.min()) == pytest.approx(30)
    assert math.degrees(q.lat.max()) == pytest.approx(50)


def test_resample_boundary_uniform_and_keeps_vertices():
    cap = geodesic_cap(GeoPoint(0, 0), 0.3, 64)
    r = resample_boundary(cap, 128)
    assert len(r) == 128
    e = r.edge_lengths()
    assert e.max() / e.min() < 1.1
    q = Region.from_degrees([0, 10, 10, 0], [0, 0, 10, 10])
    r = resample_boundary(q, 40)
    e = r.edge_lengths()
    assert len(r) == 40
    assert e.max() / e.min() < 1.1
    with pytest.raises(ValueError):
        resample_boundary(q, 4)
