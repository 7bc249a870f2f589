import math

import numpy as np
import pytest

from chebmap.distortion import (
    H1,
    H2,
    H3,
    classify_euler,
    distortion_report,
    local_scales,
    magnification,
    magnification_conformal,
    sample_scales,
    tissot,
)
from chebmap.errors import NotConformal, SingularPoint, StepUnderflow
from chebmap.geo import GeoPoint, geodesic_cap, latlon_quadrangle
from chebmap.projections import make_projection


def test_mercator_scale_is_secant():
    p = make_projection("mercator")
    s = local_scales(p, GeoPoint.from_degrees(10, 50))
    sec = 1 / math.cos(math.radians(50))
    assert s.tissot_a == pytest.approx(sec, rel=1e-8)
    assert s.tissot_b == pytest.approx(sec, rel=1e-8)
    assert s.m == pytest.approx(sec, rel=1e-8)
    assert s.angle_distortion < 1e-7


def test_equal_area_scales():
    p = make_projection("equal_area_cylindrical")
    s = local_scales(p, GeoPoint.from_degrees(0, 60))
    assert s.k_parallel == pytest.approx(2.0, rel=1e-8)
    assert s.k_meridian == pytest.approx(0.5, rel=1e-8)
    assert math.isnan(s.m)
    # omega = 2 asin((a - b) / (a + b))
    assert s.angle_distortion == pytest.approx(2 * math.asin(1.5 / 2.5), rel=1e-7)


def test_stereographic_scale_closed_form():
    # k = 2 / (1 + cos c) at angular distance c from the centre (unit scale)
    p = make_projection("stereographic")
    c = math.radians(40)
    m = magnification_conformal(p, GeoPoint(c, 0.0))
    assert m / magnification_conformal(p, GeoPoint(0.0, 0.0)) == pytest.approx(2 / (1 + math.cos(c)), rel=1e-12)


def test_step_bounds_and_singular():
    p = make_projection("mercator")
    with pytest.raises(StepUnderflow):
        local_scales(p, GeoPoint(0, 0), h=1e-9)
    with pytest.raises(StepUnderflow):
        local_scales(p, GeoPoint(0, 0), h=1e-2)
    with pytest.raises(SingularPoint):
        local_scales(p, GeoPoint.from_degrees(0, 85))
    with pytest.raises(NotConformal):
        magnification(make_projection("equal_area_cylindrical"), 0.0, 0.0)


def test_vectorized_magnification_matches_pointwise():
    p = make_projection("conformal_conic", n=0.6)
    lon = np.radians([-20, 0, 35])
    lat = np.radians([10, 40, 60])
    m = magnification(p, lon, lat)
    for k in range(3):
        assert m[k] == pytest.approx(magnification_conformal(p, GeoPoint(lon[k], lat[k])), rel=1e-14)
    t = tissot(p, lon, lat)
    assert np.allclose(t["a"], m, rtol=1e-7)


def test_mercator_band_ratio():
    band = latlon_quadrangle(*map(math.radians, (-10, 10, -20, 20)))
    rep = distortion_report(make_projection("mercator"), band, 32)
    assert rep.ratio == pytest.approx(1 / math.cos(math.radians(20)), rel=1e-6)
    assert H1 in rep.classification and H2 in rep.classification
    with pytest.raises(ValueError):
        distortion_report(make_projection("mercator"), band, 16)


@pytest.mark.parametrize(
    "kind,params,expected",
    [
        ("mercator", {}, {H1, H2}),
        ("equal_area_cylindrical", {}, {H1, H3}),
        ("stereographic", {}, {H2}),
        ("conformal_conic", {"n": 0.6}, {H2}),
        ("lagrange_circle", {"n": 1.0}, {H2}),
        ("delisle_conic", {"std_parallel_1": 0.0, "std_parallel_2": 0.3}, set()),
    ],
)
def test_euler_classification(kind, params, expected):
    cap = geodesic_cap(GeoPoint(0, 0), math.radians(30), 128)
    assert classify_euler(make_projection(kind, **params), cap) == frozenset(expected)


def test_sample_scales_reports_singular_sample():
    p = make_projection("stereographic", center=GeoPoint(0, 0))
    with pytest.raises(SingularPoint):
        sample_scales(p, np.array([0.0, math.pi]), np.array([0.0, 0.0]))


def test_chunked_evaluation_independent_of_threads(monkeypatch):
    p = make_projection("stereographic")
    rng = np.random.default_rng(0)
    lon = rng.uniform(-1, 1, 10000)
    lat = rng.uniform(-1, 1, 10000)
    monkeypatch.setenv("CHEBMAP_THREADS", "1")
    a = sample_scales(p, lon, lat)
    monkeypatch.setenv("CHEBMAP_THREADS", "4")
    b = sample_scales(p, lon, lat)
    for k in a:
        assert np.array_equal(a[k], b[k])
