import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chebmap.errors import BadParam, InsufficientSamples, SingularPoint
from chebmap.geo import GeoPoint, gudermannian
from chebmap.projections import (
    CONFORMAL_KINDS,
    KINDS,
    fit_circle,
    great_circle_image_check,
    make_projection,
    project,
)

DEFAULTS = {
    "mercator": {},
    "equal_area_cylindrical": {},
    "stereographic": {"center": GeoPoint.from_degrees(15, 30)},
    "conformal_conic": {"n": 0.6, "central_meridian": 0.2},
    "lagrange_circle": {"n": 0.8},
    "delisle_conic": {"std_parallel_1": math.radians(30), "std_parallel_2": math.radians(50)},
}


def _proj(kind, **extra):
    return make_projection(kind, **DEFAULTS[kind], **extra)


def test_all_kinds_constructible():
    assert set(DEFAULTS) == set(KINDS)
    for kind in KINDS:
        p = _proj(kind)
        assert p.kind == kind
        assert p.is_conformal == (kind in CONFORMAL_KINDS)


@pytest.mark.parametrize("kind", KINDS)
def test_inverse_round_trip(kind):
    p = _proj(kind)
    rng = np.random.default_rng(3)
    lon = np.radians(rng.uniform(-60, 60, 100))
    lat = np.radians(rng.uniform(-50, 60, 100))
    keep = ~p.is_singular(lon, lat)
    x, y = p.forward(lon[keep], lat[keep])
    lo, la = p.inverse(x, y)
    assert np.allclose(la, lat[keep], atol=1e-10)
    assert np.allclose(np.cos(lo - lon[keep]), 1, atol=1e-12)


@pytest.mark.parametrize("kind", CONFORMAL_KINDS)
def test_holomorphic_derivative_matches_difference_quotient(kind):
    p = _proj(kind)
    z = np.array([0.1 + 0.2j, -0.3 + 0.5j, 0.4 - 0.1j])
    h = 1e-6
    f = lambda w: p.forward_complex(w.real, gudermannian(w.imag))
    fd = (f(z + h) - f(z - h)) / (2 * h)
    assert np.allclose(p.holo_derivative(z), fd, rtol=1e-7)


def test_mercator_closed_form():
    p = make_projection("mercator", scale=2.0)
    x, y = p.forward(math.radians(30), math.radians(45))
    assert x == pytest.approx(2 * math.radians(30))
    assert y == pytest.approx(2 * math.log(math.tan(math.pi / 4 + math.radians(45) / 2)))


def test_stereographic_center_and_antipode():
    c = GeoPoint.from_degrees(15, 30)
    p = make_projection("stereographic", center=c)
    q = project(p, c)
    assert abs(q.x) < 1e-15 and abs(q.y) < 1e-15
    with pytest.raises(SingularPoint):
        project(p, GeoPoint.from_degrees(15 - 180, -30))


def test_stereographic_circle_preservation():
    p = make_projection("stereographic", center=GeoPoint.from_degrees(10, 20))
    for axis in ([0.3, 0.4, 0.5], [1, 0, 0], [0, 0, 1]):
        assert great_circle_image_check(p, axis)
    m = make_projection("equal_area_cylindrical")
    assert not great_circle_image_check(m, [0.3, 0.4, 0.5])


def test_great_circle_check_sample_floor():
    with pytest.raises(InsufficientSamples):
        great_circle_image_check(make_projection("mercator"), [1, 0, 0], n_samples=4)


def test_fit_circle_recovers_circle_and_line():
    s = np.linspace(0, 2, 50)
    res, c, r = fit_circle(3 + 1j + 2 * np.exp(1j * s))
    assert res < 1e-12
    assert c == pytest.approx(3 + 1j)
    assert r == pytest.approx(2)
    res, c, r = fit_circle(s + 2j * s)
    assert c is None and r == math.inf


def test_conic_normal_aspect_parallels_are_circles():
    p = make_projection("conformal_conic", n=0.5)
    lon = np.radians(np.linspace(-60, 60, 20))
    lat = np.full_like(lon, math.radians(40))
    res, c, r = fit_circle(p.forward_complex(lon, lat))
    assert res < 1e-12


def test_bad_params():
    with pytest.raises(BadParam):
        make_projection("nope")
    with pytest.raises(BadParam):
        make_projection("conformal_conic", n=1.5)
    with pytest.raises(BadParam):
        make_projection("delisle_conic", std_parallel_1=0.3, std_parallel_2=0.3)
    with pytest.raises(BadParam):
        make_projection("mercator", scale=-1)


def test_rescaled_scales_images():
    p = _proj("lagrange_circle")
    q = p.rescaled(3.0)
    assert q.forward_complex(0.2, 0.3) == pytest.approx(3 * p.forward_complex(0.2, 0.3))


@settings(max_examples=40)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_equal_area_preserves_area_elements(lon, lat):
    p = make_projection("equal_area_cylindrical")
    h = 1e-6
    x1, y1 = p.forward(lon + h, lat)
    x0, y0 = p.forward(lon - h, lat)
    x3, y3 = p.forward(lon, lat + h)
    x2, y2 = p.forward(lon, lat - h)
    det = ((x1 - x0) * (y3 - y2) - (y1 - y0) * (x3 - x2)) / (4 * h * h)
    assert det == pytest.approx(math.cos(lat), rel=1e-6)
