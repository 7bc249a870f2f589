import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chebmap.errors import BadParam, BadSeedAngle, MissingNeighbor, NetTooSmall, StepTooLarge
from chebmap.geo import angle_between
from chebmap.nets import (
    OK,
    OUT_OF_RANGE,
    TORN,
    build_net,
    darboux_net,
    edge_length_check,
    mixed_difference,
    net_angle,
    net_angles,
    sine_gordon_residual,
)


def test_plane_net_is_a_lattice_of_squares():
    net = build_net("plane", math.pi / 2, 0.1, 5)
    assert net.all_ok()
    i, j = np.meshgrid(np.arange(-5, 6), np.arange(-5, 6), indexing="ij")
    assert np.allclose(net.points[..., 0], 0.1 * i, atol=1e-14)
    assert np.allclose(net.points[..., 1], 0.1 * j, atol=1e-14)
    assert edge_length_check(net) < 1e-15


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 2.9), st.floats(0.01, 1.0))
def test_plane_net_constant_angle(phi0, h):
    net = build_net("plane", phi0, h, 6)
    phi = net_angles(net)
    assert np.nanmax(np.abs(phi - phi0)) < 1e-12
    assert edge_length_check(net) < 1e-12 * max(h, 1)
    assert sine_gordon_residual(net)[0] < 1e-9


def test_sphere_seed_geometry():
    net = build_net("sphere", 1.1, 0.05, 20)
    assert net_angle(net, 0, 0) == pytest.approx(1.1, abs=1e-9)
    row = net.points[:, 20]
    col = net.points[20, :]
    # seeds are great circles through the base point
    assert np.allclose(row[:, 2], 0, atol=1e-15)
    n = np.cross(col[0], col[-1])
    assert np.allclose(col @ n / np.linalg.norm(n), 0, atol=1e-14)


def test_sphere_angles_match_dot_product_oracle():
    net = build_net("sphere", 1.3, 0.05, 25)
    phi = net_angles(net)
    P = net.points
    for i, j in ((20, 5), (-15, 18), (22, -22)):
        I, J = i + 25, j + 25
        p = P[I, J]
        ti = P[I + 1, J] - (P[I + 1, J] @ p) * p
        tj = P[I, J + 1] - (P[I, J + 1] @ p) * p
        oracle = math.acos(ti @ tj / np.linalg.norm(ti) / np.linalg.norm(tj))
        assert phi[I, J] == pytest.approx(oracle, abs=1e-9)
    # the angle drifts away from the seeds
    assert abs(phi[45, 45] - 1.3) > 0.05


def test_sphere_edges_exact():
    net = build_net("sphere", math.pi / 2, 0.02, 60)
    assert net.points.shape == (121, 121, 3)
    assert edge_length_check(net) < 1e-9


def test_sphere_radius_scales():
    a = build_net("sphere", 1.0, 0.05, 10)
    b = build_net("sphere", 1.0, 0.2, 10, curvature=1 / 16)
    assert np.allclose(b.points, 4 * a.points, atol=1e-12)
    assert edge_length_check(b) < 1e-9


def test_sine_gordon_convergence():
    res = []
    for h in (0.1, 0.05, 0.025):
        N = int(round(0.8 / h))
        res.append(sine_gordon_residual(build_net("sphere", 1.2, h, N))[0])
    assert res[0] / res[1] >= 1.8 and res[1] / res[2] >= 1.8


def test_sign_property():
    net = build_net("sphere", math.pi / 2, 0.05, 31)
    d = mixed_difference(net)
    phi = net_angles(net)
    inside = (phi[:-1, :-1] > 0) & (phi[:-1, :-1] < math.pi)
    assert np.nanmax(d[inside]) <= 1e-6


def test_near_degenerate_seed_tears():
    net = build_net("sphere", 0.01, 0.05, 31)
    torn = net.status == TORN
    assert torn.any()
    assert np.any(net.status == OUT_OF_RANGE)
    # edges between ok vertices stay exact; torn ones are skipped
    assert edge_length_check(net) < 1e-9
    # a healthy seed angle reaches further before tearing
    healthy = build_net("sphere", math.pi / 2, 0.05, 31)
    first = lambda n: np.min(np.abs(np.argwhere(n.status == TORN) - 31).sum(axis=1))
    assert first(net) < first(healthy)


def test_darboux_rectangles():
    net = darboux_net("sphere", 1.0, 0.05, 0.03, 20)
    P = net.points
    ok = net.ok()
    di = angle_between(P[:-1], P[1:])[ok[:-1] & ok[1:]]
    dj = angle_between(P[:, :-1], P[:, 1:])[ok[:, :-1] & ok[:, 1:]]
    assert np.max(np.abs(di - 0.05)) < 1e-9
    assert np.max(np.abs(dj - 0.03)) < 1e-9
    assert edge_length_check(net) < 1e-9
    plane = darboux_net("plane", 0.7, 0.2, 0.1, 8)
    assert sine_gordon_residual(plane)[0] < 1e-9


def test_darboux_reduces_to_build_net():
    a = darboux_net("sphere", 0.9, 0.04, 0.04, 15)
    b = build_net("sphere", 0.9, 0.04, 15)
    assert np.array_equal(a.points, b.points, equal_nan=True)
    assert np.array_equal(a.status, b.status)


def test_deterministic():
    a = build_net("sphere", 1.4, 0.05, 30)
    b = build_net("sphere", 1.4, 0.05, 30)
    assert a.points.tobytes() == b.points.tobytes()
    assert a.status.tobytes() == b.status.tobytes()


def test_errors():
    with pytest.raises(BadSeedAngle):
        build_net("sphere", 0.0, 0.05, 10)
    with pytest.raises(BadSeedAngle):
        build_net("plane", math.pi, 0.05, 10)
    with pytest.raises(StepTooLarge):
        build_net("sphere", 1.0, 0.7, 2)
    with pytest.raises(StepTooLarge):
        build_net("sphere", 1.0, 0.1, 40)
    with pytest.raises(BadParam):
        build_net("torus", 1.0, 0.1, 4)
    net = build_net("sphere", 1.0, 0.05, 4)
    with pytest.raises(MissingNeighbor):
        net_angle(net, 4, 0)


def test_net_too_small():
    net = build_net("sphere", 1.0, 0.05, 3)
    status = np.full(net.status.shape, OUT_OF_RANGE, dtype=np.int8)
    status[:, 3] = OK
    status[3, :] = OK
    bare = dataclasses.replace(net, status=status)
    with pytest.raises(NetTooSmall):
        sine_gordon_residual(bare)
