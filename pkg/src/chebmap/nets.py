"""Discrete Chebyshev nets on the plane and on spheres.

A net is a lattice of points ``P[i, j]`` for ``i, j`` in ``[-N, N]`` whose
edges along ``i`` all have length ``a`` and edges along ``j`` all have
length ``c`` (``a == c`` for the classical square-cell net). Row 0 and
column 0 are geodesics through a base point crossing at angle ``phi0``;
every other vertex completes a quadrilateral from its two lattice
predecessors by intersecting two circles.

A vertex is torn when the circles do not meet or when the cell it closes
turns the wrong way, i.e. the net angle has left (0, pi) and the fabric
folds over itself. Torn vertices keep the folded position when one exists;
nothing is built beyond them.

On a surface of curvature ``K`` the net angle satisfies
``phi_uv + K sin(phi) = 0`` in the limit of small cells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParam, BadSeedAngle, MissingNeighbor, NetTooSmall, StepTooLarge
from .geo import angle_between

OK, TORN, OUT_OF_RANGE = 0, 1, 2
STATUS_NAMES = {OK: "ok", TORN: "torn", OUT_OF_RANGE: "out_of_range"}
FOLD_TOL = 1e-9


@dataclass(frozen=True)
class ChebNet:
    surface: str  # "plane" or "sphere"
    curvature: float
    phi0: float
    a_len: float
    c_len: float
    N: int
    points: np.ndarray  # (2N+1, 2N+1, 3) on a sphere of radius 1/sqrt(K); (.., 2) on the plane
    status: np.ndarray  # (2N+1, 2N+1) int8

    @property
    def h(self):
        return self.a_len

    @property
    def radius(self):
        return 1.0 / math.sqrt(self.curvature) if self.surface == "sphere" else math.inf

    def index(self, i, j):
        return i + self.N, j + self.N

    def point(self, i, j):
        return self.points[self.index(i, j)]

    def ok(self):
        return self.status == OK

    def all_ok(self):
        return bool(np.all(self.status == OK))


def _rows_dot(X, Y):
    return np.sum(X * Y, axis=1)


def _normalize(X):
    return X / np.linalg.norm(X, axis=1)[:, None]


def _sphere_intersect(A, B, D, a, c):
    """Batch circle intersection on the unit sphere, taking the root farther from D.

    Works in the frame of the midpoint M of A and B, the chord direction e and
    the normal n of the plane through A, B and the centre, which keeps the
    computation well conditioned for nearly coincident centres.
    Returns (points, torn_mask).
    """
    chord = B - A
    half = 0.5 * np.arctan2(np.linalg.norm(np.cross(A, B), axis=1), _rows_dot(A, B))
    with np.errstate(invalid="ignore", divide="ignore"):
        M = _normalize(A + B)
        e = _normalize(chord)
        n = _normalize(np.cross(A, chord))
        x = (math.cos(a) + math.cos(c)) / (2 * np.cos(half))
        if a == c:
            y = np.zeros_like(half)
            z2 = np.sin(a - half) * np.sin(a + half) / np.cos(half) ** 2
        else:
            y = -math.sin(0.5 * (a + c)) * math.sin(0.5 * (c - a)) / np.sin(half)
            z2 = 1.0 - x * x - y * y
    torn = ~(half > 1e-15) | ~(z2 >= 0.0)
    z = np.sqrt(np.maximum(z2, 0.0))
    side = _rows_dot(D, n)
    sgn = np.where(side > 0, -1.0, 1.0)
    p = _normalize(x[:, None] * M + y[:, None] * e + (sgn * z)[:, None] * n)
    p[torn] = np.nan
    return p, torn


def _orientation(P, A, B):
    """Sign of the turn from P->A to P->B about the outward normal at P."""
    if not np.iscomplexobj(P):
        return np.sum(np.cross(A - P, B - P) * P, axis=-1)
    d1, d2 = A - P, B - P
    return (d1.conj() * d2).imag


def _plane_intersect(A, B, D, a, c):
    d = B - A
    dist = np.abs(d)
    with np.errstate(invalid="ignore", divide="ignore"):
        along = (a * a - c * c + dist * dist) / (2 * dist)
        g2 = a * a - along * along
        e = d / dist
    torn = ~(dist > 1e-300) | ~(g2 >= -1e-14 * max(a * a, c * c))
    g = np.sqrt(np.maximum(g2, 0.0))
    base = A + along * e
    p1 = base + 1j * g * e
    p2 = base - 1j * g * e
    p = np.where(np.abs(p1 - D) >= np.abs(p2 - D), p1, p2)
    p[torn] = np.nan
    return p, torn


def darboux_net(surface: str, phi0: float, a_len: float, c_len: float, N: int,
                curvature: float = 1.0) -> ChebNet:
    """Net with i-edges of length a_len and j-edges of length c_len."""
    if not (0.0 < phi0 < math.pi):
        raise BadSeedAngle(f"seed angle {phi0} outside (0, pi)")
    if not (a_len > 0 and c_len > 0):
        raise BadParam("edge lengths must be positive")
    if N < 1:
        raise BadParam("N must be at least 1")
    size = 2 * N + 1
    if surface == "sphere":
        if not curvature > 0:
            raise BadParam("sphere curvature must be positive")
        R = 1.0 / math.sqrt(curvature)
        if max(a_len, c_len) > 0.2 * math.pi * R:
            raise StepTooLarge("edge length exceeds 0.2 * (pi R)")
        if N * max(a_len, c_len) >= math.pi * R:
            raise StepTooLarge("seed geodesics wrap past the antipode")
        p0 = np.array([1.0, 0.0, 0.0])
        d1 = np.array([0.0, 1.0, 0.0])
        d2 = math.cos(phi0) * d1 + math.sin(phi0) * np.array([0.0, 0.0, 1.0])
        pts = np.full((size, size, 3), np.nan)
        k = np.arange(-N, N + 1)
        sa, sc = a_len / R, c_len / R
        pts[:, N] = np.cos(k * sa)[:, None] * p0 + np.sin(k * sa)[:, None] * d1
        pts[N, :] = np.cos(k * sc)[:, None] * p0 + np.sin(k * sc)[:, None] * d2
    elif surface == "plane":
        curvature = 0.0
        R = 1.0
        pts = np.full((size, size), np.nan + 0j)
        k = np.arange(-N, N + 1)
        pts[:, N] = k * a_len
        pts[N, :] = k * c_len * complex(math.cos(phi0), math.sin(phi0))
    else:
        raise BadParam(f"unknown surface {surface!r}")

    status = np.full((size, size), OUT_OF_RANGE, dtype=np.int8)
    status[:, N] = OK
    status[N, :] = OK
    # anti-diagonals s = k + l of every quadrant; each only needs diagonal s - 1
    for s in range(2, 2 * N + 1):
        kk = np.arange(max(1, s - N), min(N, s - 1) + 1)
        ll = s - kk
        for si in (1, -1):
            for sj in (1, -1):
                I = N + si * kk
                J = N + sj * ll
                Ia, Jb = I - si, J - sj
                ready = (status[Ia, J] == OK) & (status[I, Jb] == OK) & (status[Ia, Jb] == OK)
                if not ready.any():
                    continue
                I, J, Ia, Jb = I[ready], J[ready], Ia[ready], Jb[ready]
                A, B, D = pts[Ia, J], pts[I, Jb], pts[Ia, Jb]
                if surface == "sphere":
                    p, torn = _sphere_intersect(A, B, D, sa, sc)
                else:
                    p, torn = _plane_intersect(A, B, D, a_len, c_len)
                # a cell whose angle left (0, pi) folds the fabric over itself
                turn = si * sj * _orientation(p, A, B)
                torn = torn | ~(turn > FOLD_TOL * a_len * c_len / R**2)
                # folded vertices keep their position for inspection; missing roots stay nan
                pts[I, J] = p
                status[I, J] = np.where(torn, TORN, OK)
    if surface == "sphere":
        pts = pts * R
    else:
        pts = np.stack([pts.real, pts.imag], axis=-1)
    pts.flags.writeable = False
    status.flags.writeable = False
    return ChebNet(surface, float(curvature), float(phi0), float(a_len), float(c_len), int(N), pts, status)


def build_net(surface: str, phi0: float, h: float, N: int, curvature: float = 1.0) -> ChebNet:
    return darboux_net(surface, phi0, h, h, N, curvature)


def _edge_vectors(net: ChebNet, P, Q):
    """Tangent at P of the geodesic chord towards Q."""
    if net.surface == "sphere":
        n = P / np.linalg.norm(P, axis=-1, keepdims=True)
        return Q - np.sum(Q * n, axis=-1, keepdims=True) * n
    return Q - P


def net_angles(net: ChebNet) -> np.ndarray:
    """Signed angle field on the index window [-N, N-1]^2; nan where a neighbour is missing."""
    P = net.points[:-1, :-1]
    Qi = net.points[1:, :-1]
    Qj = net.points[:-1, 1:]
    ok = net.ok()
    valid = ok[:-1, :-1] & ok[1:, :-1] & ok[:-1, 1:]
    ti = _edge_vectors(net, P, Qi)
    tj = _edge_vectors(net, P, Qj)
    if net.surface == "sphere":
        n = P / np.linalg.norm(P, axis=-1, keepdims=True)
        cr = np.sum(np.cross(ti, tj) * n, axis=-1)
    else:
        cr = ti[..., 0] * tj[..., 1] - ti[..., 1] * tj[..., 0]
    # signed: the seeds turn counter-clockwise, a folded cell goes negative
    phi = np.arctan2(cr, np.sum(ti * tj, axis=-1))
    return np.where(valid, phi, np.nan)


def net_angle(net: ChebNet, i: int, j: int) -> float:
    if not (-net.N <= i < net.N and -net.N <= j < net.N):
        raise MissingNeighbor(f"({i}, {j}) has no +i/+j neighbours in the window")
    v = net_angles(net)[i + net.N, j + net.N]
    if not np.isfinite(v):
        raise MissingNeighbor(f"({i}, {j}) or a +i/+j neighbour is not constructed")
    return float(v)


def mixed_difference(net: ChebNet, phi=None) -> np.ndarray:
    """D_uv phi per cell, in arclength units (nan where undefined)."""
    if phi is None:
        phi = net_angles(net)
    return (phi[1:, 1:] - phi[1:, :-1] - phi[:-1, 1:] + phi[:-1, :-1]) / (net.a_len * net.c_len)


def sine_gordon_residual(net: ChebNet):
    """Largest |D_uv phi + K sin(mean phi)| and its (i, j) lattice location."""
    phi = net_angles(net)
    d = mixed_difference(net, phi)
    mean = 0.25 * (phi[1:, 1:] + phi[1:, :-1] + phi[:-1, 1:] + phi[:-1, :-1])
    res = np.abs(d + net.curvature * np.sin(mean))
    if not np.any(np.isfinite(res)):
        raise NetTooSmall("no 3x3 window of constructed vertices")
    k = int(np.nanargmax(res))
    i, j = np.unravel_index(k, res.shape)
    return float(res[i, j]), (int(i) - net.N, int(j) - net.N)


def edge_length_check(net: ChebNet) -> float:
    """Largest deviation of an edge between two ok vertices from its prescribed length."""
    ok = net.ok()
    worst = 0.0
    for axis, length in ((0, net.a_len), (1, net.c_len)):
        P = net.points[:-1] if axis == 0 else net.points[:, :-1]
        Q = net.points[1:] if axis == 0 else net.points[:, 1:]
        valid = (ok[:-1] & ok[1:]) if axis == 0 else (ok[:, :-1] & ok[:, 1:])
        if not valid.any():
            continue
        if net.surface == "sphere":
            L = net.radius * angle_between(P[valid], Q[valid])
        else:
            L = np.linalg.norm(P[valid] - Q[valid], axis=-1)
        worst = max(worst, float(np.max(np.abs(L - length))))
    return worst
