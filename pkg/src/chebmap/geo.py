"""Spherical primitives on the unit sphere.

Longitude/latitude are radians. Mercator (isometric) coordinates are
``x = lon`` and ``y = ln tan(pi/4 + lat/2)``; in them the sphere metric is
``cos(lat)**2 * (dx**2 + dy**2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCenters, NoIntersection, PoleError

LAT_CAP = math.radians(85.0)


def wrap_lon(lon):
    """Wrap longitude(s) into (-pi, pi]."""
    w = np.mod(np.asarray(lon, dtype=float) + np.pi, 2 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class GeoPoint:
    lon: float
    lat: float

    def __post_init__(self):
        if not (math.isfinite(self.lon) and math.isfinite(self.lat)):
            raise ValueError("non-finite coordinate")
        if abs(self.lat) >= math.pi / 2:
            raise PoleError(f"latitude {self.lat!r} is at or beyond a pole")
        object.__setattr__(self, "lon", wrap_lon(self.lon))

    @classmethod
    def from_degrees(cls, lon, lat):
        return cls(math.radians(lon), math.radians(lat))

    def to_xyz(self):
        return to_xyz(self.lon, self.lat)


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("plane point must be finite")

    def __complex__(self):
        return complex(self.x, self.y)


def to_xyz(lon, lat):
    """Unit vector(s) for lon/lat; the last axis holds x, y, z."""
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    c = np.cos(lat)
    return np.stack([c * np.cos(lon), c * np.sin(lon), np.sin(lat)], axis=-1)


def from_xyz(v):
    """Inverse of :func:`to_xyz`; input need not be normalized."""
    v = np.asarray(v, dtype=float)
    lon = np.arctan2(v[..., 1], v[..., 0])
    lat = np.arctan2(v[..., 2], np.hypot(v[..., 0], v[..., 1]))
    return lon, lat


def isometric_latitude(lat):
    return np.arcsinh(np.tan(lat))


def gudermannian(y):
    return np.arctan(np.sinh(y))


def mercator_forward(p: GeoPoint, lat_cap: float = LAT_CAP) -> PlanePoint:
    if abs(p.lat) >= lat_cap:
        raise PoleError(f"|lat| = {abs(p.lat):.6f} reaches the cap {lat_cap:.6f}")
    return PlanePoint(p.lon, float(isometric_latitude(p.lat)))


def mercator_inverse(q: PlanePoint) -> GeoPoint:
    return GeoPoint(wrap_lon(q.x), float(gudermannian(q.y)))


def angle_between(a, b):
    """Angle between (batches of) vectors, stable for tiny and near-pi angles."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cr = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.arctan2(cr, np.sum(a * b, axis=-1))


def geodesic_distance(a: GeoPoint, b: GeoPoint) -> float:
    return float(angle_between(a.to_xyz(), b.to_xyz()))


def slerp(a, b, s):
    """Points along the minor great-circle arc from unit vector a to b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = np.asarray(s, dtype=float)[..., None]
    omega = angle_between(a, b)
    if omega < 1e-15:
        return np.broadcast_to(a, s.shape[:-1] + (3,)).copy()
    so = math.sin(omega)
    return (np.sin((1 - s) * omega) * a + np.sin(s * omega) * b) / so


def sphere_circle_intersect(c1, r1, c2, r2, tol=1e-12):
    """Intersect two small circles on the unit sphere.

    Each circle is the set of points at angular distance ``r`` from the unit
    vector ``c``. Returns a list of one or two unit vectors; with two, the one
    on the positive side of ``c1 x c2`` comes first.
    """
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    c1 = c1 / np.linalg.norm(c1)
    c2 = c2 / np.linalg.norm(c2)
    axis = np.cross(c1, c2)
    s2 = float(axis @ axis)
    if s2 < 1e-24:
        raise DegenerateCenters("circle centers coincide or are antipodal")
    c = float(c1 @ c2)
    d1, d2 = math.cos(r1), math.cos(r2)
    alpha = (d1 - d2 * c) / s2
    beta = (d2 - d1 * c) / s2
    g2 = (1.0 - alpha * d1 - beta * d2) / s2
    base = alpha * c1 + beta * c2
    if g2 < -tol:
        raise NoIntersection("circles are disjoint")
    if g2 <= tol:
        p = base / np.linalg.norm(base)
        return [p]
    g = math.sqrt(g2)
    return [base + g * axis, base - g * axis]


def plane_circle_intersect(c1, r1, c2, r2, tol=1e-14):
    """Planar counterpart of :func:`sphere_circle_intersect` on complex points."""
    d = c2 - c1
    dist = abs(d)
    if dist < 1e-300:
        raise DegenerateCenters("circle centers coincide")
    a = (r1 * r1 - r2 * r2 + dist * dist) / (2 * dist)
    g2 = r1 * r1 - a * a
    e = d / dist
    base = c1 + a * e
    if g2 < -tol * max(r1 * r1, 1.0):
        raise NoIntersection("circles are disjoint")
    if g2 <= 0:
        return [base]
    g = math.sqrt(g2)
    # +i*e is the positive side (counterclockwise of c1 -> c2)
    return [base + 1j * g * e, base - 1j * g * e]


@dataclass
class Region:
    """Closed, simply connected region given by its boundary vertices.

    Edges are minor great-circle arcs. Vertices are stored counterclockwise;
    a clockwise input is reversed.
    """

    lon: np.ndarray
    lat: np.ndarray
    name: str = "region"
    lat_cap: float = field(default=LAT_CAP, repr=False)

    def __post_init__(self):
        lon = np.asarray(self.lon, dtype=float).ravel()
        lat = np.asarray(self.lat, dtype=float).ravel()
        if lon.shape != lat.shape:
            raise ValueError("lon/lat length mismatch")
        if lon.size >= 2 and lon[0] == lon[-1] and lat[0] == lat[-1]:
            lon, lat = lon[:-1], lat[:-1]
        if lon.size < 3:
            raise ValueError("a region needs at least 3 boundary points")
        if not (np.all(np.isfinite(lon)) and np.all(np.isfinite(lat))):
            raise ValueError("non-finite boundary coordinate")
        if np.max(np.abs(lat)) > self.lat_cap + 1e-12:
            raise PoleError("region reaches beyond the latitude cap")
        ulon = np.unwrap(lon)
        y = isometric_latitude(lat)
        area = 0.5 * np.sum(ulon * np.roll(y, -1) - np.roll(ulon, -1) * y)
        if area < 0:
            lon, lat = lon[::-1].copy(), lat[::-1].copy()
        self.lon = lon
        self.lat = lat

    @classmethod
    def from_degrees(cls, lon_deg, lat_deg, name="region"):
        return cls(np.radians(lon_deg), np.radians(lat_deg), name=name)

    def __len__(self):
        return self.lon.size

    def points(self):
        return [GeoPoint(a, b) for a, b in zip(self.lon, self.lat)]

    def xyz(self):
        return to_xyz(self.lon, self.lat)

    def edge_lengths(self):
        v = self.xyz()
        return angle_between(v, np.roll(v, -1, axis=0))

    def centroid(self) -> GeoPoint:
        """Normalized mean of densified boundary vectors."""
        v = densify(self, math.radians(0.25))
        w = np.linalg.norm(v - np.roll(v, 1, axis=0), axis=1)
        w = 0.5 * (w + np.roll(w, -1))
        m = (v * w[:, None]).sum(axis=0)
        lon, lat = from_xyz(m)
        return GeoPoint(float(lon), float(lat))


def densify(region: Region, max_step: float) -> np.ndarray:
    """Boundary unit vectors with every great-circle edge split below max_step."""
    v = region.xyz()
    out = []
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        k = max(1, int(math.ceil(float(angle_between(a, b)) / max_step)))
        out.append(slerp(a, b, np.arange(k) / k))
    return np.concatenate(out, axis=0)


def boundary_lonlat(region: Region, max_step: float = math.radians(0.5)):
    """Densified boundary as (lon, lat) with longitudes unwrapped to be continuous."""
    lon, lat = from_xyz(densify(region, max_step))
    lon = np.unwrap(lon)
    # keep the unwrapped branch close to the stored vertices
    shift = 2 * np.pi * np.round((np.mean(np.unwrap(region.lon)) - np.mean(lon)) / (2 * np.pi))
    return lon + shift, lat


def mercator_polyline(region: Region, max_step: float = math.radians(0.5)) -> np.ndarray:
    """Densified boundary in Mercator coordinates as complex ``t + i*u``."""
    lon, lat = boundary_lonlat(region, max_step)
    return lon + 1j * isometric_latitude(lat)


def resample_boundary(region: Region, n: int) -> Region:
    """Resample to n boundary points along the great-circle edges.

    Vertices are kept when a per-edge allocation gives spacings within 10% of
    each other; otherwise points are placed at exactly equal arclength.
    """
    if n < 8:
        raise ValueError("resample_boundary needs n >= 8")
    v = region.xyz()
    nxt = np.roll(v, -1, axis=0)
    lengths = angle_between(v, nxt)
    total = float(lengths.sum())
    k = len(lengths)
    if n >= k:
        share = lengths / total * n
        alloc = np.maximum(np.floor(share).astype(int), 1)
        if alloc.sum() <= n:
            rem = share - alloc
            for i in np.argsort(-rem, kind="stable")[: n - alloc.sum()]:
                alloc[i] += 1
        spacing = lengths / alloc
        if alloc.sum() == n and spacing.max() <= 1.1 * spacing.min():
            pts = [slerp(a, b, np.arange(m) / m) for a, b, m in zip(v, nxt, alloc)]
            lon, lat = from_xyz(np.concatenate(pts, axis=0))
            return Region(lon, lat, name=region.name, lat_cap=region.lat_cap)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    s = np.arange(n) * (total / n)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, k - 1)
    frac = (s - cum[idx]) / lengths[idx]
    pts = np.array([slerp(v[i], nxt[i], f) for i, f in zip(idx, frac)])
    lon, lat = from_xyz(pts)
    return Region(lon, lat, name=region.name, lat_cap=region.lat_cap)


def geodesic_cap(center: GeoPoint, radius: float, n: int = 256, name="cap") -> Region:
    """Boundary of the spherical cap of angular radius ``radius`` around center."""
    c = center.to_xyz()
    ref = np.array([0.0, 0.0, 1.0]) if abs(c[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(ref, c)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    s = 2 * np.pi * np.arange(n) / n
    pts = (
        math.cos(radius) * c
        + math.sin(radius) * (np.cos(s)[:, None] * e1 + np.sin(s)[:, None] * e2)
    )
    lon, lat = from_xyz(pts)
    return Region(lon, lat, name=name)


def latlon_quadrangle(lon0, lon1, lat0, lat1, step=math.radians(0.5), name="quadrangle"):
    """Region bounded by two meridians and two parallels (radians).

    Parallels are sampled every ``step`` so the great-circle edges between
    samples follow them closely.
    """
    k = max(2, int(math.ceil((lon1 - lon0) / step)))
    m = max(2, int(math.ceil((lat1 - lat0) / step)))
    lons = np.linspace(lon0, lon1, k + 1)
    lats = np.linspace(lat0, lat1, m + 1)
    lon = np.concatenate([lons[:-1], np.full(m, lon1), lons[::-1][:-1], np.full(m, lon0)])
    lat = np.concatenate([np.full(k, lat0), lats[:-1], np.full(k, lat1), lats[::-1][:-1]])
    return Region(lon, lat, name=name)
