"""Classical sphere-to-plane projections.

Every map works on numpy arrays of lon/lat (radians) and returns plane
coordinates. Conformal maps also expose ``holo_derivative``: the complex
derivative ``f'(z)`` of the image with respect to the Mercator coordinate
``z = lon + i*u`` (``u`` the isometric latitude). The magnification of such
a map is ``|f'(z)| * cosh(u)``.

Stereographic and oblique conic maps use ``sigma = exp(i*z)``, the polar
stereographic coordinate; sphere rotations act on it as Moebius maps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BadParam, InsufficientSamples, SingularPoint
from .geo import LAT_CAP, GeoPoint, PlanePoint, from_xyz, gudermannian, isometric_latitude, to_xyz

KINDS = (
    "mercator",
    "equal_area_cylindrical",
    "stereographic",
    "conformal_conic",
    "lagrange_circle",
    "delisle_conic",
)
CONFORMAL_KINDS = ("mercator", "stereographic", "conformal_conic", "lagrange_circle")


@dataclass(frozen=True)
class ProjectionMap:
    name: str
    params: tuple
    forward: Callable
    inverse: Optional[Callable] = None
    holo_derivative: Optional[Callable] = None
    singular_description: str = "none"
    singular: Callable = None
    scale: float = 1.0

    @property
    def kind(self):
        return self.name

    @property
    def is_conformal(self):
        return self.holo_derivative is not None

    def param(self, key, default=None):
        return dict(self.params).get(key, default)

    def is_singular(self, lon, lat):
        lon = np.asarray(lon, dtype=float)
        lat = np.asarray(lat, dtype=float)
        bad = np.abs(lat) >= np.pi / 2 - 1e-12
        if self.singular is not None:
            bad = bad | self.singular(lon, lat)
        return bad

    def forward_complex(self, lon, lat):
        x, y = self.forward(lon, lat)
        return x + 1j * y

    def rescaled(self, factor: float) -> "ProjectionMap":
        """Same map with every output length multiplied by ``factor``."""
        return make_projection(self.name, scale=self.scale * factor, **dict(self.params))


def _sigma(lon, lat):
    return np.tan(np.pi / 4 - np.asarray(lat) / 2) * np.exp(1j * np.asarray(lon))


def _sigma_to_lonlat(s):
    s = np.asarray(s, dtype=complex)
    return np.angle(s), np.pi / 2 - 2 * np.arctan(np.abs(s))


def _fit_mobius(src, dst):
    """Coefficients (a, b, c, d) of the Moebius map sending src[k] -> dst[k]."""
    src = np.asarray(src, dtype=complex)
    dst = np.asarray(dst, dtype=complex)
    A = np.stack([src, np.ones_like(src), -src * dst, -dst], axis=1)
    _, _, vh = np.linalg.svd(A)
    coef = vh[-1].conj()
    return coef / np.linalg.norm(coef)


def _mobius(coef, s):
    a, b, c, d = coef
    return (a * s + b) / (c * s + d)


def _mobius_prime(coef, s):
    a, b, c, d = coef
    return (a * d - b * c) / (c * s + d) ** 2


def _rotation(central_meridian, tilt):
    """Rotation taking geographic vectors into a frame.

    The central meridian goes to frame longitude 0; latitudes along it drop
    by ``tilt``.
    """
    cl, sl = math.cos(central_meridian), math.sin(central_meridian)
    rz = np.array([[cl, sl, 0.0], [-sl, cl, 0.0], [0.0, 0.0, 1.0]])
    ct, st = math.cos(tilt), math.sin(tilt)
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    return ry @ rz


def _anchor_points(rot):
    """Three generic geographic points, chosen in the frame away from its poles."""
    frame_lon = np.array([0.3, 2.1, -1.9])
    frame_lat = np.array([0.2, -0.4, 0.5])
    v = to_xyz(frame_lon, frame_lat) @ rot
    return from_xyz(v)


def _mercator(lam0, scale, lat_cap):
    def forward(lon, lat):
        lon = np.asarray(lon, dtype=float)
        lat = np.asarray(lat, dtype=float)
        return scale * (lon - lam0), scale * isometric_latitude(lat)

    def inverse(x, y):
        return np.asarray(x) / scale + lam0, gudermannian(np.asarray(y) / scale)

    def holo(z):
        return np.full(np.shape(z), scale, dtype=complex)

    def singular(lon, lat):
        return np.abs(lat) >= lat_cap

    return dict(forward=forward, inverse=inverse, holo_derivative=holo,
                singular=singular, singular_description=f"|lat| >= {math.degrees(lat_cap):g} deg")


def _equal_area(lam0, scale):
    def forward(lon, lat):
        lon = np.asarray(lon, dtype=float)
        return scale * (lon - lam0), scale * np.sin(lat)

    def inverse(x, y):
        return np.asarray(x) / scale + lam0, np.arcsin(np.clip(np.asarray(y) / scale, -1, 1))

    def singular(lon, lat):
        return np.abs(lat) >= np.pi / 2 - 1e-9

    return dict(forward=forward, inverse=inverse, singular=singular,
                singular_description="poles")


def _stereographic(lon0, lat0, scale):
    s0, c0 = math.sin(lat0), math.cos(lat0)

    def raw(lon, lat):
        dl = np.asarray(lon, dtype=float) - lon0
        lat = np.asarray(lat, dtype=float)
        k = 2.0 / (1.0 + s0 * np.sin(lat) + c0 * np.cos(lat) * np.cos(dl))
        return k * np.cos(lat) * np.sin(dl), k * (c0 * np.sin(lat) - s0 * np.cos(lat) * np.cos(dl))

    def forward(lon, lat):
        x, y = raw(lon, lat)
        return scale * x, scale * y

    def inverse(x, y):
        x = np.asarray(x, dtype=float) / scale
        y = np.asarray(y, dtype=float) / scale
        rho = np.hypot(x, y)
        c = 2 * np.arctan(rho / 2)
        sc, cc = np.sin(c), np.cos(c)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(rho > 0, y * sc / np.where(rho > 0, rho, 1), 0.0)
        lat = np.arcsin(np.clip(cc * s0 + ratio * c0, -1, 1))
        lon = lon0 + np.arctan2(x * sc, rho * c0 * cc - y * s0 * sc)
        return lon, lat

    alon, alat = _anchor_points(_rotation(lon0, lat0))
    ax, ay = raw(alon, alat)
    coef = _fit_mobius(_sigma(alon, alat), ax + 1j * ay)

    def holo(z):
        s = np.exp(1j * np.asarray(z, dtype=complex))
        return scale * _mobius_prime(coef, s) * 1j * s

    center = to_xyz(lon0, lat0)

    def singular(lon, lat):
        return to_xyz(lon, lat) @ center <= -1 + 1e-12

    return dict(forward=forward, inverse=inverse, holo_derivative=holo, singular=singular,
                singular_description="antipode of the center")


def _conformal_conic(n, lam0, center_lat, scale, lat_cap):
    tilt = 0.0 if center_lat is None else center_lat - math.asin(n)
    rot = _rotation(lam0, tilt)

    def frame(lon, lat):
        return from_xyz(to_xyz(lon, lat) @ rot.T)

    def forward(lon, lat):
        flon, flat = frame(lon, lat)
        w = scale / n * np.exp(1j * n * (flon + 1j * isometric_latitude(flat)))
        return w.real, w.imag

    def inverse(x, y):
        w = n * (np.asarray(x) + 1j * np.asarray(y)) / scale
        flon = np.angle(w) / n
        flat = gudermannian(-np.log(np.abs(w)) / n)
        return from_xyz(to_xyz(flon, flat) @ rot)

    alon, alat = _anchor_points(rot)
    flon, flat = frame(alon, alat)
    coef = _fit_mobius(_sigma(alon, alat), _sigma(flon, flat))

    def holo(z):
        s = np.exp(1j * np.asarray(z, dtype=complex))
        sf = _mobius(coef, s)
        power = np.exp(n * np.log(sf))
        return scale * 1j * power / sf * s * _mobius_prime(coef, s)

    def singular(lon, lat):
        flon, flat = frame(lon, lat)
        return (np.abs(flat) >= lat_cap) | (np.abs(flon) > np.pi - 1e-4)

    return dict(forward=forward, inverse=inverse, holo_derivative=holo, singular=singular,
                singular_description="cone apex/antapex (frame |lat| >= cap) and the back cut")


def _lagrange_circle(n, lam0, scale, lat_cap):
    def forward(lon, lat):
        z = np.asarray(lon, dtype=float) - lam0 + 1j * isometric_latitude(lat)
        w = np.exp(1j * n * z)
        f = scale * (w - 1) / (w + 1)
        return f.real, f.imag

    def inverse(x, y):
        f = (np.asarray(x) + 1j * np.asarray(y)) / scale
        w = (1 + f) / (1 - f)
        z = -1j * np.log(w) / n
        return z.real + lam0, gudermannian(z.imag)

    def holo(z):
        w = np.exp(1j * n * (np.asarray(z, dtype=complex) - lam0))
        return scale * 2j * n * w / (w + 1) ** 2

    def singular(lon, lat):
        lat = np.asarray(lat, dtype=float)
        w = np.exp(1j * n * (np.asarray(lon) - lam0 + 1j * isometric_latitude(lat)))
        return (np.abs(w + 1) < 1e-6) | (np.abs(lat) >= lat_cap)

    return dict(forward=forward, inverse=inverse, holo_derivative=holo, singular=singular,
                singular_description="points with exp(i n z) = -1, and |lat| >= cap")


def _delisle(phi1, phi2, lam0, scale):
    n = (math.cos(phi1) - math.cos(phi2)) / (phi2 - phi1)
    if abs(n) < 1e-9:
        raise BadParam("standard parallels give a degenerate cone")
    g = math.cos(phi1) / n + phi1
    rho0 = g - 0.5 * (phi1 + phi2)

    def forward(lon, lat):
        dl = np.mod(np.asarray(lon, dtype=float) - lam0 + np.pi, 2 * np.pi) - np.pi
        rho = g - np.asarray(lat, dtype=float)
        th = n * dl
        return scale * rho * np.sin(th), scale * (rho0 - rho * np.cos(th))

    def inverse(x, y):
        x = np.asarray(x, dtype=float) / scale
        dy = rho0 - np.asarray(y, dtype=float) / scale
        rho = np.sign(n) * np.hypot(x, dy)
        th = np.arctan2(np.sign(n) * x, np.sign(n) * dy)
        return lam0 + th / n, g - rho

    def singular(lon, lat):
        dl = np.mod(np.asarray(lon, dtype=float) - lam0 + np.pi, 2 * np.pi) - np.pi
        return (np.abs(g - np.asarray(lat)) < 1e-9) | (np.abs(dl) > np.pi - 1e-4)

    return dict(forward=forward, inverse=inverse, singular=singular,
                singular_description="cone apex and the back cut")


def make_projection(kind: str, scale: float = 1.0, **params) -> ProjectionMap:
    """Build a projection by name.

    Parameters (radians unless noted)
    ---------------------------------
    mercator, equal_area_cylindrical : central_meridian=0
    stereographic : center=GeoPoint (default (0, 0))
    conformal_conic : n in (0, 1], central_meridian=0, center_lat=None.
        ``center_lat`` tilts the cone along the central meridian so that its
        least-scale parallel passes through that latitude; None keeps the
        normal aspect.
    lagrange_circle : n > 0, central_meridian=0
    delisle_conic : std_parallel_1, std_parallel_2, central_meridian=0
    """
    if not (scale > 0 and math.isfinite(scale)):
        raise BadParam("scale must be positive")
    lat_cap = params.pop("lat_cap", LAT_CAP)
    lam0 = float(params.get("central_meridian", 0.0))
    if kind == "mercator":
        parts = _mercator(lam0, scale, lat_cap)
        stored = (("central_meridian", lam0),)
    elif kind == "equal_area_cylindrical":
        parts = _equal_area(lam0, scale)
        stored = (("central_meridian", lam0),)
    elif kind == "stereographic":
        center = params.get("center", GeoPoint(0.0, 0.0))
        if not isinstance(center, GeoPoint):
            center = GeoPoint(*center)
        parts = _stereographic(center.lon, center.lat, scale)
        stored = (("center", center),)
    elif kind == "conformal_conic":
        n = float(params.get("n", 0.5))
        if not (0.0 < n <= 1.0):
            raise BadParam(f"cone constant n={n} outside (0, 1]")
        center_lat = params.get("center_lat")
        if center_lat is not None:
            center_lat = float(center_lat)
            if abs(center_lat - math.asin(n)) >= math.pi / 2:
                raise BadParam("center_lat tilts the cone past the pole")
        parts = _conformal_conic(n, lam0, center_lat, scale, lat_cap)
        stored = (("n", n), ("central_meridian", lam0), ("center_lat", center_lat))
    elif kind == "lagrange_circle":
        n = float(params.get("n", 1.0))
        if not n > 0:
            raise BadParam("lagrange exponent must be positive")
        parts = _lagrange_circle(n, lam0, scale, lat_cap)
        stored = (("n", n), ("central_meridian", lam0))
    elif kind == "delisle_conic":
        try:
            p1 = float(params["std_parallel_1"])
            p2 = float(params["std_parallel_2"])
        except KeyError as exc:
            raise BadParam(f"delisle_conic needs {exc.args[0]}") from None
        if p1 == p2:
            raise BadParam("standard parallels must differ")
        if max(abs(p1), abs(p2)) >= math.pi / 2:
            raise BadParam("standard parallels must lie strictly between the poles")
        parts = _delisle(p1, p2, lam0, scale)
        stored = (("std_parallel_1", p1), ("std_parallel_2", p2), ("central_meridian", lam0))
    else:
        raise BadParam(f"unknown projection kind {kind!r}")
    return ProjectionMap(name=kind, params=stored, scale=scale, **parts)


def project(proj: ProjectionMap, p: GeoPoint) -> PlanePoint:
    if bool(proj.is_singular(p.lon, p.lat)):
        raise SingularPoint(f"{proj.name}: {p} is in the singular set ({proj.singular_description})")
    x, y = proj.forward(p.lon, p.lat)
    x, y = float(x), float(y)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise SingularPoint(f"{proj.name}: non-finite image at {p}")
    return PlanePoint(x, y)


def fit_circle(points):
    """Least-squares circle or line through complex points.

    Returns ``(residual, center, radius)``; a line has ``center=None`` and
    ``radius=inf``. The residual is the largest point distance from the fitted
    curve, relative to the span of the points.
    """
    z = np.asarray(points, dtype=complex)
    mu = z.mean()
    span = float(np.max(np.abs(z - mu))) or 1.0
    w = (z - mu) / span
    x, y = w.real, w.imag
    A = np.stack([x, y, np.ones_like(x)], axis=1)
    sol, *_ = np.linalg.lstsq(A, x * x + y * y, rcond=None)
    c = 0.5 * (sol[0] + 1j * sol[1])
    r2 = sol[2] + abs(c) ** 2
    circ_res = np.inf
    if r2 > 0:
        r = math.sqrt(r2)
        circ_res = float(np.max(np.abs(np.abs(w - c) - r)))
    _, _, vh = np.linalg.svd(np.stack([x - x.mean(), y - y.mean()], axis=1), full_matrices=False)
    normal = vh[-1]
    line_res = float(np.max(np.abs((x - x.mean()) * normal[0] + (y - y.mean()) * normal[1])))
    if line_res <= circ_res:
        return line_res, None, math.inf
    return circ_res, mu + span * c, span * math.sqrt(r2)


def great_circle_image_check(proj: ProjectionMap, axis, n_samples: int = 64, tol: float = 1e-6) -> bool:
    """True if the image of the great circle with pole ``axis`` is a circle or a line."""
    if n_samples < 8:
        raise InsufficientSamples("need at least 8 samples")
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    ref = np.array([0.0, 0.0, 1.0]) if abs(a[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(a, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    s = (np.arange(n_samples) + 0.5) * (2 * np.pi / n_samples)
    lon, lat = from_xyz(np.cos(s)[:, None] * e1 + np.sin(s)[:, None] * e2)
    keep = ~proj.is_singular(lon, lat)
    x, y = proj.forward(lon[keep], lat[keep])
    z = x + 1j * y
    z = z[np.isfinite(z)]
    if z.size < 8:
        raise InsufficientSamples("fewer than 8 non-singular samples on the circle")
    residual, _, _ = fit_circle(z)
    return residual < tol
