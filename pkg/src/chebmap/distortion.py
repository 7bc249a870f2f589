"""Local and regional distortion of projections.

Scales are measured against the unit-sphere metric: the east unit vector is
``d/dlon / cos(lat)``, the north unit vector ``d/dlat``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import parallel
from .errors import NotConformal, SingularPoint, StepUnderflow
from .geo import GeoPoint, Region, gudermannian, isometric_latitude, mercator_polyline
from .laplace import GridDomain, ScalarField, build_grid
from .projections import ProjectionMap

DEFAULT_STEP = 1e-5
H1, H2, H3 = "H1", "H2", "H3"


@dataclass(frozen=True)
class DistortionSample:
    point: GeoPoint
    k_meridian: float
    k_parallel: float
    tissot_a: float
    tissot_b: float
    angle_distortion: float
    m: float


def _jacobian(proj: ProjectionMap, lon, lat, h):
    xe1, ye1 = proj.forward(lon + h, lat)
    xe0, ye0 = proj.forward(lon - h, lat)
    xn1, yn1 = proj.forward(lon, lat + h)
    xn0, yn0 = proj.forward(lon, lat - h)
    c = np.cos(lat)
    inv = 1.0 / (2 * h)
    return np.stack([(xe1 - xe0) * inv / c, (ye1 - ye0) * inv / c,
                     (xn1 - xn0) * inv, (yn1 - yn0) * inv])


def jacobian(proj: ProjectionMap, lon, lat, h=DEFAULT_STEP):
    """Central-difference Jacobian in the sphere's east/north unit frame.

    Rows of the result: (dx/de, dy/de, dx/dn, dy/dn). Where halving the step
    changes an entry by more than 1e-7 relative, the Richardson combination
    of the two estimates is returned instead.
    """
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    j1 = _jacobian(proj, lon, lat, h)
    j2 = _jacobian(proj, lon, lat, h / 2)
    scale = np.max(np.abs(j2), axis=0) + 1e-300
    poor = np.max(np.abs(j1 - j2), axis=0) > 1e-7 * scale
    return np.where(poor, (4 * j2 - j1) / 3, j1)


def tissot(proj: ProjectionMap, lon, lat, h=DEFAULT_STEP):
    """Vectorized local scales: dict of arrays k_meridian, k_parallel, a, b, omega."""
    J = jacobian(proj, lon, lat, h)
    xe, ye, xn, yn = J
    fro = xe * xe + ye * ye + xn * xn + yn * yn
    det = np.abs(xe * yn - ye * xn)
    s1 = np.sqrt(fro + 2 * det)
    s2 = np.sqrt(np.maximum(fro - 2 * det, 0.0))
    a = 0.5 * (s1 + s2)
    b = 0.5 * (s1 - s2)
    return {
        "k_meridian": np.hypot(xn, yn),
        "k_parallel": np.hypot(xe, ye),
        "a": a,
        "b": b,
        "omega": 2 * np.arcsin(np.clip((a - b) / (a + b), 0, 1)),
        "jacobian": J,
    }


def _check_point(proj, p, h):
    lon = np.array([p.lon, p.lon + h, p.lon - h, p.lon, p.lon])
    lat = np.array([p.lat, p.lat, p.lat, p.lat + h, p.lat - h])
    if np.any(proj.is_singular(lon, lat)):
        raise SingularPoint(f"{proj.name}: {p} or its neighbourhood is singular")


def local_scales(proj: ProjectionMap, p: GeoPoint, h: float = DEFAULT_STEP) -> DistortionSample:
    if not (1e-8 < h < 1e-3):
        raise StepUnderflow(f"step {h} outside (1e-8, 1e-3)")
    _check_point(proj, p, h)
    t = tissot(proj, np.array([p.lon]), np.array([p.lat]), h)
    if not np.all(np.isfinite(t["jacobian"])):
        raise SingularPoint(f"{proj.name}: non-finite derivative at {p}")
    a, b = float(t["a"][0]), float(t["b"][0])
    return DistortionSample(
        point=p,
        k_meridian=float(t["k_meridian"][0]),
        k_parallel=float(t["k_parallel"][0]),
        tissot_a=a,
        tissot_b=b,
        angle_distortion=float(t["omega"][0]),
        m=a if (a - b) <= 1e-6 * a else math.nan,
    )


def magnification(proj: ProjectionMap, lon, lat):
    """Vectorized Lagrange magnification ``|f'(z)| * cosh(u)``."""
    if proj.holo_derivative is None:
        raise NotConformal(f"{proj.name} has no analytic derivative")
    lat = np.asarray(lat, dtype=float)
    u = isometric_latitude(lat)
    z = np.asarray(lon, dtype=float) + 1j * u
    return np.abs(proj.holo_derivative(z)) * np.cosh(u)


def magnification_conformal(proj: ProjectionMap, p: GeoPoint) -> float:
    from .geo import mercator_forward

    if proj.holo_derivative is None:
        raise NotConformal(f"{proj.name} has no analytic derivative")
    q = mercator_forward(p)
    if bool(proj.is_singular(p.lon, p.lat)):
        raise SingularPoint(f"{proj.name}: {p} is singular")
    return float(np.abs(proj.holo_derivative(complex(q.x, q.y))) * math.cosh(q.y))


# -- regional analysis -------------------------------------------------------


@dataclass(frozen=True)
class RegionSamples:
    grid: GridDomain
    lon: np.ndarray  # interior cell centres followed by boundary curve points
    lat: np.ndarray
    n_interior: int


def region_samples(region: Region, grid: int) -> RegionSamples:
    """Interior cell centres of the Mercator-plane grid plus the boundary curve."""
    poly = mercator_polyline(region)
    dom = build_grid(poly, grid)
    c = dom.centers()[dom.interior]
    lon = np.concatenate([c.real, poly.real])
    lat = np.concatenate([gudermannian(c.imag), gudermannian(poly.imag)])
    return RegionSamples(dom, lon, lat, int(c.size))


CHUNK = 4096


def _chunked(fn, lon, lat):
    """Evaluate fn over fixed-size chunks; the thread count never changes the chunking."""
    bounds = [(s, min(s + CHUNK, lon.size)) for s in range(0, lon.size, CHUNK)]
    workers = parallel.threads()
    if workers <= 1 or len(bounds) == 1:
        parts = [fn(lon[a:b], lat[a:b]) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: fn(lon[ab[0]:ab[1]], lat[ab[0]:ab[1]]), bounds))
    return {k: np.concatenate([p[k] for p in parts], axis=-1) for k in parts[0]}


def sample_scales(proj: ProjectionMap, lon, lat, h=DEFAULT_STEP):
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    bad = proj.is_singular(lon, lat)
    for dl, dp in ((h, 0), (-h, 0), (0, h), (0, -h)):
        bad = bad | proj.is_singular(lon + dl, lat + dp)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise SingularPoint(
            f"{proj.name}: sample at lon={math.degrees(lon[k]):.3f} lat={math.degrees(lat[k]):.3f} "
            f"is singular ({proj.singular_description})"
        )
    out = _chunked(lambda a, b: tissot(proj, a, b, h), lon, lat)
    if not np.all(np.isfinite(out["jacobian"])):
        raise SingularPoint(f"{proj.name}: non-finite derivative inside the region")
    return out


def _axis_deviation(angles, period):
    """Largest deviation of angles from their best common value, modulo period."""
    k = 2 * np.pi / period
    mean = np.angle(np.mean(np.exp(1j * k * angles))) / k
    dev = np.mod(angles - mean + period / 2, period) - period / 2
    return float(np.max(np.abs(dev)))


def classify_scales(scales, tol=1e-4):
    xe, ye, xn, yn = scales["jacobian"]
    out = set()
    north = np.arctan2(yn, xn)
    east = np.arctan2(ye, xe)
    # after a common rotation: all meridian images parallel, all parallel images perpendicular to them
    if (_axis_deviation(north, np.pi) < tol
            and _axis_deviation(east, np.pi) < tol
            and abs(abs(np.mod(east[0] - north[0], np.pi)) - np.pi / 2) < tol):
        out.add(H1)
    a, b = scales["a"], scales["b"]
    if np.max((a - b) / a) < tol:
        out.add(H2)
    prod = a * b
    c = 0.5 * (prod.max() + prod.min())
    if np.max(np.abs(prod - c) / c) < tol:
        out.add(H3)
    return frozenset(out)


def classify_euler(proj: ProjectionMap, region: Region, grid: int = 16, tol: float = 1e-4):
    """Subset of {H1, H2, H3} the projection satisfies on the region."""
    if grid < 16:
        raise ValueError("classification grid must be at least 16")
    lon, lat = _graticule_samples(region, grid)
    return classify_scales(sample_scales(proj, lon, lat), tol)


def _graticule_samples(region, grid):
    from .laplace import _line_crossings

    poly = mercator_polyline(region)
    q = np.roll(poly, -1)
    t = np.linspace(poly.real.min(), poly.real.max(), grid + 2)[1:-1]
    u = np.linspace(poly.imag.min(), poly.imag.max(), grid + 2)[1:-1]
    rows = _line_crossings(poly, q, u, axis=1)
    pts = []
    for ui, xs in zip(u, rows):
        inside = (np.searchsorted(xs, t) % 2) == 1
        pts.extend(t[inside] + 1j * ui)
    pts = np.array(pts)
    return pts.real, gudermannian(pts.imag)


@dataclass(frozen=True)
class DistortionReport:
    region: Region
    resolution: int
    m_min: float
    m_max: float
    ratio: float
    field: ScalarField
    classification: frozenset


def distortion_report(proj: ProjectionMap, region: Region, grid: int = 32) -> DistortionReport:
    """Largest over smallest length scale across the region.

    Scales are sampled at every interior grid cell and along the boundary
    curve. For a conformal map this is ``m_max / m_min``; otherwise the
    largest Tissot semi-axis over the smallest.
    """
    if grid < 32:
        raise ValueError("report grid must be at least 32")
    s = region_samples(region, grid)
    sc = sample_scales(proj, s.lon, s.lat)
    m_max = float(np.max(sc["a"]))
    m_min = float(np.min(sc["b"]))
    dom = s.grid
    vals = np.full(dom.shape, np.nan)
    vals[dom.interior] = 0.5 * np.log(sc["a"][: s.n_interior] * sc["b"][: s.n_interior])
    field = ScalarField(dom, vals)
    cls = classify_euler(proj, region)
    return DistortionReport(region, grid, m_min, m_max, m_max / m_min, field, cls)
