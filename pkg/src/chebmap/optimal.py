"""Least-distortion conformal maps of a region.

A conformal map with derivative ``f'`` in Mercator coordinates has
``log m = log|f'| + log cosh(u)``, and ``log|f'|`` is harmonic. Fixing
``log m = 0`` on the boundary leaves a Dirichlet problem for ``log|f'|``;
its harmonic conjugate supplies ``arg f'``, and integrating ``f'`` gives the
map itself. That map has constant magnification along the boundary, which
is the least-distortion choice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distortion import magnification, region_samples
from .geo import GeoPoint, Region, isometric_latitude, mercator_polyline
from .laplace import (
    DIRS,
    GridDomain,
    ScalarField,
    build_grid,
    harmonic_conjugate,
    integrate_holomorphic,
    solve_dirichlet,
)
from .projections import ProjectionMap, make_projection

BOUNDARY_STEP = math.radians(0.1)


@dataclass(frozen=True)
class OptimizedProjection:
    region: Region
    grid: GridDomain
    image: ScalarField  # complex plane positions on interior cells
    m_field: ScalarField
    ratio: float
    boundary_constancy: float
    log_scale: ScalarField  # harmonic part log|f'|
    solver_iterations: int = 0
    solver_residual: float = 0.0

    @property
    def h(self):
        return self.grid.h

    def image_at(self, lon, lat):
        """Bilinear interpolation of the image at arbitrary points of the region."""
        z = np.asarray(lon, dtype=float) + 1j * isometric_latitude(np.asarray(lat, dtype=float))
        re = ScalarField(self.grid, self.image.values.real).at(z)
        im = ScalarField(self.grid, self.image.values.imag).at(z)
        return re + 1j * im

    def m_at(self, lon, lat):
        z = np.asarray(lon, dtype=float) + 1j * isometric_latitude(np.asarray(lat, dtype=float))
        return self.m_field.at(z)


def _near_boundary(grid: GridDomain):
    inside = grid.interior
    near = np.zeros_like(inside)
    for di, dj in DIRS:
        near |= inside & ~np.roll(inside, (-di, -dj), axis=(0, 1))
    return near


def optimize_projection(region: Region, resolution: int = 128, tol=None) -> OptimizedProjection:
    if resolution < 64:
        raise ValueError("optimize_projection needs resolution >= 64")
    poly = mercator_polyline(region, BOUNDARY_STEP)
    dom = build_grid(poly, resolution).with_boundary(lambda z: -np.log(np.cosh(z.imag)))
    logf = solve_dirichlet(dom, tol=tol)
    anchor = dom.default_anchor()
    conj = harmonic_conjugate(logf, anchor)
    inside = dom.interior
    fprime = np.zeros(dom.shape, dtype=complex)
    fprime[inside] = np.exp(logf.values[inside] + 1j * conj.values[inside])
    image = integrate_holomorphic(fprime, dom, anchor, 0j)

    u = dom.centers().imag
    m = np.full(dom.shape, np.nan)
    m[inside] = np.exp(logf.values[inside]) * np.cosh(u[inside])
    # boundary data makes log m vanish on the curve
    m[dom.boundary] = np.exp(dom.boundary_values[dom.boundary]) * np.cosh(dom.nearest[dom.boundary].imag)
    m.flags.writeable = False
    valid = np.isfinite(m)
    ratio = float(m[valid].max() / m[valid].min())
    layer = np.log(m[_near_boundary(dom)])
    constancy = float(np.max(np.abs(layer - np.median(layer))))
    return OptimizedProjection(
        region=region,
        grid=dom,
        image=image,
        m_field=ScalarField(dom, m),
        ratio=ratio,
        boundary_constancy=constancy,
        log_scale=logf,
        solver_iterations=logf.iterations,
        solver_residual=logf.residual,
    )


# -- best conformal conic ----------------------------------------------------


@dataclass(frozen=True)
class ConicSearch:
    n_lo: float = 0.05
    n_hi: float = 1.0
    n_steps: int = 20
    meridian_span: float = math.radians(20.0)
    meridian_steps: int = 9
    tilt_span: float = math.radians(30.0)
    tilt_steps: int = 13
    grid: int = 32
    rel_tol: float = 1e-4
    max_rounds: int = 30
    golden_iters: int = 24


@dataclass(frozen=True)
class ConicFit:
    n: float
    central_meridian: float
    center_lat: float
    ratio: float
    scan_ratio: float = field(default=math.inf, compare=False)

    def projection(self, scale=1.0) -> ProjectionMap:
        return make_projection("conformal_conic", scale=scale, n=self.n,
                               central_meridian=self.central_meridian, center_lat=self.center_lat)


def _conic_objective(lon, lat, lam_ref):
    def ratio(n, offset, tilt):
        center_lat = math.asin(n) + tilt
        try:
            proj = make_projection("conformal_conic", n=n, central_meridian=lam_ref + offset,
                                   center_lat=center_lat)
        except ValueError:
            return math.inf
        if np.any(proj.is_singular(lon, lat)):
            return math.inf
        m = magnification(proj, lon, lat)
        if not np.all(np.isfinite(m)):
            return math.inf
        return float(m.max() / m.min())

    return ratio


def golden_section(f, lo, hi, iters=24):
    """Minimize f on [lo, hi]; returns (x, f(x)) for the best point evaluated."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    best = min((fc, c), (fd, d))
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
            best = min(best, (fd, d))
    return best[1], best[0]


def fit_conic_exponent(region: Region, cfg: ConicSearch = ConicSearch()) -> ConicFit:
    """Cone constant, central meridian and centre latitude minimizing the distortion ratio.

    The centre latitude is parameterized internally by the tilt of the cone
    axis along the central meridian (tilt 0 is the normal aspect, where the
    centre latitude is ``asin(n)``). Meridians are scanned as offsets from
    the region's centroid longitude; ties go to the smaller n, then the
    smaller offset.
    """
    s = region_samples(region, cfg.grid)
    lam_ref = region.centroid().lon
    obj = _conic_objective(s.lon, s.lat, lam_ref)

    ns = np.linspace(cfg.n_lo, cfg.n_hi, cfg.n_steps)
    offs = np.linspace(-cfg.meridian_span, cfg.meridian_span, cfg.meridian_steps)
    offs = offs[np.lexsort((offs, np.abs(offs)))]
    tilts = np.linspace(-cfg.tilt_span, cfg.tilt_span, cfg.tilt_steps)
    tilts = tilts[np.lexsort((tilts, np.abs(tilts)))]

    best = (math.inf, None)
    for n in ns:
        for off in offs:
            for tilt in tilts:
                r = obj(float(n), float(off), float(tilt))
                if r < best[0] * (1 - 1e-12):
                    best = (r, (float(n), float(off), float(tilt)))
    scan_ratio, x = best
    if x is None:
        raise ValueError("every conic in the search space is singular on the region")

    steps = [
        ns[1] - ns[0] if len(ns) > 1 else 0.05,
        np.ptp(offs) / max(len(offs) - 1, 1) or math.radians(5),
        np.ptp(tilts) / max(len(tilts) - 1, 1) or math.radians(5),
    ]
    limits = [(cfg.n_lo, cfg.n_hi), (-math.pi, math.pi), (-math.pi / 2 + 1e-3, math.pi / 2 - 1e-3)]
    x = list(x)
    current = scan_ratio
    for _ in range(cfg.max_rounds):
        start = current
        for k in range(3):
            lo = max(limits[k][0], x[k] - steps[k])
            hi = min(limits[k][1], x[k] + steps[k])
            if hi <= lo:
                continue

            def f1(v, k=k):
                y = list(x)
                y[k] = v
                return obj(*y)

            v, r = golden_section(f1, lo, hi, cfg.golden_iters)
            if r < current * (1 - 1e-12):
                x[k], current = v, r
            steps[k] *= 0.5
        if start - current <= cfg.rel_tol * start:
            break
    n, off, tilt = x
    return ConicFit(n=float(n), central_meridian=float(lam_ref + off),
                    center_lat=float(math.asin(n) + tilt), ratio=float(current),
                    scan_ratio=float(scan_ratio))


def stereographic_at_centroid(region: Region, scale=1.0) -> ProjectionMap:
    c = region.centroid()
    return make_projection("stereographic", scale=scale, center=GeoPoint(c.lon, c.lat))
