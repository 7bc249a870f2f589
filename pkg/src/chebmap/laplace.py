"""Dirichlet problems for the Laplace equation on masked Mercator-plane grids.

Points are complex numbers ``t + i*u``. Cells are indexed ``[i, j]`` with
``u = u_min + i*h`` and ``t = t_min + j*h``.

Interior cells next to the boundary use the Shortley-Weller stencil: the arm
towards an exterior neighbour is cut at the crossing with the boundary curve,
and the boundary value is taken at that crossing. This keeps the scheme
second-order on curved regions and exact for linear data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from .errors import NoConvergence, NotHarmonic, NotSimple, PathInconsistency, RegionTooThin

EXTERIOR, INTERIOR, BOUNDARY = 0, 1, 2

# direction order: east (+t), west (-t), north (+u), south (-u)
DIRS = ((0, 1), (0, -1), (1, 0), (-1, 0))
MIN_ARM = 1e-6
MARGIN = 2


def _frozen(a):
    a = np.asarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GridDomain:
    t_min: float
    u_min: float
    h: float
    mask: np.ndarray
    arms: np.ndarray  # (4, ny, nx) arm length as a fraction of h, interior cells only
    crossings: np.ndarray  # (4, ny, nx) complex crossing point, nan where the arm is full
    nearest: np.ndarray  # (ny, nx) complex nearest curve point for boundary cells
    polyline: np.ndarray
    edge_values: Optional[np.ndarray] = None  # (4, ny, nx) boundary data at crossings
    boundary_values: Optional[np.ndarray] = None  # (ny, nx) data at boundary cells
    _trees: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def shape(self):
        return self.mask.shape

    @property
    def bounds(self):
        ny, nx = self.shape
        return (self.t_min, self.t_min + (nx - 1) * self.h, self.u_min, self.u_min + (ny - 1) * self.h)

    @property
    def interior(self):
        return self.mask == INTERIOR

    @property
    def boundary(self):
        return self.mask == BOUNDARY

    def centers(self):
        ny, nx = self.shape
        t = self.t_min + self.h * np.arange(nx)
        u = self.u_min + self.h * np.arange(ny)
        return t[None, :] + 1j * u[:, None]

    @property
    def has_values(self):
        return self.edge_values is not None

    def with_boundary(self, func: Callable) -> "GridDomain":
        """Evaluate ``func`` (complex points -> real) on the boundary curve.

        Values go to every arm crossing and to each boundary cell's nearest
        curve point.
        """
        edge = np.full(self.arms.shape, np.nan)
        cut = np.isfinite(self.crossings)
        edge[cut] = np.asarray(func(self.crossings[cut]), dtype=float)
        bv = np.full(self.shape, np.nan)
        b = self.boundary
        bv[b] = np.asarray(func(self.nearest[b]), dtype=float)
        return replace(self, edge_values=_frozen(edge), boundary_values=_frozen(bv), _trees={})

    def nearest_interior(self, z: complex):
        c = self.centers()
        d = np.where(self.interior, np.abs(c - z), np.inf)
        return np.unravel_index(int(np.argmin(d)), self.shape)

    def default_anchor(self):
        c = self.centers()[self.interior]
        return self.nearest_interior(complex(c.mean()))


@dataclass(frozen=True)
class ScalarField:
    """Values on the interior and boundary cells of a grid (nan elsewhere)."""

    grid: GridDomain
    values: np.ndarray
    residual: float = 0.0
    iterations: int = 0
    tol: float = 0.0

    def interior_values(self):
        return self.values[self.grid.interior]

    def at(self, z):
        """Bilinear interpolation at complex points; nearest valid cell near edges."""
        g = self.grid
        z = np.asarray(z, dtype=complex)
        fx = (z.real - g.t_min) / g.h
        fy = (z.imag - g.u_min) / g.h
        ny, nx = g.shape
        j0 = np.clip(np.floor(fx).astype(int), 0, nx - 2)
        i0 = np.clip(np.floor(fy).astype(int), 0, ny - 2)
        a = np.clip(fx - j0, 0, 1)
        b = np.clip(fy - i0, 0, 1)
        v = self.values
        corners = np.stack([v[i0, j0], v[i0, j0 + 1], v[i0 + 1, j0], v[i0 + 1, j0 + 1]])
        w = np.stack([(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b])
        ok = np.all(np.isfinite(corners), axis=0)
        out = np.sum(np.where(np.isfinite(corners), corners, 0) * w, axis=0)
        if not np.all(ok):
            valid = np.isfinite(v)
            idx = ndimage.distance_transform_edt(~valid, return_distances=False, return_indices=True)
            ii = np.clip(np.rint(fy).astype(int), 0, ny - 1)
            jj = np.clip(np.rint(fx).astype(int), 0, nx - 1)
            near = v[idx[0][ii, jj], idx[1][ii, jj]]
            out = np.where(ok, out, near)
        return out


def _segments_cross(p, q):
    """Whether any two non-adjacent edges of the closed polyline intersect."""
    a = p
    b = q
    n = a.size
    d = b - a

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    chunk = max(1, 4_000_000 // max(n, 1))
    for s in range(0, n, chunk):
        ia = np.arange(s, min(n, s + chunk))[:, None]
        ib = np.arange(n)[None, :]
        pa, da = a[ia], d[ia]
        pb, db = a[ib], d[ib]
        den = cross(da, db)
        r = pb - pa
        with np.errstate(divide="ignore", invalid="ignore"):
            sa = cross(r, db) / den
            sb = cross(r, da) / den
        hit = (den != 0) & (sa > 1e-12) & (sa < 1 - 1e-12) & (sb > 1e-12) & (sb < 1 - 1e-12)
        adjacent = (np.abs(ia - ib) <= 1) | (np.abs(ia - ib) == n - 1)
        if np.any(hit & ~adjacent):
            return True
    return False


def _line_crossings(a, b, levels, axis):
    """Crossings of the polyline edges a->b with lines coord[axis] == level.

    Returns a list (one entry per level) of sorted crossing positions along
    the other coordinate. Half-open rule so each vertex counts once.
    """
    if axis == 1:  # horizontal lines u = level, report t
        c1, c2, o1, o2 = a.imag, b.imag, a.real, b.real
    else:  # vertical lines t = level, report u
        c1, c2, o1, o2 = a.real, b.real, a.imag, b.imag
    lo = np.minimum(c1, c2)
    hi = np.maximum(c1, c2)
    order = np.argsort(lo, kind="stable")
    lo_s = lo[order]
    out = []
    for lev in levels:
        k = np.searchsorted(lo_s, lev, side="right")
        cand = order[:k]
        cand = cand[(lo[cand] <= lev) & (lev < hi[cand])]
        s = (lev - c1[cand]) / (c2[cand] - c1[cand])
        out.append(np.sort(o1[cand] + s * (o2[cand] - o1[cand])))
    return out


def _nearest_on_polyline(points, a, b):
    best = np.full(points.shape, np.nan + 0j)
    bestd = np.full(points.shape, np.inf)
    d = b - a
    dd = np.maximum(np.abs(d) ** 2, 1e-300)
    chunk = max(1, 2_000_000 // max(a.size, 1))
    for s in range(0, points.size, chunk):
        p = points[s : s + chunk, None]
        w = np.clip(((p - a) * d.conj()).real / dd, 0.0, 1.0)
        q = a + w * d
        dist = np.abs(p - q)
        k = np.argmin(dist, axis=1)
        rows = np.arange(p.shape[0])
        best[s : s + chunk] = q[rows, k]
        bestd[s : s + chunk] = dist[rows, k]
    return best


def build_grid(region_plane, resolution: int) -> GridDomain:
    """Rasterize a closed plane polyline (complex vertices) into a GridDomain.

    ``h`` is the longest side of the bounding box divided by ``resolution``.
    """
    if resolution < 32:
        raise ValueError("resolution must be at least 32")
    p = np.asarray(region_plane, dtype=complex).ravel()
    if p.size >= 2 and p[0] == p[-1]:
        p = p[:-1]
    if p.size < 3 or not np.all(np.isfinite(p)):
        raise ValueError("need at least 3 finite vertices")
    q = np.roll(p, -1)
    if _segments_cross(p, q):
        raise NotSimple("boundary polyline intersects itself")
    t_lo, t_hi = p.real.min(), p.real.max()
    u_lo, u_hi = p.imag.min(), p.imag.max()
    span = max(t_hi - t_lo, u_hi - u_lo)
    if span <= 0:
        raise RegionTooThin("degenerate polyline")
    h = span / resolution
    nx = int(math.ceil((t_hi - t_lo) / h - 1e-9)) + 2 * MARGIN
    ny = int(math.ceil((u_hi - u_lo) / h - 1e-9)) + 2 * MARGIN
    t_min = t_lo + (0.5 - MARGIN) * h
    u_min = u_lo + (0.5 - MARGIN) * h
    ts = t_min + h * np.arange(nx)
    us = u_min + h * np.arange(ny)

    rows = _line_crossings(p, q, us, axis=1)
    cols = _line_crossings(p, q, ts, axis=0)
    inside = np.zeros((ny, nx), dtype=bool)
    for i, xs in enumerate(rows):
        inside[i] = (np.searchsorted(xs, ts, side="left") % 2) == 1
    if not inside.any():
        raise RegionTooThin("no cell centre lies inside the region")
    labels, count = ndimage.label(inside)
    if count != 1:
        raise RegionTooThin(f"interior splits into {count} pieces at this resolution")
    holes, nholes = ndimage.label(~inside)
    if nholes != 1:
        raise RegionTooThin("interior is not simply connected at this resolution")

    mask = np.zeros((ny, nx), dtype=np.int8)
    mask[inside] = INTERIOR
    ring = ndimage.binary_dilation(inside, structure=ndimage.generate_binary_structure(2, 1)) & ~inside
    mask[ring] = BOUNDARY

    arms = np.full((4, ny, nx), np.nan)
    arms[:, inside] = 1.0
    crossings = np.full((4, ny, nx), np.nan + 0j)
    nb_inside = [np.roll(inside, (-di, -dj), axis=(0, 1)) for di, dj in DIRS]
    for k, (di, dj) in enumerate(DIRS):
        short = inside & ~nb_inside[k]
        ii, jj = np.nonzero(short)
        for i, j in zip(ii, jj):
            if di == 0:
                xs = rows[i]
                t0 = ts[j]
                if dj > 0:
                    m = np.searchsorted(xs, t0, side="right")
                    c = xs[m] if m < xs.size else np.inf
                    frac = (c - t0) / h
                else:
                    m = np.searchsorted(xs, t0, side="left") - 1
                    c = xs[m] if m >= 0 else -np.inf
                    frac = (t0 - c) / h
                point = c + 1j * us[i]
            else:
                ys = cols[j]
                u0 = us[i]
                if di > 0:
                    m = np.searchsorted(ys, u0, side="right")
                    c = ys[m] if m < ys.size else np.inf
                    frac = (c - u0) / h
                else:
                    m = np.searchsorted(ys, u0, side="left") - 1
                    c = ys[m] if m >= 0 else -np.inf
                    frac = (u0 - c) / h
                point = ts[j] + 1j * c
            if not (0.0 <= frac <= 1.0 + 1e-9):
                # parity disagreement at a degenerate vertex; fall back to the neighbour cell
                continue
            arms[k, i, j] = min(max(frac, MIN_ARM), 1.0)
            crossings[k, i, j] = point

    centers = ts[None, :] + 1j * us[:, None]
    nearest = np.full((ny, nx), np.nan + 0j)
    nearest[ring] = _nearest_on_polyline(centers[ring], p, q)
    return GridDomain(
        t_min=float(t_min),
        u_min=float(u_min),
        h=float(h),
        mask=_frozen(mask),
        arms=_frozen(arms),
        crossings=_frozen(crossings),
        nearest=_frozen(nearest),
        polyline=_frozen(p),
    )


def _stencil(domain: GridDomain):
    """Normalized Shortley-Weller weights and neighbour data per direction."""
    inside = domain.interior
    a = np.where(inside[None], domain.arms, 1.0)
    tot_t = a[0] + a[1]
    tot_u = a[2] + a[3]
    c = np.stack([2 / (a[0] * tot_t), 2 / (a[1] * tot_t), 2 / (a[2] * tot_u), 2 / (a[3] * tot_u)])
    w = c / c.sum(axis=0)
    nb_int = np.stack([np.roll(inside, (-di, -dj), axis=(0, 1)) for di, dj in DIRS])
    const = np.zeros(w.shape)
    cut = np.isfinite(domain.crossings)
    const[cut] = domain.edge_values[cut]
    # arms left full although the neighbour is not interior: use that cell's value
    fallback = inside[None] & ~nb_int & ~cut
    if fallback.any():
        bv = np.nan_to_num(domain.boundary_values)
        for k, (di, dj) in enumerate(DIRS):
            const[k][fallback[k]] = np.roll(bv, (-di, -dj), axis=(0, 1))[fallback[k]]
    use_field = nb_int & inside[None]
    return w, use_field, const


def _increment(U, w, use_field, const):
    """Gauss-Seidel increment sum_k w_k (V_k - U) for every cell."""
    inc = np.zeros_like(U)
    for k, (di, dj) in enumerate(DIRS):
        nb = np.roll(U, (-di, -dj), axis=(0, 1))
        inc += w[k] * (np.where(use_field[k], nb, const[k]) - U)
    return inc


def laplace_residual(field: ScalarField) -> float:
    """Max normalized Shortley-Weller residual over interior cells (units of the field)."""
    g = field.grid
    w, use_field, const = _stencil(g)
    U = np.where(g.interior, field.values, 0.0)
    return float(np.max(np.abs(_increment(U, w, use_field, const)[g.interior])))


def solve_dirichlet(
    domain: GridDomain,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    omega: Optional[float] = None,
    check_every: int = 10,
) -> ScalarField:
    """Red-black SOR for the Laplace equation with the domain's boundary data.

    ``tol`` bounds the normalized residual (the largest Gauss-Seidel
    increment); it defaults to ``1e-10`` times the range of the boundary data.
    """
    if not domain.has_values:
        raise ValueError("boundary values are not set")
    inside = domain.interior
    w, use_field, const = _stencil(domain)
    data = np.concatenate([domain.edge_values[np.isfinite(domain.edge_values)],
                           domain.boundary_values[np.isfinite(domain.boundary_values)]])
    lo, hi = float(data.min()), float(data.max())
    vrange = hi - lo
    if tol is None:
        tol = 1e-10 * max(vrange, abs(hi), abs(lo), 1e-300)
    ny, nx = domain.shape
    if max_iter is None:
        max_iter = max(20000, 60 * max(nx, ny))
    if omega is None:
        ii, jj = np.nonzero(inside)
        lx = jj.max() - jj.min() + 2
        ly = ii.max() - ii.min() + 2
        rho = 0.5 * (math.cos(math.pi / lx) + math.cos(math.pi / ly))
        omega = 2.0 / (1.0 + math.sqrt(1.0 - rho * rho))

    # start from the mean boundary value; exact for constant data
    U = np.where(inside, 0.5 * (lo + hi), 0.0)
    if vrange == 0.0:
        U = np.where(inside, lo, 0.0)
    parity = np.add.outer(np.arange(ny), np.arange(nx)) % 2
    S = (slice(1, -1), slice(1, -1))
    nbs = ((slice(1, -1), slice(2, None)), (slice(1, -1), slice(None, -2)),
           (slice(2, None), slice(1, -1)), (slice(None, -2), slice(1, -1)))
    W = [np.where(use_field[k], w[k], 0.0)[S] for k in range(4)]
    B = np.sum(np.where(use_field, 0.0, w * const), axis=0)[S]
    colors = [(inside & (parity == c)).astype(float)[S] for c in (0, 1)]

    def sweep(U, om):
        for cm in colors:
            inc = W[0] * U[nbs[0]] + W[1] * U[nbs[1]] + W[2] * U[nbs[2]] + W[3] * U[nbs[3]] + B
            inc -= U[S]
            inc *= om * cm
            U[S] += inc
        return U

    residual = float(np.max(np.abs(_increment(U, w, use_field, const)[inside])))
    first = max(residual, 1e-300)
    it = 0
    om = omega
    while residual > tol:
        if it >= max_iter:
            raise NoConvergence(residual, tol, max_iter)
        for _ in range(check_every):
            U = sweep(U, om)
        it += check_every
        residual = float(np.max(np.abs(_increment(U, w, use_field, const)[inside])))
        if not math.isfinite(residual) or residual > 1e3 * first:
            if om == 1.0:
                raise NoConvergence(residual, tol, it)
            # divergence: restart as plain Gauss-Seidel
            om = 1.0
            U = np.where(inside, 0.5 * (lo + hi), 0.0)
            residual = first

    values = np.full((ny, nx), np.nan)
    values[inside] = U[inside]
    values[domain.boundary] = domain.boundary_values[domain.boundary]
    return ScalarField(domain, _frozen(values), residual=residual, iterations=it, tol=tol)


def _neighbor_value(field_vals, domain, k):
    """Per-cell value and distance (in units of h) along direction k."""
    di, dj = DIRS[k]
    inside = domain.interior
    nb_int = np.roll(inside, (-di, -dj), axis=(0, 1))
    nbv = np.roll(field_vals, (-di, -dj), axis=(0, 1))
    cut = np.isfinite(domain.crossings[k])
    val = np.where(nb_int, nbv, np.nan)
    dist = np.where(nb_int, 1.0, np.nan)
    if domain.edge_values is not None:
        val = np.where(cut, domain.edge_values[k], val)
        dist = np.where(cut, domain.arms[k], dist)
    return val, dist


def gradient(field: ScalarField):
    """Second-order (d/dt, d/du) on interior cells using arm-aware 3-point stencils."""
    g = field.grid
    U = np.where(g.interior, field.values, np.nan)
    out = []
    for kp, km in ((0, 1), (2, 3)):
        vp, b = _neighbor_value(U, g, kp)
        vm, a = _neighbor_value(U, g, km)
        with np.errstate(invalid="ignore", divide="ignore"):
            d = (-b / (a * (a + b)) * vm + (b - a) / (a * b) * U + a / (b * (a + b)) * vp) / g.h
        # a missing side (should not happen with a full stencil): one-sided difference
        d = np.where(np.isnan(vm) & np.isfinite(vp), (vp - U) / (b * g.h), d)
        d = np.where(np.isnan(vp) & np.isfinite(vm), (U - vm) / (a * g.h), d)
        out.append(np.where(g.interior, d, np.nan))
    return out[0], out[1]


def _shortest_path_tree(domain: GridDomain, anchor, prefer_u_parent: bool):
    """Breadth-first levels plus parent direction for each interior cell.

    With ``prefer_u_parent`` the path to each cell ends with moves along u,
    so read from the anchor it runs along the anchor's row first.
    """
    key = (tuple(anchor), prefer_u_parent)
    if key in domain._trees:
        return domain._trees[key]
    inside = domain.interior
    ny, nx = domain.shape
    depth = np.full((ny, nx), -1, dtype=np.int64)
    depth[anchor] = 0
    frontier = np.zeros((ny, nx), dtype=bool)
    frontier[anchor] = True
    cross = ndimage.generate_binary_structure(2, 1)
    levels = [np.array([anchor])]
    d = 0
    while True:
        nxt = ndimage.binary_dilation(frontier, structure=cross) & inside & (depth < 0)
        if not nxt.any():
            break
        d += 1
        depth[nxt] = d
        levels.append(np.argwhere(nxt))
        frontier = nxt
    if np.any(inside & (depth < 0)):
        raise PathInconsistency("interior is not connected")
    # parent direction: step from the cell towards its parent
    order = (2, 3, 0, 1) if prefer_u_parent else (0, 1, 2, 3)
    parent_dir = np.full((ny, nx), -1, dtype=np.int64)
    for k in reversed(order):
        di, dj = DIRS[k]
        nb_depth = np.roll(depth, (-di, -dj), axis=(0, 1))
        ok = inside & (depth > 0) & (nb_depth == depth - 1)
        parent_dir[ok] = k
    tree = (levels, parent_dir)
    domain._trees[key] = tree
    return tree


def _integrate_tree(domain, anchor, anchor_value, edge_increment, prefer_u_parent):
    """Accumulate edge increments from the anchor along a shortest-path tree.

    ``edge_increment(k, child_idx)`` returns the increment from the parent
    (one step along direction k from the child) to the child.
    """
    levels, parent_dir = _shortest_path_tree(domain, anchor, prefer_u_parent)
    out = np.full(domain.shape, np.nan, dtype=np.result_type(anchor_value, float))
    out[anchor] = anchor_value
    for lvl in levels[1:]:
        ii, jj = lvl[:, 0], lvl[:, 1]
        ks = parent_dir[ii, jj]
        for k, (di, dj) in enumerate(DIRS):
            sel = ks == k
            if not sel.any():
                continue
            ci, cj = ii[sel], jj[sel]
            out[ci, cj] = out[ci + di, cj + dj] + edge_increment(k, ci, cj)
    return out


def _two_path(domain, anchor, anchor_value, edge_increment, tol, what):
    a = _integrate_tree(domain, anchor, anchor_value, edge_increment, prefer_u_parent=True)
    b = _integrate_tree(domain, anchor, anchor_value, edge_increment, prefer_u_parent=False)
    inside = domain.interior
    gap = float(np.max(np.abs(a[inside] - b[inside])))
    if gap > tol:
        raise PathInconsistency(f"{what}: path results differ by {gap:.3e} (> {tol:.3e})")
    return a, gap


def harmonic_conjugate(field: ScalarField, anchor=None, path_factor: float = 10.0) -> ScalarField:
    """Conjugate ``g`` with ``f + i g`` analytic in ``z = t + i u``.

    Uses ``g_t = -f_u`` and ``g_u = f_t`` integrated by the trapezoid rule
    from ``anchor`` (where ``g = 0``).
    """
    g = field.grid
    tol_res = 100 * max(field.tol, 1e-12 * float(np.nanmax(np.abs(field.values))))
    res = laplace_residual(field)
    if res > tol_res:
        raise NotHarmonic(f"laplace residual {res:.3e} exceeds {tol_res:.3e}")
    anchor = tuple(anchor) if anchor is not None else g.default_anchor()
    ft, fu = gradient(field)
    gt, gu = -fu, ft

    def incr(k, ci, cj):
        di, dj = DIRS[k]
        pi, pj = ci + di, cj + dj
        if di == 0:
            return 0.5 * (gt[ci, cj] + gt[pi, pj]) * (-dj * g.h)
        return 0.5 * (gu[ci, cj] + gu[pi, pj]) * (-di * g.h)

    gmax = float(np.nanmax(np.hypot(ft, fu)))
    tol = path_factor * g.h ** 2 * max(gmax, 1e-300) + 1e-12
    conj, gap = _two_path(g, anchor, 0.0, incr, tol, "harmonic_conjugate")
    # boundary cells: one step from an adjacent interior cell
    b = g.boundary
    for k, (di, dj) in enumerate(DIRS):
        src = np.roll(conj, (di, dj), axis=(0, 1))
        step = np.roll(np.where(di == 0, gt, gu), (di, dj), axis=(0, 1)) * g.h
        fill = b & np.isnan(conj) & np.isfinite(src)
        conj = np.where(fill, src + step * (dj if di == 0 else di), conj)
    return ScalarField(g, _frozen(conj), residual=gap)


def integrate_holomorphic(fprime, domain: GridDomain, anchor=None, anchor_value: complex = 0j,
                          path_factor: float = 10.0) -> ScalarField:
    """Recover ``f`` from ``f'`` (complex array on the grid) by trapezoid line integrals."""
    fp = np.asarray(fprime, dtype=complex)
    if fp.shape != domain.shape:
        raise ValueError("fprime must have the grid shape")
    anchor = tuple(anchor) if anchor is not None else domain.default_anchor()
    h = domain.h

    def incr(k, ci, cj):
        di, dj = DIRS[k]
        dz = -(dj * h + 1j * di * h)
        return 0.5 * (fp[ci, cj] + fp[ci + di, cj + dj]) * dz

    fmax = float(np.max(np.abs(fp[domain.interior])))
    tol = path_factor * h ** 2 * max(fmax, 1e-300) + 1e-12
    f, gap = _two_path(domain, anchor, complex(anchor_value), incr, tol, "integrate_holomorphic")
    return ScalarField(domain, _frozen(f), residual=gap)
