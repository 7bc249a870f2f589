"""Command-line front end: ``chebmap project|optimize|net|compare``.

Angles are degrees on the command line and radians everywhere else.
Exit codes: 0 ok, 2 bad input, 3 singular region or pole, 4 solver did not
converge.
"""
from __future__ import annotations

import argparse
import csv
import math
import struct
import sys
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .distortion import distortion_report, region_samples, sample_scales
from .errors import (
    BadParam,
    ChebmapError,
    NetTooSmall,
    NoConvergence,
    NotSimple,
    PoleError,
    RegionTooThin,
    SingularPoint,
)
from .geo import GeoPoint, Region, boundary_lonlat
from .nets import STATUS_NAMES, darboux_net, edge_length_check, net_angles, sine_gordon_residual
from .optimal import fit_conic_exponent, optimize_projection, stereographic_at_centroid
from .projections import KINDS, make_projection

EXIT_OK, EXIT_INPUT, EXIT_SINGULAR, EXIT_SOLVER = 0, 2, 3, 4
MAP_MAGIC = b"CHEBMAP1"
GRATICULE_STEP = 10.0  # degrees


class InputError(ChebmapError, ValueError):
    """Malformed command-line input or region file."""


@dataclass
class RunConfig:
    command: str
    grid: int = 32
    tol: float | None = None
    graticule: float = GRATICULE_STEP
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise InputError("tolerance must be positive")
        if not self.graticule > 0:
            raise InputError("graticule spacing must be positive")
        if not 8 <= self.grid <= 2048:
            raise InputError(f"grid {self.grid} outside [8, 2048]")


# -- region files ------------------------------------------------------------


def parse_region(text: str, name: str = "region") -> Region:
    """One ``lon lat`` pair in degrees per line; '#' starts a comment."""
    lon, lat = [], []
    for k, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise InputError(f"line {k}: expected 'lon lat', got {line!r}")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise InputError(f"line {k}: not a number pair: {line!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputError(f"line {k}: non-finite coordinate")
        lon.append(x)
        lat.append(y)
    if len(lon) < 3:
        raise InputError("a region needs at least 3 vertices")
    return Region.from_degrees(lon, lat, name=name)


def _degrees_text(x: float) -> str:
    """Shortest degree string that converts back to exactly x radians, when one exists nearby."""
    d = math.degrees(x)
    cands = [d]
    lo = hi = d
    for _ in range(8):
        lo, hi = math.nextafter(lo, -math.inf), math.nextafter(hi, math.inf)
        cands += [lo, hi]
    for c in cands:
        if math.radians(c) == x:
            return repr(c)
    return f"{d:.17g}"


def format_region(region: Region) -> str:
    lines = [f"{_degrees_text(float(x))} {_degrees_text(float(y))}" for x, y in zip(region.lon, region.lat)]
    return "\n".join(lines) + "\n"


def read_region(path: str) -> Region:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read region file {path}: {exc.strerror}") from None
    return parse_region(text, name=path)


# -- SVG ---------------------------------------------------------------------


def _path_data(xy):
    """SVG path with north up; NaN points split the path into pieces."""
    out, pen = [], False
    for x, y in xy:
        if not (math.isfinite(x) and math.isfinite(y)):
            pen = False
            continue
        out.append(f"{'L' if pen else 'M'}{x:.9f} {-y:.9f}")
        pen = True
    return " ".join(out)


def write_svg(path, boundary, lines, legend=(), title="chebmap"):
    """boundary and each entry of lines are (k, 2) arrays in plot units."""
    pts = [np.asarray(boundary)] + [np.asarray(l) for l in lines]
    allp = np.concatenate([p for p in pts if p.size]).reshape(-1, 2)
    allp = allp[np.all(np.isfinite(allp), axis=1)]
    if allp.size == 0:
        raise SingularPoint("nothing drawable in the image")
    x0, y0 = allp.min(axis=0)
    x1, y1 = allp.max(axis=0)
    span = max(x1 - x0, y1 - y0, 1e-12)
    m = 0.05 * span
    w, h = x1 - x0 + 2 * m, y1 - y0 + 2 * m
    stroke = span / 400
    font = span / 30
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0 - m:.9f} {-y1 - m:.9f} {w:.9f} {h:.9f}">',
        f"<title>{escape(title)}</title>",
        f'<g id="graticule" fill="none" stroke="#888" stroke-width="{stroke:.9f}">',
    ]
    for line in lines:
        d = _path_data(line)
        if d:
            parts.append(f'<path class="graticule" d="{d}"/>')
    parts.append("</g>")
    parts.append(f'<path id="boundary" class="boundary" fill="none" stroke="#000" '
                 f'stroke-width="{2 * stroke:.9f}" d="{_path_data(boundary)} Z"/>')
    parts.append(f'<g id="legend" font-size="{font:.9f}" font-family="sans-serif">')
    for k, text in enumerate(legend):
        parts.append(f'<text x="{x0 - m + font * 0.5:.9f}" y="{-y1 - m + font * (k + 1.2):.9f}">'
                     f"{escape(text)}</text>")
    parts.append("</g>")
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def graticule_lines(region: Region, step_deg: float, samples: int = 181):
    """Meridians and parallels at multiples of step_deg over the region's bounding box."""
    lon, lat = boundary_lonlat(region)
    lo0, lo1 = lon.min(), lon.max()
    la0, la1 = lat.min(), lat.max()
    step = math.radians(step_deg)
    lines = []
    for L in np.arange(math.ceil(lo0 / step), math.floor(lo1 / step) + 1) * step:
        lines.append((np.full(samples, L), np.linspace(la0, la1, samples)))
    for P in np.arange(math.ceil(la0 / step), math.floor(la1 / step) + 1) * step:
        lines.append((np.linspace(lo0, lo1, samples), np.full(samples, P)))
    return lines


def _project_lines(proj, lines):
    out = []
    for lon, lat in lines:
        bad = proj.is_singular(lon, lat)
        x, y = proj.forward(lon, lat)
        xy = np.stack([x, y], axis=1).astype(float)
        xy[bad] = np.nan
        out.append(xy)
    return out


# -- projections from the command line ----------------------------------------


def _pair(text, what):
    try:
        a, b = (float(s) for s in text.split(","))
    except ValueError:
        raise InputError(f"{what} expects two comma-separated numbers, got {text!r}") from None
    return a, b


def projection_from_args(kind, args, region=None):
    params = {}
    if args.central_meridian is not None:
        params["central_meridian"] = math.radians(args.central_meridian)
    elif region is not None:
        params["central_meridian"] = region.centroid().lon
    if kind == "stereographic":
        if args.center:
            lo, la = _pair(args.center, "--center")
            params = {"center": GeoPoint.from_degrees(lo, la)}
        else:
            return stereographic_at_centroid(region, scale=args.scale)
    elif kind in ("conformal_conic", "lagrange_circle"):
        if args.n is not None:
            params["n"] = args.n
        if kind == "conformal_conic" and args.center_lat is not None:
            params["center_lat"] = math.radians(args.center_lat)
    elif kind == "delisle_conic":
        if args.std_parallels:
            p1, p2 = _pair(args.std_parallels, "--std-parallels")
        else:
            _, lat = boundary_lonlat(region)
            # mid-latitude and the upper quarter point; never symmetric about the equator
            lo, hi = math.degrees(lat.min()), math.degrees(lat.max())
            p1 = 0.5 * (lo + hi)
            p2 = 0.5 * (p1 + hi)
        params["std_parallel_1"] = math.radians(p1)
        params["std_parallel_2"] = math.radians(p2)
    return make_projection(kind, scale=args.scale, **params)


def _add_projection_flags(p):
    p.add_argument("--n", type=float, help="cone constant / Lagrange exponent")
    p.add_argument("--central-meridian", type=float, help="degrees; default: region centroid")
    p.add_argument("--center-lat", type=float, help="conformal_conic centre latitude, degrees")
    p.add_argument("--center", help="stereographic centre 'lon,lat' in degrees; default: centroid")
    p.add_argument("--std-parallels", help="delisle_conic 'p1,p2' in degrees")
    p.add_argument("--scale", type=float, default=1.0)


# -- commands ----------------------------------------------------------------


def cmd_project(args) -> int:
    cfg = RunConfig("project", grid=args.grid, graticule=args.graticule,
                    outputs={"svg": args.svg, "csv": args.csv})
    region = read_region(args.region)
    proj = projection_from_args(args.proj, args, region)
    rep = distortion_report(proj, region, cfg.grid)
    classes = ",".join(sorted(rep.classification)) or "-"
    print(f"projection={proj.name} ratio={rep.ratio:.10g} m_min={rep.m_min:.10g} "
          f"m_max={rep.m_max:.10g} classes={classes}")
    if cfg.outputs["csv"]:
        s = region_samples(region, cfg.grid)
        sc = sample_scales(proj, s.lon, s.lat)
        with open(cfg.outputs["csv"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["lon", "lat", "k_meridian", "k_parallel", "tissot_a", "tissot_b",
                        "angle_distortion", "m"])
            for k in range(s.lon.size):
                a, b = sc["a"][k], sc["b"][k]
                m = a if a - b <= 1e-6 * a else math.nan
                w.writerow([f"{v:.17g}" for v in (
                    math.degrees(s.lon[k]), math.degrees(s.lat[k]), sc["k_meridian"][k],
                    sc["k_parallel"][k], a, b, sc["omega"][k], m)])
    if cfg.outputs["svg"]:
        lon, lat = boundary_lonlat(region)
        x, y = proj.forward(lon, lat)
        lines = _project_lines(proj, graticule_lines(region, cfg.graticule))
        write_svg(cfg.outputs["svg"], np.stack([x, y], axis=1), lines,
                  legend=[f"{proj.name}", f"distortion ratio {rep.ratio:.6f}",
                          f"scale {rep.m_min:.6f} .. {rep.m_max:.6f}"],
                  title=f"{proj.name}: {region.name}")
    return EXIT_OK


def write_map_file(path, opt) -> None:
    """Little-endian float64 throughout: header then image (re, im) pairs then m, row-major."""
    g = opt.grid
    ny, nx = g.shape
    t0, t1, u0, u1 = g.bounds
    header = np.array([t0, t1, u0, u1, g.h, nx, ny], dtype="<f8")
    img = np.empty((ny, nx, 2), dtype="<f8")
    img[..., 0] = opt.image.values.real
    img[..., 1] = opt.image.values.imag
    with open(path, "wb") as fh:
        fh.write(MAP_MAGIC)
        fh.write(header.tobytes())
        fh.write(img.tobytes())
        fh.write(np.asarray(opt.m_field.values, dtype="<f8").tobytes())


def read_map_file(path):
    """Inverse of write_map_file: (header dict, image complex (ny, nx), m (ny, nx))."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAP_MAGIC:
        raise InputError(f"{path} is not a CHEBMAP1 file")
    t0, t1, u0, u1, h, nx, ny = struct.unpack("<7d", data[8:64])
    nx, ny = int(nx), int(ny)
    body = np.frombuffer(data, dtype="<f8", offset=64)
    if body.size != 3 * nx * ny:
        raise InputError(f"{path}: body size does not match the header")
    img = body[: 2 * nx * ny].reshape(ny, nx, 2)
    m = body[2 * nx * ny:].reshape(ny, nx)
    header = {"t_min": t0, "t_max": t1, "u_min": u0, "u_max": u1, "h": h, "nx": nx, "ny": ny}
    return header, img[..., 0] + 1j * img[..., 1], m


def cmd_optimize(args) -> int:
    cfg = RunConfig("optimize", grid=args.grid, tol=args.tol, graticule=args.graticule,
                    outputs={"map": args.out, "svg": args.svg})
    if cfg.grid < 64:
        raise InputError("optimize needs --grid >= 64")
    region = read_region(args.region)
    opt = optimize_projection(region, cfg.grid, tol=cfg.tol)
    if cfg.outputs["map"]:
        write_map_file(cfg.outputs["map"], opt)
    if cfg.outputs["svg"]:
        lon, lat = boundary_lonlat(region)
        b = opt.image_at(lon, lat)
        lines = []
        for glon, glat in graticule_lines(region, cfg.graticule):
            w = opt.image_at(glon, glat)
            lines.append(np.stack([w.real, w.imag], axis=1))
        write_svg(cfg.outputs["svg"], np.stack([b.real, b.imag], axis=1), lines,
                  legend=["optimized conformal map", f"distortion ratio {opt.ratio:.6f}"],
                  title=f"optimized: {region.name}")
    print(f"ratio={opt.ratio:.10g} boundary_dev={opt.boundary_constancy:.10g}")
    return EXIT_OK


def _net_svg(path, net):
    """Orthographic view from the base point (sphere) or the plane itself."""
    P = net.points
    if net.surface == "sphere":
        xy = np.where((P[..., 0] >= 0)[..., None], P[..., 1:3], np.nan)
    else:
        xy = P.copy()
    xy = np.where((net.status == 0)[..., None], xy, np.nan)
    lines = [xy[i] for i in range(xy.shape[0])] + [xy[:, j] for j in range(xy.shape[1])]
    if net.surface == "sphere":
        a = np.linspace(0, 2 * math.pi, 361)
        outline = np.stack([net.radius * np.cos(a), net.radius * np.sin(a)], axis=1)
    else:
        ok = xy[np.all(np.isfinite(xy), axis=-1)]
        x0, y0 = ok.min(axis=0)
        x1, y1 = ok.max(axis=0)
        outline = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    write_svg(path, outline, lines, legend=[f"{net.surface} net", f"phi0 {math.degrees(net.phi0):.6f} deg"],
              title=f"{net.surface} Chebyshev net")


def cmd_net(args) -> int:
    if args.rect:
        a_len, c_len = _pair(args.rect, "--rect")
    else:
        a_len = c_len = args.step
    if not (a_len > 0 and c_len > 0):
        raise InputError("edge lengths must be positive")
    if not args.extent > 0:
        raise InputError("--extent must be positive")
    N = int(math.floor(args.extent / max(a_len, c_len) + 1e-9))
    net = darboux_net(args.surface, math.radians(args.phi0), a_len, c_len, N, args.curvature)
    phi = net_angles(net)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            coords = ["x", "y", "z"] if net.surface == "sphere" else ["x", "y"]
            w.writerow(["i", "j", *coords, "phi", "status"])
            size = 2 * N + 1
            for I in range(size):
                for J in range(size):
                    p = net.points[I, J]
                    ph = phi[I, J] if I < size - 1 and J < size - 1 else math.nan
                    w.writerow([I - N, J - N, *(f"{v:.17g}" for v in p), f"{ph:.17g}",
                                STATUS_NAMES[int(net.status[I, J])]])
    if args.svg:
        _net_svg(args.svg, net)
    try:
        res, where = sine_gordon_residual(net)
        res_text = f"residual={res:.6e} at=({where[0]},{where[1]})"
    except NetTooSmall:
        res_text = "residual=nan"
    counts = {name: int(np.sum(net.status == code)) for code, name in STATUS_NAMES.items()}
    print(f"N={N} edge_dev={edge_length_check(net):.3e} {res_text} "
          + " ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


SPECIAL = ("optimized", "conic-fit")


def cmd_compare(args) -> int:
    names = [s.strip() for s in args.projections.split(",") if s.strip()]
    seen, unique = set(), []
    for s in names:
        if s in seen:
            print(f"warning: {s} listed more than once; keeping one row", file=sys.stderr)
            continue
        seen.add(s)
        unique.append(s)
    for s in unique:
        if s not in KINDS and s not in SPECIAL:
            raise InputError(f"unknown projection {s!r}")
    if len(unique) < 2 and "optimized" not in unique:
        raise InputError("compare needs at least two projections or 'optimized'")
    if args.opt_grid < 64:
        raise InputError("--opt-grid must be >= 64")
    region = read_region(args.region)
    rows = []
    for s in unique:
        if s == "optimized":
            rows.append((s, optimize_projection(region, args.opt_grid).ratio))
        elif s == "conic-fit":
            fit = fit_conic_exponent(region)
            rows.append((s, distortion_report(fit.projection(), region, args.grid).ratio))
        else:
            proj = projection_from_args(s, args, region)
            rows.append((s, distortion_report(proj, region, args.grid).ratio))
    rows.sort(key=lambda r: (r[1], r[0]))
    width = max(len(r[0]) for r in rows)
    for name, ratio in rows:
        print(f"{name:<{width}}  {ratio:.10f}")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["projection", "ratio"])
            for name, ratio in rows:
                w.writerow([name, f"{ratio:.17g}"])
    return EXIT_OK


# -- entry point -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser():
    ap = _Parser(prog="chebmap", description="Map projections, least-distortion maps and Chebyshev nets.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("project", help="project a region and report its distortion")
    p.add_argument("region", help="region file: 'lon lat' in degrees per line")
    p.add_argument("--proj", required=True, choices=KINDS)
    _add_projection_flags(p)
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--graticule", type=float, default=GRATICULE_STEP, help="degrees")
    p.add_argument("--svg")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("optimize", help="least-distortion conformal map of a region")
    p.add_argument("region")
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--tol", type=float)
    p.add_argument("--graticule", type=float, default=GRATICULE_STEP)
    p.add_argument("--out", help="CHEBMAP1 map file")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("net", help="build a Chebyshev net")
    p.add_argument("--surface", choices=("sphere", "plane"), default="sphere")
    p.add_argument("--phi0", type=float, default=90.0, help="seed angle, degrees")
    p.add_argument("--step", type=float, default=0.05, help="edge length (arc length on the sphere)")
    p.add_argument("--extent", type=float, default=math.pi / 2, help="seed length per direction")
    p.add_argument("--rect", help="'a,c' edge lengths along i and j")
    p.add_argument("--curvature", type=float, default=1.0)
    p.add_argument("--out", help="CSV output")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_net)

    p = sub.add_parser("compare", help="distortion ratio of several projections")
    p.add_argument("region")
    p.add_argument("--projections", required=True,
                   help="comma list of kinds plus 'conic-fit' and 'optimized'")
    _add_projection_flags(p)
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--opt-grid", type=int, default=128)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoConvergence as exc:
        print(f"error: {exc} (residual {exc.residual:.6e})", file=sys.stderr)
        return EXIT_SOLVER
    except (SingularPoint, PoleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (InputError, BadParam, ValueError, RegionTooThin, NotSimple) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
