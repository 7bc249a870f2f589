import math

import numpy as np
import pytest

from chebmap.errors import NoConvergence, NotHarmonic, NotSimple, RegionTooThin
from chebmap.laplace import (
    ScalarField,
    build_grid,
    gradient,
    harmonic_conjugate,
    integrate_holomorphic,
    laplace_residual,
    solve_dirichlet,
)


def disk(n=400, c=0.2 + 0.1j, r=1.0):
    return c + r * np.exp(2j * np.pi * np.arange(n) / n)


def test_grid_classifies_cells():
    g = build_grid(disk(), 64)
    z = g.centers()
    assert np.all(np.abs(z[g.interior] - (0.2 + 0.1j)) < 1.0)
    assert g.interior.sum() > 0.7 * math.pi * (64 / 2) ** 2
    # arms are fractions of h in (0, 1]
    a = g.arms[:, g.interior]
    assert np.all((a > 0) & (a <= 1))


def test_grid_errors():
    with pytest.raises(ValueError):
        build_grid(disk(), 16)
    bowtie = np.array([0, 1 + 1j, 1, 1j])
    with pytest.raises(NotSimple):
        build_grid(bowtie, 64)
    sliver = np.array([0, 1, 1 + 1e-4j])
    with pytest.raises(RegionTooThin):
        build_grid(sliver, 32)


def test_constant_and_linear_data_reproduced_exactly():
    g = build_grid(disk(), 64)
    f = solve_dirichlet(g.with_boundary(lambda z: np.full(z.shape, 3.5)))
    assert np.all(f.interior_values() == 3.5)
    f = solve_dirichlet(g.with_boundary(lambda z: 2 * z.real - z.imag), tol=1e-13)
    z = g.centers()[g.interior]
    assert np.max(np.abs(f.interior_values() - (2 * z.real - z.imag))) < 1e-10


def test_second_order_convergence():
    func = lambda z: np.exp(z).real
    errs = []
    for res in (32, 64, 128):
        g = build_grid(disk(), res).with_boundary(func)
        f = solve_dirichlet(g)
        z = g.centers()[g.interior]
        errs.append(np.max(np.abs(f.interior_values() - func(z))))
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


def test_solution_is_discretely_harmonic():
    g = build_grid(disk(), 64).with_boundary(lambda z: np.exp(z).imag)
    f = solve_dirichlet(g)
    assert laplace_residual(f) <= f.tol
    assert f.iterations > 0


def test_no_convergence_reports_residual():
    g = build_grid(disk(), 64).with_boundary(lambda z: np.exp(z).real)
    with pytest.raises(NoConvergence) as info:
        solve_dirichlet(g, max_iter=5)
    assert info.value.residual > info.value.tol
    with pytest.raises(ValueError):
        solve_dirichlet(build_grid(disk(), 64))


def test_gradient_of_quadratic():
    g = build_grid(disk(), 128).with_boundary(lambda z: (z * z).real)
    f = solve_dirichlet(g, tol=1e-13)
    gt, gu = gradient(f)
    z = g.centers()[g.interior]
    assert np.max(np.abs(gt[g.interior] - 2 * z.real)) < 1e-8
    assert np.max(np.abs(gu[g.interior] + 2 * z.imag)) < 1e-8


def test_harmonic_conjugate_of_exp():
    # Re e^z has conjugate Im e^z (up to a constant)
    g = build_grid(disk(), 128).with_boundary(lambda z: np.exp(z).real)
    f = solve_dirichlet(g)
    c = harmonic_conjugate(f)
    z = g.centers()[g.interior]
    d = c.values[g.interior] - np.exp(z).imag
    assert np.ptp(d) < 1e-3


def test_harmonic_conjugate_rejects_non_harmonic():
    g = build_grid(disk(), 64).with_boundary(lambda z: z.real)
    vals = np.where(g.interior, np.abs(g.centers()) ** 2, np.nan)
    bad = ScalarField(g, vals, residual=1.0, tol=1e-12)
    with pytest.raises(NotHarmonic):
        harmonic_conjugate(bad)


def test_integrate_holomorphic_recovers_primitive():
    g = build_grid(disk(), 128)
    z = g.centers()
    fp = np.where(g.interior, 2 * z, 0)
    anchor = g.default_anchor()
    w = integrate_holomorphic(fp, g, anchor, z[anchor] ** 2)
    err = np.abs(w.values[g.interior] - z[g.interior] ** 2)
    assert err.max() < 1e-10


def test_bilinear_at():
    g = build_grid(disk(), 64).with_boundary(lambda z: z.real + 2 * z.imag)
    f = solve_dirichlet(g)
    pts = np.array([0.1 + 0.2j, 0.5 - 0.3j])
    assert np.allclose(f.at(pts), pts.real + 2 * pts.imag, atol=1e-9)
