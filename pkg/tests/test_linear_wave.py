"""Linear wave and transport solvers plus the weak-form auditor."""

from __future__ import annotations

import numpy as np
import pytest

from wavemap1d.domain import CompactTrapezoid
from wavemap1d.errors import DataCoverage, TestFunctionSupport
from wavemap1d.fields import CellField1D, Curve, NullLattice
from wavemap1d.linear_wave import (Bump2D, dalembert_solve, transport_solve,
                                   weak_form_residual)

K1 = CompactTrapezoid(0.0, 1.0, 1.0)


def grid_data(h, fn_u0, fn_v0):
    n = int(round(2.0 / h))
    xs = -1.0 + np.arange(n + 1) * h
    xc = -1.0 + (np.arange(n) + 0.5) * h
    u0 = Curve(-1.0, h, fn_u0(xs)[:, None])
    v0 = CellField1D(-1.0, h, fn_v0(xc)[:, None])
    return u0, v0, n


def test_dalembert_exact_polynomials():
    h = 0.25
    u0, v0, n = grid_data(h, lambda x: x, lambda x: 0.0 * x)
    lat = NullLattice.for_trapezoid(K1, h)
    wf = dalembert_solve(u0, v0, lat.zero_cells(1), K1, h)
    for k in range(lat.q + 1):
        np.testing.assert_allclose(wf.u_nodes[k, :lat.node_count(k), 0],
                                   lat.node_x(k), atol=1e-14)
    # forced: u = t^2 / 2 needs h-field identically 1
    u0, v0, n = grid_data(h, lambda x: 0.0 * x, lambda x: 0.0 * x)
    H = np.ones((lat.q + 1, lat.n_cells, 1))
    wf = dalembert_solve(u0, v0, H, K1, h)
    for k in range(lat.q + 1):
        np.testing.assert_allclose(wf.u_nodes[k, :lat.node_count(k), 0],
                                   lat.row_t(k) ** 2 / 2.0, atol=1e-13)


def test_dalembert_coverage_error():
    h = 0.25
    short = Curve(-0.5, h, np.zeros((5, 1)))
    _, v0, _ = grid_data(h, lambda x: x, lambda x: 0.0 * x)
    lat = NullLattice.for_trapezoid(K1, h)
    with pytest.raises(DataCoverage):
        dalembert_solve(short, v0, lat.zero_cells(1), K1, h)
    u0, _, _ = grid_data(h, lambda x: x, lambda x: 0.0 * x)
    with pytest.raises(DataCoverage):
        dalembert_solve(u0, v0, np.zeros((2, 2, 1)), K1, h)


def test_transport_solve_directions():
    h = 0.25
    lat = NullLattice.for_trapezoid(K1, h)
    rng = np.random.default_rng(7)
    g = rng.normal(size=(lat.n_cells, 1))
    V = transport_solve(g, lat.zero_cells(1), "plus", K1, h)
    mask = lat.cell_mask()
    for r in range(lat.q + 1):
        for m in range(lat.n_cells):
            if mask[r, m]:
                np.testing.assert_allclose(V.values[r, m], g[m], atol=1e-14)
    V = transport_solve(g, lat.zero_cells(1), "minus", K1, h)
    for r in range(lat.q + 1):
        for m in range(lat.n_cells):
            if mask[r, m]:
                np.testing.assert_allclose(V.values[r, m], g[m + r],
                                           atol=1e-14)
    with pytest.raises(DataCoverage):
        transport_solve(np.zeros((3, 1)), lat.zero_cells(1), "plus", K1, h)


def test_transport_solve_curve_datum():
    h = 0.25
    lat = NullLattice.for_trapezoid(K1, h)
    xs = lat.node_x(0)
    g = Curve(-1.0, h, xs[:, None])
    V = transport_solve(g, lat.zero_cells(1), "plus", K1, h)
    # node-averaged datum: cell values are the cell-center x, frozen along b
    np.testing.assert_allclose(V.values[0, :, 0], lat.cell_centers_x(0),
                               atol=1e-14)


def test_bump2d_derivatives_fd():
    phi = Bump2D(0.5, 0.3, 0.1, 0.4)
    eps = 1e-5
    for (t, x) in [(0.45, 0.0), (0.6, 0.3), (0.35, -0.1)]:
        dt_fd = (phi(t + eps, x) - phi(t - eps, x)) / (2 * eps)
        np.testing.assert_allclose(phi.dt(t, x), dt_fd, atol=1e-5)
        dtt = (phi(t + eps, x) - 2 * phi(t, x) + phi(t - eps, x)) / eps ** 2
        dxx = (phi(t, x + eps) - 2 * phi(t, x) + phi(t, x - eps)) / eps ** 2
        np.testing.assert_allclose(phi.wave_op(t, x), dtt - dxx, atol=1e-4)
    # compact support
    assert phi(0.9, 0.1) == 0.0 and phi.wave_op(0.5, 0.6) == 0.0


def residual_standing_wave(h, phi, with_v0=False):
    fn_v0 = (lambda x: np.cos(2.0 * x)) if with_v0 else (lambda x: 0.0 * x)
    u0, v0, n = grid_data(h, lambda x: np.sin(np.pi * x), fn_v0)
    lat = NullLattice.for_trapezoid(K1, h)
    wf = dalembert_solve(u0, v0, lat.zero_cells(1), K1, h)
    return weak_form_residual(wf, phi)


def test_weak_form_residual_second_order():
    # off-center bump so no lattice symmetry cancels the quadrature error
    phi = Bump2D(0.35, 0.25, 0.07, 0.21)
    r16 = residual_standing_wave(1.0 / 16, phi)
    r32 = residual_standing_wave(1.0 / 32, phi)
    assert r32 <= 0.35 * r16
    assert r32 <= 0.05
    # bump whose support dips below t = 0 exercises the base-line terms
    phi0 = Bump2D(0.15, 0.3, 0.07, 0.21)
    r16 = residual_standing_wave(1.0 / 16, phi0, with_v0=True)
    r32 = residual_standing_wave(1.0 / 32, phi0, with_v0=True)
    assert r32 <= 0.35 * r16


def test_weak_form_support_errors():
    h = 0.125
    u0, v0, n = grid_data(h, lambda x: 0.0 * x, lambda x: 0.0 * x)
    lat = NullLattice.for_trapezoid(K1, h)
    wf = dalembert_solve(u0, v0, lat.zero_cells(1), K1, h)
    with pytest.raises(TestFunctionSupport):
        weak_form_residual(wf, Bump2D(0.9, 0.2, 0.0, 0.1))   # top
    with pytest.raises(TestFunctionSupport):
        weak_form_residual(wf, Bump2D(0.5, 0.3, 0.0, 0.9))   # lateral
