"""Lattice fields: exact piecewise-linear integrals, characteristic
transport, the mild-solution kernel, traces, and norms."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavemap1d.domain import CompactTrapezoid
from wavemap1d.errors import DataCoverage, LatticeMismatch, OffLattice
from wavemap1d.fields import (CellField1D, Curve, Field, NullLattice, cell_l1,
                              characteristic_derivatives,
                              dalembert_node_values, export_csv, format_float,
                              h_norm, integral_abs_linear,
                              integral_norm2_linear, l11_norm, make_wavefields,
                              trace, transport_cell_values,
                              transport_slice_endpoints, u_cell_centers)


def lat_unit(h=0.25):
    n = int(round(2.0 / h))
    return NullLattice(-1.0, h, n, n)   # full triangle over [-1, 1]


# -- exact 1-d integrals ----------------------------------------------------

def test_integral_abs_linear_oracles():
    # sign change: |v| with v(0) = -1, v(h) = 1 integrates to h/2
    assert integral_abs_linear(np.array([-1.0]), np.array([1.0]), 1.0)[0] == 0.5
    # same sign: plain trapezoid
    assert integral_abs_linear(np.array([1.0]), np.array([3.0]), 1.0)[0] == 2.0
    # constant
    assert integral_abs_linear(np.array([2.0]), np.array([2.0]), 0.5)[0] == 1.0


def test_integral_norm2_linear_oracles():
    # rotate (1,0) -> (0,1): int_0^1 sqrt(2s^2 - 2s + 1) ds
    val = integral_norm2_linear(np.array([[1.0, 0.0]]),
                                np.array([[0.0, 1.0]]), 1.0)[0]
    s = np.linspace(0, 1, 200001)
    ref = np.trapezoid(np.sqrt(2 * s * s - 2 * s + 1), s)
    np.testing.assert_allclose(val, ref, atol=1e-9)
    # collinear, same sign
    v = integral_norm2_linear(np.array([[1.0, 0.0]]),
                              np.array([[2.0, 0.0]]), 1.0)[0]
    np.testing.assert_allclose(v, 1.5, atol=1e-12)
    # collinear through zero
    v = integral_norm2_linear(np.array([[-1.0, 0.0]]),
                              np.array([[1.0, 0.0]]), 1.0)[0]
    np.testing.assert_allclose(v, 0.5, atol=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_integral_abs_linear_bounds(a, b):
    v = float(integral_abs_linear(np.array([a]), np.array([b]), 1.0)[0])
    assert abs(a + b) / 2 - 1e-12 <= v <= (abs(a) + abs(b)) / 2 + 1e-12


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_integral_norm2_linear_vs_quadrature(a1, a2, b1, b2):
    A = np.array([[a1, a2]])
    B = np.array([[b1, b2]])
    v = float(integral_norm2_linear(A, B, 1.0)[0])
    s = np.linspace(0, 1, 4001)[:, None]
    ref = float(np.trapezoid(
        np.linalg.norm(A + s * (B - A), axis=1), s[:, 0]))
    np.testing.assert_allclose(v, ref, atol=5e-6)


# -- 1-d containers ---------------------------------------------------------

def test_curve_basics():
    h = 0.5
    vals = np.array([[0.0], [1.0], [0.0]])
    c = Curve(-0.5, h, vals)
    assert c.n_cells == 2 and c.x_right == 0.5
    np.testing.assert_allclose(c(0.25), [0.5])
    # constant extension beyond the support
    np.testing.assert_allclose(c(5.0), [0.0])
    d = c.derivative()
    np.testing.assert_allclose(d.values[:, 0], [2.0, -2.0])
    assert c.sup_norm() == 1.0
    assert c.w11_seminorm() == 2.0
    assert c.l1_norm() == 0.5          # triangle area
    r = c.restrict(1, 2)
    assert r.x_left == 0.0 and r.n_cells == 1


def test_curve_sample_nodes_aligned_exact():
    vals = np.array([[0.0], [1.0], [4.0]])
    c = Curve(-0.5, 0.5, vals)
    out = c.sample_nodes(-0.5, 2, 0.5)
    np.testing.assert_allclose(out, vals, atol=1e-15)
    # refined grid interpolates linearly
    fine = c.sample_nodes(-0.5, 4, 0.25)
    np.testing.assert_allclose(fine[:, 0], [0.0, 0.5, 1.0, 2.5, 4.0])


def test_cellfield_basics():
    f = CellField1D(0.0, 0.25, np.array([[1.0], [-2.0]]))
    assert f.l1_norm() == 0.75
    np.testing.assert_allclose(f(0.3), [-2.0])
    np.testing.assert_allclose(f(9.0), [0.0])
    vals = f.cell_values_on(-0.25, 4, 0.25)
    np.testing.assert_allclose(vals[:, 0], [0.0, 1.0, -2.0, 0.0])


# -- lattice geometry -------------------------------------------------------

def test_lattice_counts_and_areas():
    lat = lat_unit(0.25)
    assert lat.n_cells == 8 and lat.q == 8
    assert lat.t0 == 1.0 and lat.x_right == 1.0
    assert lat.node_count(0) == 9 and lat.node_count(8) == 1
    assert lat.cell_count(0) == 8 and lat.cell_count(8) == 0
    # total area equals the trapezoid area t0 (2L - t0)
    counts = np.array([lat.cell_count(r) for r in range(lat.q + 1)])
    total = float(np.dot(lat.cell_areas(), counts))
    np.testing.assert_allclose(total, 1.0 * (2.0 - 1.0), atol=1e-14)
    np.testing.assert_allclose(lat.node_x(2), -0.75 + np.arange(7) * 0.25)
    assert lat.cell_center_t(0) == 0.0625
    assert lat.cell_center_t(3) == 0.375
    assert lat.cell_center_t(8) == 1.0 - 0.0625


def test_lattice_for_trapezoid_and_row_index():
    K = CompactTrapezoid(0.0, 1.0, 0.5)
    lat = NullLattice.for_trapezoid(K, 0.25)
    assert lat.x_left == -1.0 and lat.n_cells == 8 and lat.q == 4
    assert lat.trapezoid.half_length_L == 1.0
    assert lat.row_index(0.375) == 3
    with pytest.raises(OffLattice):
        lat.row_index(0.3)
    with pytest.raises(OffLattice):
        lat.row_index(0.75)
    with pytest.raises(LatticeMismatch):
        NullLattice(-1.0, 0.25, 4, 6)


def test_field_mask_and_arithmetic():
    lat = lat_unit(0.5)
    F = Field(lat, np.ones((lat.q + 1, lat.n_cells, 2)))
    # masked entries forced to zero
    assert F.values[lat.q, lat.n_cells - 1, 0] == 0.0
    G = 2.0 * F - F
    np.testing.assert_allclose(G.values, F.values)
    with pytest.raises(LatticeMismatch):
        F + Field(lat_unit(0.25), np.ones((9, 8, 2)))
    with pytest.raises(LatticeMismatch):
        Field(lat, np.ones((3, 3, 2)))


def test_cell_l1_masked_ones():
    lat = lat_unit(0.25)
    vals = np.ones((lat.q + 1, lat.n_cells, 1))
    np.testing.assert_allclose(cell_l1(vals, lat), 1.0, atol=1e-14)
    # column restriction: with q == N the first b-column is masked out of
    # the (empty) top row, leaving rows 0..q-1
    one_col = cell_l1(vals, lat, col_lo=0, col_hi=1)
    areas = lat.cell_areas()
    np.testing.assert_allclose(one_col, float(np.sum(areas[:-1])), atol=1e-14)


# -- transport kernels ------------------------------------------------------

def test_transport_constant_along_characteristics():
    lat = lat_unit(0.25)
    rng = np.random.default_rng(3)
    g = rng.normal(size=(lat.n_cells, 2))
    H = np.zeros((lat.q + 1, lat.n_cells, 2))
    Vp = transport_cell_values(g, H, lat, "plus")
    Vm = transport_cell_values(g, H, lat, "minus")
    mask = lat.cell_mask()
    for r in range(lat.q + 1):
        for m in range(lat.n_cells):
            if not mask[r, m]:
                continue
            np.testing.assert_allclose(Vp[r, m], g[m], atol=1e-14)
            np.testing.assert_allclose(Vm[r, m], g[m + r], atol=1e-14)


def test_transport_unit_source_adds_time():
    lat = lat_unit(0.25)
    g = np.zeros((lat.n_cells, 1))
    H = np.ones((lat.q + 1, lat.n_cells, 1))
    mask = lat.cell_mask()
    for direction in ("plus", "minus"):
        V = transport_cell_values(g, H, lat, direction)
        for r in range(lat.q + 1):
            tc = lat.cell_center_t(r)
            for m in range(lat.n_cells):
                if mask[r, m]:
                    np.testing.assert_allclose(V[r, m, 0], tc, atol=1e-14)


def test_transport_slice_endpoints_datum_row():
    lat = lat_unit(0.25)
    rng = np.random.default_rng(4)
    g = rng.normal(size=(lat.n_cells, 1))
    H = rng.normal(size=(lat.q + 1, lat.n_cells, 1))
    for direction in ("plus", "minus"):
        left, right = transport_slice_endpoints(g, H, lat, direction, 0)
        np.testing.assert_allclose(left, g)
        np.testing.assert_allclose(right, g)


def test_transport_endpoints_bracket_cell_values():
    # cell-center value is the midpoint of the slice-linear endpoints when
    # the slice row is the cell row (full rows: t = r h / 2)
    lat = lat_unit(0.25)
    rng = np.random.default_rng(5)
    g = rng.normal(size=(lat.n_cells, 1))
    H = rng.normal(size=(lat.q + 1, lat.n_cells, 1))
    for direction in ("plus", "minus"):
        V = transport_cell_values(g, H, lat, direction)
        for k in (1, 3, 5):
            left, right = transport_slice_endpoints(g, H, lat, direction, k)
            np.testing.assert_allclose(0.5 * (left + right),
                                       V[k, :lat.n_cells - k], atol=1e-12)


# -- mild solution kernel ---------------------------------------------------

def test_dalembert_exact_linear_and_quadratic():
    lat = lat_unit(0.25)
    xs = lat.node_x(0)
    # u = x: u0 = x, v0 = 0, H = 0
    U = dalembert_node_values(xs[:, None], np.zeros((lat.n_cells, 1)),
                              np.zeros((lat.q + 1, lat.n_cells, 1)), lat)
    for k in range(lat.q + 1):
        np.testing.assert_allclose(U[k, :lat.node_count(k), 0],
                                   lat.node_x(k), atol=1e-14)
    # u = t: v0 = 1
    U = dalembert_node_values(np.zeros((lat.n_cells + 1, 1)),
                              np.ones((lat.n_cells, 1)),
                              np.zeros((lat.q + 1, lat.n_cells, 1)), lat)
    for k in range(lat.q + 1):
        np.testing.assert_allclose(U[k, :lat.node_count(k), 0],
                                   lat.row_t(k), atol=1e-14)
    # u = t^2 / 2: wave operator gives H = 1
    U = dalembert_node_values(np.zeros((lat.n_cells + 1, 1)),
                              np.zeros((lat.n_cells, 1)),
                              np.ones((lat.q + 1, lat.n_cells, 1)), lat)
    for k in range(lat.q + 1):
        np.testing.assert_allclose(U[k, :lat.node_count(k), 0],
                                   lat.row_t(k) ** 2 / 2.0, atol=1e-13)


def test_u_cell_centers_second_order():
    lat = lat_unit(1.0 / 32)
    xs = lat.node_x(0)
    u0 = np.sin(np.pi * xs)[:, None]
    v0 = np.zeros((lat.n_cells, 1))
    H = np.zeros((lat.q + 1, lat.n_cells, 1))
    U = dalembert_node_values(u0, v0, H, lat)
    Uc = u_cell_centers(U, lat)
    mask = lat.cell_mask()
    err = 0.0
    for r in range(1, lat.q):
        tc = lat.cell_center_t(r)
        xc = lat.cell_centers_x(r)
        exact = np.sin(np.pi * xc) * np.cos(np.pi * tc)
        err = max(err, float(np.max(
            np.abs(Uc[r, :len(xc), 0] - exact))))
    assert err <= 5.0 * (lat.h ** 2)


# -- bundle, trace, norms ---------------------------------------------------

def make_linear_bundle(h=0.25):
    lat = lat_unit(h)
    xs = lat.node_x(0)
    u0 = Curve(-1.0, h, xs[:, None])
    v0 = CellField1D(-1.0, h, np.zeros((lat.n_cells, 1)))
    H = np.zeros((lat.q + 1, lat.n_cells, 1))
    return make_wavefields(u0, v0, H, lat), lat


def test_wavefields_characteristics_for_u_equals_x():
    wf, lat = make_linear_bundle()
    # u = x: ut = 0, ux = 1 everywhere inside the cone
    mask = lat.cell_mask()[:, :, None]
    np.testing.assert_allclose(np.where(mask, wf.ut, 0.0), 0.0, atol=1e-14)
    np.testing.assert_allclose(wf.ux[mask[:, :, 0]], 1.0, atol=1e-14)
    np.testing.assert_allclose(wf.vp[mask[:, :, 0]], -1.0, atol=1e-14)
    np.testing.assert_allclose(wf.vm[mask[:, :, 0]], 1.0, atol=1e-14)


def test_trace_slices():
    wf, lat = make_linear_bundle()
    tr = trace(wf, 0.5)
    assert tr.u_slice.x_left == -0.5 and tr.u_slice.n_cells == 4
    np.testing.assert_allclose(tr.u_slice.values[:, 0],
                               -0.5 + np.arange(5) * 0.25, atol=1e-14)
    np.testing.assert_allclose(tr.ut_slice.values, 0.0, atol=1e-14)
    np.testing.assert_allclose(tr.ux_slice.values, 1.0, atol=1e-14)
    apex = trace(wf, 1.0)
    assert apex.ut_slice.n_cells == 0
    np.testing.assert_allclose(apex.u_slice.values, 0.0, atol=1e-14)
    with pytest.raises(OffLattice):
        trace(wf, 0.3)


def test_characteristic_derivatives_coverage_error():
    lat = lat_unit(0.25)
    short = Curve(-0.5, 0.25, np.zeros((5, 1)))
    v0 = CellField1D(-1.0, 0.25, np.zeros((8, 1)))
    with pytest.raises(DataCoverage):
        characteristic_derivatives(short, v0, lat.zero_cells(1), lat)


def test_h_norm_and_l11_norm():
    wf, lat = make_linear_bundle()
    # sup |u| = 1; the widest slice (t = 0) carries int |ux| = 2
    np.testing.assert_allclose(h_norm(wf), 3.0, atol=1e-12)
    tr = trace(wf, 0.0)
    np.testing.assert_allclose(
        l11_norm(tr.u_slice, tr.ut_slice), 1.0 + 2.0 + 0.0, atol=1e-12)


def test_format_float_round_trip():
    for x in (1.0 / 3.0, math.pi, -1e-17, 0.1 + 0.2):
        assert float(format_float(x)) == x


def test_export_csv(tmp_path):
    wf, lat = make_linear_bundle(0.5)
    p = tmp_path / "sol.csv"
    export_csv(wf, p)
    lines = p.read_text().strip().split("\n")
    assert lines[0] == "t,x,u_1"
    n_nodes = sum(lat.node_count(k) for k in range(lat.q + 1))
    assert len(lines) == 1 + n_nodes
    t, x, u = (float(v) for v in lines[1].split(","))
    assert (t, x, u) == (0.0, -1.0, -1.0)
