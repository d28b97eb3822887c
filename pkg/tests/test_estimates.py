"""Inequality checkers: hand-derived equality cases, frozen small oracles,
randomized lattice-exact suites, and provenance errors."""

from __future__ import annotations

import numpy as np
import pytest

from wavemap1d.domain import CompactTrapezoid
from wavemap1d.errors import MissingProvenance, OffLattice
from wavemap1d.estimates import (energy_flux_check,
                                 pointwise_characteristic_bound, q_form,
                                 q_l1_bound_check,
                                 spacetime_null_energy_check,
                                 transport_bound_check, zhou_bilinear_check)
from wavemap1d.fields import CellField1D, Curve, NullLattice, make_wavefields

K_HALF = CompactTrapezoid(0.0, 1.0, 0.5)
K_FULL = CompactTrapezoid(0.0, 1.0, 1.0)


def linear_instance(seed, h=1.0 / 16, L=1.0, height=0.5, n=3):
    """Random linear-wave bundle whose total inhomogeneity is its own
    recorded forcing (h_cells == f_cells): the class on which all the
    checkers are lattice-exact."""
    K = CompactTrapezoid(0.0, L, height)
    lat = NullLattice.for_trapezoid(K, h)
    rng = np.random.default_rng(seed)
    u0 = Curve(-L, h, 0.4 * rng.normal(size=(lat.n_cells + 1, n)))
    v0 = CellField1D(-L, h, rng.normal(size=(lat.n_cells, n)))
    F = rng.uniform(-1.0, 1.0, size=(lat.q + 1, lat.n_cells, n))
    F = np.where(lat.cell_mask()[:, :, None], F, 0.0)
    return make_wavefields(u0, v0, F, lat, f_cells=F), lat, K


def test_transport_bound_unit_datum():
    # v = g(x - t) with g = 1: slice of width 2L - 2 t0 = 1 carries mass 1;
    # the right side is the full base mass 2
    h = 0.25
    g = np.ones((8, 1))
    f = np.zeros((5, 8, 1))
    for direction in ("plus", "minus"):
        rep = transport_bound_check(g, f, K_HALF, h, direction=direction)
        np.testing.assert_allclose(rep.lhs, 1.0, atol=1e-14)
        np.testing.assert_allclose(rep.rhs, 2.0, atol=1e-14)
        assert rep.ok


def test_transport_bound_with_forcing():
    h = 0.25
    g = np.zeros((8, 1))
    f = np.ones((5, 8, 1))
    rep = transport_bound_check(g, f, K_HALF, h, direction="plus")
    assert rep.ok and rep.lhs > 0.0
    assert rep.lhs <= rep.rhs + 1e-12


def test_zhou_bilinear_split_equality():
    # g+ = 1 on [-1, 0], g- = 1 on [0, 1], no forcing, full triangle.
    # v+ v- is supported on the null box b in [-1, 0], a in [0, 1], which the
    # triangle contains entirely; in null coordinates the area element is
    # da db / 2, so the left side is (1/2) |box| = 1/2, and the right side
    # is (1/2) (mass+)(mass-) = (1/2)(1)(1) = 1/2: exact equality.
    h = 0.25
    gp = np.zeros((8, 1))
    gp[:4] = 1.0
    gm = np.zeros((8, 1))
    gm[4:] = 1.0
    f0 = np.zeros((9, 8, 1))
    rep = zhou_bilinear_check(gp, gm, f0, f0, K_FULL, h)
    np.testing.assert_allclose(rep.lhs, 0.5, atol=1e-13)
    np.testing.assert_allclose(rep.rhs, 0.5, atol=1e-14)
    assert rep.ok


def test_zhou_bilinear_disjoint_is_zero():
    # swapped supports: the characteristics never meet inside the cone
    h = 0.25
    gp = np.zeros((8, 1))
    gp[4:] = 1.0
    gm = np.zeros((8, 1))
    gm[:4] = 1.0
    f0 = np.zeros((9, 8, 1))
    rep = zhou_bilinear_check(gp, gm, f0, f0, K_FULL, h)
    np.testing.assert_allclose(rep.lhs, 0.0, atol=1e-14)
    np.testing.assert_allclose(rep.rhs, 0.5, atol=1e-14)


def test_energy_flux_free_wave_equality():
    # H = 0: each characteristic magnitude is transported unchanged, so the
    # slice integral equals the restricted base mass exactly
    wf, lat, K = linear_instance(11)
    wf0 = make_wavefields(wf.u0, wf.v0, np.zeros_like(wf.h_cells), lat,
                          f_cells=np.zeros_like(wf.h_cells))
    rp, rm = energy_flux_check(wf0, 0.25)
    np.testing.assert_allclose(rp.lhs, rp.rhs, atol=1e-12)
    np.testing.assert_allclose(rm.lhs, rm.rhs, atol=1e-12)
    assert rp.ok and rm.ok


def test_spacetime_null_energy_u_equals_x():
    # u = x: v+ = -1, v- = 1, |v+ . v-| = 1 over area t0 (2L - t0) = 0.75;
    # the right side is (h sum |Du0|)^2 = 4
    h = 0.25
    lat = NullLattice.for_trapezoid(K_HALF, h)
    xs = lat.node_x(0)
    u0 = Curve(-1.0, h, xs[:, None])
    v0 = CellField1D(-1.0, h, np.zeros((lat.n_cells, 1)))
    Z = np.zeros((lat.q + 1, lat.n_cells, 1))
    wf = make_wavefields(u0, v0, Z, lat, f_cells=Z)
    rep = spacetime_null_energy_check(wf)
    np.testing.assert_allclose(rep.lhs, 0.75, atol=1e-13)
    np.testing.assert_allclose(rep.rhs, 4.0, atol=1e-13)
    assert rep.ok


def test_pointwise_bound_positive_forcing_equality():
    # g = 1 > 0 and f = 1 > 0 keep every transported value positive, so the
    # triangle-inequality bound is an equality at every cell
    h = 0.25
    lat = NullLattice.for_trapezoid(K_HALF, h)
    ones_g = np.ones((lat.n_cells, 1))
    F = np.where(lat.cell_mask()[:, :, None],
                 np.ones((lat.q + 1, lat.n_cells, 1)), 0.0)
    u0 = Curve(-1.0, h, np.zeros((lat.n_cells + 1, 1)))
    v0 = CellField1D(-1.0, h, ones_g)
    wf = make_wavefields(u0, v0, F, lat, f_cells=F)
    for site in [(0, 0), (1, 2), (2, 3)]:
        rep = pointwise_characteristic_bound(wf, site)
        np.testing.assert_allclose(rep.lhs, rep.rhs, atol=1e-12)
        assert rep.ok


def test_q_l1_bound_random_instance():
    wf, lat, K = linear_instance(23)
    apex = (0.5, 0.0)
    rep = q_l1_bound_check(wf, apex)
    assert rep.ok and rep.lhs <= rep.rhs + 1e-12
    # pair form with an independent second solution
    wf2, _, _ = linear_instance(29)
    rep2 = q_l1_bound_check(wf, apex, ubar=wf2)
    assert rep2.ok and rep2.lhs <= rep2.rhs + 1e-12
    # Q form of a free wave u = x against itself: Q = -ut^2 + ux^2 -> -(-1)(1)
    h = 1.0 / 16
    latx = NullLattice.for_trapezoid(K, h)
    xs = latx.node_x(0)
    wfx = make_wavefields(Curve(-1.0, h, xs[:, None]),
                          CellField1D(-1.0, h, np.zeros((latx.n_cells, 1))),
                          np.zeros((latx.q + 1, latx.n_cells, 1)), latx)
    Q = q_form(wfx)
    mask = latx.cell_mask()
    np.testing.assert_allclose(Q.matrices[mask][:, 0, 0], -1.0, atol=1e-13)


def test_q_l1_apex_errors():
    wf, lat, K = linear_instance(31)
    with pytest.raises(OffLattice):
        q_l1_bound_check(wf, (0.5, 0.03))
    wf.u0 = None
    with pytest.raises(MissingProvenance):
        q_l1_bound_check(wf, (0.5, 0.0))


def test_missing_provenance_without_forcing():
    wf, lat, K = linear_instance(37)
    wf.f_cells = None
    with pytest.raises(MissingProvenance):
        energy_flux_check(wf, 0.25)
    with pytest.raises(MissingProvenance):
        pointwise_characteristic_bound(wf, (0, 0))
    with pytest.raises(MissingProvenance):
        spacetime_null_energy_check(wf)


def test_all_checkers_lattice_exact_on_linear_instances():
    for seed in range(5):
        wf, lat, K = linear_instance(100 + seed)
        h = lat.h
        gp1 = np.sum(np.abs(wf.g_plus), axis=-1, keepdims=True)
        gm1 = np.sum(np.abs(wf.g_minus), axis=-1, keepdims=True)
        f1 = np.sum(np.abs(wf.f_cells), axis=-1, keepdims=True)
        reports = [
            transport_bound_check(gp1, f1, K, h, direction="plus"),
            transport_bound_check(gm1, f1, K, h, direction="minus"),
            zhou_bilinear_check(gp1, gm1, f1, f1, K, h),
            q_l1_bound_check(wf, (0.5, 0.0)),
            *energy_flux_check(wf, 0.25),
            pointwise_characteristic_bound(wf, (1, 1)),
            spacetime_null_energy_check(wf),
        ]
        for rep in reports:
            assert rep.lhs <= rep.rhs + 1e-12
            d = rep.as_dict()
            assert d["ok"] and d["slack"] >= -1e-12
