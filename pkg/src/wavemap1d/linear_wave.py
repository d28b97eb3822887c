"""Exact-formula solvers for the linear inhomogeneous wave equation and the
two characteristic transport equations, plus a weak-form residual auditor.

The solvers are thin wrappers around the exact lattice kernels in
wavemap1d.fields; causality holds by construction because every kernel reads
only the dependence triangle of each site.
"""

from __future__ import annotations

import numpy as np

from .domain import CompactTrapezoid
from .errors import DataCoverage, TestFunctionSupport
from .fields import (CellField1D, Curve, Field, NullLattice, WaveFields,
                     make_wavefields, transport_cell_values, u_cell_centers)

_COVER_TOL = 1e-9


def _check_cover(obj_left: float, obj_right: float, lat: NullLattice, what: str):
    if obj_left > lat.x_left + _COVER_TOL or obj_right < lat.x_right - _COVER_TOL:
        raise DataCoverage(
            f"{what} covers [{obj_left}, {obj_right}] but the lattice base is "
            f"[{lat.x_left}, {lat.x_right}]")


def _h_values(h_field, lat: NullLattice) -> np.ndarray:
    if isinstance(h_field, Field):
        if h_field.lattice != lat:
            raise DataCoverage("inhomogeneity lives on a different lattice")
        return h_field.values
    H = np.asarray(h_field, dtype=float)
    if H.ndim == 2:
        H = H[:, :, None]
    if H.shape[:2] != (lat.q + 1, lat.n_cells):
        raise DataCoverage(f"inhomogeneity shape {H.shape} does not cover "
                           f"lattice ({lat.q + 1}, {lat.n_cells})")
    return H


def dalembert_solve(u0: Curve, v0: CellField1D, h_field, K: CompactTrapezoid,
                    spacing_h: float) -> WaveFields:
    """Mild solution of u_tt - u_xx = h with data (u0, v0) on the trapezoid K.

    u(t,x) = (u0(x+t) + u0(x-t))/2 + (1/2) int_{x-t}^{x+t} v0
             + (1/2) double-int over the dependence triangle of h;
    evaluated exactly on lattice nodes for piecewise-linear u0 and
    cell-constant v0, h.
    """
    lat = NullLattice.for_trapezoid(K, spacing_h)
    _check_cover(u0.x_left, u0.x_right, lat, "u0")
    _check_cover(v0.x_left, v0.x_right, lat, "v0")
    H = _h_values(h_field, lat)
    return make_wavefields(u0, v0, H, lat)


def transport_solve(g, f_field, direction: str, K: CompactTrapezoid,
                    spacing_h: float) -> Field:
    """Cell values of v solving (d_t -+ d_x) v = f, v(0) = g.

    direction "plus":  (d_t + d_x) v = f, constant along x - t;
    direction "minus": (d_t - d_x) v = f, constant along x + t.
    """
    lat = NullLattice.for_trapezoid(K, spacing_h)
    F = _h_values(f_field, lat)
    if isinstance(g, Curve):
        _check_cover(g.x_left, g.x_right, lat, "g")
        gn = g.sample_nodes(lat.x_left, lat.n_cells, lat.h)
        gc = 0.5 * (gn[:-1] + gn[1:])
    elif isinstance(g, CellField1D):
        _check_cover(g.x_left, g.x_right, lat, "g")
        gc = g.cell_values_on(lat.x_left, lat.n_cells, lat.h)
    else:
        gc = np.asarray(g, dtype=float)
        if gc.ndim == 1:
            gc = gc[:, None]
        if gc.shape[0] != lat.n_cells:
            raise DataCoverage(f"g has {gc.shape[0]} cells, lattice base has "
                               f"{lat.n_cells}")
    vals = transport_cell_values(gc, F, lat, direction)
    return Field(lat, vals)


class Bump2D:
    """Product bump test function supported in
    [tc - rt, tc + rt] x [xc - rx, xc + rx], smooth on all of R^2."""

    def __init__(self, tc: float, rt: float, xc: float, rx: float):
        self.tc, self.rt, self.xc, self.rx = tc, rt, xc, rx

    @staticmethod
    def _b(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
        return out

    @staticmethod
    def _b2(s):
        """Second derivative of the bump profile."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        w = 1.0 / (1.0 - si ** 2)
        b = np.exp(-w)
        out[inside] = (-2.0 * w ** 2 - 8.0 * si ** 2 * w ** 3
                       + 4.0 * si ** 2 * w ** 4) * b
        return out

    @staticmethod
    def _b1(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        w = 1.0 / (1.0 - si ** 2)
        out[inside] = -2.0 * si * w ** 2 * np.exp(-w)
        return out

    def __call__(self, t, x):
        return self._b((np.asarray(t) - self.tc) / self.rt) * \
            self._b((np.asarray(x) - self.xc) / self.rx)

    def dt(self, t, x):
        return self._b1((np.asarray(t) - self.tc) / self.rt) / self.rt * \
            self._b((np.asarray(x) - self.xc) / self.rx)

    def wave_op(self, t, x):
        """phi_tt - phi_xx."""
        st = (np.asarray(t) - self.tc) / self.rt
        sx = (np.asarray(x) - self.xc) / self.rx
        return (self._b2(st) / self.rt ** 2 * self._b(sx)
                - self._b(st) * self._b2(sx) / self.rx ** 2)

    def support_box(self) -> tuple[float, float, float, float]:
        return (self.tc - self.rt, self.tc + self.rt,
                self.xc - self.rx, self.xc + self.rx)


def weak_form_residual(wf: WaveFields, phi: Bump2D) -> float:
    """Quadrature value of the weak-form defect

    | intint u (phi_tt - phi_xx) - intint phi h
      + int u0 phi_t(0,.) - int v0 phi(0,.) |  (ell-1 over components),

    for a test function vanishing near the lateral and top boundaries of the
    lattice trapezoid.  Small (O(h^2)) for mild solutions with smooth data.
    """
    lat = wf.lattice
    t_lo, t_hi, x_lo, x_hi = phi.support_box()
    K = lat.trapezoid
    # The support may dip below t = 0 (the initial boundary is allowed) but
    # must stay clear of the top and the two lateral characteristics.
    if t_hi > lat.t0 - _COVER_TOL:
        raise TestFunctionSupport("test function touches the top boundary")
    lo_at_thi = K.slice(max(t_hi, 0.0))
    if lo_at_thi is None or x_lo < lo_at_thi[0] - _COVER_TOL or \
            x_hi > lo_at_thi[1] + _COVER_TOL:
        raise TestFunctionSupport("test function touches a lateral boundary")

    Uc = u_cell_centers(wf.u_nodes, lat)
    n = Uc.shape[2]
    areas = lat.cell_areas()
    total = np.zeros(n)
    for r in range(lat.q + 1):
        c = lat.cell_count(r)
        xs = lat.cell_centers_x(r)
        t = lat.cell_center_t(r)
        w = phi.wave_op(t, xs)[:, None]
        p = phi(t, xs)[:, None]
        total += areas[r] * np.sum(Uc[r, :c] * w - wf.h_cells[r, :c] * p,
                                   axis=0)
    # Base-line terms by midpoint rule on base cells.
    xm = lat.x_left + (np.arange(lat.n_cells) + 0.5) * lat.h
    u0m = 0.5 * (wf.u_nodes[0, :-1] + wf.u_nodes[0, 1:])
    v0m = 0.5 * (wf.g_plus + wf.g_minus)
    total += lat.h * np.sum(u0m * phi.dt(0.0, xm)[:, None]
                            - v0m * phi(0.0, xm)[:, None], axis=0)
    return float(np.sum(np.abs(total)))
