"""Runnable checkers for the quantitative inequalities: transport bounds, the
bilinear null-form estimate, Q-form space-time bounds, pointwise
characteristic bounds, and the energy-flux inequalities.

All right-hand sides are exact cell sums.  Left-hand sides use per-cell
quadrature that is exact whenever the integrand keeps one sign per cell
(always true for the sign-definite randomized suites); otherwise both sides
carry the documented tolerance proportional to h times the input mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import CompactTrapezoid
from .errors import LatticeMismatch, MissingProvenance, OffLattice
from .fields import (NullLattice, WaveFields, cell_l1, integral_norm2_linear,
                     slice_l1, transport_slice_endpoints, _shift_to_diagonal)

_GAUSS = 0.5 / np.sqrt(3.0)


@dataclass
class EstimateReport:
    lhs: float
    rhs: float
    tol: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def ok(self) -> bool:
        return self.slack >= -self.tol

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "tol": self.tol, "ok": self.ok}


# ---------------------------------------------------------------------------
# Per-cell affine evaluation of the characteristic fields and quadrature
# ---------------------------------------------------------------------------

class AffineCharacteristics:
    """Evaluates v_plus and v_minus at arbitrary null offsets (s_a, s_b)
    inside each lattice cell, exactly, from cell-constant (g, H).

    In a full cell (r, m) with local offsets s_a, s_b in [0, h]:
      v_plus  = g_plus[m]   + (1/2) [(h - s_b) H[0, m] + h * mid_plus
                                     + s_a H[r, m]]
      v_minus = g_minus[m+r] + (1/2) [s_a H[0, m+r] + h * mid_minus
                                      + (h - s_b) H[r, m]]
    where mid_* sum the interior rows 1..r-1 along the respective
    characteristic.  Half cells use the same formulas restricted to their
    triangles (bottom: s_a >= s_b with r = 0; top: s_a <= s_b with r = q).
    """

    def __init__(self, g_plus: np.ndarray, g_minus: np.ndarray,
                 H: np.ndarray, lattice: NullLattice):
        self.lat = lattice
        self.gp = g_plus
        self.gm = g_minus
        self.H = H
        self.B = _shift_to_diagonal(H, lattice)
        c = np.cumsum(H, axis=0)
        cb = np.cumsum(self.B, axis=0)
        # mid[r] = sum over rows 1..r-1.
        self.mid_p = np.zeros_like(H)
        self.mid_m = np.zeros_like(H)
        if H.shape[0] > 2:
            self.mid_p[2:] = c[1:-1] - H[0][None]
            self.mid_m[2:] = cb[1:-1] - self.B[0][None]

    def eval(self, r: int, m: np.ndarray, s_a: float, s_b: float):
        """(v_plus, v_minus) at offsets (s_a, s_b) in cells (r, m)."""
        h = self.lat.h
        gp, gm, H, B = self.gp, self.gm, self.H, self.B
        if r == 0:
            d = 0.5 * (s_a - s_b)
            vp = gp[m] + d * H[0, m]
            vm = gm[m] + d * H[0, m]
            return vp, vm
        j = m + r
        vp = gp[m] + 0.5 * ((h - s_b) * H[0, m] + h * self.mid_p[r, m]
                            + s_a * H[r, m])
        vm = gm[j] + 0.5 * (s_a * B[0, j] + h * self.mid_m[r, j]
                            + (h - s_b) * H[r, m])
        return vp, vm


def integrate_pointwise(ac: AffineCharacteristics, fn,
                        row_range=None, col_hi_fn=None) -> float:
    """Physical space-time integral of fn(v_plus, v_minus) over the lattice,
    by per-cell quadrature exact for fn polynomial of degree <= 2 in (v+, v-).

    Full cells: tensor 2x2 Gauss; half cells: the degree-2 edge-midpoint
    triangle rule.  row_range limits cell rows; col_hi_fn(r) limits columns.
    """
    lat = ac.lat
    h = lat.h
    rows = range(lat.q + 1) if row_range is None else row_range
    lo_pt, hi_pt = h * (0.5 - _GAUSS), h * (0.5 + _GAUSS)
    total = 0.0
    for r in rows:
        c = lat.cell_count(r)
        if col_hi_fn is not None:
            c = min(c, col_hi_fn(r))
        if c <= 0:
            continue
        m = np.arange(c)
        if r == 0 or r == lat.q:
            if r == 0:
                pts = [(h / 2, 0.0), (h, h / 2), (h / 2, h / 2)]
            else:
                pts = [(0.0, h / 2), (h / 2, h), (h / 2, h / 2)]
            w = h * h / 12.0
        else:
            pts = [(sa, sb) for sa in (lo_pt, hi_pt) for sb in (lo_pt, hi_pt)]
            w = h * h / 8.0
        for sa, sb in pts:
            vp, vm = ac.eval(r, m, sa, sb)
            total += w * float(np.sum(fn(vp, vm)))
    return total


def _from_wavefields(wf: WaveFields) -> AffineCharacteristics:
    return AffineCharacteristics(wf.g_plus, wf.g_minus, wf.h_cells, wf.lattice)


# ---------------------------------------------------------------------------
# Checkers
# ---------------------------------------------------------------------------

def _tol(h: float, mass: float, c: float = 4.0) -> float:
    return max(c * h * mass, 1e-12)


def transport_bound_check(g: np.ndarray, f: np.ndarray, K: CompactTrapezoid,
                          spacing_h: float, t0: float | None = None,
                          direction: str = "plus") -> EstimateReport:
    """L1 slice bound for the transported field: the slice integral of |v|
    at height t0 is at most the base integral of |g| plus the space-time
    integral of |f| over the shrinking trapezoid."""
    lat = NullLattice.for_trapezoid(K, spacing_h)
    if t0 is None:
        t0 = K.height_t0
    k = lat.row_index(t0)
    g = _as_cells(g)
    f = np.asarray(f, dtype=float)
    if f.ndim == 2:
        f = f[:, :, None]
    lhs = slice_l1(g, f, lat, direction, k)
    rhs = lat.h * float(np.sum(np.abs(g)))
    sub = _clip_rows(f, lat, k)
    rhs += cell_l1(sub, lat)
    return EstimateReport(lhs=lhs, rhs=rhs, tol=_tol(lat.h, rhs, 0.0))


def _clip_rows(F: np.ndarray, lat: NullLattice, k: int) -> np.ndarray:
    """Restrict a cell array to rows 0..k (the trapezoid up to height
    k h/2); row k keeps half weight via duplication convention below."""
    out = np.zeros_like(F)
    if k == 0:
        return out
    out[:k + 1] = F[:k + 1]
    if k < lat.q:
        # Row k cells are full diamonds straddling t0; only their lower half
        # lies below t0, so count them at half weight.
        out[k] *= 0.5
    return out


def zhou_bilinear_check(g_plus, g_minus, f_plus, f_minus,
                        K: CompactTrapezoid, spacing_h: float) -> EstimateReport:
    """Bilinear null estimate: the space-time integral of |v+||v-| over the
    trapezoid is at most half the product of the two transport masses."""
    lat = NullLattice.for_trapezoid(K, spacing_h)
    gp = _as_cells(g_plus)
    gm = _as_cells(g_minus)
    f_plus = _as_3d(f_plus)
    f_minus = _as_3d(f_minus)
    # Build a two-component characteristic bundle sharing the lattice: v+ is
    # driven by f_plus, v- by f_minus; use a stacked H so the affine
    # evaluator sees the right inhomogeneity per direction.
    ac = _TwoSidedCharacteristics(gp, gm, f_plus, f_minus, lat)
    lhs = integrate_pointwise(ac, lambda vp, vm: np.abs(vp) * np.abs(vm))
    rhs = 0.5 * ((lat.h * float(np.sum(np.abs(gp))) + cell_l1(f_plus, lat))
                 * (lat.h * float(np.sum(np.abs(gm))) + cell_l1(f_minus, lat)))
    mass = rhs
    return EstimateReport(lhs=lhs, rhs=rhs, tol=_tol(lat.h, mass))


class _TwoSidedCharacteristics(AffineCharacteristics):
    """Like AffineCharacteristics but with distinct forcings for the two
    directions."""

    def __init__(self, gp, gm, f_plus, f_minus, lattice):
        AffineCharacteristics.__init__(self, gp, gm, _as_3d(f_plus), lattice)
        self._minus = AffineCharacteristics(gp, gm, _as_3d(f_minus), lattice)

    def eval(self, r, m, s_a, s_b):
        vp, _ = AffineCharacteristics.eval(self, r, m, s_a, s_b)
        _, vm = self._minus.eval(r, m, s_a, s_b)
        return vp, vm


def _as_cells(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    return g


def _as_3d(F) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if F.ndim == 2:
        F = F[:, :, None]
    return F


@dataclass
class QForm:
    """Per-cell n x n null form matrix Q_jk = u_t^j ubar_t^k - u_x^j ubar_x^k
    = (v+^j vbar-^k + v-^j vbar+^k) / 2, at cell representatives."""

    lattice: NullLattice
    matrices: np.ndarray  # (q+1, N, n, n)

    def l1_per_cell(self) -> np.ndarray:
        return np.sum(np.abs(self.matrices), axis=(2, 3))


def q_form(u_fields: WaveFields, ubar_fields: WaveFields | None = None) -> QForm:
    if ubar_fields is None:
        ubar_fields = u_fields
    if u_fields.lattice != ubar_fields.lattice:
        raise LatticeMismatch("Q form needs matching lattices")
    vp, vm = u_fields.vp, u_fields.vm
    wp, wm = ubar_fields.vp, ubar_fields.vm
    mats = 0.5 * (np.einsum("rmj,rmk->rmjk", vp, wm)
                  + np.einsum("rmj,rmk->rmjk", vm, wp))
    return QForm(lattice=u_fields.lattice, matrices=mats)


def _q_l1_integral(u: WaveFields, ubar: WaveFields, tri_lat: NullLattice,
                   m0: int) -> float:
    """Exact-quadrature integral of the ell-1 matrix norm of Q(u, ubar) over
    the dependence triangle realized as the sub-lattice starting at base
    column m0 (rows 0..k-1; row k-1 cells are full diamonds)."""
    k = tri_lat.q
    au = _restrict_ac(u, tri_lat, m0)
    ab = _restrict_ac(ubar, tri_lat, m0)

    h = tri_lat.h
    lo_pt, hi_pt = h * (0.5 - _GAUSS), h * (0.5 + _GAUSS)
    total = 0.0
    for r in range(k):
        c = k - r
        m = np.arange(c)
        if r == 0:
            pts = [(h / 2, 0.0), (h, h / 2), (h / 2, h / 2)]
            w = h * h / 12.0
        else:
            pts = [(sa, sb) for sa in (lo_pt, hi_pt) for sb in (lo_pt, hi_pt)]
            w = h * h / 8.0
        for sa, sb in pts:
            vp, vm = au.eval(r, m, sa, sb)
            wp, wm = ab.eval(r, m, sa, sb)
            Q = 0.5 * (np.einsum("mj,mk->mjk", vp, wm)
                       + np.einsum("mj,mk->mjk", vm, wp))
            total += w * float(np.sum(np.abs(Q)))
    return total


def _restrict_ac(wf: WaveFields, tri_lat: NullLattice, m0: int) -> AffineCharacteristics:
    """Characteristic evaluator for the restriction of wf to a dependence
    triangle anchored at base cell m0 (exactness of restriction: the
    characteristic integrals start at t = 0 either way)."""
    k = tri_lat.q
    H = np.zeros((k + 1, k, wf.h_cells.shape[2]))
    for r in range(k):
        H[r, :k - r] = wf.h_cells[r, m0:m0 + k - r]
    gp = wf.g_plus[m0:m0 + k]
    gm = wf.g_minus[m0:m0 + k]
    return AffineCharacteristics(gp, gm, H, tri_lat)


def q_l1_bound_check(u: WaveFields, apex: tuple[float, float],
                     ubar: WaveFields | None = None) -> EstimateReport:
    """Space-time bound on the null form over a dependence triangle.

    Single solution: intint |Q(u,u)| <= (base |g+| mass + |h| mass)
    * (base |g-| mass + |h| mass).  Pair: 2 intint |Q(u, ubar)| <=
    (g+ of u)(g- of ubar) + (g- of u)(g+ of ubar) with the same mass
    augmentation by each solution's inhomogeneity.
    """
    if u.u0 is None or u.v0 is None:
        raise MissingProvenance("solution lacks recorded initial data")
    pair = ubar is not None and ubar is not u
    if pair and (ubar.u0 is None or ubar.v0 is None):
        raise MissingProvenance("second solution lacks recorded initial data")
    if ubar is None:
        ubar = u
    lat = u.lattice
    if pair and ubar.lattice != lat:
        raise LatticeMismatch("pair bound needs matching lattices")
    t0, x0 = apex
    k = lat.row_index(t0)
    m0 = round((x0 - t0 - lat.x_left) / lat.h)
    if abs(x0 - t0 - (lat.x_left + m0 * lat.h)) > 1e-9 or m0 < 0 or \
            m0 + k > lat.n_cells:
        raise OffLattice(f"apex ({t0}, {x0}) has no lattice-aligned "
                         "dependence triangle")
    if k == 0:
        return EstimateReport(lhs=0.0, rhs=0.0, tol=1e-12)
    tri_lat = NullLattice(lat.x_left + m0 * lat.h, lat.h, k, k)

    def masses(wf: WaveFields):
        h_mass = _triangle_cell_l1(wf.h_cells, lat, m0, k)
        gp = lat.h * float(np.sum(np.abs(wf.g_plus[m0:m0 + k])))
        gm = lat.h * float(np.sum(np.abs(wf.g_minus[m0:m0 + k])))
        return gp + h_mass, gm + h_mass

    up, um = masses(u)
    if pair:
        bp, bm = masses(ubar)
        lhs = 2.0 * _q_l1_integral(u, ubar, tri_lat, m0)
        rhs = up * bm + um * bp
    else:
        lhs = _q_l1_integral(u, u, tri_lat, m0)
        rhs = up * um
    return EstimateReport(lhs=lhs, rhs=rhs, tol=_tol(lat.h, rhs))


def _triangle_cell_l1(H: np.ndarray, lat: NullLattice, m0: int, k: int) -> float:
    """Exact |H| mass over the dependence triangle with base cells
    m0..m0+k-1: row 0 halves, rows 1..k-1 full diamonds."""
    h = lat.h
    total = 0.25 * h * h * float(np.sum(np.abs(H[0, m0:m0 + k])))
    for r in range(1, k):
        total += 0.5 * h * h * float(np.sum(np.abs(H[r, m0:m0 + k - r])))
    return total


def _euclid(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(v * v, axis=-1))


def _f_euclid_mass(f_cells: np.ndarray, lat: NullLattice,
                   col_lo: int = 0, col_hi: int | None = None,
                   shifted: bool = False, row_hi: int | None = None) -> float:
    """Space-time integral of the pointwise Euclidean norm of the forcing,
    restricted to b-columns (or, with shifted=True, a-columns) and to rows
    0..row_hi with the straddling row at half weight."""
    F = _shift_to_diagonal(f_cells, lat) if shifted else f_cells
    mag = _euclid(F)
    if col_hi is None:
        col_hi = lat.n_cells
    mag = mag[:, col_lo:col_hi]
    h = lat.h
    if row_hi is None:
        row_hi = lat.q
    if row_hi == 0:
        return 0.0
    total = 0.25 * h * h * float(np.sum(mag[0]))
    for r in range(1, row_hi):
        total += 0.5 * h * h * float(np.sum(mag[r]))
    # The straddling row contributes h^2/4 either way: half of a full diamond
    # below t0, or the whole top half-diamond.
    total += 0.25 * h * h * float(np.sum(mag[row_hi]))
    return total


def energy_flux_check(u: WaveFields, t0: float) -> tuple[EstimateReport, EstimateReport]:
    """Two flux inequalities for M-valued solutions at height t0: the slice
    integral of the Euclidean magnitude of each characteristic derivative is
    bounded by the initial magnitude entering through its characteristic
    family plus the external forcing mass over the corresponding slab.  The
    geometric part of the inhomogeneity is orthogonal to the derivative and
    drops out (exactly in the continuum, to O(h) here)."""
    if u.f_cells is None:
        raise MissingProvenance("solution lacks recorded forcing")
    lat = u.lattice
    k = lat.row_index(t0)
    h = lat.h
    N = lat.n_cells

    def one_side(g, direction):
        left, right = transport_slice_endpoints(g, u.h_cells, lat,
                                                direction, k)
        lhs = float(np.sum(integral_norm2_linear(left, right, h)))
        cols = N - k
        if direction == "plus":
            g_mass = h * float(np.sum(_euclid(g[:cols])))
            slab = _f_euclid_mass(u.f_cells, lat, 0, cols, False, k)
        else:
            g_mass = h * float(np.sum(_euclid(g[k:])))
            slab = _f_euclid_mass(u.f_cells, lat, k, N, True, k)
        rhs = g_mass + slab
        return EstimateReport(lhs=lhs, rhs=rhs,
                              tol=_tol(h, rhs + _h_mass(u)))

    return one_side(u.g_plus, "plus"), one_side(u.g_minus, "minus")


def _h_mass(u: WaveFields) -> float:
    return cell_l1(u.h_cells, u.lattice)


def pointwise_characteristic_bound(u: WaveFields, site: tuple[int, int]) -> EstimateReport:
    """At cell (r, m): the Euclidean magnitudes of both characteristic
    derivatives are bounded by the initial magnitude at the characteristic
    foot plus the integral of |f| along each characteristic (M-valued bound;
    the geometric term drops by tangency up to O(h))."""
    if u.f_cells is None:
        raise MissingProvenance("solution lacks recorded forcing")
    lat = u.lattice
    r, m = site
    if not (0 <= r <= lat.q and 0 <= m < lat.cell_count(r)):
        raise OffLattice(f"cell site {site} outside lattice")
    from .fields import _half_weight_cumsum
    fa = _euclid(u.f_cells)[:, :, None]
    Sp = _half_weight_cumsum(fa)
    Sm = _half_weight_cumsum(_shift_to_diagonal(fa, lat))
    lhs = float(_euclid(u.vp[r, m]) + _euclid(u.vm[r, m]))
    rhs = float(_euclid(u.g_plus[m]) + (lat.h / 2.0) * Sp[r, m, 0]
                + _euclid(u.g_minus[m + r]) + (lat.h / 2.0) * Sm[r, m + r, 0])
    scale = rhs + float(np.max(_euclid(u.h_cells)))
    return EstimateReport(lhs=lhs, rhs=rhs, tol=_tol(lat.h, scale))


def spacetime_null_energy_check(u: WaveFields) -> EstimateReport:
    """Space-time integral over the trapezoid of |u_t . u_t - u_x . u_x|
    = |v+ . v-| against the squared total (Euclidean) data-plus-forcing
    mass, for M-valued solutions."""
    if u.u0 is None or u.v0 is None or u.f_cells is None:
        raise MissingProvenance("solution lacks recorded data or forcing")
    lat = u.lattice
    ac = _from_wavefields(u)
    lhs = integrate_pointwise(
        ac, lambda vp, vm: np.abs(np.sum(vp * vm, axis=-1)))
    du0 = np.diff(u.u0.sample_nodes(lat.x_left, lat.n_cells, lat.h),
                  axis=0) / lat.h
    v0c = u.v0.cell_values_on(lat.x_left, lat.n_cells, lat.h)
    base = lat.h * float(np.sum(_euclid(du0)) + np.sum(_euclid(v0c)))
    f_mass = float(np.dot(lat.cell_areas(),
                          np.sum(np.where(lat.cell_mask(), _euclid(u.f_cells),
                                          0.0), axis=1)))
    rhs = (base + f_mass) ** 2
    return EstimateReport(lhs=lhs, rhs=rhs, tol=_tol(lat.h, rhs + _h_mass(u)))
