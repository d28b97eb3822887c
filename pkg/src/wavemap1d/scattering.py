"""Scattering toolkit: free-wave group evaluation, Duhamel scattering data
for R^n-valued solutions, conformal compactification onto the Einstein
diamond, M-valued scattering data read off the diamond's null boundary, and
support-cone verification.

Conventions.  Null coordinates (a, b) = (x + t, x - t); the compactification
is (A, B) = (arctan a, arctan b) with (T, X) = ((A - B)/2, (A + B)/2), which
maps the half plane t >= 0 onto the Einstein diamond with vertices
(0, -pi/2), (pi/2, 0), (0, pi/2) in (T, X).  Lattice diamonds are null-box
rectangles in (a, b), so the transform acts box-by-box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import CompactTrapezoid
from .errors import TailMass
from .estimates import EstimateReport
from .fields import CellField1D, Curve, NullLattice, SliceTrace, cell_l1
from .geometry import EmbeddedManifold, ManifoldData
from .solver import Solution, solve_global


def antiderivative(cf: CellField1D) -> Curve:
    """Exact antiderivative of a piecewise-constant field, vanishing at its
    left support edge; constant extension matches the field being zero
    outside its support."""
    vals = np.concatenate([np.zeros((1, cf.n)),
                           np.cumsum(cf.values * cf.h, axis=0)])
    return Curve(cf.x_left, cf.h, vals)


# ---------------------------------------------------------------------------
# Scattering data and the free-wave group
# ---------------------------------------------------------------------------

@dataclass
class ScatteringData:
    """Free-wave data (ubar0, vbar0) represented either directly on an
    x-lattice (kind "rn") or through diamond boundary curves phi(A), psi(B)
    with apex value c (kind "compactified"):

        u_L(t, x) = phi(arctan(x + t)) + psi(arctan(x - t)) - c.
    """

    kind: str
    u0: Curve | None = None
    v0: CellField1D | None = None
    phi: Curve | None = None
    psi: Curve | None = None
    apex: np.ndarray | None = None

    # -- evaluation --------------------------------------------------------
    def u_at(self, t: float, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.kind == "rn":
            V = antiderivative(self.v0)
            return 0.5 * (self.u0(xs + t) + self.u0(xs - t)) + \
                0.5 * (V(xs + t) - V(xs - t))
        return self.phi(np.arctan(xs + t)) + self.psi(np.arctan(xs - t)) \
            - self.apex

    def ut_avg(self, t: float, edges: np.ndarray) -> np.ndarray:
        """Exact cell averages of d/dt of the free wave over consecutive
        [edges[i], edges[i+1]] intervals."""
        e = np.asarray(edges, dtype=float)
        w = np.diff(e)[:, None]
        if self.kind == "rn":
            V = antiderivative(self.v0)
            up = self.u0(e + t)
            um = self.u0(e - t)
            Vp = V(e + t)
            Vm = V(e - t)
            tot = 0.5 * (np.diff(up, axis=0) - np.diff(um, axis=0)) + \
                0.5 * (np.diff(Vp, axis=0) + np.diff(Vm, axis=0))
            return tot / w
        P = self.phi(np.arctan(e + t))
        Q = self.psi(np.arctan(e - t))
        return (np.diff(P, axis=0) - np.diff(Q, axis=0)) / w

    def ux_avg(self, t: float, edges: np.ndarray) -> np.ndarray:
        e = np.asarray(edges, dtype=float)
        w = np.diff(e)[:, None]
        u = self.u_at(t, e)
        return np.diff(u, axis=0) / w

    # -- data in x coordinates --------------------------------------------
    def ubar0_at(self, xs) -> np.ndarray:
        return self.u_at(0.0, np.asarray(xs, dtype=float))

    def vbar0_avg(self, edges) -> np.ndarray:
        return self.ut_avg(0.0, np.asarray(edges, dtype=float))

    # -- norms -------------------------------------------------------------
    def sup_norm(self) -> float:
        if self.kind == "rn":
            return self.u0.sup_norm()
        Xs = self.phi.nodes_x()
        vals = self.phi.values + self.psi(Xs) - self.apex
        return float(np.max(np.sum(np.abs(vals), axis=-1)))

    def w11_seminorm(self) -> float:
        if self.kind == "rn":
            return self.u0.w11_seminorm()
        Xs = self.phi.nodes_x()
        vals = self.phi.values + self.psi(Xs) - self.apex
        return float(np.sum(np.abs(np.diff(vals, axis=0))))

    def v_l1_norm(self) -> float:
        if self.kind == "rn":
            return self.v0.l1_norm()
        # |vbar0| dx = |Vbar0| dX by the tan substitution.
        dphi = np.diff(self.phi.values, axis=0) / self.phi.h
        dpsi = np.diff(self.psi.values, axis=0) / self.psi.h
        return float(self.phi.h * np.sum(np.abs(dphi - dpsi)))

    def l11_norm(self) -> float:
        return self.sup_norm() + self.w11_seminorm() + self.v_l1_norm()


def free_wave(data, t: float, x_left: float | None = None,
              n_cells: int | None = None, h: float | None = None) -> SliceTrace:
    """Free-wave slice S(t)(data) on an explicit grid.  `data` is a
    ScatteringData or any object with u0/v0 curve fields (e.g. initial
    data); defaults to the data's own grid."""
    if not isinstance(data, ScatteringData):
        data = ScatteringData(kind="rn", u0=data.u0, v0=data.v0)
    if x_left is None:
        x_left = (data.u0.x_left if data.kind == "rn" else -4.0) - abs(t)
    if h is None:
        h = data.u0.h if data.kind == "rn" else 0.01
    if n_cells is None:
        n_cells = (data.u0.n_cells if data.kind == "rn"
                   else int(round(8.0 / h))) + 2 * int(math.ceil(abs(t) / h))
    nodes = x_left + np.arange(n_cells + 1) * h
    u = Curve(x_left, h, data.u_at(t, nodes))
    ut = CellField1D(x_left, h, data.ut_avg(t, nodes))
    ux = CellField1D(x_left, h, data.ux_avg(t, nodes))
    return SliceTrace(t=t, u_slice=u, ut_slice=ut, ux_slice=ux)


# ---------------------------------------------------------------------------
# Duhamel scattering data for R^n-valued solutions
# ---------------------------------------------------------------------------

def scattering_data_rn(data, f_cells, lattice: NullLattice,
                       cutoff_T: float | None = None,
                       tail_tol: float = 1e-9) -> ScatteringData:
    """Scattering data for u_tt - u_xx = f with initial data (u0, v0):

        vbar0 = v0 + (C_plus + C_minus)/2,
        ubar0(x) = u0(x) - (1/2) * mass of f over the forward cone from (0,x),

    where C_plus(b), C_minus(a) are the characteristic column masses of f.
    All integrals are exact for cell data; rows above cutoff_T must carry
    less than tail_tol mass (TailMass otherwise)."""
    lat = lattice
    h = lat.h
    F = np.asarray(f_cells, dtype=float)
    if F.ndim == 2:
        F = F[:, :, None]
    F = np.where(lat.cell_mask()[:, :, None], F, 0.0)
    if cutoff_T is not None:
        k_cut = min(lat.q, int(math.floor(2.0 * cutoff_T / h + 1e-9)))
        tail = h * h * float(np.sum(np.abs(F[k_cut + 1:])))
        if tail > tail_tol:
            raise TailMass(f"forcing mass {tail} beyond t={cutoff_T} exceeds "
                           f"{tail_tol}")
        F = F.copy()
        F[k_cut + 1:] = 0.0
    n = F.shape[2]
    N = lat.n_cells
    w = np.full(lat.q + 1, 0.5)
    w[0] = w[lat.q] = 0.25
    # b-column masses (divided by h -> exact cell averages of C_plus).
    col_b = np.zeros((N, n))
    col_a = np.zeros((N, n))
    for r in range(lat.q + 1):
        c = lat.cell_count(r)
        col_b[:c] += w[r] * h * F[r, :c]
        col_a[r:r + c] += w[r] * h * F[r, :c]
    u0n = data.u0.sample_nodes(lat.x_left, N, h)
    v0c = data.v0.cell_values_on(lat.x_left, N, h)
    vbar = v0c + 0.5 * (col_b + col_a)
    # Cone mass at each base node x_j: full cells (r, m) with m <= j-1 and
    # m + r >= j; the lattice half-cells never meet the cone interior, and
    # cone edges run along cell boundaries, so the sum is exact.
    cone = np.zeros((N + 1, n))
    for r in range(1, lat.q):
        c = lat.cell_count(r)
        pref = np.concatenate([np.zeros((1, n)),
                               np.cumsum(F[r, :c], axis=0)])
        for j in range(N + 1):
            m_lo = max(0, j - r)
            m_hi = min(j, c)
            if m_hi > m_lo:
                cone[j] += 0.5 * h * h * (pref[m_hi] - pref[m_lo])
    # top half-row (area h^2/4), same cone condition with r = q.
    c = lat.cell_count(lat.q)
    if c > 0:
        pref = np.concatenate([np.zeros((1, n)),
                               np.cumsum(F[lat.q, :c], axis=0)])
        for j in range(N + 1):
            m_lo = max(0, j - lat.q)
            m_hi = min(j, c)
            if m_hi > m_lo:
                cone[j] += 0.25 * h * h * (pref[m_hi] - pref[m_lo])
    ubar = u0n - 0.5 * cone
    return ScatteringData(kind="rn",
                          u0=Curve(lat.x_left, h, ubar),
                          v0=CellField1D(lat.x_left, h, vbar))


def back_evolved_data(sol: Solution, t: float):
    """S(-t) applied to the solution slice at time t: exact free backward
    evolution, returned as (Curve, CellField1D) on the largest grid where
    both characteristic feet stay on the slice."""
    tr = sol.trace(t)
    w0 = tr.u_slice
    w1 = tr.ut_slice
    h = w0.h
    shrink = int(math.ceil(2.0 * t / h - 1e-9))
    n = w0.n_cells - 2 * shrink
    if n < 1:
        raise TailMass(f"slice at t={t} too narrow to back-evolve")
    x_left = w0.x_left + shrink * h
    nodes = x_left + np.arange(n + 1) * h
    V = antiderivative(w1)
    u_back = 0.5 * (w0(nodes + t) + w0(nodes - t)) - \
        0.5 * (V(nodes + t) - V(nodes - t))
    # The free wave through the slice is u(s, x) with sigma = s - t:
    #   u_s = (w0'(x+sigma) - w0'(x-sigma))/2 + (w1(x+sigma) + w1(x-sigma))/2;
    # at s = 0 (sigma = -t) its exact cell averages are:
    e = nodes
    dW0 = np.diff(w0(e - t), axis=0) - np.diff(w0(e + t), axis=0)
    dV1 = np.diff(V(e - t), axis=0) + np.diff(V(e + t), axis=0)
    v_back = (0.5 * dW0 + 0.5 * dV1) / h
    return Curve(x_left, h, u_back), CellField1D(x_left, h, v_back)


def scattering_defect(sol: Solution, data_L: ScatteringData, t: float) -> dict:
    """Norms of u(t) - S(t)(data_L) on the solution's slice at time t:
    sup over nodes (ell-1 components), and exact L1 of the cell-average
    differences of the time and space derivatives."""
    tr = sol.trace(t)
    h = tr.u_slice.h
    nodes = tr.u_slice.nodes_x()
    uL = data_L.u_at(t, nodes)
    sup_defect = float(np.max(np.sum(np.abs(tr.u_slice.values - uL),
                                     axis=-1))) if nodes.size else 0.0
    if tr.ut_slice.values.shape[0] == 0:
        return {"sup_defect": sup_defect, "l1_ut_defect": 0.0,
                "l1_ux_defect": 0.0}
    utL = data_L.ut_avg(t, nodes)
    uxL = data_L.ux_avg(t, nodes)
    l1_ut = float(h * np.sum(np.abs(tr.ut_slice.values - utL)))
    l1_ux = float(h * np.sum(np.abs(tr.ux_slice.values - uxL)))
    return {"sup_defect": sup_defect, "l1_ut_defect": l1_ut,
            "l1_ux_defect": l1_ux}


def l11_distance(sd_a, sd_b, x_lo: float, x_hi: float, h: float) -> float:
    """L^{1,1} distance between two data pairs on a window: sup |du0| is
    measured as sup of |u| difference plus W^{1,1} + L1 velocity parts,
    sampled on an h-grid (exact for aligned lattice data)."""
    n = int(round((x_hi - x_lo) / h))
    nodes = x_lo + np.arange(n + 1) * h
    ua = sd_a.ubar0_at(nodes)
    ub = sd_b.ubar0_at(nodes)
    d = ua - ub
    sup = float(np.max(np.sum(np.abs(d), axis=-1)))
    w11 = float(np.sum(np.abs(np.diff(d, axis=0))))
    va = sd_a.vbar0_avg(nodes)
    vb = sd_b.vbar0_avg(nodes)
    l1v = float(h * np.sum(np.abs(va - vb)))
    return sup + w11 + l1v


# ---------------------------------------------------------------------------
# Conformal compactification
# ---------------------------------------------------------------------------

@dataclass
class CompactifiedProblem:
    """Data and forcing transported to the Einstein diamond.

    U0(X) = u0(tan X) on [-pi/2, pi/2] nodes; V0 = exact cell averages of
    sec^2(X) v0(tan X) (so its L1 matches v0's); F = exact cell averages on
    the compactified lattice of the weighted forcing (box-mass transport in
    null coordinates).  Extended data: U0 constant and V0, F zero outside.
    """

    lattice: NullLattice          # base [-pi, pi], height pi/2
    U0: Curve
    V0: CellField1D
    F: np.ndarray
    f_mass: float                 # exact original forcing mass

    def data_l11(self) -> float:
        return self.U0.sup_norm() + self.U0.w11_seminorm() + self.V0.l1_norm()

    def F_l1(self) -> float:
        return cell_l1(self.F, self.lattice)


def _compact_lattice(M: int) -> NullLattice:
    H = (math.pi / 2.0) / M
    return NullLattice(x_left=-math.pi, h=H, n_cells=4 * M, q=2 * M)


def compactify(data, f_cells=None, f_lattice: NullLattice | None = None,
               M: int = 64) -> CompactifiedProblem:
    """Compactify (data, f).  f is given as cells on an original-coordinates
    lattice (or omitted).  2M is the number of lattice rows up to the
    diamond apex."""
    lat = _compact_lattice(M)
    H = lat.h
    n = data.u0.n
    Xn = -math.pi / 2.0 + np.arange(2 * M + 1) * H
    # clamp tan at the poles: u0 extends by constants, so the limit is the
    # end value.
    xn = np.tan(np.clip(Xn, -math.pi / 2 + 1e-12, math.pi / 2 - 1e-12))
    U0 = Curve(-math.pi / 2.0, H, data.u0(xn))
    Vanti = antiderivative(data.v0)
    V0_vals = np.diff(Vanti(xn), axis=0) / H
    V0 = CellField1D(-math.pi / 2.0, H, V0_vals)

    F = np.zeros((lat.q + 1, lat.n_cells, n))
    f_mass = 0.0
    if f_cells is not None:
        Fo = np.asarray(f_cells, dtype=float)
        if Fo.ndim == 2:
            Fo = Fo[:, :, None]
        lo = f_lattice
        Fo = np.where(lo.cell_mask()[:, :, None], Fo, 0.0)
        f_mass = cell_l1(Fo, lo)
        # Unfold cells onto null boxes: box (i, j) in (a-cell i, b-cell j)
        # holds f value Fo[i - j, j] for 0 <= i - j <= q.
        No, qo = lo.n_cells, lo.q
        G = np.zeros((No + qo, No, n))   # a index i in [0, No+qo), b index j
        for r in range(qo + 1):
            c = lo.cell_count(r)
            for m in range(c):
                G[m + r, m] = Fo[r, m]
        a_edges_o = lo.x_left + np.arange(No + qo + 1) * lo.h
        b_edges_o = lo.x_left + np.arange(No + 1) * lo.h

        def overlaps(lo_e, hi_e, edges):
            """Overlap lengths of [lo_e, hi_e] with consecutive cells."""
            l = np.maximum(lo_e, edges[:-1])
            r_ = np.minimum(hi_e, edges[1:])
            return np.maximum(r_ - l, 0.0)

        areas = lat.cell_areas()
        for R in range(lat.q + 1):
            c = lat.cell_count(R)
            for Mc in range(c):
                B1 = lat.x_left + Mc * H
                B2 = B1 + H
                A1 = B1 + R * H
                A2 = A1 + H
                if A2 <= -math.pi / 2 or A1 >= math.pi / 2 or \
                        B2 <= -math.pi / 2 or B1 >= math.pi / 2:
                    continue
                a1, a2 = math.tan(max(A1, -math.pi / 2 + 1e-9)), \
                    math.tan(min(A2, math.pi / 2 - 1e-9))
                b1, b2 = math.tan(max(B1, -math.pi / 2 + 1e-9)), \
                    math.tan(min(B2, math.pi / 2 - 1e-9))
                if a2 <= a_edges_o[0] or a1 >= a_edges_o[-1] or \
                        b2 <= b_edges_o[0] or b1 >= b_edges_o[-1]:
                    continue
                wa = overlaps(a1, a2, a_edges_o)
                wb = overlaps(b1, b2, b_edges_o)
                ia = np.nonzero(wa)[0]
                ib = np.nonzero(wb)[0]
                if ia.size == 0 or ib.size == 0:
                    continue
                # mass in (t, x) = (1/2) * sum of box overlaps in (a, b)
                mass = 0.5 * np.einsum("i,j,ijn->n", wa[ia], wb[ib],
                                       G[np.ix_(ia, ib)])
                F[R, Mc] = mass / areas[R]
    F = np.where(lat.cell_mask()[:, :, None], F, 0.0)
    return CompactifiedProblem(lattice=lat, U0=U0, V0=V0, F=F, f_mass=f_mass)


def scatter_m_valued(data: ManifoldData, f_cells, f_lattice,
                     cutoff: float, manifold: EmbeddedManifold,
                     spacing_h: float, M: int | None = None):
    """M-valued scattering pipeline: compactify, solve on the diamond, read
    the boundary curves phi (left null edge B = -pi/2) and psi (right null
    edge A = pi/2), and return the ScatteringData together with the defect
    series of the original-coordinates solution against its free wave.

    The caller supplies the original solution via the returned closure-free
    report: this function solves the compactified problem only; combine with
    a solve on [0, cutoff] (see cli.run_scatter) for the defect series."""
    if M is None:
        M = max(8, int(math.ceil((math.pi / 2.0) / spacing_h)))
    comp = compactify(data, f_cells, f_lattice, M=M)
    lat = comp.lattice
    n = data.u0.n
    # Extended data on the full base [-pi, pi].
    xs = lat.x_left + np.arange(lat.n_cells + 1) * lat.h
    U_ext = np.empty((lat.n_cells + 1, n))
    inside = np.clip(xs, -math.pi / 2, math.pi / 2)
    U_ext[:] = comp.U0((inside - 0.0))
    V_ext = np.zeros((lat.n_cells, n))
    centers = lat.x_left + (np.arange(lat.n_cells) + 0.5) * lat.h
    core = (centers > -math.pi / 2) & (centers < math.pi / 2)
    V_ext[core] = comp.V0.values
    data_c = ManifoldData(u0=Curve(lat.x_left, lat.h, U_ext),
                          v0=CellField1D(lat.x_left, lat.h, V_ext))
    K_c = CompactTrapezoid(0.0, math.pi, math.pi / 2.0)
    sol_c = solve_global(data_c, comp.F, K_c, manifold, lat.h)
    U = sol_c.u_nodes
    Mq = lat.q // 2   # = M
    phi_vals = np.array([U[k, Mq] for k in range(2 * Mq + 1)])
    psi_vals = np.array([U[2 * Mq - j, Mq + j] for j in range(2 * Mq + 1)])
    apex = U[2 * Mq, Mq].copy()
    phi = Curve(-math.pi / 2.0, lat.h, phi_vals)
    psi = Curve(-math.pi / 2.0, lat.h, psi_vals)
    sdata = ScatteringData(kind="compactified", phi=phi, psi=psi, apex=apex)
    return sdata, comp, sol_c


# ---------------------------------------------------------------------------
# Support cones
# ---------------------------------------------------------------------------

def support_cone_check(sol: Solution, S: float, tol: float) -> list[EstimateReport]:
    """For data and forcing supported in [-S, S]: v_plus vanishes on cells
    whose b-column lies outside [-S, S], v_minus likewise in a, and u is
    constant where both rays exit the support."""
    reports = []
    max_vp = 0.0
    max_vm = 0.0
    max_uc = 0.0
    for t_start, wf in (sol.segments or [(0.0, sol.wf)]):
        lat = wf.lattice
        h = lat.h
        vp = wf.vp
        vm = wf.vm
        for r in range(lat.q + 1):
            c = lat.cell_count(r)
            if c <= 0:
                continue
            xs = lat.cell_centers_x(r)
            t = lat.cell_center_t(r) + t_start
            b = xs - t
            a = xs + t
            out_b = (b + h / 2 < -S) | (b - h / 2 > S)
            out_a = (a + h / 2 < -S) | (a - h / 2 > S)
            if np.any(out_b):
                max_vp = max(max_vp, float(np.max(
                    np.sum(np.abs(vp[r, :c][out_b]), axis=-1))))
            if np.any(out_a):
                max_vm = max(max_vm, float(np.max(
                    np.sum(np.abs(vm[r, :c][out_a]), axis=-1))))
        # u constant in the fully exterior region.
        if sol.tail_values is not None:
            left, right = sol.tail_values
            for k in range(lat.q + 1):
                cn = lat.node_count(k)
                xn = lat.node_x(k)
                t = k * h / 2.0 + t_start
                ext_l = (xn + t) < -S
                ext_r = (xn - t) > S
                un = wf.u_nodes[k, :cn]
                if np.any(ext_l):
                    max_uc = max(max_uc, float(np.max(
                        np.sum(np.abs(un[ext_l] - left), axis=-1))))
                if np.any(ext_r):
                    max_uc = max(max_uc, float(np.max(
                        np.sum(np.abs(un[ext_r] - right), axis=-1))))
    reports.append(EstimateReport(lhs=max_vp, rhs=0.0, tol=tol))
    reports.append(EstimateReport(lhs=max_vm, rhs=0.0, tol=tol))
    reports.append(EstimateReport(lhs=max_uc, rhs=0.0, tol=tol))
    return reports
