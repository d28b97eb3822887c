"""Nonlinear solver: fixed-point map, contraction budget selection, Picard
iteration for small data, local height selection, tile-and-glue local solves,
global continuation, unbounded-domain decomposition, and concatenation on
growing triangles.

The fixed-point unknown is the inhomogeneity field h on the lattice cells;
u, v_plus, v_minus are reconstructed from h by the exact linear kernels.  All
iterations read only dependence triangles, so restrictions of a solve to a
sub-trapezoid are bitwise identical to solving on the sub-trapezoid directly;
the tiled and single-sweep local solvers exploit (and assert) this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import CompactTrapezoid, Trapezoid, tile_cover
from .errors import (BudgetInfeasible, DataCoverage, DegenerateHeight,
                     NoConvergence, OverlapMismatch, SmallnessViolated,
                     StallDetected, TailNotSmall)
from .fields import (CellField1D, Curve, NullLattice, WaveFields, cell_l1,
                     dalembert_node_values, make_wavefields, trace,
                     transport_cell_values, u_cell_centers)
from .geometry import EmbeddedManifold, ManifoldData

N_ITER = 64
_NOISE = 1e-12


@dataclass(frozen=True)
class ContractionBudget:
    eta: float
    R: float
    gamma: float
    L_lip: float

    def invariance_ok(self) -> bool:
        return (self.eta + self.R) ** 2 + self.eta <= self.R / self.gamma

    def sufficient_ok(self) -> bool:
        return 2 * self.eta ** 2 + 2 * self.R ** 2 + self.eta <= self.R / self.gamma

    def contraction_ok(self) -> bool:
        return (self.L_lip * (self.eta + self.R) ** 2
                + 5 * self.gamma * self.eta + 4 * self.gamma * self.R) < 0.5


def select_budget(gamma: float, L_lip: float) -> ContractionBudget:
    """Deterministic budget scan: R is the largest 2^-k / gamma with
    4*gamma*R <= 1/4 and 4R^2 <= R/gamma; eta the largest 2^-m satisfying
    the invariance, sufficient, and contraction conditions with that R."""
    if gamma <= 0 or L_lip <= 0:
        raise BudgetInfeasible("gamma and L_lip must be positive")
    R = None
    for k in range(0, 1100):
        cand = 2.0 ** (-k) / gamma
        if 4 * gamma * cand <= 0.25 and 4 * cand * cand <= cand / gamma:
            R = cand
            break
    if R is None:
        raise BudgetInfeasible("no admissible R found")
    for m in range(0, 1100):
        eta = 2.0 ** (-m)
        b = ContractionBudget(eta=eta, R=R, gamma=gamma, L_lip=L_lip)
        if b.invariance_ok() and b.sufficient_ok() and b.contraction_ok():
            return b
    raise BudgetInfeasible("eta underflowed without satisfying the budget")


# ---------------------------------------------------------------------------
# The fixed-point map
# ---------------------------------------------------------------------------

def _phi_arrays(H: np.ndarray, u0n: np.ndarray, v0c: np.ndarray,
                f_cells: np.ndarray, lat: NullLattice,
                manifold: EmbeddedManifold) -> np.ndarray:
    """One application of the map h -> Gamma(u_h)(Q(u_h)) + P(u_h) f."""
    du0 = np.diff(u0n, axis=0) / lat.h
    gp = v0c - du0
    gm = v0c + du0
    U = dalembert_node_values(u0n, v0c, H, lat)
    Vp = transport_cell_values(gp, H, lat, "plus")
    Vm = transport_cell_values(gm, H, lat, "minus")
    Uc = u_cell_centers(U, lat)
    trace_q = np.sum(Vp * Vm, axis=-1, keepdims=True)
    Hn = manifold.gamma_q_extended(Uc, trace_q) + \
        manifold.forcing_project_extended(Uc, f_cells)
    return np.where(lat.cell_mask()[:, :, None], Hn, 0.0)


def phi_map(h_field, data: ManifoldData, f_cells, K: CompactTrapezoid,
            manifold: EmbeddedManifold, spacing_h: float) -> np.ndarray:
    """Public fixed-point map on cell arrays for data given as curves."""
    lat = NullLattice.for_trapezoid(K, spacing_h)
    u0n = data.u0.sample_nodes(lat.x_left, lat.n_cells, lat.h)
    v0c = data.v0.cell_values_on(lat.x_left, lat.n_cells, lat.h)
    H = np.asarray(h_field, dtype=float)
    if H.ndim == 2:
        H = H[:, :, None]
    F = np.asarray(f_cells, dtype=float)
    if F.ndim == 2:
        F = F[:, :, None]
    return _phi_arrays(H, u0n, v0c, F, lat, manifold)


# ---------------------------------------------------------------------------
# Picard iteration
# ---------------------------------------------------------------------------

@dataclass
class Solution:
    wf: WaveFields
    manifold: EmbeddedManifold
    domain: Trapezoid
    diagnostics: dict
    segments: list = field(default_factory=list)  # [(t_start, WaveFields)]
    u_nodes_global: np.ndarray | None = None
    lattice_global: NullLattice | None = None
    tail_values: tuple | None = None  # (left u value, right u value)

    @property
    def lattice(self) -> NullLattice:
        return self.lattice_global if self.lattice_global is not None \
            else self.wf.lattice

    @property
    def u_nodes(self) -> np.ndarray:
        return self.u_nodes_global if self.u_nodes_global is not None \
            else self.wf.u_nodes

    @property
    def h_field(self) -> np.ndarray:
        return self.wf.h_cells

    def segment_at(self, t: float) -> tuple[float, WaveFields]:
        best = (0.0, self.wf)
        for t0, wf in self.segments or [(0.0, self.wf)]:
            if t0 <= t + 1e-12 and t <= t0 + wf.lattice.t0 + 1e-12:
                best = (t0, wf)
        return best

    def trace(self, t: float):
        t0, wf = self.segment_at(t)
        return trace(wf, t - t0)

    def manifold_defect(self) -> float:
        lat = self.lattice
        U = self.u_nodes
        mask = lat.node_mask()
        d = np.abs(np.sqrt(np.sum(U * U, axis=-1)) - 1.0)
        return float(np.max(np.where(mask, d, 0.0)))


def _run_picard(u0n, v0c, f_cells, lat, manifold, n_iter=N_ITER,
                tol=_NOISE, strict=True):
    """Iterate h <- Phi(h) from h = 0.  Returns (H, diagnostics).

    The exit rule is data-independent: a fixed sweep count, with early exit
    only on an exactly-zero increment (which is stable under further sweeps,
    so the early exit cannot change the result bitwise).
    """
    H = lat.zero_cells(u0n.shape[1])
    deltas: list[float] = []
    ratios: list[float] = []
    h_norms: list[float] = []
    d0 = None
    for it in range(n_iter):
        Hn = _phi_arrays(H, u0n, v0c, f_cells, lat, manifold)
        delta = cell_l1(Hn - H, lat)
        H = Hn
        deltas.append(delta)
        h_norms.append(cell_l1(H, lat))
        if d0 is None:
            d0 = delta
        floor = _NOISE * d0
        if len(deltas) >= 2 and deltas[-2] > floor and deltas[-1] > floor:
            ratios.append(deltas[-1] / deltas[-2])
        if delta == 0.0:
            break
        # Early divergence abort (used by the adaptive height backoff).
        if it >= 8 and delta > 4.0 * d0:
            raise NoConvergence(
                f"increment grew to {delta} from {d0} after {it + 1} sweeps")
    final = deltas[-1]
    conv_tol = max(tol, tol * (d0 or 0.0))
    converged = final <= conv_tol
    if not converged and ratios and min(ratios[-5:]) > 0.9:
        raise NoConvergence(
            f"ratio persistently above 0.9 (last {ratios[-5:]}), "
            f"residual {final}")
    if not converged:
        raise NoConvergence(f"residual {final} above tolerance {conv_tol} "
                            f"after {len(deltas)} sweeps")
    diag = {"iterations": len(deltas), "final_residual": final,
            "ratios": ratios, "h_norms": h_norms}
    return H, diag


def _data_arrays(data: ManifoldData, lat: NullLattice):
    u0n = data.u0.sample_nodes(lat.x_left, lat.n_cells, lat.h)
    v0c = data.v0.cell_values_on(lat.x_left, lat.n_cells, lat.h)
    return u0n, v0c


def _masses(u0n, v0c, h):
    du0 = np.diff(u0n, axis=0) / h
    gp = h * float(np.sum(np.abs(v0c - du0)))
    gm = h * float(np.sum(np.abs(v0c + du0)))
    return gp, gm


def picard_solve_small(data: ManifoldData, f_cells, K: CompactTrapezoid,
                       manifold: EmbeddedManifold, budget: ContractionBudget,
                       spacing_h: float, tol: float = _NOISE,
                       max_iter: int = N_ITER) -> Solution:
    """Small-data solve on a trapezoid: checked smallness preconditions,
    Picard iteration from h = 0, contraction diagnostics."""
    lat = NullLattice.for_trapezoid(K, spacing_h)
    u0n, v0c = _data_arrays(data, lat)
    F = np.asarray(f_cells, dtype=float)
    if F.ndim == 2:
        F = F[:, :, None]
    gp, gm = _masses(u0n, v0c, lat.h)
    f_mass = cell_l1(F, lat)
    if gp > budget.eta or gm > budget.eta or f_mass > budget.eta:
        raise SmallnessViolated(
            f"masses (|v0-Du0|, |v0+Du0|, |f|) = ({gp}, {gm}, {f_mass}) "
            f"exceed eta = {budget.eta}")
    H, diag = _run_picard(u0n, v0c, F, lat, manifold, n_iter=max_iter, tol=tol)
    wf = make_wavefields(data.u0, data.v0, H, lat, f_cells=F)
    diag.update({"path": "SmallData", "budget": {"eta": budget.eta,
                                                 "R": budget.R}})
    return Solution(wf=wf, manifold=manifold, domain=K, diagnostics=diag)


# ---------------------------------------------------------------------------
# Height selection and local solves
# ---------------------------------------------------------------------------

def find_local_height(data: ManifoldData, f_cells, K: CompactTrapezoid,
                      eta: float, spacing_h: float) -> float:
    """Largest safe local height: delta1 from sliding characteristic-mass
    windows, delta2 from the forcing slab mass, capped at L/2, snapped down
    to a multiple of 2h (so tile covers stay lattice-aligned)."""
    lat = NullLattice.for_trapezoid(K, spacing_h)
    h = lat.h
    N = lat.n_cells
    u0n, v0c = _data_arrays(data, lat)
    du0 = np.diff(u0n, axis=0) / h
    wp = h * np.sum(np.abs(v0c - du0), axis=-1)
    wm = h * np.sum(np.abs(v0c + du0), axis=-1)
    F = np.asarray(f_cells, dtype=float)
    if F.ndim == 2:
        F = F[:, :, None]

    def max_window(w, cells):
        if cells >= N:
            return float(np.sum(w))
        c = np.concatenate([[0.0], np.cumsum(w)])
        return float(np.max(c[cells:] - c[:-cells]))

    # delta1: any continuum window of width 2 j h meets at most 2j+1 cells.
    j = 0
    while True:
        jn = j + 1
        if max_window(wp, 2 * jn + 1) > eta or max_window(wm, 2 * jn + 1) > eta:
            break
        j = jn
        if j * h >= K.half_length_L:
            break
    delta1 = j * h if j > 0 else 0.0
    if max_window(wp, N) <= eta and max_window(wm, N) <= eta:
        delta1 = K.half_length_L

    Fm = np.where(lat.cell_mask()[:, :, None], F, 0.0)
    row_abs = np.array([float(np.sum(np.abs(Fm[r]))) for r in range(lat.q + 1)])

    def slab_mass(rows):
        """|f| mass over the slab [0, rows * h/2]: the bottom half-row and
        the lower half of the straddling row weigh h^2/4, interior full
        rows h^2/2."""
        if rows <= 0:
            return 0.0
        rows = min(rows, lat.q)
        total = 0.25 * row_abs[0] + 0.5 * np.sum(row_abs[1:rows]) \
            + 0.25 * row_abs[rows]
        return float(h * h * total)

    if slab_mass(lat.q) <= eta:
        delta2 = math.inf
    else:
        r = 0
        while r < lat.q and slab_mass(r + 1) <= eta:
            r += 1
        delta2 = r * h / 2.0
    delta = min(delta1, (2.0 * math.sqrt(3.0) / 3.0) * delta2,
                K.half_length_L / 2.0)
    delta = math.floor(delta / (2 * h) + 1e-9) * (2 * h)
    # Guard: the snapped slab [0, delta] must itself respect the forcing
    # budget, so every tile's restricted forcing stays below eta.
    while delta >= 2 * h and slab_mass(int(round(2 * delta / h))) > eta:
        delta -= 2 * h
    if delta < 2 * h:
        raise DegenerateHeight(
            f"local height {delta} below lattice floor 2h = {2 * h}")
    return delta


def _restrict_f(F: np.ndarray, k0: int, lat_seg: NullLattice) -> np.ndarray:
    """Forcing restriction to a segment starting at global row k0: segment
    cell (r, m) coincides with global cell (k0 + r, m) exactly."""
    q, N = lat_seg.q, lat_seg.n_cells
    out = np.zeros((q + 1, N, F.shape[2]))
    out[:, :, :] = F[k0:k0 + q + 1, :N]
    return np.where(lat_seg.cell_mask()[:, :, None], out, 0.0)


def _restart_data(wf: WaveFields, manifold: EmbeddedManifold) -> ManifoldData:
    """Continuation data from the top slice of a segment: exact trace curve
    and cell-average velocity, projected back to the manifold (nearest point
    for u, tangent projection for v)."""
    tr = trace(wf, wf.lattice.t0)
    u_nodes = manifold.nearest_point(tr.u_slice.values)
    u0 = Curve(tr.u_slice.x_left, tr.u_slice.h, u_nodes)
    mid = 0.5 * (u_nodes[:-1] + u_nodes[1:])
    p_mid = manifold.nearest_point(mid)
    v_proj = manifold.tangent_project(p_mid, tr.ut_slice.values)
    v0 = CellField1D(tr.u_slice.x_left, tr.u_slice.h, v_proj)
    return ManifoldData(u0=u0, v0=v0)


def _solve_segment(data: ManifoldData, F_seg: np.ndarray, K_seg: CompactTrapezoid,
                   manifold: EmbeddedManifold, spacing_h: float,
                   n_iter=N_ITER) -> WaveFields:
    lat = NullLattice.for_trapezoid(K_seg, spacing_h)
    u0n, v0c = _data_arrays(data, lat)
    H, diag = _run_picard(u0n, v0c, F_seg, lat, manifold, n_iter=n_iter)
    wf = make_wavefields(data.u0, data.v0, H, lat, f_cells=F_seg)
    wf.picard_diag = diag
    return wf


def solve_local_large(data: ManifoldData, f_cells, K: CompactTrapezoid,
                      manifold: EmbeddedManifold, spacing_h: float,
                      budget: ContractionBudget | None = None) -> Solution:
    """Tile-and-glue local solve: pick delta, cover K with overlapping tiles
    of half-width delta, Picard-solve each (restricted data are small by
    construction), and glue; overlapping tile values must agree bitwise
    because every solve reads only dependence triangles."""
    if budget is None:
        budget = select_budget(manifold.sup_bound_gamma,
                               manifold.lipschitz_bound_L)
    lat = NullLattice.for_trapezoid(K, spacing_h)
    F = np.asarray(f_cells, dtype=float)
    if F.ndim == 2:
        F = F[:, :, None]
    delta = find_local_height(data, f_cells, K, budget.eta, spacing_h)
    height = min(K.height_t0, delta / 2.0)
    tiles = tile_cover(K, delta, height=height)
    K_out = K.clipped(height)
    lat_out = NullLattice.for_trapezoid(K_out, spacing_h)
    n = F.shape[2]
    U_g = np.full((lat_out.q + 1, lat_out.n_cells + 1, n), np.nan)
    H_g = np.full((lat_out.q + 1, lat_out.n_cells, n), np.nan)
    iters = []
    for tile in tiles:
        lat_t = NullLattice.for_trapezoid(tile, spacing_h)
        i0 = int(round((lat_t.x_left - lat_out.x_left) / spacing_h))
        u0_t = Curve(lat_t.x_left, spacing_h,
                     data.u0.sample_nodes(lat_t.x_left, lat_t.n_cells,
                                          spacing_h))
        v0_t = CellField1D(lat_t.x_left, spacing_h,
                           data.v0.cell_values_on(lat_t.x_left,
                                                  lat_t.n_cells, spacing_h))
        F_t = np.where(lat_t.cell_mask()[:, :, None],
                       F[:lat_t.q + 1, i0:i0 + lat_t.n_cells], 0.0)
        wf_t = _solve_segment(ManifoldData(u0_t, v0_t), F_t, tile, manifold,
                              spacing_h)
        iters.append(wf_t.picard_diag["iterations"])
        for k in range(min(lat_out.q, lat_t.q) + 1):
            c = lat_t.node_count(k)
            cg = lat_out.node_count(k)
            j0 = i0
            j1 = min(i0 + c, cg)
            if j1 <= j0:
                continue
            vals = wf_t.u_nodes[k, :j1 - j0]
            old = U_g[k, j0:j1]
            seen = ~np.isnan(old[:, 0])
            if np.any(seen) and not np.array_equal(old[seen], vals[seen]):
                raise OverlapMismatch(
                    f"tile at {tile.x0} disagrees with previous tiles")
            U_g[k, j0:j1] = vals
        for r in range(min(lat_out.q, lat_t.q) + 1):
            c = lat_t.cell_count(r)
            cg = lat_out.cell_count(r)
            j1 = min(i0 + c, cg)
            if j1 <= i0:
                continue
            vals = wf_t.h_cells[r, :j1 - i0]
            old = H_g[r, i0:j1]
            seen = ~np.isnan(old[:, 0])
            if np.any(seen) and not np.array_equal(old[seen], vals[seen]):
                raise OverlapMismatch(
                    f"tile at {tile.x0} h-field disagrees on overlap")
            H_g[r, i0:j1] = vals
    if np.any(np.isnan(U_g[lat_out.node_mask()])) or \
            np.any(np.isnan(H_g[lat_out.cell_mask()])):
        raise OverlapMismatch("tile cover left uncovered lattice sites")
    H_g = np.where(lat_out.cell_mask()[:, :, None], H_g, 0.0)
    u0n, v0c = _data_arrays(data, lat_out)
    wf = WaveFields(lattice=lat_out, u_nodes=np.where(
        lat_out.node_mask()[:, :, None], U_g, 0.0),
        g_plus=v0c - np.diff(u0n, axis=0) / spacing_h,
        g_minus=v0c + np.diff(u0n, axis=0) / spacing_h,
        h_cells=H_g, u0=data.u0, v0=data.v0,
        f_cells=np.where(lat_out.cell_mask()[:, :, None],
                         F[:lat_out.q + 1, :lat_out.n_cells], 0.0))
    diag = {"path": "Tiled", "tiles": len(tiles), "delta": delta,
            "iterations": max(iters), "final_residual": 0.0,
            "budget": {"eta": budget.eta, "R": budget.R}}
    return Solution(wf=wf, manifold=manifold, domain=K_out, diagnostics=diag)


# ---------------------------------------------------------------------------
# Global continuation
# ---------------------------------------------------------------------------

def solve_global(data: ManifoldData, f_cells, K: CompactTrapezoid,
                 manifold: EmbeddedManifold, spacing_h: float,
                 budget: ContractionBudget | None = None,
                 schedule_advance: float | None = None,
                 allow_hop: bool = True) -> Solution:
    """M-valued solve to the full height of a compact trapezoid by segmental
    continuation: each segment is a single Picard sweep stack over the
    current slab (bitwise equal to the tiled local solve on the same slab by
    causality), restarted from its exact top-slice trace projected back to
    the manifold.

    Segment heights come from find_local_height when the budget admits one;
    otherwise (large data on a coarse lattice) the height backs off
    geometrically until the Picard iteration contracts.  schedule_advance
    pins the restart times (used by the concatenation driver so nested
    solves restart at identical times)."""
    if budget is None:
        budget = select_budget(manifold.sup_bound_gamma,
                               manifold.lipschitz_bound_L)
    lat_full = NullLattice.for_trapezoid(K, spacing_h)
    h = spacing_h
    F = np.asarray(f_cells, dtype=float)
    if F.ndim == 2:
        F = F[:, :, None]
    if F.shape[:2] != (lat_full.q + 1, lat_full.n_cells):
        raise DataCoverage(
            f"forcing shape {F.shape} does not match the lattice "
            f"({lat_full.q + 1}, {lat_full.n_cells})")
    F = np.where(lat_full.cell_mask()[:, :, None], F, 0.0)
    n = F.shape[2]

    segments: list[tuple[float, WaveFields]] = []
    U_g = np.zeros((lat_full.q + 1, lat_full.n_cells + 1, n))
    T = 0.0
    cur = data
    total_iters = 0
    residual = 0.0
    while True:
        remaining = K.height_t0 - T
        L_cur = K.half_length_L - T
        k0 = lat_full.row_index(T) if T > 0 else 0
        K_cur = CompactTrapezoid(K.x0, L_cur, remaining)
        lat_cur = NullLattice.for_trapezoid(K_cur, h)
        u0n, v0c = _data_arrays(cur, lat_cur)
        gp, gm = _masses(u0n, v0c, h)
        F_rest = _restrict_f(F, k0, lat_cur)
        f_mass = cell_l1(F_rest, lat_cur)

        hop = allow_hop and gp <= budget.eta and gm <= budget.eta and \
            f_mass <= budget.eta and schedule_advance is None
        if hop:
            wf = _solve_segment(cur, F_rest, K_cur, manifold, h)
            segments.append((T, wf))
            total_iters += wf.picard_diag["iterations"]
            residual = max(residual, wf.picard_diag["final_residual"])
            _write_nodes(U_g, wf, k0, lat_full)
            break

        if schedule_advance is not None:
            advance = min(schedule_advance, remaining)
        else:
            try:
                delta = find_local_height(cur, F_rest, K_cur, budget.eta, h)
            except DegenerateHeight:
                delta = math.floor(L_cur / (4 * h) + 1e-9) * (2 * h)
                if delta < 2 * h:
                    delta = 2 * h
            advance = min(delta / 2.0, remaining)

        while True:
            K_seg = K_cur.clipped(advance)
            try:
                wf = _solve_segment(cur, _restrict_f(F, k0, NullLattice.
                                                     for_trapezoid(K_seg, h)),
                                    K_seg, manifold, h)
                break
            except NoConvergence:
                advance = math.floor(advance / (2 * h) + 1e-9) * h
                if advance < h - 1e-12:
                    raise StallDetected(
                        "segment height hit the lattice floor without "
                        "contraction",
                        {"T": T, "masses": {"g_plus": gp, "g_minus": gm,
                                            "f": f_mass},
                         "eta": budget.eta, "h": h})
        segments.append((T, wf))
        total_iters += wf.picard_diag["iterations"]
        residual = max(residual, wf.picard_diag["final_residual"])
        _write_nodes(U_g, wf, k0, lat_full)
        T = T + wf.lattice.t0
        if T >= K.height_t0 - 1e-12:
            break
        cur = _restart_data(wf, manifold)

    path = "SmallData" if len(segments) == 1 and hop else (
        "Continued" if len(segments) > 1 else "Tiled")
    diag = {"path": path, "segments": len(segments),
            "segment_starts": [t for t, _ in segments],
            "iterations": total_iters, "final_residual": residual,
            "budget": {"eta": budget.eta, "R": budget.R}}
    return Solution(wf=segments[0][1], manifold=manifold, domain=K,
                    diagnostics=diag, segments=segments,
                    u_nodes_global=U_g, lattice_global=lat_full)


def _write_nodes(U_g: np.ndarray, wf: WaveFields, k0: int,
                 lat_full: NullLattice) -> None:
    for k in range(wf.lattice.q + 1):
        c = wf.lattice.node_count(k)
        U_g[k0 + k, :c] = wf.u_nodes[k, :c]


# ---------------------------------------------------------------------------
# Unbounded domains and concatenation
# ---------------------------------------------------------------------------

def _support_hull(data: ManifoldData, cutoff: float):
    """Smallest [a, b] outside which Du0 and v0 vanish (so u0 is constant on
    each side); TailNotSmall if the hull exceeds [-cutoff, cutoff]."""
    u0, v0 = data.u0, data.v0
    du = np.abs(np.diff(u0.values, axis=0)).sum(axis=-1)
    lo = u0.x_left
    hi = u0.x_right
    nz = np.nonzero(du > 0)[0]
    a = lo + nz[0] * u0.h if nz.size else hi
    b = lo + (nz[-1] + 1) * u0.h if nz.size else lo
    vv = np.abs(v0.values).sum(axis=-1)
    nzv = np.nonzero(vv > 0)[0]
    if nzv.size:
        a = min(a, v0.x_left + nzv[0] * v0.h)
        b = max(b, v0.x_left + (nzv[-1] + 1) * v0.h)
    if b <= a:
        a, b = u0.x_left, u0.x_left + u0.h
    if a < -cutoff or b > cutoff:
        raise TailNotSmall(f"support [{a}, {b}] exceeds cutoff {cutoff}")
    return a, b


def solve_unbounded(data: ManifoldData, f_support_builder, height: float,
                    manifold: EmbeddedManifold, spacing_h: float,
                    cutoff: float = 64.0,
                    budget: ContractionBudget | None = None) -> Solution:
    """Solve on the unbounded slab [0, height] x R for data that is constant
    outside a compact hull: a compact-core solve whose base is padded by
    2*height (so the core is exact on everything the hull can influence)
    plus exactly-constant tails.

    f_support_builder(lattice) must return the forcing cells on the core
    lattice; data constant outside the hull makes the tail solves trivial
    (the characteristic columns outside the hull carry exactly zero)."""
    if budget is None:
        budget = select_budget(manifold.sup_bound_gamma,
                               manifold.lipschitz_bound_L)
    a, b = _support_hull(data, cutoff)
    pad = 2.0 * height + 2.0 * spacing_h
    x_lo = math.floor((a - pad) / spacing_h) * spacing_h
    x_hi = math.ceil((b + pad) / spacing_h) * spacing_h
    x0 = (x_lo + x_hi) / 2.0
    L = (x_hi - x_lo) / 2.0
    K_core = CompactTrapezoid(x0, L, height)
    lat = NullLattice.for_trapezoid(K_core, spacing_h)
    F = f_support_builder(lat) if callable(f_support_builder) \
        else np.asarray(f_support_builder, dtype=float)
    if F.ndim == 2:
        F = F[:, :, None]
    sol = solve_global(data, F, K_core, manifold, spacing_h, budget=budget)
    left_val = data.u0(np.array([x_lo]))[0]
    right_val = data.u0(np.array([x_hi]))[0]
    sol.tail_values = (left_val, right_val)
    sol.diagnostics["core_base"] = (x_lo, x_hi)
    return sol


def solve_concatenated(data: ManifoldData, f_builder, n_max: int,
                       manifold: EmbeddedManifold, spacing_h: float,
                       budget: ContractionBudget | None = None) -> list[Solution]:
    """Solve on the growing triangles with base [-n, n] and height n for
    n = 1..n_max.  The restart schedule is pinned from the largest triangle
    so every solve restarts at the same times; nested solutions then agree
    bitwise on the smaller triangle by causality (asserted by the tests)."""
    if budget is None:
        budget = select_budget(manifold.sup_bound_gamma,
                               manifold.lipschitz_bound_L)
    K_big = CompactTrapezoid(0.0, float(n_max), float(n_max))
    lat_big = NullLattice.for_trapezoid(K_big, spacing_h)
    F_big = f_builder(lat_big) if callable(f_builder) else \
        np.asarray(f_builder, dtype=float)
    if F_big.ndim == 2:
        F_big = F_big[:, :, None]
    data_big = ManifoldData(
        u0=Curve(lat_big.x_left, spacing_h,
                 data.u0.sample_nodes(lat_big.x_left, lat_big.n_cells,
                                      spacing_h)),
        v0=CellField1D(lat_big.x_left, spacing_h,
                       data.v0.cell_values_on(lat_big.x_left,
                                              lat_big.n_cells, spacing_h)))
    try:
        delta = find_local_height(data_big, F_big, K_big, budget.eta,
                                  spacing_h)
    except DegenerateHeight:
        delta = 2 * spacing_h
    advance = max(spacing_h, delta / 2.0)
    out = []
    for nn in range(1, n_max + 1):
        K_n = CompactTrapezoid(0.0, float(nn), float(nn))
        lat_n = NullLattice.for_trapezoid(K_n, spacing_h)
        i0 = int(round((lat_n.x_left - lat_big.x_left) / spacing_h))
        F_n = np.where(lat_n.cell_mask()[:, :, None],
                       F_big[:lat_n.q + 1, i0:i0 + lat_n.n_cells], 0.0)
        data_n = ManifoldData(
            u0=Curve(lat_n.x_left, spacing_h,
                     data.u0.sample_nodes(lat_n.x_left, lat_n.n_cells,
                                          spacing_h)),
            v0=CellField1D(lat_n.x_left, spacing_h,
                           data.v0.cell_values_on(lat_n.x_left,
                                                  lat_n.n_cells, spacing_h)))
        sol = solve_global(data_n, F_n, K_n, manifold, spacing_h,
                           budget=budget, schedule_advance=advance,
                           allow_hop=False)
        sol.diagnostics["path"] = "Concatenated"
        out.append(sol)
    return out
