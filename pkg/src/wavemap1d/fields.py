"""Discrete fields on the null lattice: representation, exact quadrature,
norms, characteristic derivatives, and slice traces.

Layout.  A compact trapezoid with base [xL, xR] (width divisible by the
spacing h) and height t0 (divisible by h/2) is tiled by light-cone cells:

* node rows k = 0..q (q = 2 t0 / h) at times t = k h/2, with nodes at
  x = xL + k h/2 + m h for m = 0..N-k (N = (xR - xL)/h base cells);
* cell rows r = 0..q holding the piecewise-constant 2D fields: row 0 are
  bottom half-diamonds (area h^2/4), rows 1..q-1 full diamonds (area h^2/2),
  row q top half-diamonds (area h^2/4); row r has N - r cells.

In null coordinates (a, b) = (x+t, x-t) the full cell (r, m) is exactly the
product square [a-cell m+r] x [b-cell m], which makes every transport
integral along characteristics a finite sum of cell values: all formulas
below are exact for cell-constant integrands, not quadrature approximations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import CompactTrapezoid
from .errors import (DataCoverage, LatticeMismatch, OffLattice, RegionMismatch)

_ALIGN_TOL = 1e-9


def _as2d(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    return v


def _snap_index(x: float, origin: float, step: float, what: str) -> int:
    r = (x - origin) / step
    i = int(round(r))
    if abs(r - i) > _ALIGN_TOL * max(1.0, abs(r)) + _ALIGN_TOL:
        raise OffLattice(f"{what}={x} is not on the lattice "
                         f"(origin={origin}, step={step})")
    return i


class Curve:
    """Continuous piecewise-linear R^n-valued curve on a uniform grid.

    Evaluation outside the grid uses constant extension (the natural class
    for L-infinity/W^{1,1} data on the line).
    """

    def __init__(self, x_left: float, h: float, values):
        self.x_left = float(x_left)
        self.h = float(h)
        self.values = _as2d(values)
        if self.values.shape[0] < 2:
            raise RegionMismatch("curve needs at least two nodes")

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def n_cells(self) -> int:
        return self.values.shape[0] - 1

    @property
    def x_right(self) -> float:
        return self.x_left + self.n_cells * self.h

    def nodes_x(self) -> np.ndarray:
        return self.x_left + np.arange(self.values.shape[0]) * self.h

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = np.clip((x - self.x_left) / self.h, 0.0, float(self.n_cells))
        i = np.minimum(s.astype(int), self.n_cells - 1)
        w = (s - i)[..., None]
        return (1.0 - w) * self.values[i] + w * self.values[i + 1]

    def derivative(self) -> "CellField1D":
        d = np.diff(self.values, axis=0) / self.h
        return CellField1D(self.x_left, self.h, d)

    def sup_norm(self) -> float:
        return float(np.max(np.sum(np.abs(self.values), axis=-1)))

    def w11_seminorm(self) -> float:
        return float(np.sum(np.abs(np.diff(self.values, axis=0))))

    def l1_norm(self) -> float:
        return float(np.sum(integral_abs_linear(
            self.values[:-1], self.values[1:], self.h)))

    def restrict(self, i0: int, i1: int) -> "Curve":
        return Curve(self.x_left + i0 * self.h, self.h, self.values[i0:i1 + 1])

    def sample_nodes(self, x_left: float, n_cells: int, h: float) -> np.ndarray:
        return self(x_left + np.arange(n_cells + 1) * h)


class CellField1D:
    """Piecewise-constant R^n-valued field on a uniform cell grid; zero
    outside its support interval."""

    def __init__(self, x_left: float, h: float, values):
        self.x_left = float(x_left)
        self.h = float(h)
        self.values = _as2d(values)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def n_cells(self) -> int:
        return self.values.shape[0]

    @property
    def x_right(self) -> float:
        return self.x_left + self.n_cells * self.h

    def centers_x(self) -> np.ndarray:
        return self.x_left + (np.arange(self.n_cells) + 0.5) * self.h

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        i = np.floor((x - self.x_left) / self.h).astype(int)
        ok = (i >= 0) & (i < self.n_cells)
        out = np.zeros(x.shape + (self.n,))
        out[ok] = self.values[np.clip(i, 0, self.n_cells - 1)[ok]]
        return out

    def l1_norm(self) -> float:
        return float(self.h * np.sum(np.abs(self.values)))

    def restrict(self, i0: int, i1: int) -> "CellField1D":
        return CellField1D(self.x_left + i0 * self.h, self.h,
                           self.values[i0:i1])

    def cell_values_on(self, x_left: float, n_cells: int, h: float) -> np.ndarray:
        """Values at cell centers of an aligned grid (exact restriction for
        aligned grids, center sampling otherwise)."""
        return self(x_left + (np.arange(n_cells) + 0.5) * h)


def integral_abs_linear(left: np.ndarray, right: np.ndarray, h: float) -> np.ndarray:
    """Exact integral of |linear| over [0, h] given endpoint values,
    elementwise over trailing axes."""
    a = np.asarray(left, dtype=float)
    b = np.asarray(right, dtype=float)
    same = a * b >= 0.0
    denom = np.abs(b - a)
    safe = np.where(denom > 0, denom, 1.0)
    mixed = h * (a * a + b * b) / (2.0 * safe)
    straight = h * (np.abs(a) + np.abs(b)) / 2.0
    return np.where(same | (denom == 0), straight, mixed)


def integral_norm2_linear(left: np.ndarray, right: np.ndarray, h: float) -> np.ndarray:
    """Exact integral over [0, h] of the Euclidean norm of a vector-valued
    linear function with the given endpoint values (last axis = components).

    With A = left, D = right - left, s in [0, 1]: integral of
    h * sqrt(|D|^2 s^2 + 2 A.D s + |A|^2) ds via the standard closed form.
    """
    A = np.asarray(left, dtype=float)
    D = np.asarray(right, dtype=float) - A
    a = np.sum(D * D, axis=-1)
    b = 2.0 * np.sum(A * D, axis=-1)
    c = np.sum(A * A, axis=-1)
    nA = np.sqrt(c)
    nB = np.sqrt(np.maximum(a + b + c, 0.0))
    # The closed form is ill-conditioned when |D|^2 is negligible against the
    # endpoint norms; the trapezoid value is then exact to rounding.
    pos = a > 1e-24 * np.maximum(c, np.maximum(np.abs(b), a))
    out = np.where(pos, 0.0, h * 0.5 * (nA + nB))
    if np.any(pos):
        ap, bp, cp = a[pos], b[pos], c[pos]
        sa = np.sqrt(ap)
        f0 = np.sqrt(cp)
        f1 = np.sqrt(np.maximum(ap + bp + cp, 0.0))
        disc = np.maximum(4.0 * ap * cp - bp * bp, 0.0)
        term1 = ((2.0 * ap + bp) * f1 - bp * f0) / (4.0 * ap)
        arg_hi = 2.0 * sa * f1 + 2.0 * ap + bp
        arg_lo = 2.0 * sa * f0 + bp
        # Collinear endpoints (disc == 0) reduce to the first term alone;
        # guard the log against zero arguments in that case.
        safe = (arg_lo > 0) & (arg_hi > 0) & (disc > 0)
        log_term = np.zeros_like(ap)
        log_term[safe] = (disc[safe] / (8.0 * sa[safe] ** 3)) * \
            (np.log(arg_hi[safe]) - np.log(arg_lo[safe]))
        out[pos] = h * (term1 + log_term)
    return out


@dataclass(frozen=True)
class NullLattice:
    """Uniform light-cone lattice over a compact trapezoid."""

    x_left: float
    h: float
    n_cells: int  # base cells N
    q: int        # height in half-steps: t0 = q h / 2

    def __post_init__(self):
        if self.q < 1 or self.q > self.n_cells:
            raise LatticeMismatch(
                f"q={self.q} not in [1, n_cells={self.n_cells}]")

    @classmethod
    def for_trapezoid(cls, K: CompactTrapezoid, h: float) -> "NullLattice":
        xL = K.x0 - K.half_length_L
        n = _snap_index(K.x0 + K.half_length_L, xL, h, "base width")
        q = _snap_index(K.height_t0, 0.0, h / 2.0, "height")
        return cls(xL, h, n, q)

    @property
    def x_right(self) -> float:
        return self.x_left + self.n_cells * self.h

    @property
    def t0(self) -> float:
        return self.q * self.h / 2.0

    @property
    def trapezoid(self) -> CompactTrapezoid:
        L = self.n_cells * self.h / 2.0
        return CompactTrapezoid(self.x_left + L, L, self.t0)

    def node_count(self, k: int) -> int:
        return self.n_cells + 1 - k

    def cell_count(self, r: int) -> int:
        return self.n_cells - r

    def node_x(self, k: int) -> np.ndarray:
        return self.x_left + k * self.h / 2.0 + np.arange(self.node_count(k)) * self.h

    def row_t(self, k: int) -> float:
        return k * self.h / 2.0

    def cell_centers_x(self, r: int) -> np.ndarray:
        return self.x_left + r * self.h / 2.0 + (np.arange(self.cell_count(r)) + 0.5) * self.h

    def cell_center_t(self, r: int) -> float:
        if r == 0:
            return self.h / 4.0
        if r == self.q:
            return self.t0 - self.h / 4.0
        return r * self.h / 2.0

    def cell_areas(self) -> np.ndarray:
        areas = np.full(self.q + 1, self.h * self.h / 2.0)
        areas[0] = self.h * self.h / 4.0
        areas[self.q] = self.h * self.h / 4.0
        return areas

    def cell_mask(self) -> np.ndarray:
        r = np.arange(self.q + 1)[:, None]
        m = np.arange(self.n_cells)[None, :]
        return m < (self.n_cells - r)

    def node_mask(self) -> np.ndarray:
        k = np.arange(self.q + 1)[:, None]
        m = np.arange(self.n_cells + 1)[None, :]
        return m < (self.n_cells + 1 - k)

    def zero_cells(self, n: int) -> np.ndarray:
        return np.zeros((self.q + 1, self.n_cells, n))

    def row_index(self, t: float) -> int:
        k = _snap_index(t, 0.0, self.h / 2.0, "slice time")
        if k < 0 or k > self.q:
            raise OffLattice(f"t={t} outside [0, {self.t0}]")
        return k


class Field:
    """Cell-constant R^n-valued samples on a NullLattice (rows x cells x n);
    entries outside the active mask are kept at exactly zero."""

    def __init__(self, lattice: NullLattice, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 2:
            values = values[:, :, None]
        if values.shape[:2] != (lattice.q + 1, lattice.n_cells):
            raise LatticeMismatch(
                f"values shape {values.shape} does not match lattice "
                f"({lattice.q + 1}, {lattice.n_cells})")
        self.lattice = lattice
        self.values = np.where(lattice.cell_mask()[:, :, None], values, 0.0)

    @property
    def n(self) -> int:
        return self.values.shape[2]

    def _check(self, other: "Field"):
        if self.lattice != other.lattice:
            raise LatticeMismatch("fields live on different lattices")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.lattice, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.lattice, self.values - other.values)

    def __mul__(self, c: float) -> "Field":
        return Field(self.lattice, self.values * c)

    __rmul__ = __mul__

    def l1_norm(self) -> float:
        return cell_l1(self.values, self.lattice)

    @classmethod
    def from_function(cls, lattice: NullLattice, fn) -> "Field":
        """Sample fn(t, x) -> (n,) at cell centers."""
        rows = []
        for r in range(lattice.q + 1):
            xs = lattice.cell_centers_x(r)
            t = lattice.cell_center_t(r)
            vals = np.array([fn(t, float(x)) for x in xs], dtype=float)
            if vals.ndim == 1:
                vals = vals[:, None]
            pad = np.zeros((lattice.n_cells - vals.shape[0], vals.shape[1]))
            rows.append(np.concatenate([vals, pad], axis=0))
        return cls(lattice, np.stack(rows, axis=0))


def cell_l1(values: np.ndarray, lattice: NullLattice,
            col_lo: int = 0, col_hi: int | None = None) -> float:
    """Exact L1 integral of the ell-1 pointwise norm of cell-constant values,
    optionally restricted to a range of b-columns."""
    if col_hi is None:
        col_hi = lattice.n_cells
    v = np.abs(np.where(lattice.cell_mask()[:, :, None], values, 0.0))
    per_row = np.sum(v[:, col_lo:col_hi, :], axis=(1, 2))
    return float(np.dot(lattice.cell_areas(), per_row))


# ---------------------------------------------------------------------------
# Exact characteristic machinery
# ---------------------------------------------------------------------------

def _shift_to_diagonal(H: np.ndarray, lattice: NullLattice) -> np.ndarray:
    """B[r, j] = H[r, j - r]: aligns minus-characteristics (a-strips) into
    columns.  Entries with j < r are zero."""
    q, N = lattice.q, lattice.n_cells
    B = np.zeros_like(H)
    for r in range(q + 1):
        if r < N:
            B[r, r:] = H[r, :N - r]
    return B


def _unshift_from_diagonal(V: np.ndarray, lattice: NullLattice) -> np.ndarray:
    """Inverse of _shift_to_diagonal on per-strip arrays: out[r, m] = V[r, m + r]."""
    q, N = lattice.q, lattice.n_cells
    out = np.zeros_like(V)
    for r in range(q + 1):
        if r < N:
            out[r, :N - r] = V[r, r:]
    return out


def _half_weight_cumsum(H: np.ndarray) -> np.ndarray:
    """Exact characteristic integral up to each cell-row's center point.

    S[0] = H[0]/2 (bottom half, center at t = h/4); for full rows
    S[r] = H[0]/2 + sum_{1..r-1} H + H[r]/2 (center at t = r h/2); the last
    row is the top half with center at t = t0 - h/4, giving quarter end
    weights S[q] = H[0]/4 + sum_{1..q-1} H + H[q]/4.
    """
    c = np.cumsum(H, axis=0)
    S = np.empty_like(H)
    S[0] = 0.5 * H[0]
    if H.shape[0] > 1:
        S[1:] = c[:-1] - 0.5 * H[0][None] + 0.5 * H[1:]
        S[-1] -= 0.25 * (H[0] + H[-1])
    return S


def transport_cell_values(g: np.ndarray, H: np.ndarray, lattice: NullLattice,
                          direction: str) -> np.ndarray:
    """Values of the transported field at cell centers; exact for
    cell-constant g and H.

    direction "plus":  v(t, x) = g(x - t) + int_0^t H(tau, x - t + tau) dtau,
    constant along b = x - t (columns of the lattice).
    direction "minus": v(t, x) = g(x + t) + int_0^t H(tau, x + t - tau) dtau,
    constant along a = x + t (anti-diagonals).
    """
    g = _as2d(g)
    if direction == "plus":
        S = _half_weight_cumsum(H)
        V = g[None, :, :] + (lattice.h / 2.0) * S
    elif direction == "minus":
        B = _shift_to_diagonal(H, lattice)
        S = _half_weight_cumsum(B)
        Vb = g[None, :, :] + (lattice.h / 2.0) * S
        V = _unshift_from_diagonal(Vb, lattice)
    else:
        raise ValueError(f"direction must be plus or minus, got {direction!r}")
    return np.where(lattice.cell_mask()[:, :, None], V, 0.0)


def transport_slice_endpoints(g: np.ndarray, H: np.ndarray,
                              lattice: NullLattice, direction: str,
                              k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact left/right endpoint values of the transported field on each
    slice cell of node row k (the field is linear on each slice cell)."""
    g = _as2d(g)
    N = lattice.n_cells
    count = N - k
    h2 = lattice.h / 2.0
    if count <= 0:
        return np.zeros((0, g.shape[1])), np.zeros((0, g.shape[1]))
    if k == 0:
        # At t = 0 the transported field equals its datum on every cell.
        return g[:count].copy(), g[:count].copy()
    if direction == "plus":
        Hc = H
        mids = np.sum(Hc[1:k, :count, :], axis=0) if k >= 2 else 0.0
        left = g[:count] + h2 * (Hc[0, :count, :] + mids)
        last = Hc[k, :count, :] if k <= lattice.q else 0.0
        right = g[:count] + h2 * (mids + last)
    elif direction == "minus":
        B = _shift_to_diagonal(H, lattice)
        j = np.arange(count) + k
        mids = np.sum(B[1:k, j, :], axis=0) if k >= 2 else 0.0
        gk = g[j]
        right = gk + h2 * (B[0, j, :] + mids)
        left = gk + h2 * (mids + (B[k, j, :] if k <= lattice.q else 0.0))
    else:
        raise ValueError(direction)
    return left, right


def slice_l1(g: np.ndarray, H: np.ndarray, lattice: NullLattice,
             direction: str, k: int) -> float:
    """Exact integral of the ell-1 norm of the transported field over node
    row k's slice."""
    left, right = transport_slice_endpoints(g, H, lattice, direction, k)
    if left.shape[0] == 0:
        return 0.0
    return float(np.sum(integral_abs_linear(left, right, lattice.h)))


def dalembert_node_values(u0_nodes: np.ndarray, v0_cells: np.ndarray,
                          H: np.ndarray, lattice: NullLattice) -> np.ndarray:
    """Node values of the mild solution of the linear wave equation with
    inhomogeneity H; exact for piecewise-linear u0 and cell-constant v0, H.

    Row 1 comes from the mild formula on the bottom half-diamond; the rest is
    the light-cone diamond identity u_N = u_W + u_E - u_S + (1/4) int H.
    """
    q, N = lattice.q, lattice.n_cells
    h = lattice.h
    u0_nodes = _as2d(u0_nodes)
    v0_cells = _as2d(v0_cells)
    n = u0_nodes.shape[1]
    U = np.zeros((q + 1, N + 1, n))
    U[0] = u0_nodes
    c = N  # node count of row 1 is N
    U[1, :c] = (0.5 * (u0_nodes[:c] + u0_nodes[1:c + 1])
                + (h / 2.0) * v0_cells[:c]
                + (h * h / 8.0) * H[0, :c, :])
    for k in range(2, q + 1):
        c = N + 1 - k
        U[k, :c] = (U[k - 1, :c] + U[k - 1, 1:c + 1] - U[k - 2, 1:c + 1]
                    + (h * h / 4.0) * H[k - 1, :c, :])
    return U


def u_cell_centers(U: np.ndarray, lattice: NullLattice) -> np.ndarray:
    """Solution values at cell centers by exact averaging of the multilinear
    reconstruction (second-order for smooth fields)."""
    q, N = lattice.q, lattice.n_cells
    n = U.shape[2]
    Uc = np.zeros((q + 1, N, n))
    c = N
    Uc[0, :c] = 0.25 * (U[0, :c] + U[0, 1:c + 1] + 2.0 * U[1, :c])
    for r in range(1, q):
        c = N - r
        Uc[r, :c] = 0.25 * (U[r, :c] + U[r, 1:c + 1]
                            + U[r - 1, 1:c + 1] + U[r + 1, :c])
    c = N - q
    if c > 0:
        Uc[q, :c] = 0.25 * (U[q, :c] + U[q, 1:c + 1] + 2.0 * U[q - 1, 1:c + 1])
    return Uc


# ---------------------------------------------------------------------------
# Wave fields bundle, traces, norms
# ---------------------------------------------------------------------------

@dataclass
class SliceTrace:
    t: float
    u_slice: Curve
    ut_slice: CellField1D
    ux_slice: CellField1D


@dataclass
class WaveFields:
    """A linear-wave solution bundle with full provenance: initial data,
    total inhomogeneity h_cells, and (optionally) the external forcing part."""

    lattice: NullLattice
    u_nodes: np.ndarray          # (q+1, N+1, n)
    g_plus: np.ndarray           # (N, n) cell values of v0 - Du0
    g_minus: np.ndarray          # (N, n) cell values of v0 + Du0
    h_cells: np.ndarray          # (q+1, N, n) total inhomogeneity
    u0: Curve | None = None
    v0: CellField1D | None = None
    f_cells: np.ndarray | None = None   # external forcing part of h_cells
    _vp: np.ndarray | None = field(default=None, repr=False)
    _vm: np.ndarray | None = field(default=None, repr=False)

    @property
    def vp(self) -> np.ndarray:
        if self._vp is None:
            self._vp = transport_cell_values(self.g_plus, self.h_cells,
                                             self.lattice, "plus")
        return self._vp

    @property
    def vm(self) -> np.ndarray:
        if self._vm is None:
            self._vm = transport_cell_values(self.g_minus, self.h_cells,
                                             self.lattice, "minus")
        return self._vm

    @property
    def ut(self) -> np.ndarray:
        return 0.5 * (self.vp + self.vm)

    @property
    def ux(self) -> np.ndarray:
        return 0.5 * (self.vm - self.vp)


def characteristic_derivatives(u0: Curve, v0: CellField1D, h_field,
                               lattice: NullLattice) -> tuple[np.ndarray, np.ndarray]:
    """(v_plus, v_minus) cell-center values for data (u0, v0) and
    inhomogeneity h_field (Field or raw cell array)."""
    if u0.x_left > lattice.x_left + _ALIGN_TOL or \
            u0.x_right < lattice.x_right - _ALIGN_TOL:
        raise DataCoverage("u0 does not cover the lattice base")
    H = h_field.values if isinstance(h_field, Field) else np.asarray(h_field)
    u0n = u0.sample_nodes(lattice.x_left, lattice.n_cells, lattice.h)
    du0 = np.diff(u0n, axis=0) / lattice.h
    v0c = v0.cell_values_on(lattice.x_left, lattice.n_cells, lattice.h)
    vp = transport_cell_values(v0c - du0, H, lattice, "plus")
    vm = transport_cell_values(v0c + du0, H, lattice, "minus")
    return vp, vm


def make_wavefields(u0: Curve, v0: CellField1D, H: np.ndarray,
                    lattice: NullLattice, f_cells: np.ndarray | None = None) -> WaveFields:
    u0n = u0.sample_nodes(lattice.x_left, lattice.n_cells, lattice.h)
    du0 = np.diff(u0n, axis=0) / lattice.h
    v0c = v0.cell_values_on(lattice.x_left, lattice.n_cells, lattice.h)
    U = dalembert_node_values(u0n, v0c, H, lattice)
    return WaveFields(lattice=lattice, u_nodes=U, g_plus=v0c - du0,
                      g_minus=v0c + du0, h_cells=H, u0=u0, v0=v0,
                      f_cells=f_cells)


def trace(wf: WaveFields, t: float) -> SliceTrace:
    """Slice data at a lattice time: piecewise-linear u and exact
    cell-average characteristic derivatives."""
    lat = wf.lattice
    k = lat.row_index(t)
    count = lat.node_count(k)
    if count <= 1:
        # Degenerate apex slice: one node, no cells; report the apex value
        # as a width-h constant curve centered there.
        apex = wf.u_nodes[k, :1]
        u_curve = Curve(lat.x_left + k * lat.h / 2.0 - lat.h / 2.0, lat.h,
                        np.concatenate([apex, apex], axis=0))
        cf = CellField1D(u_curve.x_left, lat.h, apex[:0])
        return SliceTrace(t=t, u_slice=u_curve, ut_slice=cf, ux_slice=cf)
    u_curve = Curve(lat.x_left + k * lat.h / 2.0, lat.h, wf.u_nodes[k, :count])
    pl, pr = transport_slice_endpoints(wf.g_plus, wf.h_cells, lat, "plus", k)
    ml, mr = transport_slice_endpoints(wf.g_minus, wf.h_cells, lat, "minus", k)
    vp_avg = 0.5 * (pl + pr)
    vm_avg = 0.5 * (ml + mr)
    ut = CellField1D(u_curve.x_left, lat.h, 0.5 * (vp_avg + vm_avg))
    ux = CellField1D(u_curve.x_left, lat.h, 0.5 * (vm_avg - vp_avg))
    return SliceTrace(t=t, u_slice=u_curve, ut_slice=ut, ux_slice=ux)


def l1_norm(obj) -> float:
    """L1 norm of a field-like object (Field, CellField1D, or Curve)."""
    return obj.l1_norm()


def w11_seminorm(curve: Curve) -> float:
    return curve.w11_seminorm()


def h_norm(wf: WaveFields) -> float:
    """sup |u| (ell-1) plus the max over lattice slices of the exact integral
    of |du/dx| + |du/dt|."""
    lat = wf.lattice
    mask = lat.node_mask()[:, :, None]
    sup_u = float(np.max(np.where(mask, np.sum(np.abs(wf.u_nodes), axis=-1,
                                               keepdims=True), -np.inf)))
    best = 0.0
    for k in range(lat.q + 1):
        if lat.node_count(k) - 1 <= 0:
            continue
        pl, pr = transport_slice_endpoints(wf.g_plus, wf.h_cells, lat, "plus", k)
        ml, mr = transport_slice_endpoints(wf.g_minus, wf.h_cells, lat, "minus", k)
        ut_int = float(np.sum(integral_abs_linear(
            0.5 * (pl + ml), 0.5 * (pr + mr), lat.h)))
        ux_int = float(np.sum(integral_abs_linear(
            0.5 * (ml - pl), 0.5 * (mr - pr), lat.h)))
        best = max(best, ut_int + ux_int)
    return sup_u + best


def l11_norm(u_curve: Curve, v_cells: CellField1D) -> float:
    """sup |u| + ||Du||_1 + ||v||_1 (the L^{1,1} data norm)."""
    return u_curve.sup_norm() + u_curve.w11_seminorm() + v_cells.l1_norm()


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def export_csv(wf: WaveFields, path) -> None:
    """Node values as CSV rows (t, x, u_1..u_n) with round-trippable
    decimal-17 formatting."""
    lat = wf.lattice
    n = wf.u_nodes.shape[2]
    header = "t,x," + ",".join(f"u_{i + 1}" for i in range(n))
    lines = [header]
    for k in range(lat.q + 1):
        t = lat.row_t(k)
        xs = lat.node_x(k)
        for m, x in enumerate(xs):
            vals = ",".join(format_float(v) for v in wf.u_nodes[k, m])
            lines.append(f"{format_float(t)},{format_float(x)},{vals}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def norms_json(wf: WaveFields) -> dict:
    lat = wf.lattice
    return {
        "h_norm": h_norm(wf),
        "h_field_l1": cell_l1(wf.h_cells, lat),
        "sup_u": float(np.max(np.sum(np.abs(wf.u_nodes[0]), axis=-1))),
        "spacing_h": lat.h,
        "height_t0": lat.t0,
    }
