"""Trapezoid algebra: causal space-time domains, slices, dependence triangles,
tiling covers, and the null-coordinate change of variables.

A trapezoid is a subset of [0, inf) x R closed under backward light cones:
for every (t, x) in the set, the triangle with vertices (t, x), (0, x - t),
(0, x + t) is contained in it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import CausalityViolated, DeltaTooLarge, OutsideDomain

_EPS = 1e-12


def to_null(t: float, x: float) -> tuple[float, float]:
    """(t, x) -> (a, b) = (x + t, x - t)."""
    return (x + t, x - t)


def from_null(a: float, b: float) -> tuple[float, float]:
    """(a, b) -> (t, x); requires a >= b."""
    if a < b:
        raise CausalityViolated(f"a={a} < b={b}")
    return ((a - b) / 2.0, (a + b) / 2.0)


@dataclass(frozen=True)
class DependenceTriangle:
    apex: tuple[float, float]
    base_interval: tuple[float, float]


class Trapezoid:
    """Abstract base; concrete variants implement slice/contains."""

    def slice(self, t: float):
        raise NotImplementedError

    def contains(self, t: float, x: float) -> bool:
        lo_hi = self.slice(t)
        if lo_hi is None:
            return False
        lo, hi = lo_hi
        return lo - _EPS <= x <= hi + _EPS

    def dependence_triangle(self, t0: float, x0: float) -> DependenceTriangle:
        if not self.contains(t0, x0):
            raise OutsideDomain(f"({t0}, {x0}) not in {self!r}")
        return DependenceTriangle(apex=(t0, x0), base_interval=(x0 - t0, x0 + t0))


@dataclass(frozen=True)
class CompactTrapezoid(Trapezoid):
    """{(t, x): 0 <= t <= t0, |x - x0| <= L - t}."""

    x0: float
    half_length_L: float
    height_t0: float

    def __post_init__(self):
        if not (0.0 < self.height_t0 <= self.half_length_L + _EPS):
            raise OutsideDomain(
                f"height {self.height_t0} not in (0, L={self.half_length_L}]"
            )

    @property
    def base(self) -> tuple[float, float]:
        return (self.x0 - self.half_length_L, self.x0 + self.half_length_L)

    def slice(self, t: float):
        if t < -_EPS or t > self.height_t0 + _EPS:
            return None
        return (self.x0 - self.half_length_L + t, self.x0 + self.half_length_L - t)

    def clipped(self, height: float) -> "CompactTrapezoid":
        return CompactTrapezoid(self.x0, self.half_length_L, min(self.height_t0, height))


@dataclass(frozen=True)
class UnboundedTrapezoid(Trapezoid):
    """{(t, x): 0 <= t <= height}; height may be math.inf."""

    height: float

    def slice(self, t: float):
        if t < -_EPS or t > self.height + _EPS:
            return None
        return (-math.inf, math.inf)


@dataclass(frozen=True)
class SemiBoundedUp(Trapezoid):
    """{(t, x): 0 <= t <= height, x >= b + t}."""

    b: float
    height: float

    def slice(self, t: float):
        if t < -_EPS or t > self.height + _EPS:
            return None
        return (self.b + t, math.inf)


@dataclass(frozen=True)
class SemiBoundedDown(Trapezoid):
    """{(t, x): 0 <= t <= height, x <= a - t}."""

    a: float
    height: float

    def slice(self, t: float):
        if t < -_EPS or t > self.height + _EPS:
            return None
        return (-math.inf, self.a - t)


def tile_cover(K: CompactTrapezoid, delta: float, height: float | None = None,
               strict: bool = True) -> list[CompactTrapezoid]:
    """Overlapping cover of K by maximal sub-trapezoids of base width 2*delta.

    Tile centers run over [x0-L+delta, x0+L-delta] with stride delta/2, so the
    union of tiles contains K intersected with the slab [0, delta/2] (each
    point of that slab lies within delta - t >= delta/2 >= stride of a center).
    Tiles have height min(delta, K height) unless `height` caps them lower.

    With strict preconditions (default), delta must satisfy delta <= L/2,
    except for the exact single-tile case delta == L.
    """
    L = K.half_length_L
    if delta <= 0:
        raise DeltaTooLarge("delta must be positive")
    if abs(delta - L) <= _EPS:
        return [K.clipped(height if height is not None else delta)]
    if strict and delta > L / 2 + _EPS:
        raise DeltaTooLarge(f"delta={delta} > L/2={L / 2}")
    if delta > L + _EPS:
        raise DeltaTooLarge(f"delta={delta} > L={L}")
    h_tile = min(delta, K.height_t0)
    if height is not None:
        h_tile = min(h_tile, height)
    lo = K.x0 - L + delta
    hi = K.x0 + L - delta
    n = int(math.floor((hi - lo) / (delta / 2) + _EPS))
    centers = [lo + k * delta / 2 for k in range(n + 1)]
    if centers[-1] < hi - _EPS:
        centers.append(hi)
    return [CompactTrapezoid(y, delta, h_tile) for y in centers]
