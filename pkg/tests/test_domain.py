"""Causal trapezoid domains, null coordinates, and tiling covers."""

from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavemap1d.domain import (CompactTrapezoid, SemiBoundedDown, SemiBoundedUp,
                              UnboundedTrapezoid, from_null, tile_cover,
                              to_null)
from wavemap1d.errors import CausalityViolated, DeltaTooLarge, OutsideDomain


def test_null_coordinates_round_trip():
    a, b = to_null(0.25, 1.5)
    assert (a, b) == (1.75, 1.25)
    t, x = from_null(a, b)
    assert (t, x) == (0.25, 1.5)
    with pytest.raises(CausalityViolated):
        from_null(0.0, 1.0)


@given(st.floats(-10, 10), st.floats(0, 10))
def test_null_round_trip_property(x, t):
    t2, x2 = from_null(*to_null(t, x))
    assert abs(t2 - t) <= 1e-12 and abs(x2 - x) <= 1e-12


def test_compact_trapezoid_slices():
    K = CompactTrapezoid(0.0, 1.0, 0.5)
    assert K.base == (-1.0, 1.0)
    assert K.slice(0.0) == (-1.0, 1.0)
    assert K.slice(0.5) == (-0.5, 0.5)
    assert K.slice(0.6) is None
    assert K.contains(0.25, 0.75)
    assert not K.contains(0.25, 0.8)
    K2 = K.clipped(0.25)
    assert K2.height_t0 == 0.25 and K2.half_length_L == 1.0


def test_compact_trapezoid_rejects_bad_height():
    with pytest.raises(OutsideDomain):
        CompactTrapezoid(0.0, 1.0, 1.5)
    with pytest.raises(OutsideDomain):
        CompactTrapezoid(0.0, 1.0, 0.0)


def test_dependence_triangle():
    K = CompactTrapezoid(0.0, 2.0, 1.0)
    tri = K.dependence_triangle(0.5, 0.25)
    assert tri.apex == (0.5, 0.25)
    assert tri.base_interval == (-0.25, 0.75)
    with pytest.raises(OutsideDomain):
        K.dependence_triangle(0.5, 1.75)


def test_unbounded_and_semibounded():
    U = UnboundedTrapezoid(math.inf)
    assert U.contains(100.0, -1e6)
    up = SemiBoundedUp(b=0.0, height=2.0)
    assert up.contains(1.0, 1.0) and not up.contains(1.0, 0.5)
    dn = SemiBoundedDown(a=0.0, height=2.0)
    assert dn.contains(1.0, -1.0) and not dn.contains(1.0, -0.5)
    assert up.slice(3.0) is None and dn.slice(3.0) is None


def test_tile_cover_single_tile():
    K = CompactTrapezoid(0.0, 1.0, 1.0)
    tiles = tile_cover(K, 1.0)
    assert len(tiles) == 1 and tiles[0].half_length_L == 1.0


def test_tile_cover_strides_and_coverage():
    K = CompactTrapezoid(0.0, 1.0, 1.0)
    delta = 0.25
    tiles = tile_cover(K, delta)
    # centers stride delta/2 over [-L+delta, L-delta]
    centers = [T.x0 for T in tiles]
    assert centers[0] == -0.75 and centers[-1] == 0.75
    assert all(T.half_length_L == delta for T in tiles)
    assert all(T.height_t0 == delta for T in tiles)
    # every point of the slab [0, delta/2] x K is in some tile
    for i in range(201):
        x = -1.0 + 2.0 * i / 200
        t = delta / 2
        if not K.contains(t, x):
            continue
        assert any(T.contains(t, x) for T in tiles)


def test_tile_cover_delta_too_large():
    K = CompactTrapezoid(0.0, 1.0, 1.0)
    with pytest.raises(DeltaTooLarge):
        tile_cover(K, 0.75)
    with pytest.raises(DeltaTooLarge):
        tile_cover(K, -0.1)
    # non-strict allows up to L
    tiles = tile_cover(K, 0.75, strict=False)
    assert all(T.half_length_L == 0.75 for T in tiles)


def test_tile_cover_height_cap():
    K = CompactTrapezoid(0.0, 1.0, 1.0)
    tiles = tile_cover(K, 0.5, height=0.125)
    assert all(T.height_t0 == 0.125 for T in tiles)
