"""Embedded-manifold operations for the target of the wave map.

Reference target is the unit sphere S^{n-1} in R^n with closed-form
projections.  The second-fundamental-form contraction and the forcing
projection are extended off the manifold by composing with the nearest-point
projection inside a tubular neighborhood and tapering to zero with a fixed
quintic cutoff, so they are bounded, globally Lipschitz functions on R^n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DistanceExceeded


def _dot(u, v):
    return np.sum(u * v, axis=-1, keepdims=True)


class EmbeddedManifold:
    """Interface for embedded targets; all operations are pure."""

    ambient_dim: int
    kind: str
    lipschitz_bound_L: float
    sup_bound_gamma: float
    tubular_radius_eps0: float

    def nearest_point(self, q):
        raise NotImplementedError

    def distance(self, q):
        raise NotImplementedError

    def tangent_project(self, p, v):
        raise NotImplementedError

    def normal_project(self, p, v):
        return np.asarray(v, dtype=float) - self.tangent_project(p, v)

    def christoffel_form(self, p, X, Y):
        raise NotImplementedError

    def forcing_project(self, p, f_val):
        return self.tangent_project(p, f_val)

    # Smooth radial cutoff used by the off-manifold extensions: identically 1
    # inside half the tube, quintic smoothstep down to 0 at the tube boundary.
    def cutoff(self, d):
        d = np.abs(np.asarray(d, dtype=float))
        e0 = self.tubular_radius_eps0
        s = np.clip((d - e0 / 2) / (e0 / 2), 0.0, 1.0)
        return 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)

    def gamma_q_extended(self, q, trace_q):
        """Extended Gamma contraction: Gamma(q) applied to a field whose
        Q-form trace is `trace_q` (shape broadcastable against q[..., :1])."""
        raise NotImplementedError

    def forcing_project_extended(self, q, f_val):
        raise NotImplementedError


class UnitSphere(EmbeddedManifold):
    """Unit sphere S^{n-1} embedded in R^n.

    Gamma(p)(X, Y) = -(X . Y) p and P(p) f = f - (f . p) p for p on the
    sphere.  sup_bound_gamma and lipschitz_bound_L are fixed constants
    validated by dense sampling over the radius-0.1 tube (see tests).
    """

    def __init__(self, n: int):
        if n < 2:
            raise ConfigError("sphere target needs ambient dimension >= 2")
        self.ambient_dim = n
        self.kind = f"UnitSphere({n})"
        self.lipschitz_bound_L = 3.0
        self.sup_bound_gamma = 1.0
        self.tubular_radius_eps0 = 0.5

    def _norms(self, q):
        q = np.asarray(q, dtype=float)
        return q, np.sqrt(np.sum(q * q, axis=-1, keepdims=True))

    def distance(self, q):
        _, r = self._norms(q)
        return np.abs(r[..., 0] - 1.0)

    def _check_tube(self, q):
        d = self.distance(q)
        if np.any(d > self.tubular_radius_eps0 + 1e-12):
            raise DistanceExceeded(
                f"point at distance {float(np.max(d))} from sphere exceeds "
                f"eps0={self.tubular_radius_eps0}"
            )

    def nearest_point(self, q):
        q, r = self._norms(q)
        self._check_tube(q)
        return q / r

    def tangent_project(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        phat = self.nearest_point(p)
        return v - _dot(v, phat) * phat

    def christoffel_form(self, p, X, Y):
        p = np.asarray(p, dtype=float)
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return -_dot(X, Y) * p

    def gamma_q_extended(self, q, trace_q):
        q, r = self._norms(q)
        r_safe = np.maximum(r, 1e-300)
        chi = self.cutoff(r[..., 0] - 1.0)[..., None]
        return -np.asarray(trace_q) * (q / r_safe) * chi

    def forcing_project_extended(self, q, f_val):
        q, r = self._norms(q)
        f_val = np.asarray(f_val, dtype=float)
        r_safe = np.maximum(r, 1e-300)
        phat = q / r_safe
        chi = self.cutoff(r[..., 0] - 1.0)[..., None]
        return (f_val - _dot(f_val, phat) * phat) * chi


def manifold_from_config(spec: str) -> EmbeddedManifold:
    """Parse a target spec like "sphere:3"."""
    parts = spec.split(":")
    if len(parts) != 2 or parts[0] != "sphere":
        raise ConfigError(f"unknown target spec {spec!r}")
    try:
        n = int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"bad sphere dimension in {spec!r}") from exc
    return UnitSphere(n)


@dataclass
class ManifoldData:
    """Initial data: u0 a continuous piecewise-linear curve with values on
    (or near) M, v0 a piecewise-constant velocity field tangent to M."""

    u0: "Curve"
    v0: "CellField1D"


def check_compatibility(manifold: EmbeddedManifold, data: ManifoldData,
                        tol: float) -> dict:
    """Max over v0 cells of |normal part of v0 at the projected u0 midpoint|."""
    v0 = data.v0
    centers = v0.x_left + (np.arange(v0.values.shape[0]) + 0.5) * v0.h
    u_mid = data.u0(centers)
    p = manifold.nearest_point(u_mid)
    normal = manifold.normal_project(p, v0.values)
    max_defect = float(np.max(np.sqrt(np.sum(normal * normal, axis=-1)))) \
        if normal.size else 0.0
    return {"max_defect": max_defect, "ok": max_defect <= tol}


def _bump_profile(s):
    """Standard compactly supported bump exp(-1/(1-s^2)) on (-1, 1)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def smooth_approximate(manifold: EmbeddedManifold, data: ManifoldData,
                       k: int) -> ManifoldData:
    """Data-preparation pipeline: truncate outside [-k, k] (constant extension
    of u0, zero extension of v0), mollify with a normalized bump whose width
    keeps the curve inside the tube, then map back through nearest-point and
    tangent projections so compatibility holds exactly at samples."""
    from .fields import CellField1D, Curve

    u0, v0 = data.u0, data.v0
    h = u0.h
    n_nodes = u0.values.shape[0]
    xs = u0.x_left + np.arange(n_nodes) * h

    u_vals = u0.values.copy()
    u_vals[xs < -k] = u0(np.array([-float(k)]))[0]
    u_vals[xs > k] = u0(np.array([float(k)]))[0]
    v_vals = v0.values.copy()
    centers = v0.x_left + (np.arange(v_vals.shape[0]) + 0.5) * v0.h
    v_vals[(centers <= -k) | (centers >= k)] = 0.0

    # Mollifier width from the modulus of continuity of u0: shrink until the
    # sup oscillation of u0 over the width stays below eps0/3.
    eps0 = manifold.tubular_radius_eps0
    width = max(h, 1.0 / k)
    for _ in range(60):
        span = max(1, int(round(width / h)))
        osc = 0.0
        for j in range(1, span + 1):
            osc = max(osc, float(np.max(np.sum(
                np.abs(u_vals[j:] - u_vals[:-j]), axis=-1), initial=0.0)))
        if osc <= eps0 / 3:
            break
        width /= 2.0
    span = max(1, int(round(width / h)))
    kernel = _bump_profile(np.linspace(-1, 1, 2 * span + 1))
    kernel = kernel / np.sum(kernel)

    def conv(arr):
        padded = np.concatenate([np.repeat(arr[:1], span, axis=0), arr,
                                 np.repeat(arr[-1:], span, axis=0)], axis=0)
        out = np.zeros_like(arr)
        for i, w in enumerate(kernel):
            out += w * padded[i:i + arr.shape[0]]
        return out

    u_s = conv(u_vals)
    v_s = conv(v_vals)
    u_proj = manifold.nearest_point(u_s)
    mid = 0.5 * (u_proj[:-1] + u_proj[1:])
    p_mid = manifold.nearest_point(mid)
    v_proj = manifold.tangent_project(p_mid, v_s)
    return ManifoldData(u0=Curve(u0.x_left, h, u_proj),
                        v0=CellField1D(u0.x_left, h, v_proj))
