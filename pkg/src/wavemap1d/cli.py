"""Batch front end: TOML configuration, experiment orchestration (solve,
verify-estimates, scatter, convergence study), deterministic artifacts.

Determinism contract: every artifact is a pure function of (config, seed);
randomized suites use a counter-based generator keyed by (seed, trial), so
the trial set is identical at any thread count and results are merged by
trial index.
"""

from __future__ import annotations

import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import click
import numpy as np
import tomli

from .domain import CompactTrapezoid
from .errors import CompatibilityError, ConfigError, WaveMapError
from .estimates import (energy_flux_check, pointwise_characteristic_bound,
                        q_l1_bound_check, spacetime_null_energy_check,
                        transport_bound_check, zhou_bilinear_check)
from .fields import (CellField1D, Curve, NullLattice, export_csv, format_float,
                     make_wavefields)
from .geometry import ManifoldData, check_compatibility, manifold_from_config
from . import scattering as sc
from . import solver as sv

log = logging.getLogger("wavemap")


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    raw: dict
    path: str

    def section(self, name: str, required: bool = True) -> dict:
        s = self.raw.get(name)
        if s is None:
            if required:
                raise ConfigError(f"missing [{name}] section in {self.path}")
            return {}
        if not isinstance(s, dict):
            raise ConfigError(f"[{name}] must be a table")
        return s

    def get(self, section: str, key: str, default=None, required=False):
        s = self.section(section, required=False)
        if key in s:
            return s[key]
        if required:
            raise ConfigError(f"missing {section}.{key} in {self.path}")
        return default


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML in {path}: {exc}") from exc
    return RunConfig(raw=raw, path=path)


def _lattice_from_config(cfg: RunConfig) -> tuple[CompactTrapezoid, float]:
    dom = cfg.section("domain")
    h = float(cfg.get("lattice", "h", required=True))
    if h <= 0:
        raise ConfigError("lattice.h must be positive")
    x0 = float(dom.get("x0", 0.0))
    L = float(dom.get("half_length", 1.0))
    t0 = float(dom.get("height", L))
    for name, val in (("half_length", 2 * L), ("height", 2 * t0)):
        r = val / h
        if abs(r - round(r)) > 1e-9:
            raise ConfigError(f"domain.{name} is not resolved by lattice.h")
    if t0 > L + 1e-12:
        raise ConfigError("domain.height exceeds half_length (not causal)")
    return CompactTrapezoid(x0, L, t0), h


# ---------------------------------------------------------------------------
# Builtin data / forcing generators
# ---------------------------------------------------------------------------

def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def build_data(cfg: RunConfig, lat: NullLattice, n: int) -> ManifoldData:
    """Builtin generators: constant, geodesic(omega), traveling_wave
    (great-circle null data), file (CSV of node values and cell values)."""
    spec = cfg.section("data")
    kind = spec.get("kind", "constant")
    N = lat.n_cells
    h = lat.h
    nodes = lat.x_left + np.arange(N + 1) * h
    if kind == "constant":
        u0 = np.zeros((N + 1, n))
        u0[:, 0] = 1.0
        return ManifoldData(Curve(lat.x_left, h, u0),
                            CellField1D(lat.x_left, h, np.zeros((N, n))))
    if kind == "geodesic":
        omega = float(spec.get("omega", 1.0))
        u0 = np.zeros((N + 1, n))
        u0[:, 0] = 1.0
        v0 = np.zeros((N, n))
        v0[:, 1] = omega
        return ManifoldData(Curve(lat.x_left, h, u0),
                            CellField1D(lat.x_left, h, v0))
    if kind == "traveling_wave":
        amp = float(spec.get("amplitude", 0.5))
        ctr = float(spec.get("center", 0.0))
        wid = float(spec.get("width", 1.0))
        theta = amp * _bump((nodes - ctr) / wid)
        u0 = np.zeros((N + 1, n))
        u0[:, 0] = np.cos(theta)
        u0[:, 1] = np.sin(theta)
        v0 = -np.diff(u0, axis=0) / h          # null data: v0 = -Du0
        return ManifoldData(Curve(lat.x_left, h, u0),
                            CellField1D(lat.x_left, h, v0))
    if kind == "file":
        path = spec.get("path")
        if not path:
            raise ConfigError("data.kind = 'file' needs data.path")
        tab = np.loadtxt(path, delimiter=",", ndmin=2)
        if tab.shape[0] != 2 * N + 1 or tab.shape[1] != n:
            raise ConfigError(
                f"data file must hold {2 * N + 1} rows ({N + 1} u0 nodes then "
                f"{N} v0 cells) x {n} columns, got {tab.shape}")
        return ManifoldData(Curve(lat.x_left, h, tab[:N + 1]),
                            CellField1D(lat.x_left, h, tab[N + 1:]))
    raise ConfigError(f"unknown data.kind {kind!r}")


def build_forcing(cfg: RunConfig, lat: NullLattice, n: int,
                  data: ManifoldData, manifold) -> np.ndarray:
    spec = cfg.section("forcing", required=False)
    kind = spec.get("kind", "none")
    F = np.zeros((lat.q + 1, lat.n_cells, n))
    if kind == "none":
        return F
    if kind == "pulse":
        amp = float(spec.get("amplitude", 0.1))
        tc = float(spec.get("t_center", lat.t0 / 2))
        tw = float(spec.get("t_width", lat.t0 / 4))
        xc = float(spec.get("x_center", 0.0))
        xw = float(spec.get("x_width", 0.5))
        comp = int(spec.get("component", n))
        if not 1 <= comp <= n:
            raise ConfigError("forcing.component out of range")
        for r in range(lat.q + 1):
            c = lat.cell_count(r)
            t = lat.cell_center_t(r)
            xs = lat.cell_centers_x(r)
            F[r, :c, comp - 1] = amp * _bump((t - tc) / tw) * \
                _bump((xs - xc) / xw)
        # project to the tangent space along u0 (compatible tangent forcing)
        for r in range(lat.q + 1):
            c = lat.cell_count(r)
            p = manifold.nearest_point(data.u0(lat.cell_centers_x(r)))
            F[r, :c] = manifold.tangent_project(p, F[r, :c])
        return np.where(lat.cell_mask()[:, :, None], F, 0.0)
    if kind == "file":
        path = spec.get("path")
        if not path:
            raise ConfigError("forcing.kind = 'file' needs forcing.path")
        flat = np.loadtxt(path, delimiter=",", ndmin=2)
        want = (lat.q + 1) * lat.n_cells
        if flat.shape != (want, n):
            raise ConfigError(f"forcing file must be {want} x {n}")
        F = flat.reshape(lat.q + 1, lat.n_cells, n)
        return np.where(lat.cell_mask()[:, :, None], F, 0.0)
    raise ConfigError(f"unknown forcing.kind {kind!r}")


# ---------------------------------------------------------------------------
# Randomized instances (shared with the test suite)
# ---------------------------------------------------------------------------

def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based generator: reproducible per (seed, trial), independent
    of execution order and thread count."""
    key = ((int(seed) & 0xFFFFFFFF) << 32) | (int(trial) & 0xFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


def random_linear_instance(seed: int, trial: int, h: float = 1.0 / 16.0,
                           L: float = 1.0, height: float = 0.5, n: int = 3):
    """Random lattice data for the inequality auditors: piecewise-linear u0,
    cell-constant v0 and forcing; the wave-fields bundle carries the forcing
    as its entire inhomogeneity (linear forced wave), the class on which
    every audited inequality is lattice-exact."""
    rng = trial_rng(seed, trial)
    K = CompactTrapezoid(0.0, L, height)
    lat = NullLattice.for_trapezoid(K, h)
    N, q = lat.n_cells, lat.q
    u0 = Curve(lat.x_left, h, 0.4 * rng.uniform(-1, 1, (N + 1, n)))
    v0 = CellField1D(lat.x_left, h, rng.uniform(-1, 1, (N, n)))
    F = rng.uniform(-1, 1, (q + 1, N, n))
    F = np.where(lat.cell_mask()[:, :, None], F, 0.0)
    wf = make_wavefields(u0, v0, F, lat, f_cells=F)
    return K, lat, wf, rng


def verify_trial(seed: int, trial: int) -> list[dict]:
    """One randomized auditor trial: returns one report row per checker."""
    K, lat, wf, rng = random_linear_instance(seed, trial)
    h = lat.h
    rows = []

    def add(name, rep):
        rows.append({"trial": trial, "check": name, "lhs": rep.lhs,
                     "rhs": rep.rhs, "tol": rep.tol, "ok": rep.ok})

    gp = wf.g_plus
    gm = wf.g_minus
    F = wf.h_cells
    t_mid = lat.t0 / 2.0
    add("transport_plus", transport_bound_check(gp, F, K, h, t0=t_mid,
                                                direction="plus"))
    add("transport_minus", transport_bound_check(gm, F, K, h, t0=t_mid,
                                                 direction="minus"))
    add("zhou_bilinear", zhou_bilinear_check(gp, gm, F, F, K, h))
    # dependence triangle apex on the lattice, at least 2 rows tall
    k = 2 * int(rng.integers(1, lat.q // 2 + 1))
    m0 = int(rng.integers(0, lat.n_cells - k + 1))
    apex = (k * h / 2.0, lat.x_left + m0 * h + k * h / 2.0)
    add("q_l1", q_l1_bound_check(wf, apex))
    for i, rep in enumerate(energy_flux_check(wf, t_mid)):
        add(f"energy_flux_{('plus', 'minus')[i]}", rep)
    r_site = int(rng.integers(0, lat.q + 1))
    m_site = int(rng.integers(0, lat.cell_count(r_site)))
    add("pointwise", pointwise_characteristic_bound(wf, (r_site, m_site)))
    add("spacetime_null_energy", spacetime_null_energy_check(wf))
    return rows


# ---------------------------------------------------------------------------
# Artifact helpers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def run_solve(cfg: RunConfig, out_dir: str, threads: int = 1) -> dict:
    K, h = _lattice_from_config(cfg)
    manifold = manifold_from_config(cfg.get("target", "kind", "sphere:3"))
    n = manifold.ambient_dim
    lat = NullLattice.for_trapezoid(K, h)
    data = build_data(cfg, lat, n)
    F = build_forcing(cfg, lat, n, data, manifold)
    tol_compat = float(cfg.get("tolerances", "tol_compat", 1e-8))
    compat = check_compatibility(manifold, data, tol_compat)
    if not compat["ok"]:
        raise CompatibilityError(
            f"v0 normal defect {compat['max_defect']} exceeds {tol_compat}")
    budget = None
    bcfg = cfg.section("budget", required=False)
    if bcfg:
        budget = sv.ContractionBudget(
            eta=float(bcfg["eta"]), R=float(bcfg["R"]),
            gamma=manifold.sup_bound_gamma, L_lip=manifold.lipschitz_bound_L)
    sol = sv.solve_global(data, F, K, manifold, h, budget=budget)
    # estimate reports on the first solved segment
    wf0 = sol.segments[0][1]
    flux_p, flux_m = energy_flux_check(wf0, wf0.lattice.t0)
    st = spacetime_null_energy_check(wf0)
    diag = dict(sol.diagnostics)
    diag["estimates"] = {
        "energy_flux_plus": flux_p.as_dict(),
        "energy_flux_minus": flux_m.as_dict(),
        "spacetime_null_energy": st.as_dict(),
    }
    diag["manifold_defect"] = sol.manifold_defect()
    diag["compatibility_defect"] = compat["max_defect"]
    os.makedirs(out_dir, exist_ok=True)
    # assemble a full-domain bundle for CSV export
    full = make_wavefields(data.u0, data.v0, np.zeros_like(F),
                           sol.lattice, f_cells=F)
    full.u_nodes[...] = sol.u_nodes
    export_csv(full, os.path.join(out_dir, "solution.csv"))
    write_json(os.path.join(out_dir, "diagnostics.json"), diag)
    log.info("solve: path=%s iterations=%s", diag["path"], diag["iterations"])
    return diag


def _oracle_error(cfg: RunConfig, sol, lat: NullLattice) -> float | None:
    """Sup node error against a closed-form oracle, if one exists."""
    spec = cfg.section("data")
    kind = spec.get("kind", "constant")
    if kind == "geodesic":
        omega = float(spec.get("omega", 1.0))
        err = 0.0
        for k in range(lat.q + 1):
            t = lat.row_t(k)
            c = lat.node_count(k)
            exact = np.zeros(sol.u_nodes.shape[2])
            exact[0] = math.cos(omega * t)
            exact[1] = math.sin(omega * t)
            err = max(err, float(np.max(np.abs(sol.u_nodes[k, :c] - exact))))
        return err
    if kind == "constant":
        u0 = np.zeros(sol.u_nodes.shape[2])
        u0[0] = 1.0
        err = 0.0
        for k in range(lat.q + 1):
            c = lat.node_count(k)
            err = max(err, float(np.max(np.abs(sol.u_nodes[k, :c] - u0))))
        return err
    return None


def run_convergence_study(cfg: RunConfig, out_dir: str, levels: int = 3) -> dict:
    if levels < 3:
        raise ConfigError("convergence study needs at least 3 levels")
    K, h0 = _lattice_from_config(cfg)
    manifold = manifold_from_config(cfg.get("target", "kind", "sphere:3"))
    n = manifold.ambient_dim
    sols = []
    hs = []
    for lvl in range(levels):
        h = h0 / (2 ** lvl)
        lat = NullLattice.for_trapezoid(K, h)
        data = build_data(cfg, lat, n)
        F = build_forcing(cfg, lat, n, data, manifold)
        sols.append(sv.solve_global(data, F, K, manifold, h))
        hs.append(h)
    errs = []
    for lvl, sol in enumerate(sols):
        lat = sol.lattice
        e = _oracle_error(cfg, sol, lat)
        if e is None:
            # compare against the finest level on shared nodes
            fine = sols[-1]
            ratio = 2 ** (levels - 1 - lvl)
            e = 0.0
            for k in range(lat.q + 1):
                c = lat.node_count(k)
                e = max(e, float(np.max(np.abs(
                    sol.u_nodes[k, :c]
                    - fine.u_nodes[ratio * k, :ratio * (c - 1) + 1:ratio]))))
            if lvl == levels - 1:
                e = 0.0
        errs.append(e)
    orders = []
    for i in range(len(errs) - 1):
        if errs[i] > 0 and errs[i + 1] > 0:
            orders.append(math.log2(errs[i] / errs[i + 1]))
        else:
            orders.append(float("inf"))
    os.makedirs(out_dir, exist_ok=True)
    rows = [[hs[i], errs[i], orders[i] if i < len(orders) else float("nan")]
            for i in range(levels)]
    write_csv(os.path.join(out_dir, "convergence.csv"),
              ["h", "sup_error", "order"], rows)
    return {"h": hs, "errors": errs, "orders": orders}


def run_verify(cfg: RunConfig, out_dir: str, seed: int, threads: int = 1,
               n_trials: int = 200) -> dict:
    n_trials = int(cfg.get("verify", "trials", n_trials))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_trial = list(pool.map(lambda t: verify_trial(seed, t),
                                      range(n_trials)))
    else:
        per_trial = [verify_trial(seed, t) for t in range(n_trials)]
    rows = [r for trial_rows in per_trial for r in trial_rows]
    os.makedirs(out_dir, exist_ok=True)
    write_csv(os.path.join(out_dir, "verify.csv"),
              ["trial", "check", "lhs", "rhs", "tol", "ok"],
              [[r["trial"], r["check"], r["lhs"], r["rhs"], r["tol"], r["ok"]]
               for r in rows])
    n_fail = sum(1 for r in rows if not r["ok"])
    summary = {"trials": n_trials, "checks": len(rows), "failures": n_fail,
               "max_violation": max((r["lhs"] - r["rhs"] for r in rows),
                                    default=0.0)}
    write_json(os.path.join(out_dir, "verify_summary.json"), summary)
    return summary


def run_scatter(cfg: RunConfig, out_dir: str) -> dict:
    h = float(cfg.get("lattice", "h", required=True))
    manifold = manifold_from_config(cfg.get("target", "kind", "sphere:3"))
    n = manifold.ambient_dim
    scfg = cfg.section("scatter", required=False)
    height = float(scfg.get("height", 3.0))
    support_S = float(scfg.get("support", 1.0))
    # data on a wide base so its support certificate holds
    base_L = max(2.0 * support_S, 2.0)
    lat0 = NullLattice.for_trapezoid(
        CompactTrapezoid(0.0, base_L, min(base_L, 1.0)), h)
    data = build_data(cfg, lat0, n)
    sol = sv.solve_unbounded(
        data, lambda lat: np.zeros((lat.q + 1, lat.n_cells, n)),
        height=height, manifold=manifold, spacing_h=h)
    sdata, comp, sol_c = sc.scatter_m_valued(data, None, None, cutoff=height,
                                             manifold=manifold, spacing_h=h)
    times = [t for t in (support_S + 0.5 + i * 0.25
                         for i in range(int((height - support_S - 0.5) / 0.25) + 1))
             if t <= height + 1e-12]
    series = []
    for t in times:
        d = sc.scattering_defect(sol, sdata, t)
        series.append([t, d["sup_defect"], d["l1_ut_defect"],
                       d["l1_ux_defect"]])
    cone = sc.support_cone_check(sol, support_S, 5 * h)
    os.makedirs(out_dir, exist_ok=True)
    write_csv(os.path.join(out_dir, "defect_series.csv"),
              ["t", "sup_defect", "l1_ut_defect", "l1_ux_defect"], series)
    Xs = sdata.phi.nodes_x()
    rows = []
    for j, X in enumerate(Xs):
        rows.append([X] + list(sdata.phi.values[j]) + list(sdata.psi.values[j]))
    write_csv(os.path.join(out_dir, "scattering_data.csv"),
              ["X"] + [f"phi_{i+1}" for i in range(n)]
              + [f"psi_{i+1}" for i in range(n)], rows)
    payload = {
        "final_defect": dict(zip(("sup", "l1_ut", "l1_ux"), series[-1][1:])),
        "cone_checks": [r.as_dict() for r in cone],
        "compactified_path": sol_c.diagnostics["path"],
        "data_l11": comp.data_l11(),
    }
    write_json(os.path.join(out_dir, "scatter_summary.json"), payload)
    return payload


# ---------------------------------------------------------------------------
# Click wiring
# ---------------------------------------------------------------------------

def _common(f):
    f = click.option("--config", "config_path", required=True,
                     type=click.Path(), help="TOML run configuration")(f)
    f = click.option("--out", "out_dir", default="out",
                     type=click.Path(), help="artifact directory")(f)
    f = click.option("--threads", default=1, type=int)(f)
    f = click.option("--seed", default=0, type=int)(f)
    return f


@click.group()
def main():
    """Characteristic-lattice wave map solver and estimate auditor."""
    level = os.environ.get("WAVEMAP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        stream=sys.stderr)


def _run(op, *args, **kwargs):
    try:
        op(*args, **kwargs)
    except WaveMapError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)


@main.command()
@_common
def solve(config_path, out_dir, threads, seed):
    """Solve one configured instance and emit solution + diagnostics."""
    _run(lambda: run_solve(load_config(config_path), out_dir, threads))


@main.command("verify-estimates")
@_common
def verify_estimates(config_path, out_dir, threads, seed):
    """Audit the a-priori inequalities on randomized lattice instances."""
    _run(lambda: run_verify(load_config(config_path), out_dir, seed, threads))


@main.command()
@_common
def scatter(config_path, out_dir, threads, seed):
    """Scattering pipeline: unbounded solve, compactified data, defects."""
    _run(lambda: run_scatter(load_config(config_path), out_dir))


@main.command()
@_common
@click.option("--levels", default=3, type=int)
def converge(config_path, out_dir, threads, seed, levels):
    """Convergence study across dyadic lattice refinements."""
    _run(lambda: run_convergence_study(load_config(config_path), out_dir,
                                       levels))


if __name__ == "__main__":
    main()
