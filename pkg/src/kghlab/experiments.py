"""Experiment drivers behind the command line.

Each driver takes a validated :class:`~kghlab.config.RunConfig` and returns
``(summary, assertions, trajectory_or_None)``; :func:`run` writes the
artifacts and maps the outcome to an exit status.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from . import initial_data
from .besov import decay_fit, strichartz_exponent
from .config import ConfigError, RunConfig, render_config
from .diagnostics import CutoffSpec, csv_header, csv_row, virial_identity_experiment
from .integrator import EvolveConfig, NumericalInstability, evolve, perturbation_sweep
from .nonlinearity import HartreeParams, energy, momentum
from .profiles import decoupling_sweep, write_sweep_csv
from .propagators import to_vector
from .scattering import small_data_experiment
from .snapshot import save_field
from .spectral import Field, make_grid

EXIT_PASS, EXIT_ASSERTION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class Assertion:
    name: str
    passed: bool
    value: object
    expected: str


def _grid(cfg: RunConfig):
    g = cfg.grid
    return make_grid(g.dim, g.n, g.length, max_points=g.max_points)


def _params(cfg: RunConfig) -> HartreeParams:
    return HartreeParams(cfg.hartree.gamma, cfg.hartree.enabled)


def _cutoff(cfg: RunConfig, grid) -> CutoffSpec:
    c = cfg.cutoff
    radius = c.radius if c.radius > 0 else grid.length / 8
    center = initial_data._vec(c.center or None, grid.dim)
    return CutoffSpec(radius, tuple(center))


def initial_state(cfg: RunConfig, grid):
    d = cfg.data
    fam = d.family
    kw: dict = {}
    if fam == "gaussian-bump":
        kw = dict(amplitude=d.amplitude, sigma=d.sigma, center=d.center or None, boost=d.boost or None)
    elif fam == "plane-wave":
        kw = dict(mode=d.mode or [1.0], amplitude=d.amplitude, phase=d.phase)
    elif fam == "two-bump":
        kw = dict(separation=d.separation, amplitude=d.amplitude, sigma=d.sigma, axis=d.axis)
    elif fam == "random-smooth":
        kw = dict(amplitude=d.amplitude, sigma=d.sigma, envelope=d.envelope or None)
    elif fam == "file":
        kw = dict(u_path=d.u_path, ut_path=d.ut_path or None)
    return initial_data.build(grid, fam, seed=cfg.experiment.seed, **kw)


def _evolve_config(cfg: RunConfig, grid, **over) -> EvolveConfig:
    e = cfg.evolve
    state_times = list(e.snapshot_times) if e.snapshot_times else [0.0]
    kw = dict(dt=e.dt, t_end=e.t_end, params=_params(cfg), record_every=e.record_every, scheme=e.scheme,
              max_dt=e.max_dt, energy_guard=e.energy_guard, record_level=e.record_level,
              cutoff=_cutoff(cfg, grid), state_times=state_times)
    kw.update(over)
    return EvolveConfig(**kw)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b else abs(a - b)


# --- drivers ------------------------------------------------------------------

def drive_evolve(cfg: RunConfig):
    grid = _grid(cfg)
    s0 = initial_state(cfg, grid)
    ec = _evolve_config(cfg, grid)
    traj = evolve(s0, ec)
    e = traj.series("energy")
    p = np.array([r.momentum for r in traj.records])
    drift = max(_rel(v, e[0]) for v in e) if e[0] else float(np.max(np.abs(e)))
    pscale = max(float(np.max(np.abs(p[0]))), 1e-300)
    pdrift = float(np.max(np.abs(p - p[0]))) / pscale if np.any(p[0]) else float(np.max(np.abs(p)))
    radius = ec.cutoff.radius
    bound = cfg.experiment.bound_constant * radius * e[0]
    checks = [Assertion("energy_drift", drift <= cfg.experiment.energy_tol, drift, f"<= {cfg.experiment.energy_tol}")]
    if cfg.evolve.record_level == "full":
        a = traj.series("action_A")
        amax = float(np.max(np.abs(a)))
        checks.append(Assertion("action_bound", amax <= bound + 1e-14, amax, f"<= {bound}"))
    summary = {"steps": ec.n_steps, "energy0": float(e[0]), "energy_drift": drift, "momentum_drift": pdrift}
    return summary, checks, traj


def drive_virial(cfg: RunConfig):
    grid = _grid(cfg)
    s0 = initial_state(cfg, grid)
    x = cfg.experiment
    cut = _cutoff(cfg, grid)
    rep = virial_identity_experiment(s0, cut, _params(cfg), x.dts, x.t_star, cfg.evolve.scheme)
    amax = max(abs(v) for v in rep.A_series)
    bound = x.bound_constant * cut.radius * rep.energy0
    checks = [
        Assertion("virial_slope", abs(rep.slope_virial - 2.0) <= x.slope_tol, rep.slope_virial, f"2 +- {x.slope_tol}"),
        Assertion("equirepartition_slope", abs(rep.slope_equirepartition - 2.0) <= x.slope_tol,
                  rep.slope_equirepartition, f"2 +- {x.slope_tol}"),
        Assertion("action_bound", amax <= bound, amax, f"<= {bound}"),
    ]
    summary = {
        "dts": rep.dts,
        "t_star": rep.t_star,
        "virial_residuals": rep.column("virial").tolist(),
        "virial_full_residuals": rep.column("virial_full").tolist(),
        "equirepartition_residuals": rep.column("equirepartition").tolist(),
        "slope": rep.slope_virial,
        "slope_raw": rep.slope_virial_raw,
        "equirepartition_slope": rep.slope_equirepartition,
        "equirepartition_slope_raw": rep.slope_equirepartition_raw,
    }
    ec = _evolve_config(cfg, grid, dt=min(rep.dts), t_end=x.t_star)
    return summary, checks, evolve(s0, ec)


def drive_decay(cfg: RunConfig):
    grid = _grid(cfg)
    s0 = initial_state(cfg, grid)
    fit = decay_fit(to_vector(s0), cfg.experiment.times)
    target = -grid.dim / 2
    tol = cfg.experiment.decay_tol
    checks = [Assertion("decay_slope", abs(fit.slope - target) <= tol, fit.slope, f"{target} +- {tol}")]
    summary = {"slope": fit.slope, "target": target, "times": fit.times.tolist(), "linf": fit.linf.tolist()}
    return summary, checks, None


def drive_small_data(cfg: RunConfig):
    grid = _grid(cfg)
    s0 = initial_state(cfg, grid)
    x = cfg.experiment
    ec = _evolve_config(cfg, grid, record_level="none")
    rep = small_data_experiment(x.amplitudes, s0, ec, x.sample_times, x.defect_tol)
    rungs = sorted((r for r in rep.rungs if r.amplitude > 0), key=lambda r: r.amplitude)
    checks = [Assertion("gap_slope", abs(rep.gap_slope - 3.0) <= 0.3, rep.gap_slope, "3 +- 0.3")]
    for r in rungs[:2]:
        dec = all(b < a for a, b in zip(r.scatter.defects, r.scatter.defects[1:]))
        checks.append(Assertion(f"defects_decreasing[{r.amplitude:g}]", dec, r.scatter.defects, "strictly decreasing"))
    if rungs:
        last = rungs[0].scatter.defects[-1]
        checks.append(Assertion("final_defect", last < x.defect_tol, last, f"< {x.defect_tol}"))
    summary = {
        "gap_slope": rep.gap_slope,
        "rungs": [
            {"amplitude": r.amplitude, "w_norm": r.w_norm, "w_norm_free": r.w_norm_free, "w_gap": r.w_gap,
             "w_ratio": r.w_ratio, "defects": r.scatter.defects, "converged": r.scatter.converged}
            for r in rep.rungs
        ],
    }
    small = rungs[0].amplitude if rungs else 0.0
    traj = evolve(s0.scaled(small), _evolve_config(cfg, grid, record_level="light"))
    return summary, checks, traj


def drive_profiles(cfg: RunConfig, out_dir: str):
    grid = _grid(cfg)
    d = cfg.data
    s0 = initial_data.gaussian_bump(grid, d.amplitude, d.sigma)
    rows = decoupling_sweep(to_vector(s0), cfg.experiment.separations, _params(cfg), axis=d.axis)
    write_sweep_csv(os.path.join(out_dir, "sweep.csv"), rows)
    res = [r.residual for r in rows]
    x = cfg.experiment
    checks = [
        Assertion("residual_decreasing", all(b < a for a, b in zip(res, res[1:])), res, "strictly decreasing"),
        Assertion("final_relative_residual", rows[-1].relative_residual <= x.decoupling_tol,
                  rows[-1].relative_residual, f"<= {x.decoupling_tol}"),
        Assertion("final_inner", rows[-1].inner < x.inner_tol, rows[-1].inner, f"< {x.inner_tol}"),
    ]
    summary = {"rows": [r.__dict__ for r in rows]}
    return summary, checks, None


def drive_perturbation(cfg: RunConfig):
    grid = _grid(cfg)
    s0 = initial_state(cfg, grid)
    direction = initial_data.random_smooth(grid, cfg.experiment.seed, amplitude=1.0, sigma=cfg.data.sigma)
    ec = _evolve_config(cfg, grid, record_level="none")
    reports, ratios = perturbation_sweep(s0, direction, cfg.experiment.eps, ec)
    lo, hi = cfg.experiment.ratio_range
    checks = [Assertion("w_ratio", all(lo <= r <= hi for r in ratios), ratios, f"in [{lo}, {hi}]")]
    summary = {
        "eps": [r.eps for r in reports],
        "w_diff": [r.w_diff for r in reports],
        "energy_diff_sup": [r.energy_diff_sup for r in reports],
        "ratios": ratios,
    }
    return summary, checks, evolve(s0, _evolve_config(cfg, grid, record_level="light"))


# --- artifacts ----------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v))


def write_timeseries(path: str, grid, traj) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(grid.dim))
        if traj is not None:
            for rec in traj.records:
                w.writerow([_fmt(v) for v in csv_row(rec)])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_snapshots(out_dir: str, traj, times) -> list[str]:
    written = []
    for t in times:
        try:
            s = traj.state_at(t)
        except KeyError:
            continue
        for name, arr in (("u", s.u), ("ut", s.ut)):
            path = os.path.join(out_dir, f"snapshot_{name}_t{t:g}.kgh")
            save_field(path, Field(s.grid, "physical", arr))
            written.append(os.path.basename(path))
    return written


def run(cfg: RunConfig, out_dir: str | None = None, quiet: bool = False) -> int:
    """Run the selected experiment and write ``timeseries.csv`` and ``report.json``."""
    out_dir = out_dir or cfg.experiment.output
    os.makedirs(out_dir, exist_ok=True)
    grid = _grid(cfg)
    name = cfg.experiment.name
    report = {
        "experiment": name,
        "seed": cfg.experiment.seed,
        "rng_algorithm": initial_data.RNG_ALGORITHM,
        "config": render_config(cfg),
        "csv_columns": csv_header(grid.dim),
    }
    traj = None
    status = EXIT_PASS
    try:
        if name == "evolve":
            summary, checks, traj = drive_evolve(cfg)
        elif name == "virial-identity":
            summary, checks, traj = drive_virial(cfg)
        elif name == "decay-fit":
            summary, checks, traj = drive_decay(cfg)
        elif name == "small-data":
            summary, checks, traj = drive_small_data(cfg)
        elif name == "profiles-sweep":
            summary, checks, traj = drive_profiles(cfg, out_dir)
        elif name == "perturbation":
            summary, checks, traj = drive_perturbation(cfg)
        else:
            raise ConfigError(f"experiment.name: unknown experiment {name!r}")
        report["summary"] = summary
        report["assertions"] = [a.__dict__ for a in checks]
        report["passed"] = all(a.passed for a in checks)
        if not report["passed"]:
            status = EXIT_ASSERTION
    except NumericalInstability as exc:
        report["error"] = str(exc)
        report["passed"] = False
        status = EXIT_NUMERIC
    except (ValueError, RuntimeError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        report["passed"] = False
        status = EXIT_ASSERTION
    write_timeseries(os.path.join(out_dir, "timeseries.csv"), grid, traj)
    if traj is not None and cfg.evolve.snapshot_times:
        report["snapshots"] = _write_snapshots(out_dir, traj, cfg.evolve.snapshot_times)
    report["exit_status"] = status
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not quiet:
        print(f"experiment {name}: {'PASS' if status == EXIT_PASS else 'FAIL'} (exit {status})")
        for a in report.get("assertions", []):
            print(f"  {'PASS' if a['passed'] else 'FAIL'} {a['name']}: {a['value']} (expected {a['expected']})")
        if "error" in report:
            print(f"  error: {report['error']}")
    return status
