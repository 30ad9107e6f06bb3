"""Command-line front end: ``mhdsim --config run.json``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import spectral
from .config import MODES, RunConfig, load_config, parse_config
from .diagnostics import energy_cal_Es, energy_Es, limit_residuals, make_record, stability_lambda
from .dynamics import TimeStepConfig, cfl_dt, freeze_coefficients, linear_rk4_step, rk4_step
from .errors import (
    CFLViolation,
    CompatibilityError,
    DegenerateMap,
    EllipticDivergence,
    GapViolation,
    IncompatibleData,
    MembershipViolation,
    NoContraction,
    ParseError,
    StabilityError,
    ValidationError,
)
from .io import JsonlWriter, write_snapshot
from .iteration import picard_solve
from .scenarios import build_scenario
from .state import recover

__all__ = ["EXIT_CODES", "run", "run_direct", "main"]

EXIT_CODES = {
    "ok": 0,
    "config": 2,
    "stability": 3,
    "gap": 4,
    "no_contraction": 5,
    "solver": 6,
    "compatibility": 7,
    "membership": 8,
}

_ERROR_STATUS = (
    (ParseError, "config"),
    (ValidationError, "config"),
    (StabilityError, "stability"),
    (GapViolation, "gap"),
    (NoContraction, "no_contraction"),
    (MembershipViolation, "membership"),
    (CompatibilityError, "compatibility"),
    (IncompatibleData, "compatibility"),
    (EllipticDivergence, "solver"),
    (DegenerateMap, "solver"),
    (CFLViolation, "solver"),
)


def _status_of(exc: BaseException) -> str | None:
    for cls, status in _ERROR_STATUS:
        if isinstance(exc, cls):
            return status
    return None


def _same(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-14 * max(1.0, abs(a))


def run_direct(cfg: RunConfig, out: Path, n=None, m=None, dt=None, t_end=None, diag_name="diagnostics.jsonl") -> dict:
    """Integrate the full system with RK4 and stream one record per step."""
    sc = build_scenario(cfg.scenario_config(), cfg.model_config(n, m))
    model, state = sc.model, sc.state
    dt_fixed = dt if dt is not None else cfg.dt
    t_end = cfg.t_end if t_end is None else t_end
    tscfg = TimeStepConfig(cfg.cfl, cfg.dt_max, dt_fixed)
    rec = recover(state, model)
    hist, steps_dt = [rec], []
    summary = {"steps": 0, "lambda_min": math.inf, "max_f_mean_drift": 0.0, "max_theta_mean": 0.0}
    keys = ("hN_residual", "hhatN_residual", "pressure_balance_residual", "kinematic_residual", "w_norm", "b_norm")
    for k in keys:
        summary["max_" + k] = None
    records = []

    def emit(step, rec, limit):
        r = make_record(step, rec, model.f_mean0, model.config.s, limit)
        d = r.as_dict()
        writer.write(d)
        records.append(d)
        summary["lambda_min"] = min(summary["lambda_min"], r.lambda_min)
        summary["max_f_mean_drift"] = max(summary["max_f_mean_drift"], r.mean_f_drift)
        summary["max_theta_mean"] = max(summary["max_theta_mean"], r.mean_theta)
        for k in keys:
            v = d[k]
            if v is not None:
                prev = summary["max_" + k]
                summary["max_" + k] = v if prev is None else max(prev, v)

    meta = {"N": model.n, "M": model.m, "scenario": cfg.scenario}
    with JsonlWriter(out / diag_name) as writer:
        emit(0, rec, None)
        step = 0
        while state.t < t_end - 1e-12 and (cfg.max_steps is None or step < cfg.max_steps):
            h = dt_fixed if dt_fixed is not None else cfl_dt(rec, tscfg)
            h = min(h, t_end - state.t)
            state, _ = rk4_step(state, h, model, rec, tscfg)
            step += 1
            rec = recover(state, model)
            hist = (hist + [rec])[-3:]
            steps_dt = (steps_dt + [h])[-2:]
            limit = None
            if cfg.residuals and len(hist) == 3 and _same(steps_dt[0], steps_dt[1]):
                limit = limit_residuals(hist, steps_dt[0], index=2)
            emit(step, rec, limit)
            if cfg.snapshot_every and step % cfg.snapshot_every == 0:
                write_snapshot(out / f"snapshot_{step:06d}.bin", state, meta)
    write_snapshot(out / "final.bin", state, meta)
    summary.update(steps=step, t_final=state.t)
    summary["state"] = state
    summary["records"] = records
    return summary


def _run_linear(cfg: RunConfig, out: Path) -> dict:
    """Frozen-coefficient interface evolution with energy monitoring."""
    sc = build_scenario(cfg.scenario_config(), cfg.model_config())
    model = sc.model
    rec = recover(sc.state, model)
    frozen = freeze_coefficients(rec)
    _, lam = stability_lambda(frozen.h, frozen.h_hat)
    fbar = sc.state.f - spectral.mean(sc.state.f)
    theta = sc.state.theta.copy()
    # hold g fixed at zero so that the energy measures the homogeneous flow
    frozen = replace(frozen, g=np.zeros_like(frozen.g))
    dt = cfg.dt or cfg.dt_max
    s = model.config.s
    e0 = energy_Es(fbar, theta, frozen.u, frozen.h, frozen.h_hat, s)
    growth = 0.0
    t, step = 0.0, 0
    with JsonlWriter(out / "diagnostics.jsonl") as writer:
        while t < cfg.t_end - 1e-12 and (cfg.max_steps is None or step < cfg.max_steps):
            h = min(dt, cfg.t_end - t)
            fbar, theta = linear_rk4_step(fbar, theta, h, lambda c: frozen, model.dealias)
            t += h
            step += 1
            e = energy_Es(fbar, theta, frozen.u, frozen.h, frozen.h_hat, s)
            ce = energy_cal_Es(fbar, theta, s)
            if e0 > 0.0 and e > 0.0:
                growth = max(growth, math.log(e / e0) / t)
            writer.write({"step": step, "t": t, "E_s": e, "cal_E_s": ce, "lambda_min": lam, "max_f": float(np.max(np.abs(fbar)))})
    return {"steps": step, "t_final": t, "lambda_min": lam, "energy_growth_rate": growth}


def _run_picard(cfg: RunConfig, out: Path) -> dict:
    sc = build_scenario(cfg.scenario_config(), cfg.model_config())
    icfg = cfg.iteration_config()
    with JsonlWriter(out / "contraction.jsonl") as writer:

        def log(k, d, ratio):
            writer.write({"iteration": k + 1, "distance": d, "ratio": None if math.isnan(ratio) else ratio})

        try:
            res = picard_solve(sc.state, sc.model, icfg, callback=log)
        except NoContraction as exc:
            res = exc.result
            _write_picard_tail(out, res, sc.model)
            raise
    _write_picard_tail(out, res, sc.model)
    return {
        "iterations": len(res.distances),
        "converged": res.converged,
        "contracted": res.contracted(),
        "distances": res.distances,
        "ratios": res.ratios,
        "M1": res.M1,
        "M2": res.M2,
        "membership": [r.as_dict() for r in res.memberships],
    }


def _write_picard_tail(out: Path, res, model) -> None:
    traj = res.trajectory
    write_snapshot(out / "final.bin", traj.state(len(traj) - 1), {"N": model.n, "M": model.m})


def _run_convergence(cfg: RunConfig, out: Path) -> dict:
    """Run every level to ``t_end`` and tabulate self-convergence errors."""
    rows = []
    finals = []
    for n, m, dt in cfg.levels:
        res = run_direct(cfg, out, n=n, m=m, dt=dt, diag_name=f"diagnostics_N{n}_M{m}.jsonl")
        finals.append(res["state"])
        rows.append(
            {
                "N": n,
                "M": m,
                "dt": dt,
                "steps": res["steps"],
                "w_norm": res["max_w_norm"],
                "b_norm": res["max_b_norm"],
                "kinematic": res["max_kinematic_residual"],
                "hN": res["max_hN_residual"],
                "hhatN": res["max_hhatN_residual"],
                "pressure_balance": res["max_pressure_balance_residual"],
            }
        )
    for i, row in enumerate(rows):
        if i + 1 < len(rows):
            coarse, fine = finals[i], finals[i + 1]
            r = fine.f.shape[0] // coarse.f.shape[0]
            row["err_f"] = float(np.max(np.abs(fine.f[::r, ::r] - coarse.f)))
            row["err_theta"] = float(np.max(np.abs(fine.theta[::r, ::r] - coarse.theta)))
        else:
            row["err_f"] = row["err_theta"] = None
    cols = ["N", "M", "dt", "steps", "err_f", "err_theta", "w_norm", "b_norm", "kinematic", "hN", "hhatN", "pressure_balance"]
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row[k] is None else row[k]) for k in cols})
    return {"levels": rows}


def run(cfg: RunConfig) -> int:
    """Execute the configured mode and return the process exit status."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    summary: dict = {"mode": cfg.mode, "config": cfg.as_dict()}
    try:
        if cfg.mode == "direct":
            res = run_direct(cfg, out)
            res.pop("state")
            res.pop("records")
        elif cfg.mode == "linear":
            res = _run_linear(cfg, out)
        elif cfg.mode == "picard":
            res = _run_picard(cfg, out)
        else:
            res = _run_convergence(cfg, out)
        summary.update(res)
        status, message = "ok", ""
    except Exception as exc:
        status = _status_of(exc)
        if status is None:
            raise
        message = f"{type(exc).__name__}: {exc}"
    summary.update(status=status, exit_code=EXIT_CODES[status], message=message, wall_time=time.perf_counter() - start)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=float)
    if message:
        print(message, file=sys.stderr)
    return EXIT_CODES[status]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mhdsim", description="Plasma-vacuum interface simulator.")
    p.add_argument("--config", type=Path, help="JSON run configuration; defaults are used when omitted")
    p.add_argument("--mode", choices=MODES, help="override the configured mode")
    p.add_argument("--output", type=str, help="output directory")
    p.add_argument("--seed", type=int, help="seed recorded with the run")
    p.add_argument("--max-steps", type=int, help="stop after this many steps")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else parse_config("{}")
        overrides = {}
        if args.mode:
            overrides["mode"] = args.mode
        if args.output:
            overrides["output_dir"] = args.output
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.max_steps is not None:
            overrides["max_steps"] = args.max_steps
        if overrides:
            cfg = parse_config(json.dumps({**cfg.as_dict(), **overrides}))
    except (ParseError, ValidationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]
    np.random.seed(cfg.seed)
    threads = int(os.environ.get("MHDSIM_THREADS", "1") or 1)
    with threadpool_limits(limits=max(1, threads)):
        return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
