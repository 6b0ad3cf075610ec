"""Command-line experiment harness.

Subcommands map one-to-one onto the experiment kinds: `simulate` (one
trajectory), `converge` (strong-order measurement), `conserve` (ensemble
invariant tracking) and `symplectic-check` (tableau and Jacobian defects).
All artifacts are deterministic byte streams for a fixed config and seed.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 threshold
failure in check commands.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from stosym import __version__
from stosym._backend import BACKEND
from stosym.config import ConfigError, RunConfig, load_config, parse_config
from stosym.convergence import (
    ConvergenceConfig,
    run_convergence,
    run_ensemble,
)
from stosym.diagnostics import (
    averaged_energy_slope,
    symplectic_defect,
    theoretical_energy_slope,
)
from stosym.integrator import NumericalError, integrate_path
from stosym.noise import sample_increment, truncate_increment
from stosym.svgplot import log_log_chart
from stosym.tableau import is_symplectic, midpoint_tableau

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_THRESHOLD = 4

_TABLEAU_TOL = 1e-12
_JACOBIAN_TOL = 1e-8


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _resolve_seed(args, cfg: RunConfig) -> RunConfig:
    """Seed precedence: --seed flag, then STOSYM_SEED, then the config."""
    if args.seed is not None:
        return cfg.with_seed(args.seed)
    env = os.environ.get("STOSYM_SEED")
    if env is not None:
        try:
            return cfg.with_seed(int(env))
        except ValueError:
            raise ConfigError(f"STOSYM_SEED must be an integer, got {env!r}") from None
    return cfg


def _apply_paper_scale(cfg: RunConfig) -> RunConfig:
    doc = json.loads(json.dumps(cfg.document))
    doc.setdefault("problem", {})["n_cells"] = 512
    doc.setdefault("run", {})["n_paths"] = 500
    return parse_config(doc)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _write_meta(out_dir: str, cfg: RunConfig, command: str, workers: int, truncate: bool, results) -> None:
    meta = {
        "artifact_version": __version__,
        "backend": BACKEND,
        "command": command,
        "config": cfg.document,
        "master_seed": cfg.master_seed,
        "results": results,
        "truncate": truncate,
        "workers": workers,
    }
    _write(os.path.join(out_dir, "meta.json"), json.dumps(meta, sort_keys=True, indent=2) + "\n")


def _steps_for(cfg: RunConfig) -> int:
    if cfg.dt is None:
        raise ConfigError("run.dt is required for this command")
    ratio = cfg.final_time / cfg.dt
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9 * n:
        raise ConfigError(
            f"run.dt={cfg.dt} must divide problem.T={cfg.final_time} an integral number of times"
        )
    return n


def cmd_simulate(cfg: RunConfig, out_dir: str, workers: int, truncate: bool, plot: bool) -> int:
    n_steps = _steps_for(cfg)
    if cfg.scheme == "both":
        raise ConfigError("scheme.name 'both' is only valid for the conserve command")
    rng = np.random.default_rng([cfg.master_seed, 0])
    records = integrate_path(
        cfg.initial,
        cfg.scheme,
        cfg.nonlinearity,
        cfg.dt,
        n_steps,
        cfg.noise,
        rng,
        cfg.solver,
        record_every=cfg.record_every,
        truncate=truncate,
        trunc_k=cfg.truncate_k,
        tab=cfg.tableau,
        noise_mode=cfg.comparison_noise,
    )
    lines = ["step,time,charge,energy,iterations"]
    for r in records:
        step = round(r.time / cfg.dt)
        lines.append(
            f"{step},{_fmt(r.time)},{_fmt(r.charge)},{_fmt(r.energy)},{r.iterations_used}"
        )
    _write(os.path.join(out_dir, "trajectory.csv"), "\n".join(lines) + "\n")
    charges = [r.charge for r in records]
    results = {
        "final_charge": charges[-1],
        "final_energy": records[-1].energy,
        "max_relative_charge_drift": (
            max(abs(q - charges[0]) for q in charges) / charges[0] if charges[0] else 0.0
        ),
        "n_steps": n_steps,
    }
    _write_meta(out_dir, cfg, "simulate", workers, truncate, results)
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out_dir: str, workers: int, truncate: bool, plot: bool) -> int:
    if cfg.scheme == "both":
        raise ConfigError("scheme.name 'both' is only valid for the conserve command")
    if not cfg.dt_list:
        raise ConfigError("run.dt_list must be a non-empty list for the converge command")
    if cfg.dt_ref is None:
        raise ConfigError("run.dt_ref is required for the converge command")
    try:
        ccfg = ConvergenceConfig(
            cfg.dt_list, cfg.dt_ref, cfg.n_paths, cfg.final_time, cfg.master_seed
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
    report = run_convergence(cfg.experiment(truncate=truncate), ccfg, workers=workers)
    lines = ["dt,rms_error,n_paths,failed_paths"]
    for dt, err in zip(report.dt_list, report.rms_errors):
        lines.append(f"{_fmt(dt)},{_fmt(err)},{report.n_paths},{report.failed_paths}")
    _write(os.path.join(out_dir, "convergence.csv"), "\n".join(lines) + "\n")
    if plot:
        svg = log_log_chart(
            [("rms error", list(report.dt_list), list(report.rms_errors))],
            x_label="dt",
            y_label="rms error",
            title=f"fitted order {report.order:.3f}",
        )
        _write(os.path.join(out_dir, "convergence.svg"), svg)
    results = {
        "failed_paths": report.failed_paths,
        "fitted_order": report.order,
        "intercept": report.intercept,
        "max_charge_drift": report.max_charge_drift,
        "order_stderr": report.order_stderr,
    }
    _write_meta(out_dir, cfg, "converge", workers, truncate, results)
    return EXIT_OK


def _write_ensemble_csv(path: str, stats) -> None:
    lines = ["time,mean_charge,mean_energy,max_charge_drift"]
    for t, q, e, d in zip(
        stats.times, stats.mean_charge, stats.mean_energy, stats.charge_drift_maxima
    ):
        lines.append(f"{_fmt(t)},{_fmt(q)},{_fmt(e)},{_fmt(d)}")
    _write(path, "\n".join(lines) + "\n")


def cmd_conserve(cfg: RunConfig, out_dir: str, workers: int, truncate: bool, plot: bool) -> int:
    n_steps = _steps_for(cfg)
    schemes = ["midpoint", "nonsymplectic"] if cfg.scheme == "both" else [cfg.scheme]
    results = {"n_steps": n_steps}
    for i, scheme in enumerate(schemes):
        stats = run_ensemble(
            cfg.experiment(scheme=scheme, truncate=truncate),
            cfg.dt,
            n_steps,
            cfg.n_paths,
            cfg.master_seed,
            record_every=cfg.record_every,
            workers=workers,
        )
        name = "ensemble.csv" if i == 0 else "ensemble_comparison.csv"
        _write_ensemble_csv(os.path.join(out_dir, name), stats)
        slope, r_sq = averaged_energy_slope(stats.times, stats.mean_energy)
        results[scheme] = {
            "energy_slope": slope,
            "energy_slope_r_squared": r_sq,
            "max_charge_drift": float(np.max(stats.charge_drift_maxima)),
        }
    results["theoretical_energy_slope"] = theoretical_energy_slope(
        cfg.initial, cfg.noise, cfg.epsilon
    )
    _write_meta(out_dir, cfg, "conserve", workers, truncate, results)
    return EXIT_OK


def cmd_symplectic_check(cfg: RunConfig, out_dir: str, workers: int, truncate: bool, plot: bool) -> int:
    if cfg.scheme == "both":
        raise ConfigError("scheme.name 'both' is only valid for the conserve command")
    tab = cfg.tableau if cfg.tableau is not None else midpoint_tableau()
    _, tab_defect = is_symplectic(tab)
    dt = cfg.dt if cfg.dt is not None else 2.0**-7
    rng = np.random.default_rng([cfg.master_seed, 0])
    incr = sample_increment(cfg.noise, dt, rng)
    if truncate and cfg.noise.mode_count > 0 and cfg.epsilon != 0:
        incr = truncate_increment(incr, cfg.truncate_k)
    scheme = "midpoint" if cfg.scheme == "srk" else cfg.scheme
    try:
        jac_defect = symplectic_defect(
            cfg.initial, cfg.nonlinearity, dt, incr, cfg.solver, scheme=scheme
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
    print(f"tableau symplectic defect: {_fmt(tab_defect)} (tolerance {_fmt(_TABLEAU_TOL)})")
    print(f"one-step Jacobian defect:  {_fmt(jac_defect)} (tolerance {_fmt(_JACOBIAN_TOL)})")
    passed = tab_defect <= _TABLEAU_TOL and jac_defect <= _JACOBIAN_TOL
    results = {
        "jacobian_defect": jac_defect,
        "jacobian_tolerance": _JACOBIAN_TOL,
        "passed": passed,
        "tableau_defect": tab_defect,
        "tableau_tolerance": _TABLEAU_TOL,
    }
    _write_meta(out_dir, cfg, "symplectic-check", workers, truncate, results)
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_THRESHOLD


_COMMANDS = {
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "conserve": cmd_conserve,
    "symplectic-check": cmd_symplectic_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stosym",
        description="Structure-preserving stochastic Schrödinger integrators.",
    )
    parser.add_argument("--version", action="version", version=f"stosym {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a JSON run configuration")
        p.add_argument("--plot", action="store_true", help="also emit an SVG chart")
        p.add_argument(
            "--paper-scale",
            action="store_true",
            help="override to the full-scale setup (n_cells=512, 500 paths)",
        )
        p.add_argument("--threads", type=int, default=1, metavar="N", help="Monte-Carlo workers")
        p.add_argument(
            "--no-truncate",
            action="store_true",
            help="disable noise-increment truncation (experiments only)",
        )
        p.add_argument("--seed", type=int, default=None, help="override run.master_seed")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        cfg = load_config(args.config)
        if args.paper_scale:
            cfg = _apply_paper_scale(cfg)
        cfg = _resolve_seed(args, cfg)
        out_dir = cfg.output_dir
        os.makedirs(out_dir, exist_ok=True)
        return _COMMANDS[args.command](
            cfg, out_dir, args.threads, not args.no_truncate, args.plot
        )
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
