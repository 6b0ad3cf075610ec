"""Mean-square strong-error measurement against coupled reference paths and
order estimation by log-log regression.

Every path owns a private rng stream keyed by (master_seed, path_index); the
coarse increments are sums of the same fine draws used by the reference
solution, so both solutions see one Brownian realization.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from stosym.diagnostics import EnsembleStats
from stosym.grid import ComplexField, charge_values, norm_values
from stosym.integrator import (
    Nonlinearity,
    NumericalError,
    SolverParams,
    _midpoint_values,
    _nonsymplectic_values,
    _srk_values,
    exact_phase_solution,
    integrate_path,
)
from stosym.noise import NoiseModel, assemble_field, truncation_bound
from stosym.tableau import Tableau


@dataclasses.dataclass(frozen=True)
class Experiment:
    """A fully specified simulation problem (everything but the time grid)."""

    initial: ComplexField
    nonlinearity: Nonlinearity
    noise: NoiseModel
    solver: SolverParams = SolverParams()
    scheme: str = "midpoint"
    tableau: Optional[Tableau] = None
    truncate: bool = True
    trunc_k: float = 2.0
    comparison_noise: str = "additive"

    @property
    def grid(self):
        return self.initial.grid


@dataclasses.dataclass(frozen=True)
class ConvergenceConfig:
    dt_list: Tuple[float, ...]
    dt_ref: float
    n_paths: int
    final_time: float
    master_seed: int

    def __post_init__(self):
        object.__setattr__(self, "dt_list", tuple(float(dt) for dt in self.dt_list))
        if not self.dt_list:
            raise ValueError("dt_list must not be empty")
        if any(b >= a for a, b in zip(self.dt_list, self.dt_list[1:])):
            raise ValueError("dt_list must be strictly decreasing")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        for dt in self.dt_list + (self.dt_ref,):
            _exact_ratio(self.final_time, dt, "final_time", "dt")
        for dt in self.dt_list:
            _exact_ratio(dt, self.dt_ref, "dt", "dt_ref")


def _exact_ratio(a: float, b: float, name_a: str, name_b: str) -> int:
    ratio = a / b
    r = round(ratio)
    if r < 1 or abs(ratio - r) > 1e-9 * r:
        raise ValueError(f"{name_a}={a} is not an integer multiple of {name_b}={b}")
    return r


@dataclasses.dataclass(frozen=True)
class ConvergenceReport:
    dt_list: Tuple[float, ...]
    rms_errors: Tuple[float, ...]
    order: float
    intercept: float
    order_stderr: float
    n_paths: int
    failed_paths: int
    max_charge_drift: float


def fit_order(dts: Sequence[float], errors: Sequence[float]) -> Tuple[float, float, float]:
    """OLS of log2(error) against log2(dt); returns (slope, intercept, stderr)."""
    d = np.asarray(dts, dtype=np.float64)
    e = np.asarray(errors, dtype=np.float64)
    if len(d) < 2:
        raise ValueError("need at least two points to fit an order")
    if np.any(d <= 0) or np.any(e <= 0):
        raise ValueError("degenerate errors: order fit needs positive dts and errors")
    fit = stats.linregress(np.log2(d), np.log2(e))
    return float(fit.slope), float(fit.intercept), float(fit.stderr)


def _path_rng(master_seed: int, path_index: int) -> np.random.Generator:
    return np.random.default_rng([master_seed, path_index])


def _advance(exp: Experiment, dt: float, draws: np.ndarray, t_0: float = 0.0):
    """Run the experiment's scheme over the given per-step mode draws.

    Returns (final values, max relative charge drift along the run).
    """
    grid = exp.grid
    nl = exp.nonlinearity
    sp = exp.solver
    values = exp.initial.values.copy()
    charge_0 = charge_values(grid, values)
    max_drift = 0.0
    truncate = (
        exp.truncate
        and exp.scheme != "nonsymplectic"
        and exp.noise.mode_count > 0
        and nl.epsilon != 0
    )
    clamp = truncation_bound(dt, exp.trunc_k) * math.sqrt(dt) if truncate else None
    for n in range(draws.shape[0]):
        row = draws[n]
        if clamp is not None:
            row = np.clip(row, -clamp, clamp)
        d_w = assemble_field(exp.noise, row)
        t_n = t_0 + n * dt
        if exp.scheme == "midpoint":
            values, _ = _midpoint_values(grid, values, nl, dt, d_w, sp, t_n)
        elif exp.scheme == "srk":
            if exp.tableau is None:
                raise ValueError("scheme 'srk' requires a tableau")
            values, _ = _srk_values(grid, values, exp.tableau, nl, dt, d_w, sp, t_n)
        elif exp.scheme == "nonsymplectic":
            values, _ = _nonsymplectic_values(
                grid, values, nl, dt, d_w, sp, t_n, exp.comparison_noise
            )
        else:
            raise ValueError(f"unknown scheme {exp.scheme!r}")
        if charge_0 > 0.0:
            drift = abs(charge_values(grid, values) - charge_0) / charge_0
            if drift > max_drift:
                max_drift = drift
    return values, max_drift


def _coarsen(draws: np.ndarray, refinement: int) -> np.ndarray:
    n_coarse = draws.shape[0] // refinement
    return draws.reshape(n_coarse, refinement, draws.shape[1]).sum(axis=1)


def _convergence_path(args):
    exp, cfg, path_index = args
    rng = _path_rng(cfg.master_seed, path_index)
    n_ref = _exact_ratio(cfg.final_time, cfg.dt_ref, "final_time", "dt_ref")
    draws = math.sqrt(cfg.dt_ref) * rng.standard_normal((n_ref, exp.noise.mode_count))
    try:
        ref, drift = _advance(exp, cfg.dt_ref, draws)
        sq_errors = []
        for dt in cfg.dt_list:
            r = _exact_ratio(dt, cfg.dt_ref, "dt", "dt_ref")
            coarse, coarse_drift = _advance(exp, dt, _coarsen(draws, r))
            drift = max(drift, coarse_drift)
            sq_errors.append(norm_values(exp.grid, ref - coarse) ** 2)
        return path_index, np.array(sq_errors), drift, None
    except NumericalError as err:
        return path_index, None, 0.0, str(err)


def _oracle_path(args):
    exp, cfg, path_index = args
    rng = _path_rng(cfg.master_seed, path_index)
    n_ref = _exact_ratio(cfg.final_time, cfg.dt_ref, "final_time", "dt_ref")
    draws = math.sqrt(cfg.dt_ref) * rng.standard_normal((n_ref, exp.noise.mode_count))
    w_final = float(draws.sum()) if exp.noise.mode_count else 0.0
    exact = exact_phase_solution(
        exp.initial, exp.nonlinearity, exp.noise, w_final, cfg.final_time
    )
    try:
        sq_errors = []
        drift = 0.0
        for dt in cfg.dt_list:
            r = _exact_ratio(dt, cfg.dt_ref, "dt", "dt_ref")
            coarse, coarse_drift = _advance(exp, dt, _coarsen(draws, r))
            drift = max(drift, coarse_drift)
            sq_errors.append(norm_values(exp.grid, exact.values - coarse) ** 2)
        return path_index, np.array(sq_errors), drift, None
    except NumericalError as err:
        return path_index, None, 0.0, str(err)


def _run_paths(worker, exp, cfg, workers: int):
    jobs = [(exp, cfg, i) for i in range(cfg.n_paths)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(worker, jobs, chunksize=max(1, cfg.n_paths // (4 * workers))))
    else:
        results = [worker(job) for job in jobs]
    # reduce in fixed path-index order so the result is worker-count independent
    results.sort(key=lambda r: r[0])
    sum_sq = np.zeros(len(cfg.dt_list))
    failed = 0
    max_drift = 0.0
    for _, sq, drift, err in results:
        if err is not None:
            failed += 1
            continue
        sum_sq += sq
        max_drift = max(max_drift, drift)
    succeeded = cfg.n_paths - failed
    if succeeded == 0:
        raise NumericalError("all paths failed")
    rms = np.sqrt(sum_sq / succeeded)
    slope, intercept, stderr = fit_order(cfg.dt_list, rms)
    return ConvergenceReport(
        cfg.dt_list, tuple(rms), slope, intercept, stderr, cfg.n_paths, failed, max_drift
    )


def run_convergence(exp: Experiment, cfg: ConvergenceConfig, workers: int = 1) -> ConvergenceReport:
    """Strong self-convergence against the same scheme at dt_ref."""
    return _run_paths(_convergence_path, exp, cfg, workers)


def oracle_convergence(exp: Experiment, cfg: ConvergenceConfig, workers: int = 1) -> ConvergenceReport:
    """Strong convergence against the closed-form constant-mode solution."""
    if not exp.noise.is_constant():
        raise ValueError("oracle convergence requires a single constant noise mode")
    return _run_paths(_oracle_path, exp, cfg, workers)


def _ensemble_path(args):
    exp, dt, n_steps, record_every, master_seed, path_index = args
    rng = _path_rng(master_seed, path_index)
    records = integrate_path(
        exp.initial,
        exp.scheme,
        exp.nonlinearity,
        dt,
        n_steps,
        exp.noise,
        rng,
        exp.solver,
        record_every=record_every,
        truncate=exp.truncate,
        trunc_k=exp.trunc_k,
        tab=exp.tableau,
        noise_mode=exp.comparison_noise,
    )
    times = np.array([r.time for r in records])
    charges = np.array([r.charge for r in records])
    energies = np.array([r.energy for r in records])
    drift = np.abs(charges - charges[0])
    if charges[0] != 0.0:
        drift = drift / charges[0]
    return path_index, times, charges, energies, drift


def run_ensemble(
    exp: Experiment,
    dt: float,
    n_steps: int,
    n_paths: int,
    master_seed: int,
    record_every: int = 1,
    workers: int = 1,
) -> EnsembleStats:
    """Monte-Carlo ensemble of trajectories, reduced to mean charge/energy."""
    jobs = [(exp, dt, n_steps, record_every, master_seed, i) for i in range(n_paths)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ensemble_path, jobs, chunksize=max(1, n_paths // (4 * workers))))
    else:
        results = [_ensemble_path(job) for job in jobs]
    results.sort(key=lambda r: r[0])
    times = results[0][1]
    charge_sum = np.zeros_like(times)
    energy_sum = np.zeros_like(times)
    drift_max = np.zeros_like(times)
    for _, _, charges, energies, drift in results:
        charge_sum += charges
        energy_sum += energies
        np.maximum(drift_max, drift, out=drift_max)
    return EnsembleStats(
        times, charge_sum / n_paths, energy_sum / n_paths, drift_max, n_paths
    )
