"""Time steppers: midpoint scheme in Cayley form, the general s-stage
stochastic RK step, a non-structure-preserving comparison scheme, tangent
maps for symplecticity testing, and the constant-mode phase oracle.

All implicit equations are solved by fixed-point iteration; the stiff
linear part is always handled through a tridiagonal solve, so the iteration
only has to contract the nonlinear and noise terms.
"""

from __future__ import annotations

import dataclasses
import math
from functools import lru_cache
from typing import Callable, List, Optional

import numpy as np

from stosym._backend import tridiag_factor, tridiag_solve
from stosym.grid import (
    ComplexField,
    Grid,
    cayley_factor,
    charge_values,
    discrete_charge,
    discrete_energy,
    exact_linear_propagator,
    laplacian_values,
    norm_values,
)
from stosym.noise import NoiseModel, WienerIncrement, sample_increment, truncate_increment
from stosym.tableau import Tableau, validate


class NumericalError(RuntimeError):
    """Base class for stepper failures."""


class NonConvergenceError(NumericalError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class DivergenceError(NumericalError):
    pass


def _cubic_psi(s, x):
    return s**2 / 2.0


def _cubic_psi_prime(s, x, t):
    return s


def _cubic_psi_double_prime(s, x, t):
    return np.ones_like(s)


def _zero_psi(s, x):
    return np.zeros_like(s)


def _zero_psi_prime(s, x, t):
    return np.zeros_like(s)


@dataclasses.dataclass(frozen=True)
class Nonlinearity:
    """Potential callbacks Psi, Psi', Psi'' (all functions of |psi|^2, x[, t])
    together with the noise scale epsilon."""

    psi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    psi_prime: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    psi_double_prime: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    epsilon: float


def cubic_nonlinearity(epsilon: float) -> Nonlinearity:
    """The cubic case Psi(s) = s^2/2 used in the experiments."""
    return Nonlinearity(_cubic_psi, _cubic_psi_prime, _cubic_psi_double_prime, float(epsilon))


def free_nonlinearity(epsilon: float) -> Nonlinearity:
    """Psi identically zero; the linear equation."""
    return Nonlinearity(_zero_psi, _zero_psi_prime, _zero_psi_prime, float(epsilon))


@dataclasses.dataclass(frozen=True)
class SolverParams:
    fp_tol: float = 1e-12
    max_iter: int = 200
    divergence_guard: float = 1e8

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise ValueError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclasses.dataclass(frozen=True)
class StepRecord:
    state: ComplexField
    time: float
    charge: float
    energy: float
    iterations_used: int


def _noise_field(grid: Grid, incr: Optional[WienerIncrement]) -> np.ndarray:
    if incr is None:
        return np.zeros(grid.m)
    return incr.field


def _require_truncated(nl: Nonlinearity, incr: Optional[WienerIncrement], enforce: bool):
    if not enforce or incr is None or nl.epsilon == 0 or incr.model.mode_count == 0:
        return
    if not incr.truncated:
        raise ValueError(
            "implicit-in-noise step requires a truncated increment "
            "(pass require_truncated=False to override)"
        )


def _midpoint_values(grid, values, nl, dt, d_w, sp, t_n):
    """One midpoint step on raw arrays; returns (next values, iterations)."""
    s_phi, _ = _cayley_pair(grid, values, dt)
    fact = cayley_factor(grid, dt)
    x = grid.x
    t_mid = t_n + dt / 2.0
    eps = nl.epsilon
    u = values
    residual = math.inf
    for it in range(1, sp.max_iter + 1):
        f_val = nl.psi_prime(np.abs(u) ** 2, x, t_mid) * u
        g = 1j * dt * f_val - 1j * eps * (u * d_w)
        candidate = s_phi + tridiag_solve(fact, g)
        u_new = 0.5 * (values + candidate)
        residual = norm_values(grid, u_new - u)
        u = u_new
        if residual <= sp.fp_tol:
            return 2.0 * u - values, it
        if norm_values(grid, u) > sp.divergence_guard:
            raise DivergenceError(f"midpoint iterate norm exceeded {sp.divergence_guard:.1e}")
    raise NonConvergenceError("midpoint fixed point did not converge", residual)


def _cayley_pair(grid, values, dt):
    fact = cayley_factor(grid, dt)
    t_v = tridiag_solve(fact, values)
    return 2.0 * t_v - values, t_v


def midpoint_step(
    state: ComplexField,
    nl: Nonlinearity,
    dt: float,
    incr: Optional[WienerIncrement],
    sp: SolverParams,
    t_n: float = 0.0,
    require_truncated: bool = True,
) -> ComplexField:
    """Midpoint scheme in Cayley form, solved by fixed-point iteration on the
    half state."""
    _require_truncated(nl, incr, require_truncated)
    d_w = _noise_field(state.grid, incr)
    out, _ = _midpoint_values(state.grid, state.values, nl, dt, d_w, sp, t_n)
    return ComplexField(state.grid, out)


@lru_cache(maxsize=64)
def _implicit_factor(grid: Grid, tau: float):
    """Factored (Id - i*tau*A)."""
    coeff = 1j * tau / grid.dx**2
    diag = np.full(grid.m, 1.0 + 2.0 * coeff, dtype=np.complex128)
    off = np.full(grid.m - 1, -coeff, dtype=np.complex128)
    return tridiag_factor(off, diag, off)


def _srk_values(grid, values, tab, nl, dt, d_w, sp, t_n):
    s = tab.stages
    x = grid.x
    eps = nl.epsilon
    stage_times = t_n + np.sum(tab.a0, axis=1) * dt
    phi = [values.copy() for _ in range(s)]
    residual = math.inf
    for it in range(1, sp.max_iter + 1):
        psi_p = [nl.psi_prime(np.abs(phi[j]) ** 2, x, stage_times[j]) for j in range(s)]
        h = [laplacian_values(grid, phi[j]) + psi_p[j] * phi[j] for j in range(s)]
        new_phi = []
        for i in range(s):
            rhs = values.astype(np.complex128).copy()
            for j in range(s):
                if j != i and tab.a0[i, j] != 0.0:
                    rhs += 1j * dt * tab.a0[i, j] * h[j]
                if tab.a1[i, j] != 0.0:
                    rhs -= 1j * eps * tab.a1[i, j] * (d_w * phi[j])
            if tab.a0[i, i] != 0.0:
                # implicit diagonal stage: move the Laplacian to the left,
                # lag the stage's own nonlinear term
                rhs += 1j * dt * tab.a0[i, i] * (psi_p[i] * phi[i])
                new_phi.append(tridiag_solve(_implicit_factor(grid, dt * tab.a0[i, i]), rhs))
            else:
                new_phi.append(rhs)
        residual = max(norm_values(grid, new_phi[i] - phi[i]) for i in range(s))
        phi = new_phi
        if residual <= sp.fp_tol:
            break
        if max(norm_values(grid, p) for p in phi) > sp.divergence_guard:
            raise DivergenceError(f"stage iterate norm exceeded {sp.divergence_guard:.1e}")
    else:
        raise NonConvergenceError("stage fixed point did not converge", residual)

    stages = np.array(phi)
    # Recover i*dt*h_j from the stage equations when a0 is invertible; this
    # avoids re-applying the stiff Laplacian to the stage error.
    stage_rhs = stages - values[None, :] + 1j * eps * (tab.a1 @ stages) * d_w[None, :]
    try:
        idt_h = np.linalg.solve(tab.a0, stage_rhs)
    except np.linalg.LinAlgError:
        psi_p = [nl.psi_prime(np.abs(phi[j]) ** 2, x, stage_times[j]) for j in range(s)]
        idt_h = 1j * dt * np.array(
            [laplacian_values(grid, phi[j]) + psi_p[j] * phi[j] for j in range(s)]
        )
    out = values + tab.b0 @ idt_h - 1j * eps * (tab.b1 @ stages) * d_w
    return out, it


def srk_step(
    state: ComplexField,
    tab: Tableau,
    nl: Nonlinearity,
    dt: float,
    incr: Optional[WienerIncrement],
    sp: SolverParams,
    t_n: float = 0.0,
    require_truncated: bool = True,
) -> ComplexField:
    """General s-stage stochastic Runge-Kutta step."""
    validate(tab)
    if np.any(tab.a1 != 0.0):
        _require_truncated(nl, incr, require_truncated)
    d_w = _noise_field(state.grid, incr)
    out, _ = _srk_values(state.grid, state.values, tab, nl, dt, d_w, sp, t_n)
    return ComplexField(state.grid, out)


def _nonsymplectic_values(grid, values, nl, dt, d_w, sp, t_n, noise_mode):
    fact = _implicit_factor(grid, dt)
    x = grid.x
    eps = nl.epsilon
    t_next = t_n + dt
    u = values
    residual = math.inf
    for it in range(1, sp.max_iter + 1):
        f_val = nl.psi_prime(np.abs(u) ** 2, x, t_next) * u
        if noise_mode == "additive":
            rhs = values + 1j * dt * f_val - 1j * eps * d_w
        else:
            rhs = values + 1j * dt * f_val - 1j * eps * (u * d_w)
        u_new = tridiag_solve(fact, rhs)
        residual = norm_values(grid, u_new - u)
        u = u_new
        if residual <= sp.fp_tol:
            return u, it
        if norm_values(grid, u) > sp.divergence_guard:
            raise DivergenceError(f"backward-Euler iterate norm exceeded {sp.divergence_guard:.1e}")
    raise NonConvergenceError("backward-Euler fixed point did not converge", residual)


def nonsymplectic_step(
    state: ComplexField,
    nl: Nonlinearity,
    dt: float,
    incr: Optional[WienerIncrement],
    sp: SolverParams,
    t_n: float = 0.0,
    noise_mode: str = "additive",
) -> ComplexField:
    """Implicit backward-Euler comparison scheme; noise enters additively by
    default (as printed in the source experiments), or multiplicatively."""
    if noise_mode not in ("additive", "multiplicative"):
        raise ValueError(f"unknown noise mode {noise_mode!r}")
    d_w = _noise_field(state.grid, incr)
    out, _ = _nonsymplectic_values(state.grid, state.values, nl, dt, d_w, sp, t_n, noise_mode)
    return ComplexField(state.grid, out)


class MidpointTangent:
    """Exact linearization of one midpoint step about its converged half
    state; apply() propagates a perturbation through the step."""

    def __init__(
        self,
        state: ComplexField,
        nl: Nonlinearity,
        dt: float,
        incr: Optional[WienerIncrement],
        sp: SolverParams,
        t_n: float = 0.0,
        require_truncated: bool = True,
    ):
        _require_truncated(nl, incr, require_truncated)
        grid = state.grid
        d_w = _noise_field(grid, incr)
        nxt, _ = _midpoint_values(grid, state.values, nl, dt, d_w, sp, t_n)
        half = 0.5 * (state.values + nxt)
        s = np.abs(half) ** 2
        t_mid = t_n + dt / 2.0
        self.grid = grid
        self.dt = dt
        self.sp = sp
        self.eps = nl.epsilon
        self.d_w = d_w
        self.half = half
        self.psi_p = nl.psi_prime(s, grid.x, t_mid)
        self.psi_pp = nl.psi_double_prime(s, grid.x, t_mid)
        self.next_state = ComplexField(grid, nxt)

    def _df(self, v: np.ndarray) -> np.ndarray:
        # real-linear Frechet derivative of Psi'(|u|^2)u at u = half state
        return self.psi_p * v + 2.0 * self.psi_pp * np.real(np.conj(self.half) * v) * self.half

    def _half_term(self, v: np.ndarray) -> np.ndarray:
        fact = cayley_factor(self.grid, self.dt)
        g = 0.5j * self.dt * self._df(v) - 0.5j * self.eps * (v * self.d_w)
        return tridiag_solve(fact, g)

    def apply(self, delta: np.ndarray) -> np.ndarray:
        d = np.asarray(delta, dtype=np.complex128)
        scale = norm_values(self.grid, d)
        if scale == 0.0:
            return np.zeros_like(d)
        s_d, _ = _cayley_pair(self.grid, d, self.dt)
        base = s_d + self._half_term(d)
        y = base
        tol = self.sp.fp_tol * scale
        residual = math.inf
        for _ in range(self.sp.max_iter):
            y_new = base + self._half_term(y)
            residual = norm_values(self.grid, y_new - y)
            y = y_new
            if residual <= tol:
                return y
        raise NonConvergenceError("tangent fixed point did not converge", residual)


class NonsymplecticTangent:
    """Linearization of the backward-Euler comparison step."""

    def __init__(
        self,
        state: ComplexField,
        nl: Nonlinearity,
        dt: float,
        incr: Optional[WienerIncrement],
        sp: SolverParams,
        t_n: float = 0.0,
        noise_mode: str = "additive",
    ):
        grid = state.grid
        d_w = _noise_field(grid, incr)
        nxt, _ = _nonsymplectic_values(grid, state.values, nl, dt, d_w, sp, t_n, noise_mode)
        s = np.abs(nxt) ** 2
        self.grid = grid
        self.dt = dt
        self.sp = sp
        self.eps = nl.epsilon
        self.d_w = d_w
        self.at = nxt
        self.psi_p = nl.psi_prime(s, grid.x, t_n + dt)
        self.psi_pp = nl.psi_double_prime(s, grid.x, t_n + dt)
        self.noise_mode = noise_mode
        self.next_state = ComplexField(grid, nxt)

    def _df(self, v: np.ndarray) -> np.ndarray:
        return self.psi_p * v + 2.0 * self.psi_pp * np.real(np.conj(self.at) * v) * self.at

    def apply(self, delta: np.ndarray) -> np.ndarray:
        d = np.asarray(delta, dtype=np.complex128)
        scale = norm_values(self.grid, d)
        if scale == 0.0:
            return np.zeros_like(d)
        fact = _implicit_factor(self.grid, self.dt)
        y = tridiag_solve(fact, d)
        tol = self.sp.fp_tol * scale
        residual = math.inf
        for _ in range(self.sp.max_iter):
            rhs = d + 1j * self.dt * self._df(y)
            if self.noise_mode == "multiplicative":
                rhs -= 1j * self.eps * (y * self.d_w)
            y_new = tridiag_solve(fact, rhs)
            residual = norm_values(self.grid, y_new - y)
            y = y_new
            if residual <= tol:
                return y
        raise NonConvergenceError("tangent fixed point did not converge", residual)


def tangent_step(
    state: ComplexField,
    delta: ComplexField,
    nl: Nonlinearity,
    dt: float,
    incr: Optional[WienerIncrement],
    sp: SolverParams,
    t_n: float = 0.0,
    scheme: str = "midpoint",
) -> ComplexField:
    """Propagate a perturbation through one step of the selected scheme."""
    if scheme == "midpoint":
        tangent = MidpointTangent(state, nl, dt, incr, sp, t_n)
    elif scheme == "nonsymplectic":
        tangent = NonsymplecticTangent(state, nl, dt, incr, sp, t_n)
    else:
        raise ValueError(f"no tangent map for scheme {scheme!r}")
    return ComplexField(state.grid, tangent.apply(delta.values))


def exact_phase_solution(
    initial: ComplexField,
    nl: Nonlinearity,
    model: NoiseModel,
    w_value: float,
    t: float,
) -> ComplexField:
    """Closed-form solution for constant-mode noise and Psi' = 0:
    a global phase rotation composed with the free discrete propagator."""
    if not model.is_constant():
        raise ValueError("exact phase solution requires a single constant noise mode")
    amplitude = float(model.mode_shapes[0, 0]) if model.mode_count else 0.0
    phase = np.exp(-1j * nl.epsilon * amplitude * w_value)
    propagated = exact_linear_propagator(initial, t)
    return ComplexField(initial.grid, phase * propagated.values)


def integrate_path(
    initial: ComplexField,
    scheme: str,
    nl: Nonlinearity,
    dt: float,
    n_steps: int,
    model: NoiseModel,
    rng: np.random.Generator,
    sp: SolverParams,
    record_every: int = 1,
    t_0: float = 0.0,
    truncate: bool = True,
    trunc_k: float = 2.0,
    tab: Optional[Tableau] = None,
    noise_mode: str = "additive",
) -> List[StepRecord]:
    """Advance n_steps with freshly sampled increments, recording diagnostics
    every record_every steps (the initial and final states are always kept)."""
    if n_steps < 0:
        raise ValueError(f"n_steps must be non-negative, got {n_steps}")
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every}")
    grid = initial.grid

    def record(values, t, iters):
        f = ComplexField(grid, values)
        return StepRecord(f, t, discrete_charge(f), discrete_energy(f, nl.psi), iters)

    values = initial.values.copy()
    records = [record(values, t_0, 0)]
    for n in range(n_steps):
        t_n = t_0 + n * dt
        incr = sample_increment(model, dt, rng)
        if truncate and model.mode_count > 0 and nl.epsilon != 0 and scheme != "nonsymplectic":
            incr = truncate_increment(incr, trunc_k)
        d_w = incr.field
        try:
            if scheme == "midpoint":
                values, iters = _midpoint_values(grid, values, nl, dt, d_w, sp, t_n)
            elif scheme == "srk":
                step_tab = tab
                if step_tab is None:
                    raise ValueError("scheme 'srk' requires a tableau")
                values, iters = _srk_values(grid, values, step_tab, nl, dt, d_w, sp, t_n)
            elif scheme == "nonsymplectic":
                values, iters = _nonsymplectic_values(grid, values, nl, dt, d_w, sp, t_n, noise_mode)
            else:
                raise ValueError(f"unknown scheme {scheme!r}")
        except NumericalError as err:
            err.args = (f"step {n + 1}: {err}",)
            raise
        if (n + 1) % record_every == 0 or n + 1 == n_steps:
            records.append(record(values, t_n + dt, iters))
    return records
