"""Time steppers: conservation, scheme consistency, tangent maps, failures."""

import math

import numpy as np
import pytest

from stosym.grid import (
    ComplexField,
    build_grid,
    cayley_apply,
    discrete_charge,
    exact_linear_propagator,
)
from stosym.integrator import (
    DivergenceError,
    NonConvergenceError,
    SolverParams,
    cubic_nonlinearity,
    exact_phase_solution,
    free_nonlinearity,
    integrate_path,
    midpoint_step,
    nonsymplectic_step,
    srk_step,
    tangent_step,
)
from stosym.noise import (
    build_constant_noise,
    build_sine_noise,
    sample_increment,
    truncate_increment,
)
from stosym.tableau import midpoint_tableau

GRID = build_grid(1.0, 32)
SP = SolverParams()
DT = 2.0**-7


def _state(seed=0, grid=GRID):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(grid.m) + 1j * rng.standard_normal(grid.m)
    return ComplexField(grid, v / math.sqrt(discrete_charge(ComplexField(grid, v))))


def _incr(seed=1, model=None, dt=DT):
    model = model or build_sine_noise(GRID, 2, 1.0)
    return truncate_increment(sample_increment(model, dt, np.random.default_rng(seed)))


def test_solver_params_validation():
    with pytest.raises(ValueError):
        SolverParams(fp_tol=0.0)
    with pytest.raises(ValueError):
        SolverParams(max_iter=0)


def test_midpoint_conserves_charge_per_step():
    state = _state(3)
    nl = cubic_nonlinearity(2.0**0.5)
    out = midpoint_step(state, nl, DT, _incr(4), SP)
    assert discrete_charge(out) == pytest.approx(discrete_charge(state), rel=1e-11)


def test_midpoint_linear_deterministic_equals_cayley():
    state = _state(5)
    out = midpoint_step(state, free_nonlinearity(0.0), DT, None, SP)
    s_v, _ = cayley_apply(state, DT)
    assert np.allclose(out.values, s_v.values, atol=10 * SP.fp_tol)


def test_midpoint_matches_one_stage_srk():
    state = _state(6)
    nl = cubic_nonlinearity(2.0**0.5)
    incr = _incr(7)
    a = midpoint_step(state, nl, DT, incr, SP)
    b = srk_step(state, midpoint_tableau(), nl, DT, incr, SP)
    diff = math.sqrt(GRID.dx) * np.linalg.norm(a.values - b.values)
    assert diff <= 10 * SP.fp_tol


def test_srk_conserves_charge_for_symplectic_tableau():
    state = _state(8)
    nl = cubic_nonlinearity(2.0**0.5)
    out = srk_step(state, midpoint_tableau(), nl, DT, _incr(9), SP)
    assert discrete_charge(out) == pytest.approx(discrete_charge(state), rel=1e-10)


def test_truncation_enforcement():
    state = _state(1)
    nl = cubic_nonlinearity(2.0**0.5)
    model = build_sine_noise(GRID, 1, 1.0)
    raw = sample_increment(model, DT, np.random.default_rng(2))
    with pytest.raises(ValueError, match="truncated"):
        midpoint_step(state, nl, DT, raw, SP)
    midpoint_step(state, nl, DT, raw, SP, require_truncated=False)
    # no enforcement without noise coupling
    midpoint_step(state, cubic_nonlinearity(0.0), DT, raw, SP)
    nonsymplectic_step(state, nl, DT, raw, SP)  # explicit in noise: no requirement


def test_nonconvergence_reports_residual():
    state = _state(2)
    nl = cubic_nonlinearity(2.0**0.5)
    with pytest.raises(NonConvergenceError) as info:
        midpoint_step(state, nl, DT, _incr(3), SolverParams(fp_tol=1e-12, max_iter=1))
    assert info.value.residual > 0


def test_nonsymplectic_modes_differ():
    state = _state(4)
    nl = cubic_nonlinearity(2.0**0.5)
    incr = _incr(5)
    add = nonsymplectic_step(state, nl, DT, incr, SP, noise_mode="additive")
    mul = nonsymplectic_step(state, nl, DT, incr, SP, noise_mode="multiplicative")
    assert not np.allclose(add.values, mul.values, atol=1e-8)
    with pytest.raises(ValueError):
        nonsymplectic_step(state, nl, DT, incr, SP, noise_mode="bogus")


def test_nonsymplectic_dissipates_charge():
    state = _state(9)
    out = nonsymplectic_step(state, cubic_nonlinearity(0.0), DT, None, SP)
    assert discrete_charge(out) < discrete_charge(state)


def test_exact_phase_solution_matches_brute_force():
    grid = build_grid(1.0, 16)
    state = _state(11, grid)
    model = build_constant_noise(grid, 1.5)
    nl = free_nonlinearity(2.0**0.5)
    w = 0.3
    out = exact_phase_solution(state, nl, model, w, 0.25)
    expected = np.exp(-1j * nl.epsilon * 1.5 * w) * exact_linear_propagator(state, 0.25).values
    assert np.allclose(out.values, expected, atol=1e-13)
    with pytest.raises(ValueError):
        exact_phase_solution(state, nl, build_sine_noise(grid, 2, 1.0), w, 0.25)


def test_tangent_matches_finite_differences():
    state = _state(12)
    nl = cubic_nonlinearity(2.0**0.5)
    incr = _incr(13)
    rng = np.random.default_rng(14)
    d = rng.standard_normal(GRID.m) + 1j * rng.standard_normal(GRID.m)
    d /= math.sqrt(discrete_charge(ComplexField(GRID, d)))
    h = 1e-6
    for scheme, step in (
        ("midpoint", lambda s: midpoint_step(s, nl, DT, incr, SP)),
        ("nonsymplectic", lambda s: nonsymplectic_step(s, nl, DT, incr, SP)),
    ):
        fd = (step(ComplexField(GRID, state.values + h * d)).values - step(state).values) / h
        tg = tangent_step(state, ComplexField(GRID, d), nl, DT, incr, SP, scheme=scheme).values
        assert np.max(np.abs(fd - tg)) <= 1e-5
    with pytest.raises(ValueError):
        tangent_step(state, ComplexField(GRID, d), nl, DT, incr, SP, scheme="srk")


def test_integrate_path_recording_and_determinism():
    state = _state(15)
    nl = cubic_nonlinearity(2.0**0.5)
    model = build_sine_noise(GRID, 2, 1.0)
    runs = []
    for _ in range(2):
        rng = np.random.default_rng(99)
        runs.append(integrate_path(state, "midpoint", nl, DT, 10, model, rng, SP, record_every=4))
    # records at steps 0, 4, 8, 10
    assert len(runs[0]) == 4
    assert [round(r.time / DT) for r in runs[0]] == [0, 4, 8, 10]
    assert np.all(runs[0][-1].state.values == runs[1][-1].state.values)
    assert runs[0][-1].iterations_used >= 1


def test_integrate_path_error_carries_step_index():
    state = _state(16)
    nl = cubic_nonlinearity(2.0**0.5)
    model = build_sine_noise(GRID, 1, 1.0)
    rng = np.random.default_rng(0)
    with pytest.raises(NonConvergenceError, match="step 1:"):
        integrate_path(state, "midpoint", nl, DT, 5, model, rng, SolverParams(max_iter=1))


def test_integrate_path_validation():
    state = _state(17)
    nl = free_nonlinearity(0.0)
    model = build_sine_noise(GRID, 0, 1.0)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        integrate_path(state, "midpoint", nl, DT, -1, model, rng, SP)
    with pytest.raises(ValueError):
        integrate_path(state, "midpoint", nl, DT, 1, model, rng, SP, record_every=0)
    with pytest.raises(ValueError):
        integrate_path(state, "bogus", nl, DT, 1, model, rng, SP)


def test_divergence_guard_trips():
    state = _state(18)
    big = ComplexField(GRID, 1e6 * state.values)
    nl = cubic_nonlinearity(0.0)
    with pytest.raises((DivergenceError, NonConvergenceError)):
        midpoint_step(big, nl, 1.0, None, SolverParams(divergence_guard=1e3))
