"""Grid, field containers, discrete operators and the Cayley/eigenbasis maps."""

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from stosym.grid import (
    ComplexField,
    build_grid,
    cayley_apply,
    charge_values,
    discrete_charge,
    discrete_energy,
    discrete_inner,
    discrete_norm,
    exact_linear_propagator,
    from_sine_modes,
    gradient_energy_values,
    laplacian_apply,
    laplacian_eigenvalues,
    laplacian_eigenvector,
    laplacian_values,
    to_sine_modes,
)


def _random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    return ComplexField(grid, rng.standard_normal(grid.m) + 1j * rng.standard_normal(grid.m))


def test_grid_geometry():
    grid = build_grid(1.0, 64)
    assert grid.dx == 2.0 / 64
    assert grid.m == 63
    assert grid.x.shape == (63,)
    assert grid.x[0] == pytest.approx(-1.0 + grid.dx)
    assert grid.x[-1] == pytest.approx(1.0 - grid.dx)


def test_grid_validation():
    with pytest.raises(ValueError):
        build_grid(0.0, 64)
    with pytest.raises(ValueError):
        build_grid(1.0, 2)


def test_field_validation():
    grid = build_grid(1.0, 8)
    with pytest.raises(ValueError):
        ComplexField(grid, np.zeros(5))
    with pytest.raises(ValueError):
        ComplexField(grid, np.full(grid.m, np.nan))


def test_laplacian_eigenpairs():
    grid = build_grid(1.0, 16)
    lams = laplacian_eigenvalues(grid)
    for k in range(1, grid.m + 1):
        v = laplacian_eigenvector(grid, k)
        out = laplacian_values(grid, v.astype(np.complex128))
        assert np.allclose(out, lams[k - 1] * v, atol=1e-9 * abs(lams[k - 1]))


def test_laplacian_eigenvalue_formula():
    # independent closed form: -(4/dx^2) sin^2(k pi / (2 n))
    grid = build_grid(1.0, 8)
    lams = laplacian_eigenvalues(grid)
    dx = 0.25
    hand = [-(4.0 / dx**2) * math.sin(k * math.pi / 16.0) ** 2 for k in range(1, 8)]
    assert np.allclose(lams, hand, rtol=1e-14)


def test_charge_and_norm_hand_values():
    grid = build_grid(1.0, 4)  # dx = 0.5, m = 3
    f = ComplexField(grid, np.array([1.0, 2.0, 1.0], dtype=complex))
    assert discrete_charge(f) == pytest.approx(3.0)
    assert discrete_norm(f) == pytest.approx(math.sqrt(3.0))
    assert charge_values(grid, f.values) == discrete_charge(f)


def test_gradient_energy_hand_value():
    grid = build_grid(1.0, 4)
    v = np.array([1.0, 2.0, 1.0], dtype=complex)
    # cell differences across [0,1,2,1,0]/dx: 2,2,-2,-2 -> dx*16 = 8
    assert gradient_energy_values(grid, v) == pytest.approx(8.0)


def test_gradient_energy_matches_quadratic_form():
    # dx * sum |forward diff|^2 equals -<A f, f> dx for Dirichlet data
    grid = build_grid(1.0, 32)
    f = _random_field(grid, 3)
    quad = -discrete_inner(laplacian_apply(f), f).real
    assert gradient_energy_values(grid, f.values) == pytest.approx(quad, rel=1e-12)


def test_discrete_energy_with_potential():
    grid = build_grid(1.0, 16)
    f = _random_field(grid, 1)
    s = np.abs(f.values) ** 2
    expected = gradient_energy_values(grid, f.values) - grid.dx * np.sum(s**2 / 2.0)
    assert discrete_energy(f, lambda s, x: s**2 / 2.0) == pytest.approx(expected, rel=1e-12)


def test_sine_transform_roundtrip_and_eigenvectors():
    grid = build_grid(1.0, 16)
    f = _random_field(grid, 7)
    back = from_sine_modes(grid, to_sine_modes(grid, f.values))
    assert np.allclose(back, f.values, atol=1e-13)
    c = to_sine_modes(grid, laplacian_eigenvector(grid, 3).astype(complex))
    expected = np.zeros(grid.m)
    expected[2] = 1.0
    assert np.allclose(c, expected, atol=1e-13)


def test_cayley_is_unitary_and_has_correct_symbol():
    grid = build_grid(1.0, 16)
    dt = 2.0**-7
    f = _random_field(grid, 5)
    s_f, t_f = cayley_apply(f, dt)
    assert discrete_charge(s_f) == pytest.approx(discrete_charge(f), rel=1e-12)
    # on the k-th eigenvector the rational map acts by (1+i*lam*dt/2)/(1-i*lam*dt/2)
    lam = laplacian_eigenvalues(grid)[4]
    v = ComplexField(grid, laplacian_eigenvector(grid, 5).astype(complex))
    s_v, t_v = cayley_apply(v, dt)
    mult = (1.0 + 0.5j * lam * dt) / (1.0 - 0.5j * lam * dt)
    assert np.allclose(s_v.values, mult * v.values, atol=1e-12)
    assert np.allclose(t_v.values, v.values / (1.0 - 0.5j * lam * dt), atol=1e-12)


def test_exact_linear_propagator_against_dense_expm():
    grid = build_grid(1.0, 10)
    f = _random_field(grid, 11)
    t = 0.37
    dense = np.zeros((grid.m, grid.m))
    for i in range(grid.m):
        e = np.zeros(grid.m, dtype=complex)
        e[i] = 1.0
        dense[:, i] = laplacian_values(grid, e).real
    expected = scipy.linalg.expm(1j * t * dense) @ f.values
    out = exact_linear_propagator(f, t)
    assert np.allclose(out.values, expected, atol=1e-10)
    assert discrete_charge(out) == pytest.approx(discrete_charge(f), rel=1e-12)


def test_exact_linear_propagator_validation():
    grid = build_grid(1.0, 8)
    f = _random_field(grid)
    with pytest.raises(ValueError):
        exact_linear_propagator(f, -0.1)
    assert np.allclose(exact_linear_propagator(f, 0.0).values, f.values, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), phase=st.floats(-math.pi, math.pi))
def test_charge_phase_invariance(seed, phase):
    grid = build_grid(1.0, 12)
    f = _random_field(grid, seed)
    rotated = ComplexField(grid, np.exp(1j * phase) * f.values)
    assert discrete_charge(rotated) == pytest.approx(discrete_charge(f), rel=1e-12)
    assert discrete_charge(f) >= 0.0
