"""Spatial grid, complex field storage and the discrete Dirichlet operators.

Interior unknowns live at x_j = -L + j*dx for j = 1..m with m = n_cells - 1;
the boundary values are identically zero.  The Laplacian is the standard
second-order central difference, which is symmetric and therefore supports
the discrete conservation arguments used elsewhere in the package.
"""

from __future__ import annotations

import dataclasses
from functools import cached_property, lru_cache
from typing import Callable, Tuple

import numpy as np
import scipy.fft

from stosym._backend import tridiag_factor, tridiag_solve


@dataclasses.dataclass(frozen=True)
class Grid:
    """Uniform grid on [-half_width, half_width] with Dirichlet boundaries."""

    half_width: float
    n_cells: int

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_cells

    @property
    def m(self) -> int:
        """Number of interior points."""
        return self.n_cells - 1

    @cached_property
    def x(self) -> np.ndarray:
        """Interior point coordinates."""
        j = np.arange(1, self.n_cells)
        return -self.half_width + j * self.dx


def build_grid(half_width: float, n_cells: int) -> Grid:
    if not half_width > 0:
        raise ValueError(f"half_width must be positive, got {half_width}")
    if n_cells < 3:
        raise ValueError(f"n_cells must be at least 3, got {n_cells}")
    return Grid(float(half_width), int(n_cells))


def _check_values(grid: Grid, values: np.ndarray, dtype) -> np.ndarray:
    v = np.asarray(values, dtype=dtype)
    if v.shape != (grid.m,):
        raise ValueError(f"expected {grid.m} interior values, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("field contains non-finite entries")
    return v


@dataclasses.dataclass(frozen=True)
class ComplexField:
    """Complex-valued samples at the interior grid points."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values, np.complex128))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "ComplexField":
        return cls(grid, np.asarray(fn(grid.x), dtype=np.complex128))

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.copy())


@dataclasses.dataclass(frozen=True)
class RealField:
    """Real-valued samples at the interior grid points."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values, np.float64))


def laplacian_values(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Central-difference Dirichlet Laplacian applied to raw interior values."""
    out = -2.0 * v.copy()
    out[:-1] += v[1:]
    out[1:] += v[:-1]
    return out / grid.dx**2


def laplacian_apply(f: ComplexField) -> ComplexField:
    return ComplexField(f.grid, laplacian_values(f.grid, f.values))


def laplacian_eigenvalues(grid: Grid) -> np.ndarray:
    """Eigenvalues of the discrete Laplacian, k = 1..m."""
    k = np.arange(1, grid.n_cells)
    return -(4.0 / grid.dx**2) * np.sin(k * np.pi / (2.0 * grid.n_cells)) ** 2


def laplacian_eigenvector(grid: Grid, k: int) -> np.ndarray:
    """k-th sine eigenvector sampled at the interior points (not normalized)."""
    j = np.arange(1, grid.n_cells)
    return np.sin(k * np.pi * j / grid.n_cells)


def discrete_inner(f: ComplexField, g: ComplexField) -> complex:
    """Discrete L2 inner product dx * sum f conj(g)."""
    return f.grid.dx * complex(np.sum(f.values * np.conj(g.values)))


def charge_values(grid: Grid, v: np.ndarray) -> float:
    return grid.dx * float(np.sum(np.abs(v) ** 2))


def discrete_charge(f: ComplexField) -> float:
    """Rectangle-rule integral of |f|^2 (exact trapezoid: boundaries vanish)."""
    return charge_values(f.grid, f.values)


def norm_values(grid: Grid, v: np.ndarray) -> float:
    return float(np.sqrt(grid.dx) * np.linalg.norm(v))


def discrete_norm(f: ComplexField) -> float:
    return norm_values(f.grid, f.values)


def gradient_energy_values(grid: Grid, v: np.ndarray) -> float:
    """dx * sum over all m+1 cells of |forward difference|^2, boundaries zero."""
    padded = np.zeros(grid.m + 2, dtype=v.dtype)
    padded[1:-1] = v
    diff = np.diff(padded) / grid.dx
    return grid.dx * float(np.sum(np.abs(diff) ** 2))


def discrete_energy(f: ComplexField, potential=None) -> float:
    """Gradient energy minus the integrated potential Psi(|f|^2, x).

    potential is a callable (s, x) -> real, or None for the free case.
    """
    grid = f.grid
    energy = gradient_energy_values(grid, f.values)
    if potential is not None:
        s = np.abs(f.values) ** 2
        energy -= grid.dx * float(np.sum(potential(s, grid.x)))
    return energy


@lru_cache(maxsize=64)
def cayley_factor(grid: Grid, dt: float):
    """Factored (Id - i*dt/2 * A); shared by both Cayley operators."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    m = grid.m
    coeff = 0.5j * dt / grid.dx**2
    diag = np.full(m, 1.0 + 2.0 * coeff, dtype=np.complex128)
    off = np.full(m - 1, -coeff, dtype=np.complex128)
    return tridiag_factor(off, diag, off)


def cayley_apply_values(grid: Grid, v: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Raw-array Cayley pair: returns (S_hat v, T v) from a single solve."""
    fact = cayley_factor(grid, dt)
    t_v = tridiag_solve(fact, v)
    # Id + i*dt/2*A = 2*Id - (Id - i*dt/2*A), so S_hat v = 2*T v - v.
    return 2.0 * t_v - v, t_v


def cayley_apply(f: ComplexField, dt: float) -> Tuple[ComplexField, ComplexField]:
    s_v, t_v = cayley_apply_values(f.grid, f.values, dt)
    return ComplexField(f.grid, s_v), ComplexField(f.grid, t_v)


def _dst1(v: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(v):
        return scipy.fft.dst(v.real, type=1) + 1j * scipy.fft.dst(v.imag, type=1)
    return scipy.fft.dst(v, type=1)


def to_sine_modes(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Coefficients c_k with v_j = sum_k c_k sin(k pi j / n_cells)."""
    return _dst1(v) / grid.n_cells


def from_sine_modes(grid: Grid, c: np.ndarray) -> np.ndarray:
    return _dst1(c) / 2.0


def exact_linear_propagator(f: ComplexField, t: float) -> ComplexField:
    """exp(i*A*t) f for the discrete Laplacian, via the sine eigenbasis."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    grid = f.grid
    c = to_sine_modes(grid, f.values)
    c *= np.exp(1j * laplacian_eigenvalues(grid) * t)
    return ComplexField(grid, from_sine_modes(grid, c))
