"""Q-Wiener noise models, increment sampling, truncation and path coupling.

A noise model is a finite collection of sampled mode shapes; an increment is
one Gaussian draw per mode together with the assembled spatial field.
"""

from __future__ import annotations

import dataclasses
import math
from typing import List, Tuple

import numpy as np

from stosym.grid import Grid, RealField


@dataclasses.dataclass(frozen=True)
class NoiseModel:
    """Sampled covariance-square-root eigenstructure on a grid."""

    grid: Grid
    mode_shapes: np.ndarray  # (M, m)
    aleph_q: np.ndarray  # (m,), sum over modes of shape^2

    def __post_init__(self):
        shapes = np.asarray(self.mode_shapes, dtype=np.float64)
        if shapes.ndim != 2 or shapes.shape[1] != self.grid.m:
            raise ValueError(f"mode shapes must be (M, {self.grid.m}), got {shapes.shape}")
        object.__setattr__(self, "mode_shapes", shapes)
        object.__setattr__(self, "aleph_q", np.asarray(self.aleph_q, dtype=np.float64))

    @property
    def mode_count(self) -> int:
        return self.mode_shapes.shape[0]

    @property
    def aleph_q_field(self) -> RealField:
        return RealField(self.grid, self.aleph_q)

    def is_constant(self) -> bool:
        """True for a single spatially constant mode."""
        return self.mode_count == 1 and np.all(self.mode_shapes[0] == self.mode_shapes[0, 0])


def build_sine_noise(grid: Grid, modes: int, decay_p: float) -> NoiseModel:
    """Modes ell^(-decay_p) * sin(pi*ell*x), ell = 1..modes."""
    if modes < 0:
        raise ValueError(f"mode count must be non-negative, got {modes}")
    if decay_p < 0:
        raise ValueError(f"decay exponent must be non-negative, got {decay_p}")
    ell = np.arange(1, modes + 1, dtype=np.float64)
    shapes = ell[:, None] ** (-decay_p) * np.sin(np.pi * ell[:, None] * grid.x[None, :])
    if modes == 0:
        shapes = np.zeros((0, grid.m))
    return NoiseModel(grid, shapes, np.sum(shapes**2, axis=0))


def build_constant_noise(grid: Grid, amplitude: float) -> NoiseModel:
    """Single spatially constant mode; supports the analytic phase oracle."""
    shapes = np.full((1, grid.m), float(amplitude))
    return NoiseModel(grid, shapes, np.sum(shapes**2, axis=0))


@dataclasses.dataclass(frozen=True)
class WienerIncrement:
    """Per-mode draws xi_l*sqrt(dt) and the assembled spatial increment."""

    model: NoiseModel
    mode_draws: np.ndarray  # (M,)
    field: np.ndarray  # (m,)
    dt: float
    truncated: bool = False

    def assemble(self) -> np.ndarray:
        """Recompute the spatial field from the stored draws."""
        return assemble_field(self.model, self.mode_draws)


def assemble_field(model: NoiseModel, mode_draws: np.ndarray) -> np.ndarray:
    if model.mode_count == 0:
        return np.zeros(model.grid.m)
    return mode_draws @ model.mode_shapes


def increment_from_draws(
    model: NoiseModel, mode_draws: np.ndarray, dt: float, truncated: bool = False
) -> WienerIncrement:
    draws = np.asarray(mode_draws, dtype=np.float64)
    if draws.shape != (model.mode_count,):
        raise ValueError(f"expected {model.mode_count} mode draws, got shape {draws.shape}")
    return WienerIncrement(model, draws, assemble_field(model, draws), float(dt), truncated)


def sample_increment(model: NoiseModel, dt: float, rng: np.random.Generator) -> WienerIncrement:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    draws = math.sqrt(dt) * rng.standard_normal(model.mode_count)
    return increment_from_draws(model, draws, dt)


def truncation_bound(dt: float, k: float = 2.0) -> float:
    """Clamp level A = sqrt(2k |ln dt|); requires dt < 1 and k >= 1."""
    if not 0 < dt < 1:
        raise ValueError(f"truncation needs 0 < dt < 1, got {dt}")
    if k < 1:
        raise ValueError(f"truncation parameter k must be >= 1, got {k}")
    return math.sqrt(2.0 * k * abs(math.log(dt)))


def truncate_increment(incr: WienerIncrement, k: float = 2.0) -> WienerIncrement:
    """Clamp each standardized draw to [-A, A] and reassemble the field."""
    if incr.truncated:
        raise ValueError("increment is already truncated")
    bound = truncation_bound(incr.dt, k)
    scale = math.sqrt(incr.dt)
    clipped = np.clip(incr.mode_draws / scale, -bound, bound) * scale
    return increment_from_draws(incr.model, clipped, incr.dt, truncated=True)


def refine_and_sum(
    model: NoiseModel, dt_coarse: float, refinement: int, rng: np.random.Generator
) -> Tuple[WienerIncrement, List[WienerIncrement]]:
    """Draw `refinement` fine increments and the coarse increment they sum to."""
    if refinement < 1:
        raise ValueError(f"refinement must be >= 1, got {refinement}")
    dt_fine = dt_coarse / refinement
    fine = [sample_increment(model, dt_fine, rng) for _ in range(refinement)]
    coarse_draws = np.sum([f.mode_draws for f in fine], axis=0)
    return increment_from_draws(model, coarse_draws, dt_coarse), fine
