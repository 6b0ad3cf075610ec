"""Stochastic Runge-Kutta coefficient sets and the symplecticity conditions."""

from __future__ import annotations

import dataclasses
from typing import Tuple

import numpy as np


@dataclasses.dataclass(frozen=True)
class Tableau:
    """Coefficients (a0, a1, b0, b1) of an s-stage stochastic RK method."""

    stages: int
    a0: np.ndarray
    a1: np.ndarray
    b0: np.ndarray
    b1: np.ndarray

    def __post_init__(self):
        for name in ("a0", "a1", "b0", "b1"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))


def validate(t: Tableau) -> None:
    """Check dimension consistency; raises ValueError naming the bad block."""
    if t.stages < 1:
        raise ValueError(f"stage count must be positive, got {t.stages}")
    s = t.stages
    for name, shape in (("a0", (s, s)), ("a1", (s, s)), ("b0", (s,)), ("b1", (s,))):
        block = getattr(t, name)
        if block.shape != shape:
            raise ValueError(f"block {name} has shape {block.shape}, expected {shape}")


def midpoint_tableau() -> Tableau:
    """One-stage tableau a = 1/2, b = 1 for both the drift and noise blocks."""
    return Tableau(1, [[0.5]], [[0.5]], [1.0], [1.0])


def symplectic_defects(t: Tableau) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three bilinear defect matrices; all vanish for a symplectic tableau."""
    validate(t)
    b0 = t.b0[:, None]
    b1 = t.b1[:, None]
    d00 = b0 * t.b0[None, :] - b0 * t.a0 - (b0 * t.a0).T
    d01 = b0 * t.b1[None, :] - b0 * t.a1 - (b1 * t.a0).T
    d11 = b1 * t.b1[None, :] - b1 * t.a1 - (b1 * t.a1).T
    return d00, d01, d11


def is_symplectic(t: Tableau, tol: float = 1e-14) -> Tuple[bool, float]:
    """Evaluate the symplecticity conditions; returns (flag, max defect)."""
    if tol < 0:
        raise ValueError(f"tolerance must be non-negative, got {tol}")
    defect = max(float(np.max(np.abs(d))) for d in symplectic_defects(t))
    return defect <= tol, defect
