"""Structure-preserving time integration of the stochastic nonlinear
Schrödinger equation with multiplicative Stratonovich noise.

The package provides finite-difference spatial discretization on a Dirichlet
interval, Q-Wiener noise sampling with increment truncation, stochastic
symplectic Runge-Kutta steppers (the implicit midpoint scheme in Cayley form
in particular), structure diagnostics (charge drift, symplectic defect of the
one-step Jacobian, discrete energy identities) and a strong-convergence
harness built on Brownian path coupling.
"""

from stosym._backend import BACKEND
from stosym.convergence import (
    ConvergenceConfig,
    ConvergenceReport,
    Experiment,
    fit_order,
    oracle_convergence,
    run_convergence,
    run_ensemble,
)
from stosym.diagnostics import (
    EnsembleStats,
    averaged_energy_slope,
    charge_drift,
    prop36_residual,
    step_jacobian,
    symplectic_defect,
    theoretical_energy_slope,
)
from stosym.grid import (
    ComplexField,
    Grid,
    RealField,
    build_grid,
    cayley_apply,
    discrete_charge,
    discrete_energy,
    discrete_inner,
    discrete_norm,
    exact_linear_propagator,
    laplacian_apply,
)
from stosym.integrator import (
    DivergenceError,
    NonConvergenceError,
    Nonlinearity,
    NumericalError,
    SolverParams,
    StepRecord,
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
    NoiseModel,
    WienerIncrement,
    build_constant_noise,
    build_sine_noise,
    increment_from_draws,
    refine_and_sum,
    sample_increment,
    truncate_increment,
    truncation_bound,
)
from stosym.tableau import Tableau, is_symplectic, midpoint_tableau, symplectic_defects

__version__ = "1.0.0"

__all__ = [
    "BACKEND",
    "ComplexField",
    "ConvergenceConfig",
    "ConvergenceReport",
    "DivergenceError",
    "EnsembleStats",
    "Experiment",
    "Grid",
    "NoiseModel",
    "NonConvergenceError",
    "Nonlinearity",
    "NumericalError",
    "RealField",
    "SolverParams",
    "StepRecord",
    "Tableau",
    "WienerIncrement",
    "averaged_energy_slope",
    "build_constant_noise",
    "build_grid",
    "build_sine_noise",
    "cayley_apply",
    "charge_drift",
    "cubic_nonlinearity",
    "discrete_charge",
    "discrete_energy",
    "discrete_inner",
    "discrete_norm",
    "exact_linear_propagator",
    "exact_phase_solution",
    "fit_order",
    "free_nonlinearity",
    "increment_from_draws",
    "integrate_path",
    "is_symplectic",
    "laplacian_apply",
    "midpoint_step",
    "midpoint_tableau",
    "nonsymplectic_step",
    "oracle_convergence",
    "prop36_residual",
    "refine_and_sum",
    "run_convergence",
    "run_ensemble",
    "sample_increment",
    "srk_step",
    "step_jacobian",
    "symplectic_defect",
    "symplectic_defects",
    "tangent_step",
    "theoretical_energy_slope",
    "truncate_increment",
    "truncation_bound",
]
