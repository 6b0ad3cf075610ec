"""Strict JSON run-configuration parsing.

The document has five sections (problem, noise, scheme, solver, run).  Unknown
keys are errors, not warnings, and every complaint names the offending key
path so typos in experiment definitions cannot pass silently.
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Any, Dict, Optional, Tuple

import numpy as np

from stosym.convergence import Experiment
from stosym.grid import ComplexField, Grid, build_grid
from stosym.integrator import Nonlinearity, SolverParams, cubic_nonlinearity, free_nonlinearity
from stosym.noise import NoiseModel, build_constant_noise, build_sine_noise
from stosym.tableau import Tableau, midpoint_tableau, validate as validate_tableau


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


_EXPR_NAMES = {
    "pi": np.pi,
    "e": np.e,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "minimum": np.minimum,
    "maximum": np.maximum,
}


class Expression:
    """A picklable callable built from an arithmetic expression string.

    Only the names in the argument list plus a fixed numpy vocabulary are
    visible to the expression; it travels between processes as its source.
    """

    def __init__(self, source: str, args: Tuple[str, ...]):
        if not isinstance(source, str) or not source.strip():
            raise ConfigError(f"expression must be a non-empty string, got {source!r}")
        self.source = source
        self.args = tuple(args)
        try:
            self._code = compile(source, "<config expression>", "eval")
        except SyntaxError as err:
            raise ConfigError(f"bad expression {source!r}: {err}") from None
        for name in self._code.co_names:
            if name not in _EXPR_NAMES and name not in self.args:
                raise ConfigError(f"expression {source!r} uses unknown name {name!r}")

    def __call__(self, *values):
        scope = dict(_EXPR_NAMES)
        scope.update(zip(self.args, values))
        return eval(self._code, {"__builtins__": {}}, scope)

    def __reduce__(self):
        return (Expression, (self.source, self.args))

    def __eq__(self, other):
        return (
            isinstance(other, Expression)
            and self.source == other.source
            and self.args == other.args
        )


def _check_keys(section: Dict[str, Any], path: str, allowed) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected an object, got {type(section).__name__}")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}")


def _get(section, path, key, kind, default=..., predicate=None, describe=""):
    if key not in section:
        if default is ...:
            raise ConfigError(f"missing required key {path}.{key}")
        return default
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{path}.{key}: expected an integer, got {value!r}")
    if not isinstance(value, kind):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {value!r}")
    if predicate is not None and not predicate(value):
        raise ConfigError(f"{path}.{key}: {describe}, got {value!r}")
    return value


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated experiment description plus the raw document for echoing."""

    grid: Grid
    final_time: float
    epsilon: float
    nonlinearity: Nonlinearity
    initial: ComplexField
    noise: NoiseModel
    scheme: str
    tableau: Optional[Tableau]
    comparison_noise: str
    solver: SolverParams
    truncate_k: float
    dt: Optional[float]
    dt_list: Tuple[float, ...]
    dt_ref: Optional[float]
    n_paths: int
    master_seed: int
    record_every: int
    output_dir: str
    document: Dict[str, Any]

    def experiment(self, scheme: Optional[str] = None, truncate: bool = True) -> Experiment:
        return Experiment(
            initial=self.initial,
            nonlinearity=self.nonlinearity,
            noise=self.noise,
            solver=self.solver,
            scheme=scheme or self.scheme,
            tableau=self.tableau,
            truncate=truncate,
            trunc_k=self.truncate_k,
            comparison_noise=self.comparison_noise,
        )

    def with_seed(self, master_seed: int) -> "RunConfig":
        doc = json.loads(json.dumps(self.document))
        doc.setdefault("run", {})["master_seed"] = master_seed
        return dataclasses.replace(self, master_seed=master_seed, document=doc)


def _parse_nonlinearity(spec, epsilon: float) -> Nonlinearity:
    if spec == "cubic":
        return cubic_nonlinearity(epsilon)
    if spec == "free":
        return free_nonlinearity(epsilon)
    if isinstance(spec, str):
        raise ConfigError(
            f"problem.nonlinearity: expected 'cubic', 'free' or an object, got {spec!r}"
        )
    _check_keys(spec, "problem.nonlinearity", {"psi", "psi_prime", "psi_double_prime"})
    try:
        psi = Expression(_get(spec, "problem.nonlinearity", "psi", str), ("s", "x"))
        psi_p = Expression(_get(spec, "problem.nonlinearity", "psi_prime", str), ("s", "x", "t"))
        psi_pp = Expression(
            _get(spec, "problem.nonlinearity", "psi_double_prime", str), ("s", "x", "t")
        )
    except ConfigError as err:
        raise ConfigError(f"problem.nonlinearity: {err}") from None
    return Nonlinearity(psi, psi_p, psi_pp, epsilon)


def _parse_initial(spec, grid: Grid) -> ComplexField:
    if spec == "sin_pi":
        return ComplexField(grid, np.sin(np.pi * grid.x).astype(np.complex128))
    if isinstance(spec, dict):
        _check_keys(spec, "problem.initial", {"expression"})
        expr = Expression(_get(spec, "problem.initial", "expression", str), ("x",))
        values = np.asarray(expr(grid.x), dtype=np.complex128)
        if values.shape != grid.x.shape:
            values = np.full(grid.m, complex(values), dtype=np.complex128)
        return ComplexField(grid, values)
    raise ConfigError(f"problem.initial: expected 'sin_pi' or an object, got {spec!r}")


def _parse_noise(section, grid: Grid) -> Tuple[NoiseModel, float]:
    _check_keys(section, "noise", {"kind", "M", "decay_p", "truncate_k", "amplitude"})
    kind = _get(section, "noise", "kind", str, "sine")
    truncate_k = _get(
        section, "noise", "truncate_k", float, 2.0, lambda v: v >= 1, "must be >= 1"
    )
    if kind == "sine":
        modes = _get(section, "noise", "M", int, 1, lambda v: v >= 0, "must be >= 0")
        decay_p = _get(
            section, "noise", "decay_p", float, 1.0, lambda v: v >= 0, "must be >= 0"
        )
        if "amplitude" in section:
            raise ConfigError("noise.amplitude only applies to kind 'constant'")
        return build_sine_noise(grid, modes, decay_p), truncate_k
    if kind == "constant":
        for key in ("M", "decay_p"):
            if key in section:
                raise ConfigError(f"noise.{key} only applies to kind 'sine'")
        amplitude = _get(section, "noise", "amplitude", float, 1.0)
        return build_constant_noise(grid, amplitude), truncate_k
    raise ConfigError(f"noise.kind: expected 'sine' or 'constant', got {kind!r}")


def _parse_tableau(spec) -> Tableau:
    _check_keys(spec, "scheme.tableau", {"a0", "a1", "b0", "b1"})
    blocks = {}
    for name in ("a0", "a1", "b0", "b1"):
        if name not in spec:
            raise ConfigError(f"missing required key scheme.tableau.{name}")
        try:
            blocks[name] = np.asarray(spec[name], dtype=np.float64)
        except (TypeError, ValueError):
            raise ConfigError(f"scheme.tableau.{name}: expected a numeric array") from None
    tab = Tableau(len(blocks["b0"]), blocks["a0"], blocks["a1"], blocks["b0"], blocks["b1"])
    try:
        validate_tableau(tab)
    except ValueError as err:
        raise ConfigError(f"scheme.tableau: {err}") from None
    return tab


def parse_config(doc: Dict[str, Any]) -> RunConfig:
    _check_keys(doc, "<root>", {"problem", "noise", "scheme", "solver", "run"})
    if "problem" not in doc:
        raise ConfigError("missing required section 'problem'")
    if "run" not in doc:
        raise ConfigError("missing required section 'run'")

    problem = doc["problem"]
    _check_keys(problem, "problem", {"L", "n_cells", "T", "epsilon", "nonlinearity", "initial"})
    half_width = _get(problem, "problem", "L", float, 1.0, lambda v: v > 0, "must be > 0")
    n_cells = _get(problem, "problem", "n_cells", int, 64, lambda v: v >= 3, "must be >= 3")
    final_time = _get(problem, "problem", "T", float, predicate=lambda v: v > 0, describe="must be > 0")
    epsilon = _get(problem, "problem", "epsilon", float, 0.0)
    grid = build_grid(half_width, n_cells)
    nonlinearity = _parse_nonlinearity(problem.get("nonlinearity", "cubic"), epsilon)
    initial = _parse_initial(problem.get("initial", "sin_pi"), grid)

    noise, truncate_k = _parse_noise(doc.get("noise", {}), grid)

    scheme_sec = doc.get("scheme", {})
    _check_keys(scheme_sec, "scheme", {"name", "tableau", "comparison_noise"})
    scheme = _get(scheme_sec, "scheme", "name", str, "midpoint")
    if scheme not in ("midpoint", "srk", "nonsymplectic", "both"):
        raise ConfigError(
            f"scheme.name: expected midpoint|srk|nonsymplectic|both, got {scheme!r}"
        )
    tableau = None
    if "tableau" in scheme_sec:
        tableau = _parse_tableau(scheme_sec["tableau"])
    elif scheme == "srk":
        tableau = midpoint_tableau()
    comparison_noise = _get(scheme_sec, "scheme", "comparison_noise", str, "additive")
    if comparison_noise not in ("additive", "multiplicative"):
        raise ConfigError(
            "scheme.comparison_noise: expected 'additive' or 'multiplicative', "
            f"got {comparison_noise!r}"
        )

    solver_sec = doc.get("solver", {})
    _check_keys(solver_sec, "solver", {"fp_tol", "max_iter"})
    solver = SolverParams(
        fp_tol=_get(solver_sec, "solver", "fp_tol", float, 1e-12, lambda v: v > 0, "must be > 0"),
        max_iter=_get(
            solver_sec, "solver", "max_iter", int, 200, lambda v: v >= 1, "must be >= 1"
        ),
    )

    run = doc["run"]
    _check_keys(
        run,
        "run",
        {"dt", "dt_list", "dt_ref", "n_paths", "master_seed", "record_every", "output_dir"},
    )
    dt = _get(run, "run", "dt", float, None, lambda v: v > 0, "must be > 0")
    dt_ref = _get(run, "run", "dt_ref", float, None, lambda v: v > 0, "must be > 0")
    raw_list = run.get("dt_list", [])
    if not isinstance(raw_list, list) or any(
        not isinstance(v, (int, float)) or isinstance(v, bool) for v in raw_list
    ):
        raise ConfigError("run.dt_list: expected a list of numbers")
    dt_list = tuple(float(v) for v in raw_list)
    if any(v <= 0 for v in dt_list):
        raise ConfigError("run.dt_list: entries must be > 0")
    n_paths = _get(run, "run", "n_paths", int, 100, lambda v: v >= 1, "must be >= 1")
    master_seed = _get(run, "run", "master_seed", int, 0, lambda v: v >= 0, "must be >= 0")
    record_every = _get(run, "run", "record_every", int, 1, lambda v: v >= 1, "must be >= 1")
    output_dir = _get(run, "run", "output_dir", str, "out")

    return RunConfig(
        grid=grid,
        final_time=final_time,
        epsilon=epsilon,
        nonlinearity=nonlinearity,
        initial=initial,
        noise=noise,
        scheme=scheme,
        tableau=tableau,
        comparison_noise=comparison_noise,
        solver=solver,
        truncate_k=truncate_k,
        dt=dt,
        dt_list=dt_list,
        dt_ref=dt_ref,
        n_paths=n_paths,
        master_seed=master_seed,
        record_every=record_every,
        output_dir=output_dir,
        document=doc,
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    return parse_config(doc)
