"""Benchmark the compiled tridiagonal kernels against the pure-Python
(LAPACK-backed) fallback, and the full midpoint step with each backend.

Run:  python3 benchmarks/bench_kernels.py [--sizes 63 511 2047] [--repeats 200]

The two backends must agree bitwise-tightly (checked here to 1e-12); the
table reports per-call timings so the import-time backend choice can be
judged on real numbers.
"""

from __future__ import annotations

import argparse
import importlib
import os
import statistics
import subprocess
import sys
import time

import numpy as np


def _load_backends():
    backends = {}
    try:
        from stosym import _kernels

        backends["cython"] = _kernels
    except ImportError:
        pass
    from stosym import _kernels_py

    backends["python"] = _kernels_py
    return backends


def _bench(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_solves(sizes, repeats):
    backends = _load_backends()
    rng = np.random.default_rng(0)
    print(f"{'m':>6}  {'backend':>8}  {'factor (us)':>12}  {'solve (us)':>12}")
    for m in sizes:
        c = 0.5j * 2.0 ** -9 * (m + 1) ** 2 / 4.0
        diag = np.full(m, 1.0 + 2.0 * c, dtype=np.complex128)
        off = np.full(m - 1, -c, dtype=np.complex128)
        rhs = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        outputs = {}
        for name, mod in backends.items():
            fact = mod.tridiag_factor(off, diag, off)
            t_factor = _bench(lambda: mod.tridiag_factor(off, diag, off), repeats)
            t_solve = _bench(lambda: mod.tridiag_solve(fact, rhs), repeats)
            outputs[name] = np.asarray(mod.tridiag_solve(fact, rhs))
            print(f"{m:>6}  {name:>8}  {t_factor * 1e6:>12.2f}  {t_solve * 1e6:>12.2f}")
        if len(outputs) == 2:
            gap = np.max(np.abs(outputs["cython"] - outputs["python"]))
            assert gap < 1e-12, f"backends disagree by {gap:.2e} at m={m}"
            print(f"{'':>6}  backends agree to {gap:.2e}")


def bench_step(repeats):
    """Time a full midpoint step per backend by re-running in a subprocess
    with STOSYM_PURE_PYTHON toggled (the backend is chosen at import)."""
    code = r"""
import time, numpy as np
from stosym import *
from stosym._backend import BACKEND
from stosym.integrator import _midpoint_values, SolverParams
g = build_grid(1.0, 512)
vals = np.sin(np.pi * g.x).astype(complex)
nl = cubic_nonlinearity(2**0.5)
d_w = 0.01 * np.sin(np.pi * g.x)
sp = SolverParams()
_midpoint_values(g, vals, nl, 2.0**-9, d_w, sp, 0.0)  # warm caches
best = float("inf")
for _ in range(%d):
    t0 = time.perf_counter()
    _midpoint_values(g, vals, nl, 2.0**-9, d_w, sp, 0.0)
    best = min(best, time.perf_counter() - t0)
print(f"{BACKEND:>8}  midpoint step (n_cells=512): {best*1e6:.1f} us")
""" % repeats
    for env_val in (None, "1"):
        env = dict(os.environ)
        env.pop("STOSYM_PURE_PYTHON", None)
        if env_val:
            env["STOSYM_PURE_PYTHON"] = env_val
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[63, 511, 2047])
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()
    bench_solves(args.sizes, args.repeats)
    print()
    bench_step(args.repeats)


if __name__ == "__main__":
    main()
