"""Kernel backend selection.

The compiled extension is preferred when importable; set STOSYM_PURE_PYTHON
to any non-empty value to force the pure-Python kernels (used by the
benchmark and as a safety hatch on platforms without a compiler).
"""

import os

if os.environ.get("STOSYM_PURE_PYTHON"):
    from stosym import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from stosym import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from stosym import _kernels_py as _impl

        BACKEND = "python"

tridiag_factor = _impl.tridiag_factor
tridiag_solve = _impl.tridiag_solve
