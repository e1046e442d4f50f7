"""Backend selection for the propagation kernel.

The compiled ``_rk4`` extension is used when importable; set
``PAPSIM_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

import os

from . import _rk4_py

BACKEND = "python"
rk4_propagate = _rk4_py.rk4_propagate

if os.environ.get("PAPSIM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._rk4 import rk4_propagate  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        pass

python_rk4_propagate = _rk4_py.rk4_propagate
