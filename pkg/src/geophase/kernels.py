"""Backend selection for the propagation loop.

The compiled extension is used when it is importable; setting the
environment variable ``GEOPHASE_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("GEOPHASE_PURE_PYTHON", "") not in ("", "0"):
    propagate = _kernels_py.propagate
    BACKEND = "python"
else:
    try:
        from ._kernels import propagate
        BACKEND = "cython"
    except ImportError:  # extension not built
        propagate = _kernels_py.propagate
        BACKEND = "python"

__all__ = ["propagate", "BACKEND"]
