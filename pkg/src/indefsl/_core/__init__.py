"""Hot kernels: compiled extension when available, numpy otherwise.

Set ``INDEFSL_PURE_PYTHON=1`` to force the numpy implementation.
"""
import os

from . import _kernels_py as python_kernels

try:
    from . import _kernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("INDEFSL_PURE_PYTHON", "") != "1":
    kernels = compiled_kernels
    BACKEND = "cython"
else:
    kernels = python_kernels
    BACKEND = "python"

__all__ = ["kernels", "python_kernels", "compiled_kernels", "BACKEND"]
