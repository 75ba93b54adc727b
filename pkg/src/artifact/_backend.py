"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``ARTIFACT_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernel_py

if os.environ.get("ARTIFACT_PURE_PYTHON", "") not in ("", "0"):
    kernel = _kernel_py
else:
    try:
        from . import _kernel as kernel  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        kernel = _kernel_py

BACKEND = kernel.BACKEND
SurfaceKernel = kernel.SurfaceKernel


def available_backends():
    out = {"python": _kernel_py}
    try:
        from . import _kernel as compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        out["cython"] = compiled
    return out


# each backend raises its own class; make_kernel can build either, so catch all
KERNEL_ERRORS = tuple({m.KernelError for m in available_backends().values()})
