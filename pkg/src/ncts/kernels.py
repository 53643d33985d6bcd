"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python reference is used.  ``NCTS_KERNEL=python`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
integrate = _kernels_py.integrate

if os.environ.get("NCTS_KERNEL", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        BACKEND = "cython"
        integrate = _compiled.integrate

OK = _kernels_py.OK
ALGEBRAIC_FAIL = _kernels_py.ALGEBRAIC_FAIL
NONFINITE = _kernels_py.NONFINITE


def get_integrate(backend: str):
    """Return the ``integrate`` routine of a named backend."""
    if backend == "python":
        return _kernels_py.integrate
    if backend == "cython":
        from . import _kernels

        return _kernels.integrate
    raise ValueError(f"unknown kernel backend {backend!r}")
