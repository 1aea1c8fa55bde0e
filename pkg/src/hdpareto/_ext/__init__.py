"""Kernel selection.

The compiled Cython kernel is used when it imports; otherwise, or when the
environment variable ``HDPARETO_PURE_PYTHON`` is set to a non-empty value,
the pure-Python implementation with the identical signature is used.
"""

import os

from . import _kernels_py

if os.environ.get("HDPARETO_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
cd_quadratic_l1 = (_compiled or _kernels_py).cd_quadratic_l1


def backends():
    """Map of available backend name -> kernel module."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out
