"""Selects the coordinate-descent kernel at import time.

The compiled extension is used when it was built; setting
``HONESTSETS_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
import os

from . import _cd_fallback

BACKEND = "python"
cd_quadratic = _cd_fallback.cd_quadratic

if not os.environ.get("HONESTSETS_PURE_PYTHON"):
    try:
        from ._cd_kernel import cd_quadratic  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass


def load(name):
    """Return the ``cd_quadratic`` implementation for ``name`` ('cython' or 'python')."""
    if name == "python":
        return _cd_fallback.cd_quadratic
    if name == "cython":
        from ._cd_kernel import cd_quadratic as kernel
        return kernel
    raise ValueError(f"unknown backend {name!r}")
