"""Selects the compiled kernels when available, pure numpy otherwise.

Set CATSDR_BACKEND=python to force the fallback, CATSDR_BACKEND=cython to
require the extension (raising if it is missing).
"""

from __future__ import annotations

import os

from .errors import ParameterError

_choice = os.environ.get("CATSDR_BACKEND", "").strip().lower()

if _choice in ("python", "numpy", "pure"):
    from . import _kernels_py as kernels

    _BACKEND = "python"
elif _choice in ("", "cython", "compiled", "c"):
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        _BACKEND = "cython"
    except ImportError:
        if _choice:
            raise
        from . import _kernels_py as kernels

        _BACKEND = "python"
else:
    raise ParameterError(
        f"unknown CATSDR_BACKEND value {_choice!r}; use 'cython' or 'python'"
    )


def backend_name() -> str:
    """Which kernel implementation is active: 'cython' or 'python'."""
    return _BACKEND
