"""Kernel backend selection.

The hot per-line kernels exist twice: numba-compiled loops and a pure-numpy
fallback. Set CUBISTMERGE_BACKEND=numba or =numpy to force one; when unset
(or "auto") the numba path is used if numba imports, numpy otherwise. Both
backends produce bit-identical results; numba is just faster.
"""

from __future__ import annotations

import os

_BACKENDS = ("auto", "numba", "numpy")
_active_name: str | None = None
_active_module = None


def use_backend(name: str) -> str:
    """Force a backend ("numba", "numpy", or "auto"). Returns the resolved name."""
    global _active_name, _active_module
    if name not in _BACKENDS:
        raise RuntimeError(f"unknown backend {name!r}, expected one of {_BACKENDS}")
    if name in ("auto", "numba"):
        try:
            from . import _kernels_nb

            _active_name, _active_module = "numba", _kernels_nb
            return _active_name
        except ImportError:
            if name == "numba":
                raise RuntimeError("numba backend requested but numba is not importable")
    from . import _kernels_np

    _active_name, _active_module = "numpy", _kernels_np
    return _active_name


def active_backend() -> str:
    """Name of the backend in use ("numba" or "numpy")."""
    kernels()
    return _active_name  # type: ignore[return-value]


def kernels():
    """The active kernel module (resolved lazily from the environment)."""
    if _active_module is None:
        use_backend(os.environ.get("CUBISTMERGE_BACKEND", "auto").strip().lower() or "auto")
    return _active_module
