"""Hot numeric kernels with a selectable backend.

The backend is picked once at import from the ``HYPCALORON_BACKEND``
environment variable: ``numba`` (default when numba imports) or ``numpy``.
Both modules stay importable so tests and benchmarks can compare them.
"""
import importlib
import os
import warnings

from . import _numpy

_requested = os.environ.get("HYPCALORON_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"HYPCALORON_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

_numba = None
if _requested == "numba":
    try:
        # import_module, not "from . import": the name _numba already exists here
        _numba = importlib.import_module(f"{__name__}._numba")
    except ImportError:  # pragma: no cover - depends on environment
        warnings.warn("numba is not available; falling back to numpy kernels", RuntimeWarning)

_impl = _numba if _numba is not None else _numpy
BACKEND = "numba" if _numba is not None else "numpy"

apply_operator = _impl.apply_operator
laplacian5 = _impl.laplacian5
tridiag_modes = _impl.tridiag_modes


def implementations():
    """Return ``{name: module}`` for every backend that imported."""
    found = {"numpy": _numpy}
    if _numba is not None:
        found["numba"] = _numba
    return found
