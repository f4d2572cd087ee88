"""Kernel backend selection.

The hot sliding-window kernels exist twice: numba-compiled in
`_kernels_numba` and pure numpy in `_kernels_numpy`. The active backend is
chosen by the FCA_BACKEND environment variable ("auto", "numba", "numpy";
default "auto" = numba when importable) and can be overridden per process
with :func:`set_backend`, which the benchmark harness uses to compare both
paths on identical inputs.
"""

import os
import warnings

from . import _kernels_numpy
from .errors import InvalidParameter

_CHOICES = ("auto", "numba", "numpy")
_override = None
_numba_module = None
_numba_failed = False


def set_backend(name):
    """Force a backend for this process ("auto" restores env-based selection)."""
    global _override
    if name not in _CHOICES:
        raise InvalidParameter(f"backend must be one of {_CHOICES}, got {name!r}")
    _override = None if name == "auto" else name


def backend_override():
    """The currently forced backend name, or None when env-selected."""
    return _override


def _requested():
    if _override is not None:
        return _override
    env = os.environ.get("FCA_BACKEND", "auto").strip().lower()
    if env not in _CHOICES:
        raise InvalidParameter(f"FCA_BACKEND must be one of {_CHOICES}, got {env!r}")
    return env


def _load_numba():
    global _numba_module, _numba_failed
    if _numba_module is None and not _numba_failed:
        try:
            from . import _kernels_numba
            _numba_module = _kernels_numba
        except ImportError:
            _numba_failed = True
            warnings.warn("numba is not available; falling back to the pure-numpy kernels")
    return _numba_module


def kernels(name=None):
    """Return the kernel module for `name` (default: the active backend)."""
    choice = name if name is not None else _requested()
    if choice not in _CHOICES:
        raise InvalidParameter(f"backend must be one of {_CHOICES}, got {choice!r}")
    if choice == "numpy":
        return _kernels_numpy
    mod = _load_numba()
    if mod is None:
        if choice == "numba":
            raise InvalidParameter("numba backend requested but numba failed to import")
        return _kernels_numpy
    return mod


def backend_name():
    """Name of the backend :func:`kernels` currently resolves to."""
    return "numpy" if kernels() is _kernels_numpy else "numba"


def set_threads(n):
    """Cap worker threads for the numba backend (no-op for pure numpy)."""
    n = int(n)
    if n < 1:
        raise InvalidParameter(f"thread count must be >= 1, got {n}")
    try:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def threads_from_env(default=None):
    """Resolve the FCA_NUM_THREADS fallback used by the CLI."""
    raw = os.environ.get("FCA_NUM_THREADS")
    if raw is None or not raw.strip():
        return default
    try:
        n = int(raw)
    except ValueError:
        raise InvalidParameter(f"FCA_NUM_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise InvalidParameter(f"FCA_NUM_THREADS must be >= 1, got {n}")
    return n
