"""Kernel backend selection.

Two interchangeable backends execute compiled circuits: "numba" (jit
compiled, the default when numba imports cleanly) and "numpy" (pure
vectorized fallback). The environment variable MEDQ_BACKEND forces one of
them; `set_backend` switches at runtime, which the benchmark script and
tests use to compare the two.
"""

from __future__ import annotations

import os

from .errors import UnsupportedConfigError

BACKEND_ENV_VAR = "MEDQ_BACKEND"
THREADS_ENV_VAR = "MEDQ_THREADS"

_BACKENDS = ("numba", "numpy")
_active: str | None = None


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _resolve() -> str:
    requested = os.environ.get(BACKEND_ENV_VAR, "").strip().lower()
    if requested:
        if requested not in _BACKENDS:
            raise UnsupportedConfigError(
                f"{BACKEND_ENV_VAR}={requested!r} is not one of {_BACKENDS}"
            )
        if requested == "numba" and not _numba_available():
            raise UnsupportedConfigError(
                f"{BACKEND_ENV_VAR}=numba requested but numba cannot be imported"
            )
        return requested
    return "numba" if _numba_available() else "numpy"


def active_backend() -> str:
    """Name of the backend in use, resolving it on first call."""
    global _active
    if _active is None:
        _active = _resolve()
    return _active


def set_backend(name: str) -> str:
    """Force a backend by name and return the previously active one."""
    if name not in _BACKENDS:
        raise UnsupportedConfigError(f"unknown backend {name!r}, expected one of {_BACKENDS}")
    if name == "numba" and not _numba_available():
        raise UnsupportedConfigError("numba backend requested but numba cannot be imported")
    global _active
    previous = active_backend()
    _active = name
    return previous


def kernels():
    """Module object providing run_program and adjoint_pass."""
    if active_backend() == "numba":
        from . import kernels_numba

        return kernels_numba
    from . import kernels_numpy

    return kernels_numpy


def thread_count() -> int:
    """Worker process budget for grid searches.

    Reads MEDQ_THREADS when set (a positive integer), otherwise the number
    of CPUs the machine reports.
    """
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value < 1:
            raise UnsupportedConfigError(
                f"{THREADS_ENV_VAR}={raw!r} must be a positive integer"
            )
        return value
    return os.cpu_count() or 1
