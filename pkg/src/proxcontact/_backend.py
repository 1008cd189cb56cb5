"""Kernel backend selection.

The solver hot loops exist twice: a compiled Cython extension
(``proxcontact._kernels``) and a pure-Python twin (``_pykernels``).  The
compiled one is preferred when importable; ``PROXCONTACT_BACKEND=python`` or
``=compiled`` forces a choice, and tests switch at runtime via
``use_backend``.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _pykernels

try:
    from . import _kernels
    HAVE_COMPILED = True
except ImportError:
    _kernels = None
    HAVE_COMPILED = False

_VALID = ("compiled", "python")
_forced: str | None = None


def _env_default() -> str:
    env = os.environ.get("PROXCONTACT_BACKEND", "").strip().lower()
    if env in _VALID:
        if env == "compiled" and not HAVE_COMPILED:
            raise ImportError(
                "PROXCONTACT_BACKEND=compiled but the extension is not built"
            )
        return env
    return "compiled" if HAVE_COMPILED else "python"


def active_backend() -> str:
    """Name of the backend currently in use."""
    return _forced if _forced is not None else _env_default()


def kernels():
    """Module providing ``admm_solve`` and ``pgs_solve`` for the active backend."""
    return _kernels if active_backend() == "compiled" else _pykernels


@contextmanager
def use_backend(name: str):
    """Temporarily force a backend (``"compiled"`` or ``"python"``)."""
    global _forced
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled backend is not available")
    previous = _forced
    _forced = name
    try:
        yield
    finally:
        _forced = previous
