"""Kernel backend selection.

The hot loops (simulation, path log-densities, forward pass, lattice
sampling) exist twice: a Cython extension and a numpy fallback.  The
extension is preferred when importable; FLASHCAP_BACKEND=python|cython
forces a choice.  ``kernels()`` returns the active module.
"""

from __future__ import annotations

import os

from . import _kernels_py

_BACKEND_NAME = None
_KERNELS = None


def _select():
    global _BACKEND_NAME, _KERNELS
    if _KERNELS is not None:
        return
    requested = os.environ.get("FLASHCAP_BACKEND", "auto").lower()
    if requested not in ("auto", "cython", "python"):
        raise ValueError(f"FLASHCAP_BACKEND must be auto, cython or python, got {requested!r}")
    if requested in ("auto", "cython"):
        try:
            from . import _kernels  # type: ignore[attr-defined]

            _BACKEND_NAME, _KERNELS = "cython", _kernels
            return
        except ImportError:
            if requested == "cython":
                raise
    _BACKEND_NAME, _KERNELS = "python", _kernels_py


def backend_name() -> str:
    _select()
    return _BACKEND_NAME  # type: ignore[return-value]


def kernels():
    _select()
    return _KERNELS


def available_backends() -> list[str]:
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return a specific kernel module (for benchmarks and parity tests)."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
