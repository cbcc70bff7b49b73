"""Kernel backend selection.

The compiled extension is used when it imports; ``SELGEN_PURE_PYTHON=1``
forces the pure-Python fallback. Both backends give identical results.
"""
from __future__ import annotations

import os
from contextlib import contextmanager
from types import ModuleType

from . import _pykernels

try:
    from . import _kernels as _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels


def _default() -> str:
    if os.environ.get("SELGEN_PURE_PYTHON", "") not in ("", "0") or _ckernels is None:
        return "python"
    return "cython"


_active = _default()


def available() -> tuple[str, ...]:
    return tuple(_BACKENDS)


def name() -> str:
    return _active


def kernels() -> ModuleType:
    return _BACKENDS[_active]


def get(backend: str) -> ModuleType:
    try:
        return _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"backend {backend!r} unavailable; have {available()}") from None


@contextmanager
def use_backend(backend: str):
    """Temporarily switch the active backend (not thread-safe)."""
    global _active
    get(backend)
    previous, _active = _active, backend
    try:
        yield _BACKENDS[backend]
    finally:
        _active = previous
