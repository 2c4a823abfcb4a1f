"""Hot event loops with a compiled backend and a pure-Python fallback.

The compiled extension is used when it imports; set ``FREESSEP_BACKEND=python``
to force the fallback. Both produce identical results for identical inputs.
"""

from __future__ import annotations

import os

from . import _fallback

fallback = _fallback

try:
    if os.environ.get("FREESSEP_BACKEND", "").lower() == "python":
        raise ImportError("fallback requested")
    from . import _kernels as compiled  # type: ignore[attr-defined]
except ImportError:
    compiled = None

active = compiled if compiled is not None else _fallback

BACKEND: str = active.BACKEND
particle_run = active.particle_run
interface_run = active.interface_run
EventCapExceeded = (
    (compiled.EventCapExceeded, _fallback.EventCapExceeded) if compiled is not None else (_fallback.EventCapExceeded,)
)


def get_backend(name: str):
    """Return the module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _fallback
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels are not built")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
