"""Free-boundary exclusion: particle and interface simulators, macroscopic barriers and the harness."""

from __future__ import annotations

__version__ = "0.1.0"

from ._kernels import BACKEND

__all__ = ["__version__", "BACKEND"]
