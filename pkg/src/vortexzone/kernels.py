"""Backend selection for the O(S^2) blob sums.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``VORTEXZONE_PURE_PYTHON`` is set to a non-empty value,
the NumPy implementation is used.  :func:`use_backend` switches at runtime
(tests and the benchmark compare both).
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from types import ModuleType

import numpy as np

from . import _kernels_py

try:  # pragma: no cover - depends on the build
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

_BACKENDS: dict[str, ModuleType] = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

if os.environ.get("VORTEXZONE_PURE_PYTHON") or _compiled is None:
    _active = "python"
else:
    _active = "cython"


def available_backends() -> tuple[str, ...]:
    return tuple(_BACKENDS)


def backend() -> str:
    """Name of the backend currently in use."""
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; choose from {available_backends()}")
    _active = name


@contextmanager
def use_backend(name: str):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def induced_velocity(targets, sources, weights, delta: float) -> np.ndarray:
    """Complex velocity ``(1/2pi) sum_j w_j i(x - z_j) / (|x - z_j|^2 + delta^2)`` at each target."""
    t = np.ascontiguousarray(targets, dtype=complex)
    s = np.ascontiguousarray(sources, dtype=complex)
    w = np.ascontiguousarray(weights, dtype=float)
    u, v = _BACKENDS[_active].induced_velocity(
        np.ascontiguousarray(t.real), np.ascontiguousarray(t.imag),
        np.ascontiguousarray(s.real), np.ascontiguousarray(s.imag),
        w, float(delta),
    )
    return np.asarray(u) + 1j * np.asarray(v)


def log_energy_rows(positions, weights, delta: float) -> np.ndarray:
    """Row sums ``sum_{j != i} w_j log(|z_i - z_j|^2 + delta^2)``."""
    z = np.ascontiguousarray(positions, dtype=complex)
    w = np.ascontiguousarray(weights, dtype=float)
    return np.asarray(
        _BACKENDS[_active].log_energy_rows(
            np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag), w, float(delta)
        )
    )
