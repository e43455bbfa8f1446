"""NumPy reference implementation of the compiled blob kernels.

The loop runs over sources in index order and is vectorized across targets,
so every target sees exactly the same sequence of floating-point operations
as in the compiled version.
"""

from __future__ import annotations

import numpy as np


def _neumaier(x: np.ndarray, s: np.ndarray, c: np.ndarray) -> None:
    t = s + x
    big = np.abs(s) >= np.abs(x)
    c += np.where(big, (s - t) + x, (x - t) + s)
    s[...] = t


def induced_velocity(tx, ty, sx, sy, w, delta):
    tx, ty = np.asarray(tx, dtype=float), np.asarray(ty, dtype=float)
    d2 = delta * delta
    inv2pi = 1.0 / (2.0 * np.pi)
    su = np.zeros(tx.shape)
    cu = np.zeros(tx.shape)
    sv = np.zeros(tx.shape)
    cv = np.zeros(tx.shape)
    for xj, yj, wj in zip(np.asarray(sx, dtype=float), np.asarray(sy, dtype=float), np.asarray(w, dtype=float)):
        dx = tx - xj
        dy = ty - yj
        r2 = dx * dx + dy * dy + d2
        live = r2 != 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            q = wj / r2
        if not live.all():
            # skipped pairs add nothing and leave the compensation untouched
            q = np.where(live, q, 0.0)
        _neumaier(-dy * q, su, cu)
        _neumaier(dx * q, sv, cv)
    return (su + cu) * inv2pi, (sv + cv) * inv2pi


def log_energy_rows(x, y, w, delta):
    x, y, w = (np.asarray(a, dtype=float) for a in (x, y, w))
    d2 = delta * delta
    s = np.zeros(x.shape)
    c = np.zeros(x.shape)
    idx = np.arange(x.size)
    for j in range(x.size):
        dx = x - x[j]
        dy = y - y[j]
        r2 = dx * dx + dy * dy + d2
        live = (r2 != 0.0) & (idx != j)
        with np.errstate(divide="ignore", invalid="ignore"):
            term = w[j] * np.log(r2)
        term = np.where(live, term, 0.0)
        _neumaier(term, s, c)
    return s + c
