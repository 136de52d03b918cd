"""Largest pairwise difference quotient ||V_i - V_j|| / ||X_i - X_j||.

O(S^2) over the sample set, which makes it the one place where compiled code
pays off during constant estimation. Both paths are kept and must agree.
"""

from __future__ import annotations

import numpy as np

from .._jit import HAVE_NUMBA, kernel


@kernel
def _quotient_loop(X, V):
    S, nx = X.shape
    nv = V.shape[1]
    best = 0.0
    for i in range(S):
        for j in range(i + 1, S):
            dx = 0.0
            for a in range(nx):
                t = X[i, a] - X[j, a]
                dx += t * t
            if dx <= 1e-28:
                continue
            dv = 0.0
            for a in range(nv):
                t = V[i, a] - V[j, a]
                dv += t * t
            q = np.sqrt(dv / dx)
            if q > best:
                best = q
    return best


def _quotient_numpy(X, V, chunk: int = 512):
    S = X.shape[0]
    best = 0.0
    for lo in range(0, S, chunk):
        hi = min(lo + chunk, S)
        dx = np.sum((X[lo:hi, None, :] - X[None, :, :]) ** 2, axis=2)
        dv = np.sum((V[lo:hi, None, :] - V[None, :, :]) ** 2, axis=2)
        rows = np.arange(lo, hi)[:, None]
        mask = (np.arange(S)[None, :] > rows) & (dx > 1e-28)
        if mask.any():
            best = max(best, float(np.sqrt(np.max(dv[mask] / dx[mask]))))
    return best


def max_difference_quotient(X, V, backend: str | None = None) -> float:
    """Sample estimate of the Lipschitz modulus of the map X_k -> V_k.

    ``backend`` is ``"numba"``, ``"numpy"`` or ``None`` (numba when available).
    """
    X = np.ascontiguousarray(np.asarray(X, dtype=float).reshape(len(X), -1))
    V = np.ascontiguousarray(np.asarray(V, dtype=float).reshape(len(V), -1))
    if backend is None:
        backend = "numba" if HAVE_NUMBA else "numpy"
    if backend == "numba":
        return float(_quotient_loop(X, V))
    if backend == "numpy":
        return _quotient_numpy(X, V)
    raise ValueError(f"unknown backend {backend!r}")
