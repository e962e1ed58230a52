"""Euclidean projection onto the ordered spectral-coefficient set.

The set is ``{g : g[-1] = 1, g[i] <= g[i + eta]}``. The lag-``eta`` constraints
split the coordinates into ``eta`` interleaved chains that are each isotonic and
independent of one another; only the chain ending at the last coordinate is
pinned to 1. Isotonic regression with an upper bound equals the unbounded fit
clipped at the bound, so every chain is one pool-adjacent-violators pass.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import isotonic_regression


def project_ordered(y, eta=1):
    y = np.asarray(y, dtype=float)
    N = y.size
    out = np.empty(N)
    for r in range(min(eta, N)):
        idx = np.arange(r, N, eta)
        if idx[-1] == N - 1:
            head = idx[:-1]
            if head.size:
                out[head] = np.minimum(isotonic_regression(y[head]).x, 1.0)
            out[N - 1] = 1.0
        else:
            out[idx] = isotonic_regression(y[idx]).x
    return out


def project_leading(y):
    """Projection when only the last coefficient is pinned (no ordering information)."""
    out = np.array(y, dtype=float)
    out[-1] = 1.0
    return out


def in_ordered_set(g, eta=1, tol=1e-8):
    g = np.asarray(g, dtype=float)
    if abs(g[-1] - 1.0) > tol:
        return False
    return bool(np.all(g[:-eta] <= g[eta:] + tol)) if g.size > eta else True
