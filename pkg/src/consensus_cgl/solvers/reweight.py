from __future__ import annotations

import numpy as np


def reweight_weights(a, reweight_eps):
    return 1.0 / (np.abs(np.asarray(a, dtype=float)) + reweight_eps)


def reweighted_l1(solve_step, iters=0, reweight_eps=1e-4):
    """Iteratively reweighted l1: ``solve_step(weights)`` is called ``iters + 1`` times.

    The first call gets ``weights=None`` (plain l1). Each later call gets
    ``1 / (|a_e| + reweight_eps)`` computed from the previous solution's edge
    weights ``a``.
    """
    if iters < 0:
        raise ValueError(f"iters must be nonnegative, got {iters}")
    sol = solve_step(None)
    edge_counts = [int(np.count_nonzero(sol.weights > 1e-6))]
    for _ in range(iters):
        sol = solve_step(reweight_weights(sol.weights, reweight_eps))
        edge_counts.append(int(np.count_nonzero(sol.weights > 1e-6)))
    sol.diagnostics["reweight_passes"] = iters
    sol.diagnostics["edge_counts"] = edge_counts
    return sol
