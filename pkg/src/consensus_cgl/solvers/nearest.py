"""Sparse projection of a symmetric matrix onto the CGL set."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix, hstack, vstack

from ..errors import Infeasible
from .config import CglSolution, SolverConfig
from .nnls import nonneg_l1_least_squares
from .vectorize import (
    assemble_cgl,
    edge_pairs,
    stack_target,
    structure_norm_sq,
    structure_operator,
)


def nearest_cgl(L_hat, cfg: SolverConfig = None, weights=None, a0=None) -> CglSolution:
    """Closest sparse CGL to ``L_hat``.

    Minimizes ``d(L, L_hat) + beta * ||vec(L)||_1`` over the CGL set, where ``d``
    is the squared Frobenius distance or the elementwise maximum. ``weights``
    reweights the penalty per edge.
    """
    cfg = cfg or SolverConfig()
    L_hat = np.asarray(L_hat, dtype=float)
    L_hat = (L_hat + L_hat.T) / 2
    N = L_hat.shape[0]
    if cfg.distance == "MaxNorm":
        return _nearest_maxnorm(L_hat, cfg, weights)

    b_hat = stack_target(L_hat)
    res = nonneg_l1_least_squares(
        structure_operator(N), b_hat, cfg.beta, weights=weights, a0=a0,
        opt_tol=cfg.opt_tol, max_iters=cfg.max_iters, lipschitz=structure_norm_sq(N),
    )
    L = assemble_cgl(res.a, N)
    return CglSolution(L, res.a, None, {
        "method": "nearestcgl",
        "distance": cfg.distance,
        "beta": cfg.beta,
        "objective": res.objective,
        "iterations": res.iterations,
        "kkt_residual": res.residual,
        "converged": res.converged,
        "feasible": True,
    })


def entry_operator(N):
    """Sparse map from edge weights to the upper-triangle entries (diagonal included) of ``L(a)``.

    Rows are ordered like ``numpy.triu_indices(N)``.
    """
    iu, ju = edge_pairs(N)
    E = iu.size
    ti, tj = np.triu_indices(N)
    row_of = {(i, j): r for r, (i, j) in enumerate(zip(ti.tolist(), tj.tolist()))}
    diag_row = np.array([row_of[(i, i)] for i in range(N)], dtype=int)
    pair_row = np.array([row_of[(i, j)] for i, j in zip(iu.tolist(), ju.tolist())], dtype=int)
    cols = np.arange(E)
    rows = np.concatenate([diag_row[iu], diag_row[ju], pair_row])
    vals = np.concatenate([np.ones(E), np.ones(E), -np.ones(E)])
    return coo_matrix((vals, (rows, np.concatenate([cols, cols, cols]))), shape=(ti.size, E)).tocsr()


def _nearest_maxnorm(L_hat, cfg, weights):
    # variables [a (E), s]; minimize s + 4 beta w.a subject to |L(a) - L_hat| <= s entrywise
    N = L_hat.shape[0]
    E = N * (N - 1) // 2
    A = entry_operator(N)
    target = L_hat[np.triu_indices(N)]
    ones = coo_matrix(np.ones((A.shape[0], 1)))
    A_ub = vstack([hstack([A, -ones]), hstack([-A, -ones])]).tocsr()
    b_ub = np.concatenate([target, -target])
    w = np.ones(E) if weights is None else np.asarray(weights, dtype=float)
    c = np.concatenate([4.0 * cfg.beta * w, [1.0]])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    if res.status != 0:
        raise Infeasible(f"max-norm projection LP failed: {res.message}")
    a = np.maximum(res.x[:E], 0.0)
    return CglSolution(assemble_cgl(a, N), a, None, {
        "method": "nearestcgl",
        "distance": "MaxNorm",
        "beta": cfg.beta,
        "objective": float(res.fun),
        "max_deviation": float(res.x[E]),
        "iterations": int(getattr(res, "nit", 0)),
        "converged": True,
        "feasible": True,
    })

