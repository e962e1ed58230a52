"""Nonnegative l1-regularized least squares.

Solves ``min ||P a - b||^2 + 4 beta sum(w * a)`` subject to ``a >= 0`` with an
accelerated projected-gradient method (FISTA with gradient-based restart).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import aslinearoperator, svds

from ..errors import MaxItersExceeded


@dataclass
class NNLSResult:
    a: np.ndarray
    iterations: int
    residual: float
    converged: bool
    objective: float


def _spectral_norm_sq(P):
    if isinstance(P, np.ndarray):
        return float(np.linalg.norm(P, 2) ** 2) if P.size else 0.0
    if min(P.shape) <= 2:
        Pd = P.toarray() if hasattr(P, "toarray") else P @ np.eye(P.shape[1])
        return float(np.linalg.norm(Pd, 2) ** 2)
    s = svds(aslinearoperator(P), k=1, return_singular_vectors=False, tol=1e-6, random_state=0)
    return float(s[0] ** 2) * 1.001


def kkt_residual(P, b, a, beta, weights=None):
    """Natural residual ``max |a - max(0, a - grad)|`` of the nonnegative problem."""
    lin = 4.0 * beta * (1.0 if weights is None else weights)
    g = 2.0 * (P.T @ (P @ a - b)) + lin
    return float(np.max(np.abs(a - np.maximum(a - g, 0.0)), initial=0.0))


def nonneg_l1_least_squares(P, b_hat, beta=0.0, weights=None, a0=None, opt_tol=1e-8,
                            max_iters=20_000, lipschitz=None, raise_on_fail=False) -> NNLSResult:
    """First-order solve to ``residual <= opt_tol * (1 + ||b_hat||)``.

    ``lipschitz`` is ``||P||_2^2``; it is estimated when omitted. If the iteration
    cap is hit the last iterate is returned with ``converged=False`` and a
    warning, or :class:`MaxItersExceeded` is raised when ``raise_on_fail``.
    """
    b = np.asarray(b_hat, dtype=float)
    n = P.shape[1]
    if n == 0:
        return NNLSResult(np.zeros(0), 0, 0.0, True, float(b @ b))
    if lipschitz is None:
        lipschitz = _spectral_norm_sq(P)
    step = 1.0 / (2.0 * max(lipschitz, 1e-300))
    weights = None if weights is None else np.asarray(weights, dtype=float)
    lin = 4.0 * beta * (np.ones(n) if weights is None else weights)
    tol = opt_tol * (1.0 + np.linalg.norm(b))

    x = np.zeros(n) if a0 is None else np.maximum(np.asarray(a0, dtype=float), 0.0)
    y = x.copy()
    t = 1.0
    residual = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        g = 2.0 * (P.T @ (P @ y - b)) + lin
        x_new = np.maximum(y - step * g, 0.0)
        # gradient-mapping residual measured at y, scaled back to gradient units
        residual = float(np.max(np.abs(y - x_new))) / step
        if residual <= tol and kkt_residual(P, b, x_new, beta, weights) <= tol:
            x = x_new
            break
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if np.dot(y - x_new, x_new - x) > 0:  # restart momentum
            t_new = 1.0
            y = x_new.copy()
        else:
            y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new

    residual = kkt_residual(P, b, x, beta, weights)
    converged = residual <= tol
    r = P @ x - b
    obj = float(r @ r + lin @ x)
    if not converged:
        msg = f"nonneg_l1_least_squares stopped after {it} iterations (residual {residual:.3g} > {tol:.3g})"
        if raise_on_fail:
            raise MaxItersExceeded(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return NNLSResult(x, it, residual, converged, obj)
