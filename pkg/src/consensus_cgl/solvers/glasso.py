"""Graphical-lasso baseline restricted to the CGL set.

Minimizes ``tr(L S) - log pdet(L) + beta ||vec L||_1`` with ``S = pinv(L_hat)``.
For a connected ``L``, ``pdet(L) = det(L + J/N)`` and ``pinv(L) = inv(L + J/N) - J/N``
with ``J`` the all-ones matrix, so both the objective and its edge gradient come
from one Cholesky factorization.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..errors import SingularInput
from .config import CglSolution, SolverConfig
from .vectorize import assemble_cgl, edge_pairs

RANK_TOL = 1e-10
MEMORY = 10
STEP_MIN, STEP_MAX = 1e-10, 1e10


def glasso_beta_grid(s_max, N, M, r_max=14):
    """``{0} U {0.75^r s_max sqrt(log(N)/M) : r = 1..r_max}``."""
    base = s_max * math.sqrt(math.log(N) / M)
    return [0.0] + [base * 0.75 ** r for r in range(1, r_max + 1)]


def _pinv_connected(L_hat):
    N = L_hat.shape[0]
    w = np.linalg.eigvalsh(L_hat)
    scale = max(np.max(np.abs(w)), 1e-300)
    if np.count_nonzero(w > RANK_TOL * scale) < N - 1:
        raise SingularInput("L_hat has rank below N-1; its pseudo-inverse does not define a connected graph")
    J = np.full((N, N), 1.0 / N)
    return np.linalg.inv(L_hat + J) - J


def _edge_contract(X, iu, ju):
    return X[iu, iu] + X[ju, ju] - 2.0 * X[iu, ju]


def _eval(a, N, S, iu, ju, lin):
    """Objective and gradient, or ``(inf, None)`` when ``L(a)`` is disconnected."""
    L = assemble_cgl(a, N)
    try:
        c, low = cho_factor(L + 1.0 / N, check_finite=False)
    except np.linalg.LinAlgError:
        return math.inf, None
    logdet = 2.0 * float(np.sum(np.log(np.diag(c))))
    Linv = cho_solve((c, low), np.eye(N), check_finite=False) - 1.0 / N
    f = float(np.sum(L * S)) - logdet + float(lin @ a)
    g = _edge_contract(S, iu, ju) - _edge_contract(Linv, iu, ju) + lin
    return f, g


def struct_glasso_baseline(L_hat, cfg: SolverConfig = None, a0=None) -> CglSolution:
    """Spectral projected gradient on the nonnegative edge weights.

    Barzilai-Borwein steps with a nonmonotone Armijo test over the last
    ``MEMORY`` objective values; trial points that disconnect the graph are
    rejected by backtracking. The initial point is the complete graph whose
    pseudo-inverse trace matches ``S``. Stops when the projected-gradient
    residual falls below ``opt_tol * (1 + ||grad(a0)||)``.
    """
    cfg = cfg or SolverConfig()
    L_hat = np.asarray(L_hat, dtype=float)
    L_hat = (L_hat + L_hat.T) / 2
    N = L_hat.shape[0]
    S = _pinv_connected(L_hat)
    # solve in units where tr(S) = N - 1; S -> S/s maps L -> s L and beta -> beta/s
    scale = np.trace(S) / (N - 1)
    S = S / scale
    iu, ju = edge_pairs(N)
    lin = 4.0 * cfg.beta / scale * np.ones(iu.size)

    if a0 is None:
        # complete graph (N I - J)/N has pinv trace N - 1
        a = np.full(iu.size, 1.0 / N)
    else:
        a = np.asarray(a0, dtype=float) * scale
    f, g = _eval(a, N, S, iu, ju, lin)
    if g is None:
        raise SingularInput("initial point is disconnected")
    tol = cfg.opt_tol * (1.0 + np.linalg.norm(g))
    recent = [f]
    step = 1.0 / max(np.linalg.norm(g), 1.0)
    res = math.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        res = float(np.max(np.abs(a - np.maximum(a - g, 0.0)), initial=0.0))
        if res <= tol:
            break
        d = np.maximum(a - step * g, 0.0) - a
        slope = float(g @ d)
        f_ref = max(recent)
        lam = 1.0
        while True:
            a_new = a + lam * d
            f_new, g_new = _eval(a_new, N, S, iu, ju, lin)
            if g_new is not None and f_new <= f_ref + 1e-4 * lam * slope:
                break
            lam *= 0.5
            if lam < 1e-20:
                break
        if g_new is None or lam < 1e-20:
            break
        s_vec, y_vec = a_new - a, g_new - g
        a, f, g = a_new, f_new, g_new
        recent = (recent + [f])[-MEMORY:]
        sy = float(s_vec @ y_vec)
        step = min(max(float(s_vec @ s_vec) / sy, STEP_MIN), STEP_MAX) if sy > 0 else STEP_MAX
    converged = res <= tol
    if not converged:
        msg = f"StructGLasso stopped after {it} iterations with residual {res:.3g}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    a = a / scale
    return CglSolution(assemble_cgl(a, N), a, None, {
        "method": "structglasso",
        "beta": cfg.beta,
        "objective": f + (N - 1) * math.log(scale),
        "iterations": it,
        "kkt_residual": res,
        "converged": converged,
        "feasible": True,
    })


def stationarity_residual(L, L_hat, beta=0.0):
    """Projected-gradient residual of the baseline objective at ``L`` (diagnostic helper)."""
    L = np.asarray(L, dtype=float)
    N = L.shape[0]
    iu, ju = edge_pairs(N)
    a = -L[iu, ju]
    _, g = _eval(a, N, _pinv_connected(np.asarray(L_hat, dtype=float)), iu, ju, 4.0 * beta * np.ones(iu.size))
    if g is None:
        raise SingularInput("L is disconnected")
    return float(np.max(np.abs(a - np.maximum(a - g, 0.0)), initial=0.0)), g
