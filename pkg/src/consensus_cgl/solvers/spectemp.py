"""Laplacian recovery from (ordered) spectral templates.

Given an orthonormal template basis ``U`` whose columns follow nonincreasing
covariance eigenvalues, the recovered CGL should be close to ``U diag(g) U^T``
for some coefficient vector ``g`` with ``g[-1] = 1`` and ``g[i] <= g[i + eta]``
(covariance eigenvalues decrease as Laplacian eigenvalues increase).

Two formulations are provided:

* penalized: ``min d(L, U diag(g) U^T) + beta ||vec L||_1``;
* constrained: ``min ||vec L||_1`` subject to ``d(L, U diag(g) U^T) <= epsilon``,
  where for the Frobenius distance ``epsilon`` bounds the norm (not its square).

With the squared Frobenius distance the penalized problem is solved by block
coordinate descent. The ``g`` block is exact: for orthonormal ``U`` the fit
equals ``||offdiag(U^T L U)||^2 + ||diag(U^T L U) - g||^2``, so the best ``g``
is a projection onto the ordered set. The ``L`` block takes an accelerated
projected-gradient step on the edge weights, kept monotone by rejecting steps
that increase the objective. The max-norm distance and ``epsilon = 0`` are
linear programs. The constrained Frobenius problem is solved by bisection on
the penalty weight, whose fit is monotone in ``beta``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix, csr_matrix, hstack, vstack

from ..dynamics import SampleCovariance
from ..errors import Infeasible, NoFeasibleEpsilon
from .config import CglSolution, SolverConfig, parse_schedule
from .isotonic import in_ordered_set, project_leading, project_ordered
from .nearest import entry_operator
from .reweight import reweighted_l1
from .vectorize import assemble_cgl, edge_pairs

FEAS_TOL = 1e-9
GRID_CAP = 1.0


class _Templates:
    """Precomputed pieces for one template basis."""

    def __init__(self, U, eta=1, ordering="ordered"):
        U = np.asarray(U, dtype=float)
        self.U = U
        self.N = U.shape[0]
        self.eta = int(eta)
        self.ordering = ordering
        self.iu, self.ju = edge_pairs(self.N)
        self.step = 1.0 / (4.0 * self.N)

    def project(self, d):
        if self.ordering == "ordered":
            return project_ordered(d, self.eta)
        return project_leading(d)

    def evaluate(self, a):
        """Fit, best coefficients and fit gradient w.r.t. the edge weights at ``a``."""
        L = assemble_cgl(a, self.N)
        d = np.einsum("ij,ik,kj->j", self.U, L, self.U)
        g = self.project(d)
        fit = max(float(np.sum(L * L) - d @ d + (d - g) @ (d - g)), 0.0)
        R = L - (self.U * g) @ self.U.T
        dR = np.diag(R)
        grad = 2.0 * (dR[self.iu] + dR[self.ju] - 2.0 * R[self.iu, self.ju])
        return fit, g, grad

    def template_matrix(self, g):
        K = (self.U * g) @ self.U.T
        return (K + K.T) / 2


def _penalty_frobenius(tpl: _Templates, beta, weights, cfg, a0=None):
    """Monotone accelerated block coordinate descent on the penalized Frobenius problem."""
    E = tpl.iu.size
    lin = 4.0 * beta * (np.ones(E) if weights is None else weights)
    step = tpl.step
    tol = cfg.opt_tol

    x = np.zeros(E) if a0 is None else np.maximum(a0, 0.0)
    fit_x, g_x, _ = tpl.evaluate(x)
    F_x = fit_x + lin @ x
    history = [F_x]
    y = x.copy()
    t = 1.0
    it = 0
    residual = math.inf
    converged = False
    for it in range(1, cfg.max_iters + 1):
        _, _, grad_y = tpl.evaluate(y)
        z = np.maximum(y - step * (grad_y + lin), 0.0)
        residual = float(np.max(np.abs(z - y), initial=0.0)) / step
        fit_z, g_z, _ = tpl.evaluate(z)
        F_z = fit_z + lin @ z
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if F_z <= F_x:
            x_prev, x = x, z
            fit_x, g_x, F_prev, F_x = fit_z, g_z, F_x, F_z
            y = x + ((t - 1.0) / t_new) * (x - x_prev)
        else:
            # reject the step and restart momentum from the current iterate
            F_prev = F_x
            y = x.copy()
            t_new = 1.0
        t = t_new
        history.append(F_x)
        if residual <= tol * (1.0 + abs(F_x)):
            converged = True
            break
        if it > 50 and abs(history[-50] - F_x) <= tol * max(abs(F_x), 1e-12) * 1e-2:
            converged = True
            break
    return x, g_x, fit_x, F_x, {
        "iterations": it,
        "converged": converged,
        "residual": residual,
        "objective_history": history,
    }


def _lp_problem(tpl: _Templates, eps, weights, extra_s=False, beta_s=None):
    """Assemble the LP over ``[a, g]`` (plus a slack ``s`` when ``extra_s``)."""
    N, U = tpl.N, tpl.U
    E = tpl.iu.size
    A = entry_operator(N)
    ti, tj = np.triu_indices(N)
    W = csr_matrix(U[ti] * U[tj])
    G = hstack([A, -W]).tocsr()
    nvar = E + N + (1 if extra_s else 0)

    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    if extra_s:
        col = coo_matrix(np.ones((G.shape[0], 1)))
        A_ub += [hstack([G, -col]), hstack([-G, -col])]
        b_ub += [np.zeros(G.shape[0])] * 2
    elif eps == 0:
        A_eq.append(G)
        b_eq.append(np.zeros(G.shape[0]))
    else:
        A_ub += [G, -G]
        b_ub += [np.full(G.shape[0], eps)] * 2

    def gamma_row(coefs):
        row = np.zeros(nvar)
        for k, v in coefs:
            row[E + k] = v
        return row

    if tpl.ordering == "ordered" and N > tpl.eta:
        rows = [gamma_row([(i, 1.0), (i + tpl.eta, -1.0)]) for i in range(N - tpl.eta)]
        A_ub.append(csr_matrix(np.array(rows)))
        b_ub.append(np.zeros(len(rows)))
    A_eq.append(csr_matrix(gamma_row([(N - 1, 1.0)])[None, :]))
    b_eq.append(np.ones(1))

    w = np.ones(E) if weights is None else weights
    c = np.zeros(nvar)
    if extra_s:
        c[-1] = 1.0
        if beta_s is not None:
            c[:E] = 4.0 * beta_s * w
    else:
        c[:E] = 4.0 * w
    bounds = [(0, None)] * E + [(None, None)] * N + ([(0, None)] if extra_s else [])
    pad = lambda blocks: vstack([b if b.shape[1] == nvar else hstack([b, csr_matrix((b.shape[0], nvar - b.shape[1]))]) for b in blocks]).tocsr()
    return dict(
        c=c,
        A_ub=pad(A_ub) if A_ub else None,
        b_ub=np.concatenate(b_ub) if b_ub else None,
        A_eq=pad(A_eq),
        b_eq=np.concatenate(b_eq),
        bounds=bounds,
        method="highs",
    )


def _solve_lp(tpl, eps, weights, extra_s=False, beta_s=None):
    res = linprog(**_lp_problem(tpl, eps, weights, extra_s, beta_s))
    if res.status == 2:
        raise Infeasible(f"spectral-template LP infeasible at epsilon={eps}")
    if res.status != 0:
        raise Infeasible(f"spectral-template LP failed: {res.message}")
    E = tpl.iu.size
    a = np.maximum(res.x[:E], 0.0)
    g = res.x[E:E + tpl.N]
    return a, g, res


def min_template_distance(U, distance="FrobeniusSq", eta=1, ordering="ordered", cfg=None):
    """Smallest achievable ``d(L, U diag(g) U^T)`` over CGLs ``L`` and admissible ``g``."""
    tpl = _Templates(U, eta, ordering)
    if distance == "MaxNorm":
        _, _, res = _solve_lp(tpl, None, None, extra_s=True)
        return float(res.fun)
    cfg = cfg or SolverConfig()
    _, _, fit, _, _ = _penalty_frobenius(tpl, 0.0, None, cfg)
    return math.sqrt(max(fit, 0.0))


def _constrained_frobenius(tpl, eps, weights, cfg):
    """``min ||vec L||_1`` s.t. ``||L - U diag(g) U^T||_F <= eps``, by bisection on the penalty weight."""
    eps2 = eps * eps
    E = tpl.iu.size
    w = np.ones(E) if weights is None else weights
    # above this weight the empty graph is optimal
    _, _, grad0 = tpl.evaluate(np.zeros(E))
    beta_hi = max(float(np.max(-grad0 / (4.0 * w))), 1e-12)
    fit_empty = tpl.evaluate(np.zeros(E))[0]
    if fit_empty <= eps2:
        a = np.zeros(E)
        fit, g, _ = tpl.evaluate(a)
        return a, g, fit, {"beta_equiv": beta_hi, "bisection_steps": 0}

    # the zero-penalty point anchors feasibility
    a0, g0, fit0, _, info0 = _penalty_frobenius(tpl, 0.0, None, cfg)
    if fit0 > eps2 + FEAS_TOL:
        raise Infeasible(f"no CGL within Frobenius distance {eps} of the templates (min {math.sqrt(fit0):.4g})")
    best = (a0, g0, fit0, 0.0)
    lo, hi = math.log(beta_hi) - 30.0, math.log(beta_hi)
    a_warm = a0
    steps = 0
    for steps in range(1, 41):
        mid = 0.5 * (lo + hi)
        a, g, fit, _, _ = _penalty_frobenius(tpl, math.exp(mid), weights, cfg, a0=a_warm)
        if fit <= eps2:
            best = (a, g, fit, math.exp(mid))
            lo = mid
            a_warm = a
        else:
            hi = mid
        if hi - lo < 1e-3 or (best[2] >= eps2 * (1 - 1e-4) and best[3] > 0):
            break
    a, g, fit, beta = best
    return a, g, fit, {"beta_equiv": beta, "bisection_steps": steps}


def _package(tpl, a, g, diag):
    L = assemble_cgl(a, tpl.N)
    diag.setdefault("edges", int(np.count_nonzero(a > 1e-6)))
    return CglSolution(L, a, np.asarray(g, dtype=float), diag)


def solve_templates(U, cfg: SolverConfig, weights=None, ordering="ordered", epsilon="cfg", a0=None):
    """One (unweighted or weighted) solve of the template problem selected by ``cfg``."""
    tpl = _Templates(U, cfg.eta, ordering)
    eps = cfg.epsilon if epsilon == "cfg" else epsilon
    method = "orderedspectemp" if ordering == "ordered" else "spectemp-leigvec"
    base = {"method": method, "distance": cfg.distance, "eta": cfg.eta, "epsilon": eps}
    if eps is None:
        if cfg.distance == "MaxNorm":
            a, g, res = _solve_lp(tpl, None, weights, extra_s=True, beta_s=cfg.beta)
            return _package(tpl, a, g, {**base, "form": "penalty", "beta": cfg.beta,
                                        "objective": float(res.fun), "feasible": True,
                                        "converged": True})
        a, g, fit, F, info = _penalty_frobenius(tpl, cfg.beta, weights, cfg, a0=a0)
        return _package(tpl, a, g, {**base, "form": "penalty", "beta": cfg.beta, "fit": fit,
                                    "objective": F, "feasible": True, **info})
    if eps == 0 or cfg.distance == "MaxNorm":
        a, g, res = _solve_lp(tpl, eps, weights)
        return _package(tpl, a, g, {**base, "form": "constraint", "objective": float(res.fun),
                                    "feasible": True, "converged": True})
    a, g, fit, info = _constrained_frobenius(tpl, eps, weights, cfg)
    w = np.ones_like(a) if weights is None else weights
    return _package(tpl, a, g, {**base, "form": "constraint", "fit": fit,
                                "objective": float(4.0 * w @ a), "feasible": True,
                                "converged": True, **info})


def epsilon_schedule_points(schedule, cap=GRID_CAP):
    kind, arg = parse_schedule(schedule)
    if kind == "grid":
        pts = [0.002 * r for r in range(1, 16)]
        r = 1
        while 0.03 + 0.005 * r <= cap + 1e-12:
            pts.append(0.03 + 0.005 * r)
            r += 1
        return [round(p, 10) for p in pts]
    if kind == "step":
        return [round(arg * r, 12) for r in range(1, int(math.floor(cap / arg + 1e-9)) + 1)]
    raise ValueError("binary schedules have no fixed grid")


def smallest_feasible_epsilon(eps_min, schedule):
    """First schedule value at which a problem with minimal distance ``eps_min`` is feasible."""
    feasible = lambda e: eps_min <= e + FEAS_TOL
    kind, arg = parse_schedule(schedule)
    if kind == "binary":
        lo, hi = 0.0, 1.0
        if not feasible(hi):
            raise NoFeasibleEpsilon(f"infeasible even at epsilon=1 (minimum distance {eps_min:.4g})")
        for _ in range(arg):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                hi = mid
            else:
                lo = mid
        return hi
    for e in epsilon_schedule_points(schedule):
        if feasible(e):
            return e
    raise NoFeasibleEpsilon(f"no feasible epsilon in schedule {schedule} (minimum distance {eps_min:.4g})")


def _templates_of(cov):
    if isinstance(cov, SampleCovariance):
        return cov.eigvecs
    return np.asarray(cov, dtype=float)


def epsilon_feasibility_search(cov, cfg: SolverConfig, schedule="GridPaper", ordering="ordered"):
    """Smallest ``epsilon`` in ``schedule`` for which the constraint form is feasible, and its solution.

    ``cov`` may be a :class:`SampleCovariance` or a template basis ``U``.
    """
    U = _templates_of(cov)
    eps_min = min_template_distance(U, cfg.distance, cfg.eta, ordering, cfg)
    eps = smallest_feasible_epsilon(eps_min, schedule)
    sol = _reweighted(U, cfg.replace(epsilon=eps, epsilon_schedule=None), ordering)
    sol.diagnostics["epsilon_min"] = eps_min
    sol.diagnostics["epsilon_schedule"] = str(schedule)
    return eps, sol


def _reweighted(U, cfg, ordering):
    state = {}

    def step(weights):
        sol = solve_templates(U, cfg, weights, ordering, a0=state.get("a"))
        state["a"] = sol.weights
        return sol

    return reweighted_l1(step, cfg.reweight_iters, cfg.reweight_eps)


def ordered_spec_temp(cov, cfg: SolverConfig = None, ordering="ordered") -> CglSolution:
    """Sparse CGL whose spectrum follows the inverse order of the covariance spectrum.

    ``cov`` is a :class:`SampleCovariance` (its eigenvectors are the templates)
    or an orthonormal template matrix whose columns already follow nonincreasing
    covariance eigenvalues.
    """
    cfg = cfg or SolverConfig()
    U = _templates_of(cov)
    if cfg.eta > max(U.shape[0] - 1, 1):
        raise ValueError(f"eta={cfg.eta} exceeds N-1={U.shape[0] - 1}")
    if cfg.epsilon_schedule is not None:
        return epsilon_feasibility_search(U, cfg, cfg.epsilon_schedule, ordering)[1]
    sol = _reweighted(U, cfg, ordering)
    if sol.gamma_star is not None and ordering == "ordered":
        sol.diagnostics["gamma_ordered"] = in_ordered_set(sol.gamma_star, cfg.eta)
    return sol


def spectemp_leigvec(cov, cfg: SolverConfig = None) -> CglSolution:
    """Template recovery keeping only ``g[-1] = 1`` (no ordering of the other coefficients)."""
    return ordered_spec_temp(cov, cfg, ordering="leading")
