"""Unknown observation time with a constant diffusion rate."""
from __future__ import annotations

import numpy as np

from ..dynamics import SampleCovariance
from ..errors import AllCandidatesDegenerate
from ..spectral import simplified_inverse_filter
from .config import CglSolution, SolverConfig
from .nearest import nearest_cgl
from .spectemp import ordered_spec_temp

TRACE_FLOOR = 1e-12


def estimate_observation_time(L_ord, cov: SampleCovariance, t_max=10, return_residuals=False):
    """Line search over ``t = 1..t_max`` comparing trace-matched constant-rate estimates with ``L_ord``.

    Ties go to the smaller ``t``; candidates whose estimate has trace at most
    ``1e-12`` are skipped.
    """
    t_max = int(t_max)
    if t_max < 1:
        raise ValueError(f"t_max must be at least 1, got {t_max}")
    L_ord = np.asarray(L_ord, dtype=float)
    tr_ord = float(np.trace(L_ord))
    residuals = {}
    for t in range(1, t_max + 1):
        L_t = simplified_inverse_filter(cov, t)
        tr_t = float(np.trace(L_t))
        if tr_t <= TRACE_FLOOR:
            continue
        residuals[t] = float(np.linalg.norm(L_ord - L_t * (tr_ord / tr_t)))
    if not residuals:
        raise AllCandidatesDegenerate("every candidate observation time gave a zero-trace estimate")
    best = min(residuals, key=lambda t: (residuals[t], t))
    return (best, residuals) if return_residuals else best


def hybrid(cov: SampleCovariance, cfg: SolverConfig = None, ord_cfg: SolverConfig = None,
           L_ord: CglSolution = None) -> CglSolution:
    """Template recovery, then observation-time search, then nearest CGL to the matching estimate.

    ``ord_cfg`` configures the template step and defaults to ``cfg``; a template
    solution already computed from ``cov`` can be passed as ``L_ord``. The result
    estimates ``alpha * L`` (the constant rate cannot be separated from the scale).
    """
    cfg = cfg or SolverConfig()
    ord_cfg = ord_cfg or cfg
    if L_ord is None:
        L_ord = ordered_spec_temp(cov, ord_cfg)
    T_hat, residuals = estimate_observation_time(L_ord.L_star, cov, cfg.t_max, return_residuals=True)
    sol = nearest_cgl(simplified_inverse_filter(cov, T_hat), cfg)
    sol.diagnostics.update({
        "method": "hybrid",
        "T_hat": T_hat,
        "line_search": {str(k): v for k, v in residuals.items()},
        "ordered_spec_temp": {k: v for k, v in L_ord.diagnostics.items() if k != "objective_history"},
    })
    sol.diagnostics["L_ord_edges"] = int(np.count_nonzero(L_ord.weights > 1e-6))
    return sol
