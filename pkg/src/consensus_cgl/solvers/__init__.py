from .config import CglSolution, SolverConfig, parse_schedule
from .glasso import glasso_beta_grid, struct_glasso_baseline
from .hybrid import estimate_observation_time, hybrid
from .isotonic import in_ordered_set, project_ordered
from .nearest import nearest_cgl
from .nnls import NNLSResult, kkt_residual, nonneg_l1_least_squares
from .reweight import reweight_weights, reweighted_l1
from .spectemp import (
    epsilon_feasibility_search,
    min_template_distance,
    ordered_spec_temp,
    solve_templates,
    spectemp_leigvec,
)
from .vectorize import CglVectorization, assemble_cgl, cgl_vectorize, edge_weights_of

__all__ = [
    "CglSolution", "SolverConfig", "parse_schedule", "glasso_beta_grid", "struct_glasso_baseline",
    "estimate_observation_time", "hybrid", "in_ordered_set", "project_ordered", "nearest_cgl",
    "NNLSResult", "kkt_residual", "nonneg_l1_least_squares", "reweight_weights", "reweighted_l1",
    "epsilon_feasibility_search", "min_template_distance", "ordered_spec_temp", "solve_templates",
    "spectemp_leigvec", "CglVectorization", "assemble_cgl", "cgl_vectorize", "edge_weights_of",
]
