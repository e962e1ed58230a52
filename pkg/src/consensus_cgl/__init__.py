"""Recovering sparse graph Laplacians from snapshots of consensus dynamics."""
from . import dynamics, errors, graphs, metrics, solvers, spectral
from .dynamics import (
    FilterSpec,
    RandomFilters,
    SampleCovariance,
    SnapshotSet,
    analytic_covariance,
    analytic_sample_covariance,
    sample_covariance,
    simulate_snapshots,
)
from .graphs import Laplacian, WeightedGraph, generate_graph, laplacian_of, sample_graph, validate_cgl
from .metrics import RecoveryReport, f_score, recovery_error, recovery_rate
from .solvers import (
    CglSolution,
    SolverConfig,
    estimate_observation_time,
    hybrid,
    nearest_cgl,
    ordered_spec_temp,
    spectemp_leigvec,
    struct_glasso_baseline,
)
from .spectral import inverse_filter, simplified_inverse_filter

__version__ = "0.1.0"
