"""Recovery quality: relative error, edge-support F-score, recovery rate."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyList, ZeroEstimateTrace, ZeroTrueNorm

EDGE_THRESHOLD = 1e-6


@dataclass(frozen=True)
class RecoveryReport:
    rel_error: float
    f_score: float
    tp: int
    fp: int
    fn: int
    trace_normalized: bool

    def to_dict(self):
        return asdict(self)


def _pair(L_star, L_true):
    A = np.asarray(L_star, dtype=float)
    B = np.asarray(L_true, dtype=float)
    if A.shape != B.shape or A.ndim != 2:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    return A, B


def recovery_error(L_star, L_true, trace_normalize=False):
    """``||L_star - L_true||_F / ||L_true||_F``.

    With ``trace_normalize`` the estimate is first rescaled to the trace of
    ``L_true``, which removes the scale ambiguity of template methods.
    """
    A, B = _pair(L_star, L_true)
    nrm = np.linalg.norm(B)
    if nrm == 0:
        raise ZeroTrueNorm("reference Laplacian has zero norm")
    if trace_normalize:
        tr = np.trace(A)
        if not tr > 0:
            raise ZeroEstimateTrace("estimate has nonpositive trace; cannot trace-normalize")
        A = A * (np.trace(B) / tr)
    return float(np.linalg.norm(A - B) / nrm)


def edge_support(L, edge_threshold=EDGE_THRESHOLD):
    """Boolean upper-triangle mask of edges ``-L_ij > edge_threshold``."""
    L = np.asarray(L, dtype=float)
    iu = np.triu_indices(L.shape[0], 1)
    return -L[iu] > edge_threshold


def f_score(L_star, L_true, edge_threshold=EDGE_THRESHOLD, trace_normalize=False):
    A, B = _pair(L_star, L_true)
    if edge_threshold < 0:
        raise ValueError("edge_threshold must be nonnegative")
    est = edge_support(A, edge_threshold)
    ref = edge_support(B, edge_threshold)
    tp = int(np.count_nonzero(est & ref))
    fp = int(np.count_nonzero(est & ~ref))
    fn = int(np.count_nonzero(~est & ref))
    denom = 2 * tp + fp + fn
    score = 1.0 if denom == 0 else 2 * tp / denom
    try:
        err = recovery_error(A, B, trace_normalize)
    except (ZeroTrueNorm, ZeroEstimateTrace):
        err = float("nan")
    return RecoveryReport(err, float(score), tp, fp, fn, bool(trace_normalize))


def recovery_rate(errors, threshold=0.02):
    """Fraction of errors strictly below ``threshold``."""
    e = np.asarray(list(errors), dtype=float)
    if e.size == 0:
        raise EmptyList("no errors given")
    return float(np.mean(e < threshold))
