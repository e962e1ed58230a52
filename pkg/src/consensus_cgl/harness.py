"""Experiment specs and the (method, M, seed) benchmark grid.

Every cell regenerates its own graph and snapshots from the seed, so results
do not depend on which worker ran which cell or in what order. The same seed is
used for every ``M``, so a smaller sample is a prefix of a larger one.
"""
from __future__ import annotations

import csv
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io as _io
from .dynamics import (
    FilterSpec,
    RandomFilters,
    SampleCovariance,
    analytic_sample_covariance,
    sample_covariance,
    simulate_snapshots,
)
from .errors import CglError, InvalidParams
from .graphs import MODELS, laplacian_of, parse_weight_dist, sample_graph
from .metrics import f_score, recovery_error, recovery_rate
from .solvers import (
    SolverConfig,
    glasso_beta_grid,
    hybrid,
    nearest_cgl,
    ordered_spec_temp,
    spectemp_leigvec,
    struct_glasso_baseline,
)
from .spectral import inverse_filter

METHODS = ("inversefilter", "nearestcgl", "orderedspectemp", "hybrid", "structglasso", "spectemp-leigvec")
BASELINES = ("structglasso", "spectemp-leigvec")
FILTER_KINDS = ("fixed", "constant_unknown", "random")
RESULT_COLUMNS = ("method", "M", "seed", "rel_error", "f_score", "wall_ms", "beta", "T_hat", "status")


def reference_beta_grid(ratio):
    """Penalty weights swept for NearestCGL: finer near 0.07 when samples are scarce."""
    if ratio <= 3:
        return [0.0] + [round(0.055 + 0.0025 * r, 6) for r in range(13)]
    return [round(0.01 * r, 6) for r in range(9)]


@dataclass
class ExperimentSpec:
    """One benchmark grid.

    ``filter`` keys: ``kind`` (``fixed``, ``constant_unknown`` or ``random``),
    ``fractions`` (fixed rates as fractions of ``1/lambda_max``), ``fraction`` and
    ``T`` (constant rate), ``t_choices`` (random). ``templates = "exact"`` hands
    the true eigenbasis to the template methods instead of a sample covariance.
    ``method_options`` maps a method name to solver overrides; ``beta_grid``
    (a list, or ``"reference"``) selects the best penalty per cell against the truth.
    """

    name: str = "experiment"
    graph: dict = field(default_factory=lambda: {"model": "ER", "n": 36, "p": 0.1})
    filter: dict = field(default_factory=lambda: {"kind": "fixed", "fractions": [0.7, 0.8, 0.9]})
    M: list = field(default_factory=list)
    seeds: list = field(default_factory=lambda: list(range(20)))
    methods: list = field(default_factory=lambda: ["inversefilter", "nearestcgl"])
    solver: dict = field(default_factory=dict)
    method_options: dict = field(default_factory=dict)
    metric: dict = field(default_factory=dict)
    sigma: float = 1.0
    templates: str = "sample"
    out: str = "results"

    def __post_init__(self):
        if not self.M:
            raise InvalidParams("M grid is empty")
        self.M = [int(m) for m in self.M]
        if any(m < 1 for m in self.M):
            raise InvalidParams("every M must be at least 1")
        if isinstance(self.seeds, int):
            self.seeds = list(range(self.seeds))
        self.seeds = [int(s) for s in self.seeds]
        if len(set(self.seeds)) != len(self.seeds):
            raise InvalidParams("seeds must be distinct")
        if not self.seeds:
            raise InvalidParams("seed list is empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise InvalidParams(f"unknown methods {bad}; choose from {METHODS}")
        if self.graph.get("model") not in MODELS:
            raise InvalidParams(f"unknown graph model {self.graph.get('model')!r}; choose from {MODELS}")
        if self.filter.get("kind") not in FILTER_KINDS:
            raise InvalidParams(f"unknown filter kind {self.filter.get('kind')!r}; choose from {FILTER_KINDS}")
        if self.templates not in ("sample", "exact"):
            raise InvalidParams("templates must be 'sample' or 'exact'")
        SolverConfig.from_dict(self.solver)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "M_over_N" in d:
            n = int(d.get("graph", {}).get("n", 36))
            d["M"] = [int(round(r * n)) for r in d.pop("M_over_N")]
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidParams(f"unknown experiment keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path):
        return cls.from_dict(_io.read_config(path))

    def to_dict(self):
        return asdict(self)

    def cells(self):
        return [(m, M, s) for m in self.methods for M in self.M for s in self.seeds]


@dataclass
class CellData:
    L: np.ndarray
    cov: SampleCovariance
    filter: FilterSpec
    alpha: float


def build_graph(spec: ExperimentSpec, seed):
    params = {k: v for k, v in spec.graph.items() if k not in ("model", "weights", "gap_min")}
    gap = spec.graph.get("gap_min", 1e-4)
    return sample_graph(spec.graph["model"], params, parse_weight_dist(spec.graph.get("weights", "unit")),
                        seed=seed, gap_min=gap)


def build_data(spec: ExperimentSpec, M, seed) -> CellData:
    g = build_graph(spec, seed)
    L = laplacian_of(g)
    lam_max = L.lambda_max
    fcfg = spec.filter
    if fcfg["kind"] == "fixed":
        f = FilterSpec.scaled(fcfg.get("fractions", [0.7, 0.8, 0.9]), lam_max)
        gen, alpha = f, float("nan")
    elif fcfg["kind"] == "constant_unknown":
        alpha = float(fcfg.get("fraction", 0.8)) / lam_max
        f = FilterSpec.constant(alpha, int(fcfg.get("T", 5)))
        gen = f
    else:
        gen = RandomFilters(tuple(fcfg.get("t_choices", (3, 4, 5))), float(fcfg.get("rate_scale", 1.0)))
        f, alpha = None, float("nan")
    Lm = np.asarray(L)
    if spec.templates == "exact":
        # true eigenbasis ordered like a covariance of a decreasing filter
        cov = SampleCovariance.from_eig(-L.eigvals, L.eigvecs)
    elif fcfg.get("analytic", False) and f is not None:
        cov = analytic_sample_covariance(Lm, f, spec.sigma ** 2)
    else:
        cov = sample_covariance(simulate_snapshots(Lm, gen, M, spec.sigma, seed=seed))
    return CellData(Lm, cov, f, alpha)


def _trace_normalize(method, metric):
    mode = metric.get("trace_normalize", "auto")
    if mode == "auto":
        return method in ("orderedspectemp", "spectemp-leigvec", "hybrid")
    return bool(mode)


def _solve(method, data: CellData, cfg: SolverConfig):
    if method == "inversefilter":
        return inverse_filter(data.cov, data.filter).L_hat, {}
    if method == "nearestcgl":
        return nearest_cgl(inverse_filter(data.cov, data.filter).L_hat, cfg).L_star, {}
    if method == "orderedspectemp":
        return ordered_spec_temp(data.cov, cfg).L_star, {}
    if method == "spectemp-leigvec":
        return spectemp_leigvec(data.cov, cfg).L_star, {}
    if method == "hybrid":
        sol = hybrid(data.cov, cfg.replace(epsilon=None, epsilon_schedule=None, reweight_iters=0), ord_cfg=cfg)
        return sol.L_star, {"T_hat": sol.diagnostics["T_hat"]}
    if method == "structglasso":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return struct_glasso_baseline(inverse_filter(data.cov, data.filter).L_hat, cfg).L_star, {}
    raise InvalidParams(f"unknown method {method!r}")


def _beta_grid(method, opts, data: CellData, M):
    grid = opts.get("beta_grid")
    if grid is None:
        return None
    if grid != "reference":
        return [float(b) for b in grid]
    N = data.L.shape[0]
    if method == "structglasso":
        S = data.cov.matrix
        s_max = float(np.max(np.abs(S - np.diag(np.diag(S)))))
        return glasso_beta_grid(s_max, N, M)
    return reference_beta_grid(M / N)


def run_cell(spec: ExperimentSpec, method, M, seed):
    """One (method, M, seed) result row; failures are recorded, not raised."""
    t0 = time.perf_counter()
    row = {"method": method, "M": M, "seed": seed, "rel_error": float("nan"), "f_score": float("nan"),
           "beta": float("nan"), "T_hat": "", "status": "ok"}
    try:
        data = build_data(spec, M, seed)
        opts = dict(spec.method_options.get(method, {}))
        grid = _beta_grid(method, opts, data, M)
        opts.pop("beta_grid", None)
        cfg = SolverConfig.from_dict({**spec.solver, **opts})
        target = data.L
        if method == "hybrid" and np.isfinite(data.alpha):
            target = data.alpha * data.L
        tn = _trace_normalize(method, spec.metric)
        thr = float(spec.metric.get("edge_threshold", 1e-6))
        best = None
        for beta in (grid if grid is not None else [cfg.beta]):
            L_star, extra = _solve(method, data, cfg.replace(beta=beta))
            err = recovery_error(L_star, target, tn)
            if best is None or err < best[0]:
                best = (err, beta, L_star, extra)
        err, beta, L_star, extra = best
        row.update(rel_error=err, f_score=f_score(L_star, data.L, thr).f_score, beta=beta,
                   T_hat=extra.get("T_hat", ""))
    except CglError as exc:
        row["status"] = f"error:{type(exc).__name__}"
    except (ValueError, np.linalg.LinAlgError) as exc:
        row["status"] = f"error:{type(exc).__name__}"
    row["wall_ms"] = round((time.perf_counter() - t0) * 1000.0, 3)
    return row


def _run_cell_args(args):
    return run_cell(*args)


def default_jobs():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def run_benchmark(spec: ExperimentSpec, jobs=None):
    """Run every cell and return rows in grid order (method, M, seed)."""
    jobs = default_jobs() if jobs is None else int(jobs)
    cells = spec.cells()
    if jobs <= 1 or len(cells) == 1:
        return [run_cell(spec, *c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell_args, [(spec, *c) for c in cells], chunksize=1))


def summarize(spec: ExperimentSpec, rows):
    threshold = float(spec.metric.get("success_threshold", 0.02))
    out = []
    for method in spec.methods:
        for M in spec.M:
            cell = [r for r in rows if r["method"] == method and r["M"] == M]
            ok = [r for r in cell if r["status"] == "ok"]
            errs = [r["rel_error"] for r in ok]
            entry = {"method": method, "M": M, "n_ok": len(ok), "n_failed": len(cell) - len(ok)}
            if errs:
                entry.update(
                    mean_rel_error=float(np.mean(errs)),
                    median_rel_error=float(np.median(errs)),
                    mean_f_score=float(np.mean([r["f_score"] for r in ok])),
                    recovery_rate=recovery_rate(errs, threshold),
                )
                t_hats = [r["T_hat"] for r in ok if r["T_hat"] != ""]
                if t_hats and spec.filter.get("kind") == "constant_unknown":
                    entry["T_success_ratio"] = float(np.mean(np.array(t_hats) == int(spec.filter.get("T", 5))))
            out.append(entry)
    return {"name": spec.name, "spec": spec.to_dict(), "cells": out, "success_threshold": threshold}


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else _io.FLOAT_FMT % v
    return str(v)


def write_results(rows, path, include_wall=True):
    cols = [c for c in RESULT_COLUMNS if include_wall or c != "wall_ms"]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])
