"""Command-line entry point: ``consensus-cgl <subcommand> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O or parse error,
4 infeasible optimization problem, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import io as _io
from .dynamics import FilterSpec, RandomFilters, SampleCovariance, SnapshotSet, sample_covariance, simulate_snapshots
from .errors import CglError, Infeasible, InvalidParams, ParseError, SchemaError
from .graphs import (
    MODELS,
    graph_to_dict,
    laplacian_of,
    parse_weight_dist,
    read_graph_json,
    sample_graph,
    validate_cgl,
    write_graph_json,
)
from .harness import BASELINES, METHODS, ExperimentSpec, run_benchmark, summarize, write_results
from .metrics import f_score, recovery_error
from .solvers import (
    SolverConfig,
    hybrid,
    nearest_cgl,
    ordered_spec_temp,
    spectemp_leigvec,
    struct_glasso_baseline,
)
from .spectral import inverse_filter

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4, 5

SOLVER_FLAGS = {
    "beta": float, "eta": int, "epsilon": float, "t_max": int, "distance": str,
    "reweight_iters": int, "epsilon_schedule": str, "opt_tol": float, "max_iters": int,
}

YEA = {"yea", "yes", "y", "aye", "1", "+1"}
NAY = {"nay", "no", "n", "-1"}


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------
# ingestion
# ----------------------------------------------------------------------


def ingest_matrix_csv(path, header=False):
    """Rows are observations, columns are nodes."""
    Y = _io.read_matrix_csv(path, skip_header=header)
    return SnapshotSet(Y, 0.0, {"source": str(path), "format": "MatrixCsv", "sigma2_unknown": True})


def vote_value(token):
    t = token.strip().lower()
    if t in YEA:
        return 1.0
    if t in NAY:
        return -1.0
    return 0.0


def ingest_roll_call(path):
    """Wide roll-call table: header row of state codes (one column per senator), one row per vote.

    Votes map to yea -> 1, nay -> -1, anything else -> 0, and the senators of a
    state are summed into one node. Nodes follow the first appearance of each
    state in the header.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty roll-call file")
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header):
        raise SchemaError(f"{path}: blank state code in header")
    states = list(dict.fromkeys(header))
    col_node = np.array([states.index(h) for h in header])
    out = []
    for lineno, rec in enumerate(rows[1:], start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(header):
            raise SchemaError(f"{path}: line {lineno} has {len(rec)} columns, header has {len(header)}")
        votes = np.array([vote_value(c) for c in rec])
        out.append(np.bincount(col_node, weights=votes, minlength=len(states)))
    if not out:
        raise SchemaError(f"{path}: no vote rows")
    return SnapshotSet(np.array(out), 0.0, {"source": str(path), "format": "RollCall",
                                             "nodes": states, "sigma2_unknown": True})


# ----------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------


def _parse_params(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _read_config(path):
    return {} if path is None else _io.read_config(path)


def _solver_config(args, config):
    base = dict(config.get("solver", {}))
    for name in SOLVER_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            base[name] = v
    return SolverConfig.from_dict(base), base


def _filter_from(args, config, lam_max=None):
    if getattr(args, "rates", None):
        return FilterSpec(tuple(_floats(args.rates)))
    fc = config.get("filter")
    if fc is None:
        return None
    if "rates" in fc:
        return FilterSpec(tuple(fc["rates"]))
    if "fractions" in fc:
        lam = fc.get("lambda_max", lam_max)
        if lam is None:
            raise InvalidParams("filter fractions need lambda_max")
        return FilterSpec.scaled(fc["fractions"], lam)
    raise InvalidParams("filter config needs 'rates' or 'fractions'")


def _load_truth(path):
    path = Path(path)
    if path.suffix == ".json":
        return np.asarray(laplacian_of(read_graph_json(path)))
    return _io.read_matrix_csv(path)


def _load_cov(args):
    if args.covariance:
        return SampleCovariance.from_matrix(_io.read_matrix_csv(args.covariance))
    if args.snapshots:
        return sample_covariance(SnapshotSet.read(args.snapshots))
    raise UsageError("give --snapshots or --covariance")


def _add_solver_flags(p):
    p.add_argument("--config", help="TOML or JSON file; solver settings under [solver]")
    p.add_argument("--beta", type=float)
    p.add_argument("--eta", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--epsilon-schedule", dest="epsilon_schedule", help="GridPaper, Binary[:k] or Step:h")
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--distance", choices=["FrobeniusSq", "MaxNorm"])
    p.add_argument("--reweight-iters", dest="reweight_iters", type=int)
    p.add_argument("--opt-tol", dest="opt_tol", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def cmd_generate(args):
    config = _read_config(args.config)
    gcfg = dict(config.get("graph", {}))
    if args.model:
        gcfg["model"] = args.model
    gcfg.update(_parse_params(args.param))
    if args.weights:
        gcfg["weights"] = args.weights if args.weights == "unit" else ["uniform", *_floats(args.weights)]
    model = gcfg.pop("model", None)
    if model not in MODELS:
        raise UsageError(f"unknown graph model {model!r}; choose from {MODELS}")
    weights = gcfg.pop("weights", "unit")
    fcfg = dict(config.get("filter", {"kind": "fixed", "fractions": [0.7, 0.8, 0.9]}))
    if args.fractions:
        fcfg = {"kind": "fixed", "fractions": _floats(args.fractions)}
    M = args.M if args.M is not None else config.get("M")
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    sigma = float(config.get("sigma", 1.0))
    resolved = {"graph": {"model": model, **gcfg, "weights": weights}, "filter": fcfg, "M": M,
                "seed": seed, "sigma": sigma, "out": args.out}
    if args.dry_run:
        print(json.dumps(resolved, indent=2, sort_keys=True))
        return EXIT_OK
    g = sample_graph(model, gcfg, parse_weight_dist(weights), seed=seed)
    L = laplacian_of(g)
    out = Path(args.out)
    write_graph_json(out / "graph.json", g)
    _io.write_matrix_csv(out / "L.csv", np.asarray(L))
    if M:
        kind = fcfg.get("kind", "fixed")
        if kind == "random":
            gen = RandomFilters(tuple(fcfg.get("t_choices", (3, 4, 5))))
        elif kind == "constant_unknown":
            gen = FilterSpec.constant(float(fcfg.get("fraction", 0.8)) / L.lambda_max, int(fcfg.get("T", 5)))
        else:
            gen = FilterSpec.scaled(fcfg.get("fractions", [0.7, 0.8, 0.9]), L.lambda_max)
        if isinstance(gen, FilterSpec):
            _io.write_json(out / "filter.json", {"filter": gen.to_dict()})
        simulate_snapshots(np.asarray(L), gen, int(M), sigma, seed=seed).write(out / "snapshots.csv")
    print(out)
    return EXIT_OK


def cmd_simulate(args):
    config = _read_config(args.config)
    L = laplacian_of(read_graph_json(args.graph))
    f = _filter_from(args, config, L.lambda_max)
    if f is None:
        raise UsageError("simulate needs --rates or a filter in --config")
    snap = simulate_snapshots(np.asarray(L), f, args.M, args.sigma, seed=args.seed)
    snap.write(args.out)
    print(args.out)
    return EXIT_OK


def cmd_infer(args):
    config = _read_config(args.config)
    if args.method in BASELINES and not args.baseline:
        raise UsageError(f"{args.method} is a baseline; pass --baseline to run it")
    cfg, given = _solver_config(args, config)
    cov = _load_cov(args)
    notes = {}
    out = Path(args.out)
    if args.method in ("inversefilter", "nearestcgl", "structglasso"):
        f = _filter_from(args, config)
        if f is None:
            raise UsageError(f"{args.method} needs the filter rates (--rates or [filter] in --config)")
        est = inverse_filter(cov, f)
        if args.method == "inversefilter":
            out.mkdir(parents=True, exist_ok=True)
            _io.write_matrix_csv(out / "L_hat.csv", est.L_hat)
            diag = {"method": "inversefilter", **est.to_dict("L_hat.csv")}
            L_est, sol = est.L_hat, None
        elif args.method == "nearestcgl":
            sol = nearest_cgl(est.L_hat, cfg)
        else:
            sol = struct_glasso_baseline(est.L_hat, cfg)
    elif args.method == "orderedspectemp":
        if "eta" not in given:
            notes["eta_default_used"] = True
        sol = ordered_spec_temp(cov, cfg)
    elif args.method == "spectemp-leigvec":
        sol = spectemp_leigvec(cov, cfg)
    else:
        sol = hybrid(cov, cfg.replace(epsilon=None, epsilon_schedule=None, reweight_iters=0), ord_cfg=cfg)
    if sol is not None:
        sol.diagnostics.update(notes)
        sol.diagnostics["solver_config"] = cfg.to_dict()
        L_est, diag = sol.L_star, sol.diagnostics
    if args.truth:
        L_true = _load_truth(args.truth)
        tn = args.trace_normalize or args.method in ("orderedspectemp", "spectemp-leigvec", "hybrid")
        rep = f_score(L_est, L_true, args.edge_threshold, trace_normalize=tn)
        diag["rel_error"] = recovery_error(L_est, L_true, tn)
        diag["report"] = rep.to_dict()
    if sol is not None:
        sol.write(out)
    else:
        _io.write_json(out / "diagnostics.json", diag)
    print(out)
    return EXIT_OK


def cmd_evaluate(args):
    L_star = _io.read_matrix_csv(args.estimate)
    L_true = _load_truth(args.truth)
    rep = f_score(L_star, L_true, args.edge_threshold, trace_normalize=args.trace_normalize)
    d = rep.to_dict()
    d["valid_cgl"] = bool(validate_cgl(L_star, 1e-6))
    if args.out:
        _io.write_json(args.out, d)
    print(json.dumps(d, sort_keys=True))
    return EXIT_OK


def cmd_benchmark(args):
    d = _io.read_config(args.spec)
    if args.out:
        d["out"] = args.out
    if args.seeds is not None:
        d["seeds"] = list(range(args.seeds))
    solver = dict(d.get("solver", {}))
    for name in SOLVER_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            solver[name] = v
    d["solver"] = solver
    spec = ExperimentSpec.from_dict(d)
    baselines = [m for m in spec.methods if m in BASELINES]
    if baselines and not args.baseline:
        raise UsageError(f"methods {baselines} are baselines; pass --baseline to run them")
    if args.dry_run:
        print(json.dumps(spec.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    rows = run_benchmark(spec, args.jobs)
    out = Path(spec.out)
    write_results(rows, out / "results.csv")
    _io.write_json(out / "summary.json", summarize(spec, rows))
    print(out)
    return EXIT_OK


def cmd_ingest(args):
    if args.format == "MatrixCsv":
        snap = ingest_matrix_csv(args.path, header=args.header)
    else:
        snap = ingest_roll_call(args.path)
    snap.write(args.out)
    print(f"{args.out} M={snap.M} N={snap.N}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="consensus-cgl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a graph and (optionally) snapshots")
    g.add_argument("--config")
    g.add_argument("--model", help=f"one of {', '.join(MODELS)}")
    g.add_argument("--param", action="append", help="graph parameter key=value (repeatable)")
    g.add_argument("--weights", help="'unit' or 'lo,hi' for uniform weights")
    g.add_argument("--fractions", help="fixed rates as fractions of 1/lambda_max, e.g. 0.7,0.8,0.9")
    g.add_argument("--M", type=int, help="number of snapshots (omit for graph only)")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", default="data")
    g.add_argument("--dry-run", action="store_true")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="draw snapshots from a graph file")
    s.add_argument("--graph", required=True)
    s.add_argument("--config")
    s.add_argument("--rates", help="comma-separated diffusion rates")
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="snapshots.csv")
    s.set_defaults(func=cmd_simulate)

    i = sub.add_parser("infer", help="recover a Laplacian from snapshots or a covariance")
    i.add_argument("--method", required=True, choices=METHODS)
    src = i.add_mutually_exclusive_group()
    src.add_argument("--snapshots")
    src.add_argument("--covariance", help="dense covariance matrix CSV")
    i.add_argument("--rates", help="comma-separated diffusion rates")
    i.add_argument("--truth", help="graph JSON or Laplacian CSV to score against")
    i.add_argument("--trace-normalize", action="store_true")
    i.add_argument("--edge-threshold", type=float, default=1e-6)
    i.add_argument("--baseline", action="store_true", help="allow baseline methods")
    i.add_argument("--out", default="solution")
    _add_solver_flags(i)
    i.set_defaults(func=cmd_infer)

    e = sub.add_parser("evaluate", help="score an estimate against the truth")
    e.add_argument("--estimate", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--trace-normalize", action="store_true")
    e.add_argument("--edge-threshold", type=float, default=1e-6)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("benchmark", help="run a (method x M x seed) grid")
    b.add_argument("spec", help="experiment TOML or JSON")
    b.add_argument("--jobs", type=int, help="worker processes (default: available CPUs)")
    b.add_argument("--seeds", type=int, help="override with seeds 0..n-1")
    b.add_argument("--out")
    b.add_argument("--baseline", action="store_true")
    b.add_argument("--dry-run", action="store_true")
    _add_solver_flags(b)
    b.set_defaults(func=cmd_benchmark)

    n = sub.add_parser("ingest", help="convert a local data file to a snapshot set")
    n.add_argument("--format", required=True, choices=["MatrixCsv", "RollCall"])
    n.add_argument("path")
    n.add_argument("--header", action="store_true", help="MatrixCsv has a header row")
    n.add_argument("--out", default="snapshots.csv")
    n.set_defaults(func=cmd_ingest)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except InvalidParams as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Infeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CglError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
