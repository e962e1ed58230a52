"""Weighted undirected graphs, their combinatorial Laplacians and random generators."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import io as _io
from .errors import InvalidParams, NonSquare, ParseError, SchemaError

TOL_CGL = 1e-9
GAP_MIN = 1e-4

MODELS = ("ER", "SBM", "WattsStrogatz", "BarabasiAlbert", "Grid")


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph on nodes ``0..n-1`` stored as a sorted ``(i, j, w)`` list with ``i < j``."""

    n: int
    edges: tuple = ()
    meta: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParams(f"node count must be a positive integer, got {self.n!r}")
        cleaned = []
        seen = set()
        for e in self.edges:
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if i == j:
                raise InvalidParams(f"self-loop at node {i}")
            if i > j:
                i, j = j, i
            if not (0 <= i and j < self.n):
                raise InvalidParams(f"edge ({i}, {j}) out of range for n={self.n}")
            if (i, j) in seen:
                raise InvalidParams(f"duplicate edge ({i}, {j})")
            if not (w > 0 and math.isfinite(w)):
                raise InvalidParams(f"edge ({i}, {j}) has non-positive weight {w}")
            seen.add((i, j))
            cleaned.append((i, j, w))
        cleaned.sort()
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", tuple(cleaned))

    @property
    def num_edges(self):
        return len(self.edges)

    def adjacency(self):
        A = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            A[i, j] = A[j, i] = w
        return A

    @classmethod
    def from_adjacency(cls, A, tol=0.0, meta=None):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise NonSquare(f"adjacency must be square, got shape {A.shape}")
        iu, ju = np.triu_indices(A.shape[0], k=1)
        w = A[iu, ju]
        keep = w > tol
        return cls(A.shape[0], tuple(zip(iu[keep].tolist(), ju[keep].tolist(), w[keep].tolist())), meta)


class Laplacian:
    """A combinatorial graph Laplacian with a lazily computed eigendecomposition.

    Eigenvalues are stored in nondecreasing order, ``eigvecs[:, i]`` pairs with
    ``eigvals[i]``.
    """

    def __init__(self, matrix, tol=TOL_CGL, check=True):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise NonSquare(f"Laplacian must be square, got shape {matrix.shape}")
        if check:
            report = validate_cgl(matrix, tol)
            if not report.passed:
                raise InvalidParams(f"not a valid CGL: {report.describe()}")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.tol = tol

    @property
    def n(self):
        return self.matrix.shape[0]

    @cached_property
    def _eig(self):
        lam, V = np.linalg.eigh((self.matrix + self.matrix.T) / 2)
        lam.setflags(write=False)
        V.setflags(write=False)
        return lam, V

    @property
    def eigvals(self):
        return self._eig[0]

    @property
    def eigvecs(self):
        return self._eig[1]

    @property
    def lambda_max(self):
        return float(self.eigvals[-1])

    def min_eigengap(self):
        lam = self.eigvals
        return float(np.min(np.diff(lam))) if lam.size > 1 else math.inf

    def to_graph(self, threshold=0.0):
        return WeightedGraph.from_adjacency(-self.matrix * (1 - np.eye(self.n)), tol=threshold)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"Laplacian(n={self.n})"


def laplacian_of(g: WeightedGraph) -> Laplacian:
    A = g.adjacency()
    L = np.diag(A.sum(axis=1)) - A
    return Laplacian(L, check=False)


@dataclass
class ValidationReport:
    passed: bool
    violations: list = field(default_factory=list)

    def describe(self):
        if self.passed:
            return "ok"
        return "; ".join(f"{name} (max violation {mag:.3g})" for name, mag in self.violations)

    def __bool__(self):
        return self.passed


def validate_cgl(m, tol=TOL_CGL) -> ValidationReport:
    """Check symmetry, nonpositive off-diagonals and zero row sums within ``tol``."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {m.shape}")
    violations = []
    asym = float(np.max(np.abs(m - m.T), initial=0.0))
    if asym > tol:
        violations.append(("asymmetry", asym))
    off = m[~np.eye(m.shape[0], dtype=bool)]
    pos = float(np.max(off, initial=0.0))
    if pos > tol:
        violations.append(("positive off-diagonal", pos))
    rows = float(np.max(np.abs(m.sum(axis=1)), initial=0.0))
    if rows > tol:
        violations.append(("nonzero row sum", rows))
    return ValidationReport(not violations, violations)


def connectivity_check(g: WeightedGraph) -> bool:
    if g.n == 1:
        return True
    if not g.edges:
        return False
    ij = np.array([(i, j) for i, j, _ in g.edges])
    A = coo_matrix((np.ones(len(ij)), (ij[:, 0], ij[:, 1])), shape=(g.n, g.n))
    ncomp, _ = connected_components(A, directed=False)
    return ncomp == 1


# ----------------------------------------------------------------------
# Random generators
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 < self.lo < self.hi):
            raise InvalidParams(f"uniform weights need 0 < lo < hi, got ({self.lo}, {self.hi})")


UNIT = "unit"


def parse_weight_dist(spec):
    """Accept ``"unit"``, a :class:`Uniform`, ``["uniform", lo, hi]`` or ``{"uniform": [lo, hi]}``."""
    if spec is None or spec == UNIT or (isinstance(spec, str) and spec.lower() == "unit"):
        return UNIT
    if isinstance(spec, Uniform):
        return spec
    if isinstance(spec, dict) and "uniform" in spec:
        lo, hi = spec["uniform"]
        return Uniform(float(lo), float(hi))
    if isinstance(spec, (list, tuple)) and len(spec) == 3 and str(spec[0]).lower() == "uniform":
        return Uniform(float(spec[1]), float(spec[2]))
    raise InvalidParams(f"unknown weight distribution {spec!r}")


def _weight_dist_meta(dist):
    return "unit" if dist == UNIT else ["uniform", dist.lo, dist.hi]


def _prob(params, key, default=None):
    p = params.get(key, default)
    if p is None:
        raise InvalidParams(f"missing parameter {key!r}")
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InvalidParams(f"{key} must lie in [0, 1], got {p}")
    return p


def _er_pairs(n, p, rng):
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return iu[keep], ju[keep]


def _sbm_pairs(n, params, rng):
    sizes = params.get("sizes")
    if sizes is None:
        k = int(params.get("blocks", 2))
        if k < 1 or n % k:
            raise InvalidParams(f"cannot split n={n} into {k} equal blocks")
        sizes = [n // k] * k
    sizes = [int(s) for s in sizes]
    if sum(sizes) != n or min(sizes) < 1:
        raise InvalidParams(f"block sizes {sizes} must be positive and sum to n={n}")
    p_in = _prob(params, "p_in", params.get("p2"))
    p_out = _prob(params, "p_out", params.get("p1"))
    labels = np.repeat(np.arange(len(sizes)), sizes)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(iu.size) < prob
    return iu[keep], ju[keep]


def _nx_pairs(G):
    pairs = sorted((min(u, v), max(u, v)) for u, v in G.edges() if u != v)
    if not pairs:
        return np.zeros(0, int), np.zeros(0, int)
    arr = np.array(pairs)
    return arr[:, 0], arr[:, 1]


def generate_graph(model, params=None, weight_dist=UNIT, seed=None) -> WeightedGraph:
    """Draw one graph from ``model``; identical arguments give an identical edge list.

    Parameters by model: ER ``p``; SBM ``p_in``/``p_out`` (aliases ``p2``/``p1``) and
    optional ``sizes`` or ``blocks``; WattsStrogatz ``k`` (mean degree) and ``p``
    (rewiring); BarabasiAlbert ``m``; Grid ``rows``/``cols`` (default: the square
    grid whose side is ``round(sqrt(n))``). All models take ``n``.
    """
    params = dict(params or {})
    dist = parse_weight_dist(weight_dist)
    if model not in MODELS:
        raise InvalidParams(f"unknown graph model {model!r}; expected one of {MODELS}")
    n = params.get("n")
    if model != "Grid" and (n is None or int(n) != n or int(n) < 1):
        raise InvalidParams(f"{model} needs a positive integer n, got {n!r}")
    rng = np.random.default_rng(seed)

    if model == "ER":
        n = int(n)
        iu, ju = _er_pairs(n, _prob(params, "p"), rng)
    elif model == "SBM":
        n = int(n)
        iu, ju = _sbm_pairs(n, params, rng)
    elif model == "WattsStrogatz":
        n = int(n)
        k = int(params.get("k", 4))
        if not (0 <= k < n):
            raise InvalidParams(f"WattsStrogatz needs 0 <= k < n, got k={k}")
        p = _prob(params, "p", 0.0)
        G = nx.watts_strogatz_graph(n, k, p, seed=int(rng.integers(2**31)))
        iu, ju = _nx_pairs(G)
    elif model == "BarabasiAlbert":
        n = int(n)
        m = int(params.get("m", 2))
        if not (1 <= m < n):
            raise InvalidParams(f"BarabasiAlbert needs 1 <= m < n, got m={m}")
        G = nx.barabasi_albert_graph(n, m, seed=int(rng.integers(2**31)))
        iu, ju = _nx_pairs(G)
    else:
        rows, cols = params.get("rows"), params.get("cols")
        if rows is None or cols is None:
            if n is None:
                raise InvalidParams("Grid needs either n or rows and cols")
            side = max(1, round(math.sqrt(int(n))))
            rows, cols = side, side
        rows, cols = int(rows), int(cols)
        if rows < 1 or cols < 1:
            raise InvalidParams(f"grid dimensions must be positive, got {rows}x{cols}")
        G = nx.convert_node_labels_to_integers(nx.grid_2d_graph(rows, cols), ordering="sorted")
        n = rows * cols
        iu, ju = _nx_pairs(G)

    if dist == UNIT:
        w = np.ones(iu.size)
    else:
        w = rng.uniform(dist.lo, dist.hi, size=iu.size)
        # uniform() is half-open; keep weights strictly inside (lo, hi)
        w = np.where(w <= dist.lo, np.nextafter(dist.lo, dist.hi), w)
    meta = {"model": model, "params": params, "weights": _weight_dist_meta(dist), "seed": seed}
    return WeightedGraph(n, tuple(zip(iu.tolist(), ju.tolist(), w.tolist())), meta)


def sample_graph(model, params=None, weight_dist=UNIT, seed=0, connected=True,
                 gap_min=GAP_MIN, max_tries=10_000) -> WeightedGraph:
    """Resample ``generate_graph`` until the graph is connected with well separated eigenvalues.

    Attempt ``k`` uses the seed ``[seed, k]``, so the accepted graph depends only on ``seed``.
    ``gap_min=None`` disables the eigenvalue-separation requirement.
    """
    for k in range(max_tries):
        g = generate_graph(model, params, weight_dist, seed=[int(seed), k])
        if connected and not connectivity_check(g):
            continue
        if gap_min is not None and g.n > 1:
            if laplacian_of(g).min_eigengap() < gap_min:
                continue
        g.meta["seed"] = int(seed)
        g.meta["attempt"] = k
        return g
    raise InvalidParams(f"no acceptable {model} graph after {max_tries} attempts")


# ----------------------------------------------------------------------
# Serialization
# ----------------------------------------------------------------------


def graph_to_dict(g: WeightedGraph) -> dict:
    out = {"n": g.n, "edges": [[i, j, w] for i, j, w in g.edges]}
    if g.meta:
        for key in ("seed", "model", "params", "weights", "attempt"):
            if key in g.meta:
                out[key] = g.meta[key]
    return out


def graph_from_dict(d: dict) -> WeightedGraph:
    if "n" not in d or "edges" not in d:
        raise SchemaError("graph JSON needs 'n' and 'edges'")
    edges = []
    for k, e in enumerate(d["edges"]):
        if len(e) != 3:
            raise SchemaError(f"edge #{k} must be [i, j, w], got {e!r}")
        edges.append((e[0], e[1], e[2]))
    meta = {k: d[k] for k in ("seed", "model", "params", "weights", "attempt") if k in d}
    return WeightedGraph(int(d["n"]), tuple(edges), meta or None)


def write_graph_json(path, g):
    _io.write_json(path, graph_to_dict(g))


def read_graph_json(path):
    return graph_from_dict(_io.read_json(path))


def write_graph_csv(path, g):
    with open(path, "w", newline="") as fh:
        fh.write("i,j,w\n")
        for i, j, w in g.edges:
            fh.write(f"{i},{j},{_io.FLOAT_FMT % w}\n")


def read_graph_csv(path, n=None):
    """Read an ``i,j,w`` edge list; ``n`` defaults to one more than the largest index."""
    edges = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["i", "j", "w"]:
            raise ParseError(f"{path}: expected header 'i,j,w'", line=1)
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 3:
                raise ParseError(f"{path}: expected 3 fields, found {len(rec)}", line=lineno)
            try:
                edges.append((int(rec[0]), int(rec[1]), float(rec[2])))
            except ValueError:
                raise ParseError(f"{path}: malformed edge {rec!r}", line=lineno) from None
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in edges), default=0)
    return WeightedGraph(n, tuple(edges))
