"""Consensus filters, snapshot simulation and covariance estimates.

A consensus filter with rates ``a_1..a_T`` maps an initial state ``x0`` to
``(I - a_T L) ... (I - a_1 L) x0``. Snapshot datasets hold one filtered state
per row.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io as _io
from ._linalg import eigendecompose_sym
from .errors import (
    DimensionMismatch,
    InvalidParams,
    InvalidSigma,
    NonFinite,
    UnstableRate,
)
from .graphs import Laplacian

# Samples are drawn in fixed-size blocks, block b from the stream [seed, b].
BLOCK = 4096


@dataclass(frozen=True)
class FilterSpec:
    rates: tuple = ()

    def __post_init__(self):
        rates = tuple(float(a) for a in self.rates)
        for a in rates:
            if not a > 0:
                raise InvalidParams(f"diffusion rates must be strictly positive, got {a}")
        object.__setattr__(self, "rates", rates)

    @classmethod
    def constant(cls, alpha, T):
        return cls((alpha,) * int(T))

    @classmethod
    def scaled(cls, fractions, lam_max):
        """Rates given as fractions of ``1 / lam_max``, e.g. ``(0.7, 0.8, 0.9)``."""
        return cls(tuple(f / lam_max for f in fractions))

    @property
    def T(self):
        return len(self.rates)

    @property
    def alpha_max(self):
        return max(self.rates) if self.rates else 0.0

    def response(self, lam):
        """Scalar response ``prod_t (1 - a_t lam)``, vectorized over ``lam``."""
        lam = np.asarray(lam, dtype=float)
        out = np.ones_like(lam)
        for a in self.rates:
            out = out * (1.0 - a * lam)
        return out

    def check_stable(self, L):
        lam_max = _lambda_max(L)
        if lam_max > 0 and self.alpha_max * lam_max >= 1.0:
            raise UnstableRate(
                f"rate {self.alpha_max:.6g} is not below 1/lambda_max = {1.0 / lam_max:.6g}"
            )

    def to_dict(self):
        return {"kind": "fixed", "rates": list(self.rates)}


@dataclass(frozen=True)
class RandomFilters:
    """Per-sample filters: ``T_k`` uniform on ``t_choices``, rates uniform on ``(0, rate_scale / lambda_max)``."""

    t_choices: tuple = (3, 4, 5)
    rate_scale: float = 1.0

    def __post_init__(self):
        choices = tuple(int(t) for t in self.t_choices)
        if not choices or min(choices) < 0:
            raise InvalidParams(f"t_choices must be nonempty and nonnegative, got {self.t_choices}")
        if not 0 < self.rate_scale <= 1:
            raise InvalidParams(f"rate_scale must lie in (0, 1], got {self.rate_scale}")
        object.__setattr__(self, "t_choices", choices)

    def draw(self, rng, count, lam_max):
        """Return an int array of ``T_k`` and a ``count x max(T)`` rate matrix padded with zeros."""
        T = rng.choice(np.asarray(self.t_choices), size=count)
        width = max(self.t_choices)
        hi = self.rate_scale / lam_max if lam_max > 0 else 1.0
        rates = rng.uniform(0.0, hi, size=(count, width))
        rates = np.where(rates <= 0.0, np.nextafter(0.0, 1.0), rates)
        rates[np.arange(width)[None, :] >= T[:, None]] = 0.0
        return T, rates

    def to_dict(self):
        return {"kind": "random", "t_choices": list(self.t_choices), "rate_scale": self.rate_scale}


@dataclass(frozen=True)
class AR1:
    """Time-correlated inputs ``xi_t = a xi_{t-1} + (1 - a) w_t``, keeping every ``stride``-th one."""

    a: float
    stride: int = 1

    def __post_init__(self):
        if not 0 <= self.a < 1:
            raise InvalidParams(f"AR(1) parameter must lie in [0, 1), got {self.a}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise InvalidParams(f"stride must be a positive integer, got {self.stride}")


@dataclass(frozen=True)
class WishartColored:
    """Inputs ``N(0, C)`` with one draw ``C ~ W_N(I, d) / d`` per dataset."""

    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InvalidParams(f"degrees of freedom must be a positive integer, got {self.d}")


@dataclass
class SnapshotSet:
    signals: np.ndarray
    sigma2: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.signals = np.atleast_2d(np.asarray(self.signals, dtype=float))
        if self.signals.shape[0] < 1 or self.signals.shape[1] < 1:
            raise InvalidParams(f"need at least one sample and one node, got {self.signals.shape}")
        if not np.all(np.isfinite(self.signals)):
            raise NonFinite("snapshot signals contain non-finite entries")
        if not self.sigma2 >= 0:
            raise InvalidSigma(f"sigma2 must be nonnegative, got {self.sigma2}")

    @property
    def M(self):
        return self.signals.shape[0]

    @property
    def N(self):
        return self.signals.shape[1]

    def write(self, path):
        """Write ``path`` (CSV, one sample per row) and the sidecar ``path.json``."""
        path = Path(path)
        _io.write_matrix_csv(path, self.signals)
        _io.write_json(sidecar_path(path), {"sigma2": self.sigma2, "M": self.M, "N": self.N,
                                            **self.provenance})

    @classmethod
    def read(cls, path):
        path = Path(path)
        signals = _io.read_matrix_csv(path)
        side = sidecar_path(path)
        meta = _io.read_json(side) if side.exists() else {}
        sigma2 = float(meta.pop("sigma2", float("nan")))
        meta.pop("M", None)
        meta.pop("N", None)
        if not np.isfinite(sigma2):
            sigma2 = 0.0
            meta["sigma2_unknown"] = True
        return cls(signals, sigma2, meta)


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".json")


@dataclass
class SampleCovariance:
    """Symmetric PSD matrix with eigenvalues sorted nonincreasing."""

    matrix: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @classmethod
    def from_matrix(cls, matrix):
        matrix = np.asarray(matrix, dtype=float)
        matrix = (matrix + matrix.T) / 2
        lam, U = eigendecompose_sym(matrix)
        return cls(matrix, lam, U)

    @classmethod
    def from_eig(cls, eigvals, eigvecs):
        """Build from a given eigenbasis; columns are reordered so eigenvalues are nonincreasing."""
        eigvals = np.asarray(eigvals, dtype=float)
        order = np.argsort(-eigvals, kind="stable")
        lam = eigvals[order]
        U = np.asarray(eigvecs, dtype=float)[:, order]
        return cls((U * lam) @ U.T, lam, U)

    @property
    def N(self):
        return self.matrix.shape[0]


def _lambda_max(L):
    if isinstance(L, Laplacian):
        return L.lambda_max
    return float(np.linalg.eigvalsh(np.asarray(L, dtype=float))[-1])


def _as_matrix(L):
    return L.matrix if isinstance(L, Laplacian) else np.asarray(L, dtype=float)


def apply_filter(L, f: FilterSpec, x0):
    """Run the consensus recursion on ``x0`` with one mat-vec per step."""
    f.check_stable(L)
    Lm = _as_matrix(L)
    x = np.array(x0, dtype=float)
    if x.shape[0] != Lm.shape[0]:
        raise DimensionMismatch(f"signal length {x.shape[0]} does not match N={Lm.shape[0]}")
    for a in f.rates:
        x = x - a * (Lm @ x)
    return x


def _filter_rows(Lm, rates, X):
    """Apply per-row rate sequences (``rates`` is ``M x T``, zero means identity) to the rows of ``X``."""
    for t in range(rates.shape[1]):
        col = rates[:, t]
        if not np.any(col):
            continue
        X = X - col[:, None] * (X @ Lm)
    return X


def _draw_inputs(rng, count, N, sigma, input_dist):
    if input_dist == "gaussian":
        return sigma * rng.standard_normal((count, N))
    if input_dist == "uniform":
        h = np.sqrt(3.0) * sigma
        return rng.uniform(-h, h, size=(count, N))
    raise InvalidParams(f"unknown input distribution {input_dist!r}")


def simulate_snapshots(L, filters, M, sigma=1.0, seed=0, input_dist="gaussian") -> SnapshotSet:
    """Draw ``M`` white inputs and return their filtered outputs.

    ``filters`` is either one :class:`FilterSpec` shared by all samples or a
    :class:`RandomFilters` generator drawing a new filter per sample. The result
    depends only on ``seed``: samples are produced in blocks of ``BLOCK`` rows,
    block ``b`` from its own stream.
    """
    M = int(M)
    if M < 1:
        raise InvalidParams(f"M must be at least 1, got {M}")
    if not sigma > 0:
        raise InvalidSigma(f"sigma must be positive, got {sigma}")
    Lm = _as_matrix(L)
    N = Lm.shape[0]
    lam_max = _lambda_max(L)
    if isinstance(filters, FilterSpec):
        filters.check_stable(L)
    elif not isinstance(filters, RandomFilters):
        raise InvalidParams(f"unsupported filter description {filters!r}")

    out = np.empty((M, N))
    for b, start in enumerate(range(0, M, BLOCK)):
        count = min(BLOCK, M - start)
        rng = np.random.default_rng([int(seed), b])
        X = _draw_inputs(rng, count, N, sigma, input_dist)
        if isinstance(filters, FilterSpec):
            for a in filters.rates:
                X = X - a * (X @ Lm)
        else:
            _, rates = filters.draw(rng, count, lam_max)
            X = _filter_rows(Lm, rates, X)
        out[start:start + count] = X
    prov = {"seed": seed, "filter": filters.to_dict(), "input": input_dist, "sigma": sigma}
    return SnapshotSet(out, sigma**2, prov)


def generate_inputs(kind, N, M, sigma=1.0, seed=0):
    """Raw (unfiltered) inputs for the robustness experiments, one per row."""
    rng = np.random.default_rng([int(seed), 0])
    if isinstance(kind, AR1):
        steps = M * kind.stride
        xi = np.empty((steps, N))
        xi[0] = rng.standard_normal(N)
        w = rng.standard_normal((steps, N))
        for t in range(1, steps):
            xi[t] = kind.a * xi[t - 1] + (1 - kind.a) * w[t]
        return sigma * xi[kind.stride - 1::kind.stride][:M]
    if isinstance(kind, WishartColored):
        if kind.d < N:
            raise InvalidParams(f"Wishart degrees of freedom d={kind.d} must be at least N={N}")
        G = rng.standard_normal((N, kind.d))
        Z = rng.standard_normal((M, kind.d))
        # rows of Z @ G.T / sqrt(d) are N(0, G G^T / d)
        return sigma * (Z @ G.T) / np.sqrt(kind.d)
    raise InvalidParams(f"unknown input generator {kind!r}")


def wishart_input_covariance(kind: WishartColored, N, seed=0):
    """The colored input covariance ``C`` drawn by :func:`generate_inputs` for this seed."""
    rng = np.random.default_rng([int(seed), 0])
    G = rng.standard_normal((N, kind.d))
    return G @ G.T / kind.d


def robustness_input_generators(kind, L, f: FilterSpec, M, sigma=1.0, seed=0) -> SnapshotSet:
    f.check_stable(L)
    Lm = _as_matrix(L)
    X = generate_inputs(kind, Lm.shape[0], M, sigma, seed)
    for a in f.rates:
        X = X - a * (X @ Lm)
    kind_meta = {"kind": type(kind).__name__, **kind.__dict__}
    prov = {"seed": seed, "filter": f.to_dict(), "input": kind_meta, "sigma": sigma}
    return SnapshotSet(X, sigma**2, prov)


def sample_covariance(s) -> SampleCovariance:
    """Uncentered second moment ``Y^T Y / M`` (inputs are zero-mean by construction)."""
    Y = s.signals if isinstance(s, SnapshotSet) else np.atleast_2d(np.asarray(s, dtype=float))
    return SampleCovariance.from_matrix(Y.T @ Y / Y.shape[0])


def analytic_covariance(L, f: FilterSpec, sigma2=1.0):
    """``sigma2 * h(L)^2`` formed through the eigendecomposition of ``L``."""
    f.check_stable(L)
    if not isinstance(L, Laplacian):
        L = Laplacian(L, check=False)
    V = L.eigvecs
    g = sigma2 * f.response(L.eigvals) ** 2
    C = (V * g) @ V.T
    return (C + C.T) / 2


def analytic_sample_covariance(L, f: FilterSpec, sigma2=1.0) -> SampleCovariance:
    """The infinite-sample covariance wrapped with its exact eigendecomposition."""
    if not isinstance(L, Laplacian):
        L = Laplacian(L, check=False)
    f.check_stable(L)
    return SampleCovariance.from_eig(sigma2 * f.response(L.eigvals) ** 2, L.eigvecs)
