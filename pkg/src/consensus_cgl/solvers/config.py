from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .. import io as _io
from ..errors import InvalidParams

DISTANCES = ("FrobeniusSq", "MaxNorm")
EDGE_THRESHOLD = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    """Settings shared by the convex recovery solvers.

    ``epsilon=None`` selects the penalized form of the spectral-template problem;
    a number selects the constraint form with that tolerance. ``epsilon_schedule``
    (``"GridPaper"``, ``"Binary"``/``"Binary:<iters>"`` or ``"Step:<h>"``) makes
    the solver pick the smallest feasible tolerance itself.
    """

    beta: float = 0.0
    epsilon: Optional[float] = None
    epsilon_schedule: Optional[str] = None
    eta: int = 1
    distance: str = "FrobeniusSq"
    reweight_iters: int = 0
    reweight_eps: float = 1e-4
    opt_tol: float = 1e-8
    max_iters: int = 20_000
    t_max: int = 10

    def __post_init__(self):
        if self.beta < 0:
            raise InvalidParams(f"beta must be nonnegative, got {self.beta}")
        if self.epsilon is not None and self.epsilon < 0:
            raise InvalidParams(f"epsilon must be nonnegative, got {self.epsilon}")
        if int(self.eta) != self.eta or self.eta < 1:
            raise InvalidParams(f"eta must be a positive integer, got {self.eta}")
        if self.distance not in DISTANCES:
            raise InvalidParams(f"distance must be one of {DISTANCES}, got {self.distance!r}")
        if int(self.reweight_iters) != self.reweight_iters or self.reweight_iters < 0:
            raise InvalidParams(f"reweight_iters must be a nonnegative integer, got {self.reweight_iters}")
        for name in ("reweight_eps", "opt_tol"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be positive")
        if self.max_iters < 1 or self.t_max < 1:
            raise InvalidParams("max_iters and t_max must be at least 1")
        if self.epsilon_schedule is not None:
            parse_schedule(self.epsilon_schedule)

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidParams(f"unknown solver settings: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path):
        d = _io.read_config(path)
        return cls.from_dict(d.get("solver", d))


def parse_schedule(schedule):
    """Return ``("grid", None)``, ``("binary", iters)`` or ``("step", h)``."""
    if isinstance(schedule, tuple):
        return schedule
    s = str(schedule)
    if s == "GridPaper":
        return ("grid", None)
    if s.startswith("Binary"):
        iters = int(s.split(":", 1)[1]) if ":" in s else 5
        if iters < 1:
            raise InvalidParams("binary search needs at least one iteration")
        return ("binary", iters)
    if s.startswith("Step:"):
        h = float(s.split(":", 1)[1])
        if not h > 0:
            raise InvalidParams("step must be positive")
        return ("step", h)
    raise InvalidParams(f"unknown epsilon schedule {schedule!r}")


@dataclass
class CglSolution:
    L_star: np.ndarray
    weights: np.ndarray
    gamma_star: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def N(self):
        return self.L_star.shape[0]

    def edge_list(self, threshold=EDGE_THRESHOLD):
        iu, ju = np.triu_indices(self.N, k=1)
        w = -self.L_star[iu, ju]
        keep = w > threshold
        return list(zip(iu[keep].tolist(), ju[keep].tolist(), w[keep].tolist()))

    def write(self, out_dir, threshold=EDGE_THRESHOLD):
        """Write ``edges.csv``, ``L_star.csv`` and ``diagnostics.json`` into ``out_dir``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "edges.csv", "w") as fh:
            fh.write("i,j,weight\n")
            for i, j, w in self.edge_list(threshold):
                fh.write(f"{i},{j},{_io.FLOAT_FMT % w}\n")
        _io.write_matrix_csv(out / "L_star.csv", self.L_star)
        diag = dict(self.diagnostics)
        if self.gamma_star is not None:
            diag["gamma_star"] = self.gamma_star.tolist()
        _io.write_json(out / "diagnostics.json", diag)
        return out
