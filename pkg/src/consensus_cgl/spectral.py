"""Spectral estimation of the Laplacian by inverting the consensus filter.

The sample covariance of filtered white noise shares its eigenvectors with the
Laplacian, and its eigenvalues are ``sigma2 * h(lam)^2`` with ``h`` decreasing.
Dividing by the largest covariance eigenvalue and inverting ``h`` on
``[0, 1/alpha_max]`` recovers the Laplacian spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import eigendecompose_sym, fix_signs  # noqa: F401  (re-exported)
from .dynamics import FilterSpec, SampleCovariance
from .errors import DegenerateCovariance, DimensionMismatch, EmptyFilter, NonPositiveRate

BISECT_TOL = 1e-12
BISECT_MAX_ITERS = 200
SIGMA2_FLOOR = 1e-12


@dataclass
class SpectralEstimate:
    sigma2_hat: float
    lambda_hat: np.ndarray
    eigvecs: np.ndarray
    L_hat: np.ndarray

    def to_dict(self, L_hat_path=None):
        out = {"sigma2_hat": self.sigma2_hat, "lambda_hat": self.lambda_hat.tolist()}
        if L_hat_path is not None:
            out["L_hat"] = str(L_hat_path)
        return out


def align_signs(U, ref):
    """Flip columns of ``U`` so that ``U[:, i] . ref[:, i] >= 0``; exact zeros keep the sign."""
    U = np.asarray(U, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if U.shape != ref.shape:
        raise DimensionMismatch(f"shapes {U.shape} and {ref.shape} differ")
    dots = np.einsum("ij,ij->j", U, ref)
    return U * np.where(dots < 0, -1.0, 1.0)


def estimate_sigma2(cov: SampleCovariance) -> float:
    return float(np.max(cov.eigvals))


def _check_filter(f: FilterSpec):
    if f.T == 0:
        raise EmptyFilter("cannot invert an empty filter")
    if min(f.rates) <= 0:
        raise NonPositiveRate("all rates must be positive")


def invert_filter_eigenvalues(h_target, f: FilterSpec):
    """Vectorized root of ``prod_t (1 - a_t lam) = h`` on ``[0, 1/alpha_max]`` by bisection.

    Targets are clipped to ``[0, 1]``. The response is strictly decreasing on the
    bracket, so the root is unique.
    """
    _check_filter(f)
    h = np.clip(np.asarray(h_target, dtype=float), 0.0, 1.0)
    lo = np.zeros_like(h)
    hi = np.full_like(h, 1.0 / f.alpha_max)
    for _ in range(BISECT_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        above = f.response(mid) > h
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= np.spacing(hi)):
            break
    lam = 0.5 * (lo + hi)
    # endpoints are exact roots for h in {0, 1}
    lam = np.where(h >= 1.0, 0.0, lam)
    lam = np.where(h <= 0.0, 1.0 / f.alpha_max, lam)
    return lam


def invert_filter_eigenvalue(h_target, f: FilterSpec) -> float:
    return float(invert_filter_eigenvalues(np.array([h_target]), f)[0])


def _scaled_spectrum(cov: SampleCovariance):
    sigma2 = estimate_sigma2(cov)
    floor = SIGMA2_FLOOR * max(np.trace(cov.matrix), 0.0) / cov.N
    if sigma2 <= 0 or sigma2 < floor:
        raise DegenerateCovariance(f"estimated input power {sigma2:.3g} is degenerate")
    ratios = np.clip(cov.eigvals / sigma2, 0.0, 1.0)
    return sigma2, ratios


def inverse_filter(cov: SampleCovariance, f: FilterSpec) -> SpectralEstimate:
    """Closed-form Laplacian estimate from a covariance and a known filter.

    Covariance eigenvalues come in nonincreasing order, so the inverted
    Laplacian eigenvalues come out nondecreasing.
    """
    _check_filter(f)
    sigma2, ratios = _scaled_spectrum(cov)
    lam = invert_filter_eigenvalues(np.sqrt(ratios), f)
    U = cov.eigvecs
    L_hat = (U * lam) @ U.T
    return SpectralEstimate(sigma2, lam, U, (L_hat + L_hat.T) / 2)


def simplified_inverse_filter(cov: SampleCovariance, t: int):
    """``I - (S / sigma2)^(1/(2t))`` for a constant-rate filter with the rate absorbed into ``L``."""
    t = int(t)
    if t < 1:
        raise ValueError(f"t must be a positive integer, got {t}")
    _, ratios = _scaled_spectrum(cov)
    U = cov.eigvecs
    L_t = (U * (1.0 - ratios ** (1.0 / (2 * t)))) @ U.T
    return (L_t + L_t.T) / 2
