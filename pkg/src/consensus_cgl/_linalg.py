from __future__ import annotations

import numpy as np

from .errors import NonFinite, NotSquare


def eigendecompose_sym(m):
    """Eigendecomposition of a symmetric matrix with eigenvalues sorted nonincreasing.

    The input is symmetrized as ``(m + m.T) / 2``. Each eigenvector is given a
    deterministic sign: its entry of largest magnitude is made positive (the
    first such entry on ties).
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite("matrix has non-finite entries")
    lam, U = np.linalg.eigh((m + m.T) / 2)
    lam = lam[::-1].copy()
    U = U[:, ::-1].copy()
    return lam, fix_signs(U)


def fix_signs(U):
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs
