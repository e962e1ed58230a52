"""Edge-weight parameterization of the CGL set.

A CGL on ``N`` nodes is determined by its ``N(N-1)/2`` nonnegative edge weights
``a``, ordered like ``numpy.triu_indices(N, 1)``. Stacking the diagonal and
``sqrt(2)`` times the strict lower triangle gives a vector ``b = P a`` whose
Euclidean norm equals the Frobenius norm of the matrix.
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import LinearOperator

from ..errors import NotSquare

SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=32)
def edge_pairs(N):
    iu, ju = np.triu_indices(N, k=1)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


class CglVectorization(NamedTuple):
    P: csr_matrix
    b_hat: np.ndarray
    I: np.ndarray  # flat (row-major) indices of the diagonal
    J: np.ndarray  # flat indices of the strict lower triangle, edge order


def structure_matrix(N):
    iu, ju = edge_pairs(N)
    E = iu.size
    cols = np.arange(E)
    rows = np.concatenate([iu, ju, N + cols])
    vals = np.concatenate([np.ones(E), np.ones(E), np.full(E, -SQRT2)])
    return csr_matrix((vals, (rows, np.concatenate([cols, cols, cols]))), shape=(N + E, E))


def stack_target(L_hat):
    L_hat = np.asarray(L_hat, dtype=float)
    N = L_hat.shape[0]
    iu, ju = edge_pairs(N)
    return np.concatenate([np.diag(L_hat), SQRT2 * L_hat[ju, iu]])


def cgl_vectorize(L_hat) -> CglVectorization:
    L_hat = np.asarray(L_hat, dtype=float)
    if L_hat.ndim != 2 or L_hat.shape[0] != L_hat.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {L_hat.shape}")
    N = L_hat.shape[0]
    iu, ju = edge_pairs(N)
    I = np.arange(N) * (N + 1)
    J = ju * N + iu
    return CglVectorization(structure_matrix(N), stack_target(L_hat), I, J)


def assemble_cgl(a, N):
    """Dense CGL from edge weights (any sign is accepted; callers enforce ``a >= 0``)."""
    iu, ju = edge_pairs(N)
    L = np.zeros((N, N))
    L[iu, ju] = -a
    L[ju, iu] = -a
    L[np.diag_indices(N)] = -L.sum(axis=1)
    return L


def edge_weights_of(L):
    """Edge vector ``-L[i, j]`` (``i < j``) of a symmetric matrix."""
    L = np.asarray(L, dtype=float)
    iu, ju = edge_pairs(L.shape[0])
    return -L[iu, ju]


def degrees(a, N):
    iu, ju = edge_pairs(N)
    return np.bincount(iu, weights=a, minlength=N) + np.bincount(ju, weights=a, minlength=N)


def structure_operator(N):
    """Matrix-free ``P`` with ``||P||_2^2 = 2N``; avoids storing the sparse matrix."""
    iu, ju = edge_pairs(N)
    E = iu.size

    def matvec(a):
        a = np.ravel(a)
        return np.concatenate([degrees(a, N), -SQRT2 * a])

    def rmatvec(r):
        r = np.ravel(r)
        d = r[:N]
        return d[iu] + d[ju] - SQRT2 * r[N:]

    op = LinearOperator((N + E, E), matvec=matvec, rmatvec=rmatvec, dtype=float)
    return op


def structure_norm_sq(N):
    # P^T P = B^T B + 2 I with B the unsigned incidence matrix of K_N, whose top eigenvalue is 2N - 2
    return 2.0 * N
