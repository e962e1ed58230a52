import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from consensus_cgl.errors import NotSquare
from consensus_cgl.graphs import validate_cgl
from consensus_cgl.solvers import (
    SolverConfig,
    assemble_cgl,
    cgl_vectorize,
    edge_weights_of,
    kkt_residual,
    nearest_cgl,
    nonneg_l1_least_squares,
    reweight_weights,
    reweighted_l1,
)
from consensus_cgl.solvers.config import CglSolution, parse_schedule
from consensus_cgl.solvers.vectorize import structure_operator, structure_norm_sq
from consensus_cgl.errors import InvalidParams

from conftest import random_cgl
from oracles import brute_force_eq10, dense_cgl, grid_min

SQRT2 = np.sqrt(2.0)


# --- cgl_vectorize --------------------------------------------------------

def test_vectorize_two_nodes():
    v = cgl_vectorize(np.zeros((2, 2)))
    np.testing.assert_allclose(v.P.toarray(), [[1.0], [1.0], [-SQRT2]])
    w = 1.7
    np.testing.assert_allclose(v.P @ np.array([w]), [w, w, -SQRT2 * w])


def test_vectorize_zero_maps_to_zero():
    v = cgl_vectorize(np.eye(4))
    np.testing.assert_array_equal(v.P @ np.zeros(6), np.zeros(10))


def test_vectorize_index_maps():
    L_hat = np.arange(16.0).reshape(4, 4)
    v = cgl_vectorize(L_hat)
    np.testing.assert_array_equal(L_hat.ravel()[v.I], np.diag(L_hat))
    np.testing.assert_allclose(v.b_hat[4:], SQRT2 * L_hat.ravel()[v.J])
    assert np.all(v.J // 4 > v.J % 4)


def test_vectorize_round_trip(rng):
    L = random_cgl(rng, 4)
    a = edge_weights_of(L)
    np.testing.assert_array_equal(assemble_cgl(a, 4), L)
    np.testing.assert_allclose(dense_cgl(a, 4), L)


@given(st.integers(0, 10_000), st.integers(2, 7))
def test_vectorize_identities(seed, n):
    rng = np.random.default_rng(seed)
    L_hat = rng.standard_normal((n, n))
    L_hat = L_hat + L_hat.T
    a = rng.uniform(0, 2, n * (n - 1) // 2)
    L = assemble_cgl(a, n)
    v = cgl_vectorize(L_hat)
    assert np.sum((L - L_hat) ** 2) == pytest.approx(np.sum((v.P @ a - v.b_hat) ** 2), rel=1e-12, abs=1e-12)
    assert np.abs(L).sum() == pytest.approx(4 * a.sum(), rel=1e-12)
    op = structure_operator(n)
    np.testing.assert_allclose(op.matvec(a), v.P @ a, atol=1e-12)
    r = rng.standard_normal(v.P.shape[0])
    np.testing.assert_allclose(op.rmatvec(r), v.P.T @ r, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 6, 11])
def test_structure_norm(n):
    P = cgl_vectorize(np.zeros((n, n))).P.toarray()
    assert np.linalg.norm(P, 2) ** 2 == pytest.approx(structure_norm_sq(n), rel=1e-10)


def test_vectorize_not_square():
    with pytest.raises(NotSquare):
        cgl_vectorize(np.zeros((2, 3)))


# --- nonneg_l1_least_squares ----------------------------------------------

def test_nnls_identity_projection():
    b = np.array([0.5, 2.0, 0.0, 1.25])
    res = nonneg_l1_least_squares(np.eye(4), b, 0.0)
    np.testing.assert_allclose(res.a, b, atol=1e-10)


def test_nnls_full_shrinkage(rng):
    P = rng.standard_normal((8, 5))
    b = rng.standard_normal(8)
    beta = np.max(P.T @ b) / 2 + 0.1
    np.testing.assert_allclose(nonneg_l1_least_squares(P, b, beta).a, 0.0, atol=1e-12)


def test_nnls_scalar_soft_threshold():
    # min (a-1)^2 + 4 * 0.1 * a, a >= 0  ->  a = 1 - 0.2
    res = nonneg_l1_least_squares(np.array([[1.0]]), np.array([1.0]), 0.1)
    assert res.a[0] == pytest.approx(0.8, abs=1e-10)


@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.01, 0.3]))
def test_nnls_kkt_certificate(seed, beta):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((12, 6))
    b = rng.standard_normal(12)
    tol = 1e-9
    res = nonneg_l1_least_squares(P, b, beta, opt_tol=tol)
    assert res.converged
    g = 2 * P.T @ (P @ res.a - b) + 4 * beta
    bound = tol * (1 + np.linalg.norm(b)) * 10
    active = res.a > bound
    assert np.all(np.abs(g[active]) <= bound * (1 + np.linalg.norm(P, 2) ** 2))
    assert np.all(g[~active] >= -bound * (1 + np.linalg.norm(P, 2) ** 2))
    assert kkt_residual(P, b, res.a, beta) <= tol * (1 + np.linalg.norm(b))


def test_nnls_iteration_cap_warns(rng):
    P = rng.standard_normal((30, 20))
    b = rng.standard_normal(30)
    with pytest.warns(RuntimeWarning):
        res = nonneg_l1_least_squares(P, b, 0.0, opt_tol=1e-14, max_iters=3)
    assert not res.converged


# --- nearest_cgl ----------------------------------------------------------

def test_nearest_fixed_point(rng):
    L = random_cgl(rng, 7)
    sol = nearest_cgl(L, SolverConfig(beta=0.0, opt_tol=1e-12))
    np.testing.assert_allclose(sol.L_star, L, atol=1e-8)


def test_nearest_symmetrizes_input(rng):
    L = random_cgl(rng, 5)
    skew = np.triu(rng.standard_normal((5, 5)), 1)
    a = nearest_cgl(L + skew - skew.T).L_star
    np.testing.assert_allclose(a, nearest_cgl(L).L_star, atol=1e-9)


def test_nearest_clips_positive_offdiagonal_three_nodes():
    L = np.array([[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]])
    # subtract a weight-1.4 edge (0, 1): off-diagonal turns positive, row sums stay zero
    L_hat = L + 1.4 * np.array([[-1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 0.0, 0.0]])
    sol = nearest_cgl(L_hat, SolverConfig(opt_tol=1e-12))
    assert sol.L_star[0, 1] == pytest.approx(0.0, abs=1e-9)
    obj = lambda a: np.sum((dense_cgl(a, 3) - L_hat) ** 2)
    a_grid, h = grid_min(obj, 0.0, 2.0, 81, 3)
    np.testing.assert_allclose(sol.weights, a_grid, atol=h)
    assert obj(sol.weights) <= obj(a_grid) + 1e-12


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("beta", [0.0, 0.05])
def test_nearest_matches_dense_eq10(seed, beta):
    rng = np.random.default_rng(seed)
    L_hat = random_cgl(rng, 4, density=0.5)
    noise = rng.normal(0, 0.3, (4, 4))
    L_hat = L_hat + (noise + noise.T) / 2
    sol = nearest_cgl(L_hat, SolverConfig(beta=beta, opt_tol=1e-12))
    np.testing.assert_allclose(sol.weights, brute_force_eq10(L_hat, beta), atol=1e-4)


@given(st.integers(0, 10_000), st.integers(2, 9), st.sampled_from([0.0, 0.02, 0.2]))
def test_nearest_output_always_valid(seed, n, beta):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n))
    sol = nearest_cgl(X + X.T, SolverConfig(beta=beta))
    assert validate_cgl(sol.L_star, 1e-6).passed
    assert np.all(sol.weights >= 0)


def test_nearest_two_nodes_exact():
    L = np.array([[0.7, -0.7], [-0.7, 0.7]])
    for dist in ("FrobeniusSq", "MaxNorm"):
        sol = nearest_cgl(L, SolverConfig(distance=dist))
        assert sol.weights[0] == pytest.approx(0.7, abs=1e-9)


def test_nearest_maxnorm_matches_grid():
    rng = np.random.default_rng(4)
    L_hat = random_cgl(rng, 3) + np.diag([0.3, -0.2, 0.1])
    sol = nearest_cgl(L_hat, SolverConfig(distance="MaxNorm"))
    obj = lambda a: np.max(np.abs(dense_cgl(a, 3) - L_hat))
    a_grid, h = grid_min(obj, 0.0, 3.0, 61, 3)
    assert obj(sol.weights) <= obj(a_grid) + 1e-9
    assert sol.diagnostics["max_deviation"] == pytest.approx(obj(sol.weights), abs=1e-9)
    assert validate_cgl(sol.L_star, 1e-6).passed


def test_nearest_maxnorm_penalty_sparsifies(rng):
    L_hat = random_cgl(rng, 6, density=0.3)
    dense = nearest_cgl(L_hat, SolverConfig(distance="MaxNorm")).weights
    sparse = nearest_cgl(L_hat, SolverConfig(distance="MaxNorm", beta=0.5)).weights
    assert sparse.sum() <= dense.sum() + 1e-9


# --- reweighted l1 --------------------------------------------------------

def test_reweight_formula():
    w = reweight_weights(np.array([0.0, 1.0]), 1e-4)
    assert w[0] == pytest.approx(1e4)
    assert w[1] == pytest.approx(1 / (1 + 1e-4))


def test_reweight_zero_iters_is_base(rng):
    L_hat = random_cgl(rng, 6)
    cfg = SolverConfig(beta=0.05)
    base = nearest_cgl(L_hat, cfg)
    wrapped = reweighted_l1(lambda w: nearest_cgl(L_hat, cfg, weights=w), 0)
    np.testing.assert_array_equal(wrapped.weights, base.weights)
    assert wrapped.diagnostics["reweight_passes"] == 0


def test_reweight_passes_weights():
    seen = []

    def step(w):
        seen.append(None if w is None else w.copy())
        return CglSolution(np.zeros((2, 2)), np.array([0.0]), None, {})

    reweighted_l1(step, 2, 1e-3)
    assert seen[0] is None
    np.testing.assert_allclose(seen[1], [1e3])
    assert len(seen) == 3


def test_reweight_negative_iters():
    with pytest.raises(ValueError):
        reweighted_l1(lambda w: None, -1)


# --- config and solution files --------------------------------------------

def test_config_validation():
    with pytest.raises(InvalidParams):
        SolverConfig(beta=-1)
    with pytest.raises(InvalidParams):
        SolverConfig(eta=0)
    with pytest.raises(InvalidParams):
        SolverConfig(distance="Spectral")
    with pytest.raises(InvalidParams):
        SolverConfig.from_dict({"lambda": 1})


def test_config_from_toml(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[solver]\nbeta = 0.07\neta = 2\n")
    cfg = SolverConfig.from_file(p)
    assert cfg.beta == 0.07 and cfg.eta == 2 and cfg.reweight_eps == 1e-4


def test_parse_schedule():
    assert parse_schedule("GridPaper") == ("grid", None)
    assert parse_schedule("Binary") == ("binary", 5)
    assert parse_schedule("Binary:7") == ("binary", 7)
    assert parse_schedule("Step:0.01") == ("step", 0.01)


def test_solution_files(tmp_path, rng):
    L = random_cgl(rng, 5, density=0.3)
    sol = nearest_cgl(L)
    sol.write(tmp_path)
    lines = (tmp_path / "edges.csv").read_text().splitlines()
    assert lines[0] == "i,j,weight"
    assert len(lines) - 1 == np.count_nonzero(sol.weights > 1e-6)
    from consensus_cgl.io import read_matrix_csv, read_json
    assert validate_cgl(read_matrix_csv(tmp_path / "L_star.csv"), 1e-6).passed
    assert read_json(tmp_path / "diagnostics.json")["method"] == "nearestcgl"
