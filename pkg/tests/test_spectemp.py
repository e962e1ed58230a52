import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from consensus_cgl.dynamics import FilterSpec, SampleCovariance, sample_covariance, simulate_snapshots, RandomFilters
from consensus_cgl.errors import Infeasible, NoFeasibleEpsilon
from consensus_cgl.graphs import laplacian_of, sample_graph, validate_cgl
from consensus_cgl.metrics import recovery_error
from consensus_cgl.solvers import (
    SolverConfig,
    epsilon_feasibility_search,
    in_ordered_set,
    min_template_distance,
    ordered_spec_temp,
    project_ordered,
    solve_templates,
    spectemp_leigvec,
)
from consensus_cgl.solvers.spectemp import epsilon_schedule_points, smallest_feasible_epsilon

from conftest import random_cgl, star_laplacian


def exact_templates(L):
    lam, V = np.linalg.eigh(L)
    return V  # ascending Laplacian eigenvalues = nonincreasing covariance eigenvalues


# --- ordered projection ---------------------------------------------------

def brute_projection(y, eta):
    """Projection onto {g[-1]=1, g[i] <= g[i+eta]} by a generic QP (SLSQP)."""
    from scipy.optimize import minimize
    n = y.size
    cons = [{"type": "eq", "fun": lambda g: g[-1] - 1.0}]
    cons += [{"type": "ineq", "fun": (lambda g, i=i: g[i + eta] - g[i])} for i in range(n - eta)]
    x0 = np.full(n, min(y.min(), 1.0))
    x0[-1] = 1.0
    return minimize(lambda g: np.sum((g - y) ** 2), x0, constraints=cons, method="SLSQP",
                    options={"ftol": 1e-14, "maxiter": 500}).x


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=9), st.integers(1, 4))
def test_projection_matches_generic_qp(y, eta):
    y = np.array(y)
    eta = min(eta, y.size - 1)
    g = project_ordered(y, eta)
    assert in_ordered_set(g, eta, 1e-10)
    ref = brute_projection(y, eta)
    assert np.sum((g - y) ** 2) <= np.sum((ref - y) ** 2) + 1e-7


# --- exact templates ------------------------------------------------------

def test_star_exact_templates_recovered():
    L = star_laplacian(5)
    sol = ordered_spec_temp(exact_templates(L), SolverConfig(epsilon=0.0, reweight_iters=3))
    assert recovery_error(sol.L_star, L, trace_normalize=True) <= 1e-4


def test_star_is_sparsest_order_consistent_cgl():
    """Support enumeration: no CGL on <= 4 edges other than the star fits the star's templates."""
    L = star_laplacian(5)
    U = exact_templates(L)
    pairs = list(itertools.combinations(range(5), 2))
    ti, tj = np.triu_indices(5)

    def feasible(support):
        # variables: weights on support, then g (5); L(a) = U diag(g) U^T entrywise, g ordered, g[-1] = 1
        k = len(support)
        A = np.zeros((ti.size, k + 5))
        for c, (i, j) in enumerate(support):
            for r, (p, q) in enumerate(zip(ti, tj)):
                if p == q and p in (i, j):
                    A[r, c] += 1.0
                if (p, q) == (i, j):
                    A[r, c] -= 1.0
        A[:, k:] = -(U[ti] * U[tj])
        eq_g = np.zeros((1, k + 5))
        eq_g[0, -1] = 1.0
        ub = np.zeros((4, k + 5))
        for i in range(4):
            ub[i, k + i], ub[i, k + i + 1] = 1.0, -1.0
        res = linprog(np.zeros(k + 5), A_ub=ub, b_ub=np.zeros(4), A_eq=np.vstack([A, eq_g]),
                      b_eq=np.r_[np.zeros(ti.size), 1.0],
                      bounds=[(1e-6, None)] * k + [(None, None)] * 5, method="highs")
        return res.status == 0

    star = [(0, j) for j in range(1, 5)]
    found = [s for k in range(1, 5) for s in itertools.combinations(pairs, k) if feasible(list(s))]
    assert found == [tuple(star)]


def test_reweighting_does_not_add_edges():
    L = star_laplacian(5)
    U = exact_templates(L)
    e0 = ordered_spec_temp(U, SolverConfig(epsilon=0.0)).weights
    e3 = ordered_spec_temp(U, SolverConfig(epsilon=0.0, reweight_iters=3)).weights
    assert np.count_nonzero(e3 > 1e-6) <= np.count_nonzero(e0 > 1e-6)


def test_exact_templates_er_small():
    ok = []
    for seed in range(10):
        L = np.asarray(laplacian_of(sample_graph("ER", {"n": 10, "p": 0.3}, seed=seed)))
        sol = ordered_spec_temp(exact_templates(L), SolverConfig(epsilon=0.0, reweight_iters=3))
        ok.append(recovery_error(sol.L_star, L, True) < 0.02)
    assert np.mean(ok) >= 0.8


def test_two_nodes_exact():
    L = np.array([[0.3, -0.3], [-0.3, 0.3]])
    sol = ordered_spec_temp(exact_templates(L), SolverConfig(epsilon=0.0))
    assert recovery_error(sol.L_star, L, True) <= 1e-10
    sol = ordered_spec_temp(exact_templates(L), SolverConfig(beta=0.0))
    assert recovery_error(sol.L_star, L, True) <= 1e-6


# --- invariants -----------------------------------------------------------

def noisy_cov(seed, n=8, M=400):
    L = random_cgl(np.random.default_rng(seed), n, density=0.4)
    f = FilterSpec.scaled((0.7, 0.8, 0.9), np.linalg.eigvalsh(L).max())
    return L, sample_covariance(simulate_snapshots(L, f, M, seed=seed))


@pytest.mark.parametrize("cfg", [
    SolverConfig(beta=0.01),
    SolverConfig(beta=0.01, eta=2),
    SolverConfig(epsilon=0.3),
    SolverConfig(epsilon=0.2, distance="MaxNorm"),
    SolverConfig(beta=0.02, distance="MaxNorm"),
    SolverConfig(epsilon_schedule="GridPaper", reweight_iters=1),
])
def test_outputs_satisfy_invariants(cfg):
    _, cov = noisy_cov(3)
    sol = ordered_spec_temp(cov, cfg)
    assert validate_cgl(sol.L_star, 1e-6).passed
    assert sol.gamma_star[-1] == pytest.approx(1.0, abs=1e-8)
    assert in_ordered_set(sol.gamma_star, cfg.eta, 1e-8)


def test_leigvec_only_pins_last_coefficient():
    _, cov = noisy_cov(5)
    sol = spectemp_leigvec(cov, SolverConfig(beta=0.01))
    assert sol.gamma_star[-1] == pytest.approx(1.0)
    assert validate_cgl(sol.L_star, 1e-6).passed


@given(st.integers(0, 500), st.sampled_from([0.0, 0.005, 0.05]))
def test_block_descent_objective_monotone(seed, beta):
    _, cov = noisy_cov(seed, n=6, M=60)
    sol = solve_templates(cov.eigvecs, SolverConfig(beta=beta, max_iters=400))
    hist = np.array(sol.diagnostics["objective_history"])
    assert np.all(np.diff(hist) <= 1e-12 * np.maximum(1.0, np.abs(hist[:-1])))


def test_scale_invariance():
    _, cov = noisy_cov(7)
    a = ordered_spec_temp(cov, SolverConfig(beta=0.01)).L_star
    b = ordered_spec_temp(SampleCovariance.from_matrix(2.0 * cov.matrix), SolverConfig(beta=0.01)).L_star
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_constraint_form_respects_epsilon():
    _, cov = noisy_cov(2)
    for eps in (0.2, 0.5):
        sol = ordered_spec_temp(cov, SolverConfig(epsilon=eps))
        assert np.sqrt(sol.diagnostics["fit"]) <= eps + 1e-9


def test_constraint_form_infeasible():
    _, cov = noisy_cov(2)
    eps_min = min_template_distance(cov.eigvecs)
    assert eps_min > 1e-3
    with pytest.raises(Infeasible):
        ordered_spec_temp(cov, SolverConfig(epsilon=eps_min / 10))
    with pytest.raises(Infeasible):
        ordered_spec_temp(cov, SolverConfig(epsilon=1e-6, distance="MaxNorm"))


def test_eta_too_large():
    _, cov = noisy_cov(2)
    with pytest.raises(ValueError):
        ordered_spec_temp(cov, SolverConfig(eta=8))


# --- epsilon search -------------------------------------------------------

def test_grid_paper_schedule():
    pts = epsilon_schedule_points("GridPaper")
    assert pts[:3] == [0.002, 0.004, 0.006] and 0.03 in pts and pts[15] == 0.035


def test_exact_templates_first_grid_point():
    L = np.asarray(laplacian_of(sample_graph("ER", {"n": 10, "p": 0.3}, seed=1)))
    eps, sol = epsilon_feasibility_search(exact_templates(L), SolverConfig(), "GridPaper")
    assert eps == 0.002
    assert recovery_error(sol.L_star, L, True) < 0.05


def test_binary_granularity():
    for eps_min in (0.0, 0.01, 0.3, 0.77):
        e = smallest_feasible_epsilon(eps_min, "Binary:5")
        assert e >= eps_min - 1e-9
        assert (e * 32) == pytest.approx(round(e * 32))
        assert e - 1 / 32 <= eps_min


def test_no_feasible_epsilon():
    with pytest.raises(NoFeasibleEpsilon):
        smallest_feasible_epsilon(1.5, "Binary")
    with pytest.raises(NoFeasibleEpsilon):
        smallest_feasible_epsilon(2.0, "GridPaper")


def test_selected_epsilon_shrinks_with_samples():
    def selected(M, seed):
        g = sample_graph("ER", {"n": 10, "p": 0.3}, seed=seed)
        L = np.asarray(laplacian_of(g))
        cov = sample_covariance(simulate_snapshots(L, RandomFilters(), M, seed=seed))
        return min_template_distance(cov.eigvecs)

    small = np.median([selected(10, s) for s in range(10)])
    large = np.median([selected(1000, s) for s in range(10)])
    assert large < small
