import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ifbkit import NumericFailure
from ifbkit.problems import (as_design_matrix, check_convexity, check_lipschitz,
                             estimate_lipschitz, gen_lasso_instance, gen_logistic_instance,
                             gen_qp_instance, make_box_qp, make_lasso, make_logistic)
from ifbkit.rng import choose, make_rng, normal, uniform


def fd_gradient(f, x, h=1e-6):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


# -- LASSO -------------------------------------------------------------------

def test_lasso_identity_instance():
    p = make_lasso(np.eye(2), np.zeros(2), 1.0)
    x = np.array([0.5, -2.0])
    assert p.objective(x) == pytest.approx(0.5 * 4.25 + 2.5)
    np.testing.assert_array_equal(p.smooth_gradient(x), x)
    assert p.objective(np.zeros(2)) == 0.0
    assert p.lipschitz == pytest.approx(1.0)


def test_lasso_gradient_finite_differences(gen):
    p = make_lasso(gen.standard_normal((10, 20)), gen.standard_normal(10), 1.0)
    x = gen.standard_normal(20)
    assert rel_err(p.smooth_gradient(x), fd_gradient(p.smooth_value, x)) <= 1e-6


def test_lasso_shape_mismatch():
    with pytest.raises(ValueError):
        make_lasso(np.ones((3, 2)), np.ones(4), 1.0)


def test_lasso_sparse_matches_dense(gen):
    A = gen.standard_normal((8, 5)) * (gen.uniform(size=(8, 5)) < 0.4)
    b = gen.standard_normal(8)
    x = gen.standard_normal(5)
    pd, ps = make_lasso(A, b, 0.5), make_lasso(sp.csr_matrix(A), b, 0.5)
    assert ps.smooth_value(x) == pytest.approx(pd.smooth_value(x), rel=1e-14)
    np.testing.assert_allclose(ps.smooth_gradient(x), pd.smooth_gradient(x), rtol=1e-13)


def test_lasso_coercive_along_rays(gen):
    p, _ = gen_lasso_instance(20, 40, 3, seed=2)
    base = gen.standard_normal(40)
    for _ in range(20):
        d = gen.standard_normal(40)
        d /= np.linalg.norm(d)
        vals = [p.objective(base + r * d) for r in (10.0, 100.0, 1000.0)]
        assert vals[0] < vals[1] < vals[2]
        assert vals[1] > p.objective(base)


# -- logistic ----------------------------------------------------------------

def test_logistic_value_at_zero_is_log2(gen):
    H = gen.standard_normal((15, 4))
    p = make_logistic(H, np.where(gen.uniform(size=15) < 0.5, 1.0, -1.0), 0.1)
    assert p.smooth_value(np.zeros(4)) == pytest.approx(np.log(2.0), rel=1e-15)


def test_logistic_single_sample_gradient():
    p = make_logistic(np.ones((1, 1)), np.array([1.0]), 0.1)
    for x in (-3.0, 0.0, 2.5):
        assert p.smooth_gradient(np.array([x]))[0] == pytest.approx(-1.0 / (1.0 + np.exp(x)))


def test_logistic_gradient_finite_differences(gen):
    H = gen.standard_normal((30, 10))
    labels = np.where(gen.uniform(size=30) < 0.5, 1.0, -1.0)
    p = make_logistic(H, labels, 0.1)
    x = gen.standard_normal(10)
    assert rel_err(p.smooth_gradient(x), fd_gradient(p.smooth_value, x)) <= 1e-6


def test_logistic_rejects_bad_labels():
    with pytest.raises(ValueError):
        make_logistic(np.ones((2, 2)), np.array([1.0, 0.0]), 0.1)


def test_logistic_lipschitz_rules(gen):
    H = gen.standard_normal((40, 6))
    labels = np.where(gen.uniform(size=40) < 0.5, 1.0, -1.0)
    K = -labels[:, None] * H
    top = np.linalg.eigvalsh(K.T @ K)[-1]
    assert make_logistic(H, labels, 0.1).lipschitz == pytest.approx(4 * top / 40, rel=1e-6)
    std = make_logistic(H, labels, 0.1, lipschitz_rule="standard")
    assert std.lipschitz == pytest.approx(top / 160, rel=1e-6)
    with pytest.raises(ValueError):
        make_logistic(H, labels, 0.1, lipschitz_rule="other")


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(float, 3, elements=st.floats(-1e6, 1e6)))
def test_logistic_overflow_safe(x):
    H = np.array([[1.0, -2.0, 0.5], [3.0, 0.0, -1.0], [-0.5, 1.0, 1.0]])
    p = make_logistic(H, np.array([1.0, -1.0, 1.0]), 0.1)
    v = p.smooth_value(x)
    assert np.isfinite(v) and np.all(np.isfinite(p.smooth_gradient(x)))
    assert v <= np.max(np.abs(H @ x)) + np.log(2.0) + 1e-9


# -- box QP ------------------------------------------------------------------

def test_box_qp_identity():
    p = make_box_qp(np.eye(3), np.zeros(3), -np.ones(3), np.ones(3))
    assert p.objective(np.zeros(3)) == 0.0
    assert p.strong_convexity == pytest.approx(1.0)


def test_box_qp_constrained_minimizer_by_active_sets():
    A, b = np.eye(2), np.array([-3.0, 0.5])
    lo, hi = -np.ones(2), np.ones(2)
    p = make_box_qp(A, b, lo, hi)
    # brute force over the 3^2 active-set patterns
    best, best_val = None, np.inf
    for pattern in np.ndindex(3, 3):
        x = np.linalg.solve(A, -b)
        for i, s in enumerate(pattern):
            if s == 1:
                x[i] = lo[i]
            elif s == 2:
                x[i] = hi[i]
        if np.all(x >= lo) and np.all(x <= hi) and p.objective(x) < best_val:
            best, best_val = x, p.objective(x)
    np.testing.assert_allclose(best, [1.0, -0.5])
    np.testing.assert_allclose(p.prox(np.linalg.solve(A, -b), 1.0), best)


def test_box_qp_gradient_finite_differences(gen):
    B = gen.standard_normal((6, 6))
    p = make_box_qp(B.T @ B + np.eye(6), gen.standard_normal(6), -np.ones(6), np.ones(6))
    x = gen.uniform(-1, 1, 6)
    assert rel_err(p.smooth_gradient(x), fd_gradient(p.smooth_value, x)) <= 1e-6


def test_box_qp_rejects_asymmetric():
    with pytest.raises(ValueError):
        make_box_qp(np.array([[2.0, 1.0], [0.0, 2.0]]), np.zeros(2), -1, 1)


def test_box_qp_rejects_indefinite():
    with pytest.raises(ValueError):
        make_box_qp(np.diag([1.0, -1.0]), np.zeros(2), -1, 1)


# -- Lipschitz estimation ----------------------------------------------------

def test_estimate_lipschitz_identity():
    assert estimate_lipschitz(np.eye(4)) == pytest.approx(1.0, rel=1e-12)


def test_estimate_lipschitz_diagonal_gram():
    assert estimate_lipschitz(np.diag([1.0, 2.0, 3.0])) == pytest.approx(9.0, rel=1e-6)


def test_estimate_lipschitz_matches_dense_eigensolver(gen):
    M = gen.standard_normal((20, 30))
    assert estimate_lipschitz(M) == pytest.approx(np.linalg.eigvalsh(M.T @ M)[-1], rel=1e-5)
    S = M @ M.T
    assert estimate_lipschitz(S, "symmetric") == pytest.approx(np.linalg.eigvalsh(S)[-1], rel=1e-5)


def test_estimate_lipschitz_sparse(gen):
    M = sp.random(50, 40, density=0.1, random_state=3, format="csr")
    dense = M.toarray()
    assert estimate_lipschitz(M) == pytest.approx(np.linalg.eigvalsh(dense.T @ dense)[-1], rel=1e-5)


def test_estimate_lipschitz_cap_reports_estimate():
    # two nearly equal top eigenvalues make power iteration crawl
    M = np.diag([1.0, 1.0 - 1e-9, 0.5])
    M[0, 1] = M[1, 0] = 1e-12
    with pytest.raises(NumericFailure) as info:
        estimate_lipschitz(M, "symmetric", tol=1e-16, max_iter=5)
    assert info.value.estimate is not None and info.value.estimate > 0


def test_estimate_lipschitz_rejects_zero():
    with pytest.raises((ValueError, NumericFailure)):
        estimate_lipschitz(np.zeros((3, 3)))


def test_design_matrix_rejects_non_finite():
    with pytest.raises(ValueError):
        as_design_matrix(np.array([[1.0, np.nan]]))


def test_design_matrix_sparse_canonical():
    M = sp.coo_matrix(([1.0, 2.0, 3.0], ([0, 0, 0], [2, 0, 2])), shape=(1, 3))
    C = as_design_matrix(M)
    assert list(C.indices) == [0, 2] and list(C.data) == [2.0, 4.0]


# -- generators --------------------------------------------------------------

def test_gen_lasso_deterministic():
    p1, x1 = gen_lasso_instance(30, 50, 5, seed=9)
    p2, x2 = gen_lasso_instance(30, 50, 5, seed=9)
    assert p1.data["A"].tobytes() == p2.data["A"].tobytes()
    assert p1.data["b"].tobytes() == p2.data["b"].tobytes()
    assert x1.tobytes() == x2.tobytes()
    p3, _ = gen_lasso_instance(30, 50, 5, seed=10)
    assert p3.data["A"].tobytes() != p1.data["A"].tobytes()


def test_gen_lasso_planted_sparsity():
    _, x = gen_lasso_instance(20, 64, 7, seed=1)
    assert np.count_nonzero(x) == 7


def test_gen_lasso_column_means():
    m = 10**4
    p, _ = gen_lasso_instance(m, 8, 2, seed=4)
    assert np.all(np.abs(p.data["A"].mean(axis=0)) <= 4 / np.sqrt(m))


def test_gen_lasso_rejects_bad_sparsity():
    with pytest.raises(ValueError):
        gen_lasso_instance(10, 5, 6, seed=0)


def test_gen_qp_properties():
    p = gen_qp_instance(40, seed=3)
    A = p.data["A"]
    assert np.max(np.abs(A - A.T)) <= 1e-12
    assert p.strong_convexity >= p.data["shift"] * (1 - 1e-12)
    eig = np.linalg.eigvalsh(A)
    assert p.lipschitz == pytest.approx(eig[-1], rel=1e-5)
    assert p.strong_convexity == pytest.approx(eig[0], rel=1e-10)
    assert 0 < p.data["shift"] <= 1


def test_gen_qp_rejects_odd():
    with pytest.raises(ValueError):
        gen_qp_instance(7, seed=0)


@pytest.mark.parametrize("make", [
    lambda: gen_lasso_instance(20, 30, 4, seed=5)[0],
    lambda: gen_qp_instance(20, seed=5),
    lambda: gen_logistic_instance(60, 8, seed=5),
    lambda: gen_logistic_instance(60, 8, seed=6, density=0.3, lipschitz_rule="standard"),
])
def test_generated_instances_pass_invariant_checks(make):
    p = make()
    assert check_lipschitz(p, samples=100, seed=1) <= 1 + 1e-8
    assert check_convexity(p, samples=100, seed=1) <= 1e-10


# -- random streams ----------------------------------------------------------

def test_rng_streams_reproducible():
    a, b = make_rng(5), make_rng(5)
    assert uniform(a, 10).tobytes() == uniform(b, 10).tobytes()
    assert normal(a, (3, 4)).tobytes() == normal(b, (3, 4)).tobytes()
    assert choose(a, 100, 10).tobytes() == choose(b, 100, 10).tobytes()


def test_rng_normal_moments():
    z = normal(make_rng(1), 200001)
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01


def test_rng_choose_distinct_sorted():
    idx = choose(make_rng(2), 50, 20)
    assert len(set(idx)) == 20 and np.all(np.diff(idx) > 0) and idx.max() < 50
    with pytest.raises(ValueError):
        choose(make_rng(2), 3, 4)


def test_rng_rejects_bad_seed():
    with pytest.raises(ValueError):
        make_rng(-1)
