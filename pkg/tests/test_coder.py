import numpy as np
import pytest

from j3s.coder import (
    J3SParams,
    assemble_dictionaries,
    j3s_loss,
    solve,
    solve_codes,
    update_alpha,
    update_G,
    update_gamma,
)
from j3s.errors import DimensionMismatch, EmptyClass, InvalidConfig, SingularSystem

from oracles import j3s_objective, prox_grad_j3s


def _train(rng, labels, d1=6, d2=9):
    return [(rng.standard_normal(d1), rng.standard_normal(d2), y) for y in labels]


def _ridge(q, A, lam):
    return np.linalg.inv(A.T @ A + lam * np.eye(A.shape[1])) @ A.T @ q


def test_params_validation():
    for bad in (dict(theta=0.0), dict(theta=1.0), dict(lambda1=-1), dict(max_iters=0), dict(tol=0)):
        with pytest.raises(InvalidConfig):
            J3SParams(**bad)


def test_assemble_groups_by_class(rng):
    jd = assemble_dictionaries(_train(rng, [1, 0, 1, 0]))
    assert jd.U.shape == (6, 4) and jd.V.shape == (9, 4)
    assert jd.class_ranges == {0: (0, 2), 1: (2, 4)}
    np.testing.assert_array_equal(jd.labels, [0, 0, 1, 1])


def test_assemble_keeps_within_class_order(rng):
    train = _train(rng, [1, 0, 1, 0])
    jd = assemble_dictionaries(train)
    np.testing.assert_array_equal(jd.U[:, 0], train[1][0])
    np.testing.assert_array_equal(jd.U[:, 1], train[3][0])


def test_assemble_mixed_dimensions(rng):
    train = _train(rng, [0, 1]) + [(np.zeros(5), np.zeros(9), 1)]
    with pytest.raises(DimensionMismatch):
        assemble_dictionaries(train)
    with pytest.raises(EmptyClass):
        assemble_dictionaries([])


def test_assemble_pca_row_counts(rng):
    train = [(rng.standard_normal(5000), rng.standard_normal(64), i % 2) for i in range(10)]
    centered = assemble_dictionaries(train, use_pca=True, isometric_pca=False)
    assert centered.U.shape == (9, 10) and centered.V.shape == (9, 10)
    iso = assemble_dictionaries(train, use_pca=True)
    assert iso.U.shape == (10, 10) and iso.V.shape == (10, 10)


def test_loss_examples():
    p = J3SParams(theta=0.3, lambda1=0.5, lambda2=0.5, lambda3=0.5)
    q1, q2 = np.array([1.0, 2.0]), np.array([1.0, 0.0])
    z = np.zeros(2)
    assert j3s_loss(q1, q2, np.eye(2), np.eye(2), z, z, p) == pytest.approx(0.3 * 5 + 0.7 * 1)

    p0 = J3SParams(theta=0.5, lambda1=0, lambda2=0, lambda3=0)
    U, V = np.eye(2), np.eye(3)[:, :2]
    a = np.array([0.5, -1.0])
    assert j3s_loss(U @ a, V @ a, U, V, a, a, p0) == 0.0

    one = np.ones(1)
    p1 = J3SParams(theta=0.5, lambda1=0, lambda2=0, lambda3=1.0)
    assert j3s_loss(one, one, np.eye(1), np.eye(1), one, one, p1) == pytest.approx(np.sqrt(2))


def test_update_alpha_scalars():
    U, q = np.array([[2.0]]), np.array([2.0])
    g = np.ones(1)
    assert update_alpha(q, U, g, J3SParams(theta=0.5, lambda1=0, lambda3=0))[0] == pytest.approx(1.0)
    assert update_alpha(q, U, g, J3SParams(theta=0.5, lambda1=2, lambda3=0))[0] == pytest.approx(0.5)


def test_update_gamma_scalars():
    V, q = np.array([[1.0]]), np.array([3.0])
    g = np.ones(1)
    assert update_gamma(q, V, g, J3SParams(theta=0.5, lambda2=0, lambda3=0))[0] == pytest.approx(3.0)
    # (1 - theta) = 0.25: 1 * 3 / (1 + 0.5 / 0.25)
    assert update_gamma(q, V, g, J3SParams(theta=0.75, lambda2=0.5, lambda3=0))[0] == pytest.approx(1.0)


def test_updates_match_explicit_inverse(rng):
    p = J3SParams(theta=0.35, lambda1=0.2, lambda2=0.05, lambda3=0.7)
    U, V = rng.standard_normal((12, 6)), rng.standard_normal((9, 6))
    q1, q2 = rng.standard_normal(12), rng.standard_normal(9)
    g = rng.uniform(0.1, 5, 6)
    a_ref = np.linalg.inv(U.T @ U + p.lambda1 / p.theta * np.eye(6) + p.lambda3 / p.theta * np.diag(g)) @ U.T @ q1
    w = 1 - p.theta
    g_ref = np.linalg.inv(V.T @ V + p.lambda2 / w * np.eye(6) + p.lambda3 / w * np.diag(g)) @ V.T @ q2
    np.testing.assert_allclose(update_alpha(q1, U, g, p), a_ref, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(update_gamma(q2, V, g, p), g_ref, rtol=1e-10, atol=1e-12)


def test_singular_system():
    U = np.array([[1.0, 1.0]])
    with pytest.raises(SingularSystem):
        update_alpha(np.ones(1), U, np.ones(2), J3SParams(lambda1=0, lambda3=0))


def test_update_G_examples():
    assert update_G(np.array([0.3]), np.array([0.4]))[0] == pytest.approx(1.0)
    assert update_G(np.zeros(1), np.zeros(1))[0] == 1e16
    a, g = np.array([0.3, -2.0]), np.array([0.1, 0.5])
    np.testing.assert_allclose(update_G(3 * a, 3 * g), update_G(a, g) / 3, rtol=1e-12)


def test_scalar_solve_against_hand_iteration():
    p = J3SParams(theta=0.5, lambda1=1e-3, lambda2=1e-3, lambda3=1e-3)
    code = solve_codes([1.0], [1.0], [[1.0]], [[1.0]], p)
    # the same recurrence in plain floats
    g, prev = 1.0, None
    for _ in range(50):
        a = 1.0 / (1.0 + 2e-3 + 2e-3 * g)
        c = a
        g = 1.0 / (2.0 * (a * a + c * c) ** 0.5 + 1e-16)
        loss = 0.5 * (1 - a) ** 2 * 2 + 1e-3 * (a * a + c * c) + 1e-3 * (a * a + c * c) ** 0.5
        if prev is not None and abs(loss - prev) < 1e-6:
            break
        prev = loss
    assert 0.9 < code.alpha[0] < 1.0 and 0.9 < code.gamma[0] < 1.0
    assert code.alpha[0] == pytest.approx(a, rel=1e-12)
    assert code.converged and code.iterations_used <= 50


def test_zero_query():
    code = solve_codes(np.zeros(4), np.zeros(3), np.eye(4)[:, :2], np.eye(3)[:, :2], J3SParams())
    np.testing.assert_array_equal(code.alpha, 0)
    np.testing.assert_array_equal(code.gamma, 0)
    assert code.loss_trace[0] == 0.0


def test_matches_proximal_gradient_oracle(rng):
    B, N = 6, 8
    U, V = rng.standard_normal((B, 10, N)), rng.standard_normal((B, 10, N))
    q1, q2 = rng.standard_normal((B, 10)), rng.standard_normal((B, 10))
    p = J3SParams(lambda3=0.1)
    _, _, obj = prox_grad_j3s(q1, q2, U, V, p.theta, p.lambda1, p.lambda2, p.lambda3, iters=20_000)
    for b in range(B):
        code = solve_codes(q1[b], q2[b], U[b], V[b], p)
        assert abs(code.loss - obj[b]) <= 1e-4 * obj[b]
        assert code.loss == pytest.approx(
            j3s_objective(q1[b], q2[b], U[b], V[b], code.alpha, code.gamma, p.theta, p.lambda1, p.lambda2,
                          p.lambda3), rel=1e-12)


@pytest.mark.parametrize("lambda3", [1e-3, 0.1, 1.0, 10.0])
def test_monotone_descent(rng, lambda3):
    p = J3SParams(lambda3=lambda3, max_iters=200, tol=1e-12)
    for _ in range(10):
        U, V = rng.standard_normal((15, 8)), rng.standard_normal((20, 8))
        code = solve_codes(rng.standard_normal(15), rng.standard_normal(20), U, V, p)
        assert np.all(np.diff(code.loss_trace) <= 1e-8)
        assert np.all(code.g_diag > 0)


def test_lambda3_zero_decouples(rng):
    p = J3SParams(theta=0.4, lambda1=0.3, lambda2=0.2, lambda3=0.0, max_iters=5, tol=1e-300)
    U, V = rng.standard_normal((10, 6)), rng.standard_normal((7, 6))
    q1, q2 = rng.standard_normal(10), rng.standard_normal(7)
    first = solve_codes(q1, q2, U, V, J3SParams(theta=0.4, lambda1=0.3, lambda2=0.2, lambda3=0.0, max_iters=1))
    later = solve_codes(q1, q2, U, V, p)
    np.testing.assert_allclose(first.alpha, _ridge(q1, U, 0.3 / 0.4), atol=1e-10)
    np.testing.assert_allclose(first.gamma, _ridge(q2, V, 0.2 / 0.6), atol=1e-10)
    np.testing.assert_array_equal(later.alpha, first.alpha)
    np.testing.assert_array_equal(later.gamma, first.gamma)


def test_joint_support_coupling(rng):
    p = J3SParams(theta=0.5, lambda1=1e-6, lambda2=1e-6, lambda3=10.0, max_iters=500, tol=1e-14)
    for _ in range(5):
        U, V = rng.standard_normal((30, 10)), rng.standard_normal((25, 10))
        support = rng.choice(10, 2, replace=False)
        a_true = np.zeros(10)
        g_true = np.zeros(10)
        a_true[support] = rng.uniform(20, 40, 2) * rng.choice([-1, 1], 2)
        g_true[support] = rng.uniform(20, 40, 2) * rng.choice([-1, 1], 2)
        code = solve_codes(U @ a_true, V @ g_true, U, V, p)
        sa = set(np.flatnonzero(np.abs(code.alpha) > 1e-6))
        sg = set(np.flatnonzero(np.abs(code.gamma) > 1e-6))
        assert sa == sg == set(support)


def test_deterministic(rng):
    U, V = rng.standard_normal((10, 8)), rng.standard_normal((10, 8))
    q1, q2 = rng.standard_normal(10), rng.standard_normal(10)
    a = solve_codes(q1, q2, U, V, J3SParams(lambda3=0.5))
    b = solve_codes(q1.copy(), q2.copy(), U.copy(), V.copy(), J3SParams(lambda3=0.5))
    assert a.loss_trace == b.loss_trace


def test_solve_per_class_and_pca_in_span(rng):
    train = [(rng.standard_normal(40), rng.standard_normal(30), i // 4) for i in range(12)]
    w = rng.dirichlet(np.ones(4))
    q1 = sum(wk * train[4 + k][0] for k, wk in enumerate(w))
    q2 = sum(wk * train[4 + k][1] for k, wk in enumerate(w))
    plain = assemble_dictionaries(train)
    reduced = assemble_dictionaries(train, use_pca=True)
    p = J3SParams(lambda3=0.05)
    for label in (0, 1, 2, None):
        a = solve(q1, q2, plain, p, label=label)
        b = solve(q1, q2, reduced, p, label=label)
        assert b.loss == pytest.approx(a.loss, rel=1e-8)
    assert solve(q1, q2, plain, p, label=1).loss < solve(q1, q2, plain, p, label=0).loss


def test_pca_extra_columns_widen_fit_only(rng):
    train = [(rng.standard_normal(40), rng.standard_normal(30), i // 3) for i in range(6)]
    extra = [(rng.standard_normal(40), rng.standard_normal(30)) for _ in range(4)]
    plain = assemble_dictionaries(train, use_pca=True)
    wide = assemble_dictionaries(train, use_pca=True, pca_extra=extra)
    assert wide.n_atoms == plain.n_atoms == 6
    assert wide.U.shape[0] == plain.U.shape[0] + 4
    q1, q2 = extra[0]
    full = assemble_dictionaries(train)
    p = J3SParams(lambda3=0.05)
    assert solve(q1, q2, wide, p).loss == pytest.approx(solve(q1, q2, full, p).loss, rel=1e-8)
