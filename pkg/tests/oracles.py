"""Reference computations that share no code path with the library."""

from __future__ import annotations

import math

import numpy as np


def golden_section(f, lo, hi, tol=1e-13, max_iter=500):
    """Minimize a unimodal scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol * (1.0 + abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def robust_eigenvalue_by_search(delta, a):
    """Minimizer of log(l) + delta/l + a*(-log(l) - 1 + l) over l > 0, searched in log l."""

    def obj(t):
        lam = math.exp(t)
        return t + delta / lam + a * (-t - 1.0 + lam)

    hi = math.log(max(delta, 1.0) / a + 10.0)
    lo = math.log(max(delta, 1e-300)) - 10.0
    return math.exp(golden_section(obj, lo, hi))


def covariance_by_sum(X):
    d, m = X.shape
    mu = [sum(X[i, k] for k in range(m)) / m for i in range(d)]
    C = np.zeros((d, d))
    for k in range(m):
        v = X[:, k] - np.array(mu)
        for i in range(d):
            for j in range(d):
                C[i, j] += v[i] * v[j]
    return np.array(mu), C / m


def random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def procrustes_objective(W, P, G):
    R = W @ P - G
    return float(np.sum(R * R))


def j3s_objective(q1, q2, U, V, a, g, theta, l1, l2, l3):
    r1 = q1 - U @ a
    r2 = q2 - V @ g
    return (theta * r1 @ r1 + (1 - theta) * r2 @ r2 + l1 * a @ a + l2 * g @ g
            + l3 * np.sum(np.sqrt(a * a + g * g)))


def prox_grad_j3s(q1, q2, U, V, theta, l1, l2, l3, iters=100_000):
    """Accelerated proximal gradient with adaptive restart, batched.

    Shapes: q1 (B, d1), q2 (B, d2), U (B, d1, N), V (B, d2, N); ``l3`` is a
    scalar or one value per instance.
    Returns (alpha, gamma, objective) with leading batch axis.
    """
    B, _, N = U.shape
    l3 = np.broadcast_to(np.asarray(l3, dtype=float), (B,))
    l3_col = l3[:, None]
    Lu = np.linalg.norm(U, ord=2, axis=(1, 2)) ** 2
    Lv = np.linalg.norm(V, ord=2, axis=(1, 2)) ** 2
    L = 2.0 * np.maximum(theta * Lu + l1, (1 - theta) * Lv + l2)
    step = (1.0 / L)[:, None]
    Utq = np.einsum("bdn,bd->bn", U, q1)
    Vtq = np.einsum("bdn,bd->bn", V, q2)
    UtU = np.einsum("bdn,bdk->bnk", U, U)
    VtV = np.einsum("bdn,bdk->bnk", V, V)

    def grads(a, g):
        ga = 2 * theta * (np.matmul(UtU, a[:, :, None])[:, :, 0] - Utq) + 2 * l1 * a
        gg = 2 * (1 - theta) * (np.matmul(VtV, g[:, :, None])[:, :, 0] - Vtq) + 2 * l2 * g
        return ga, gg

    def prox(a, g):
        norm = np.sqrt(a * a + g * g)
        with np.errstate(divide="ignore", invalid="ignore"):
            shrink = np.where(norm > 0, np.maximum(0.0, 1.0 - step * l3_col / norm), 0.0)
        return a * shrink, g * shrink

    a = np.zeros((B, N))
    g = np.zeros((B, N))
    ya, yg = a.copy(), g.copy()
    t = np.ones((B, 1))
    for _ in range(iters):
        ga, gg = grads(ya, yg)
        na, ng = prox(ya - step * ga, yg - step * gg)
        # gradient-based restart (O'Donoghue & Candes)
        restart = (np.sum((ya - na) * (na - a), axis=1) + np.sum((yg - ng) * (ng - g), axis=1)) > 0
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        mom = (t - 1) / t_new
        mom[restart] = 0.0
        t_new[restart] = 1.0
        ya = na + mom * (na - a)
        yg = ng + mom * (ng - g)
        a, g, t = na, ng, t_new
    obj = np.array([j3s_objective(q1[b], q2[b], U[b], V[b], a[b], g[b], theta, l1, l2, l3[b]) for b in range(B)])
    return a, g, obj


def nearest_descriptor_accuracy(gallery_vecs, gallery_labels, probe_vecs, probe_labels):
    """1-NN accuracy by exhaustive Euclidean search."""
    correct = 0
    for v, y in zip(probe_vecs, probe_labels):
        best, best_d = None, math.inf
        for gv, gy in zip(gallery_vecs, gallery_labels):
            dist = float(np.sum((np.asarray(v) - np.asarray(gv)) ** 2))
            if dist < best_d:
                best, best_d = gy, dist
        correct += best == y
    return correct / len(probe_labels)
