"""Brute-force reference solver for the epsilon-SVR dual.

Independent oracle for the SMO solver: solves the 2N-variable box-and-
hyperplane QP directly with monotone FISTA (accelerated projected gradient),
where the projection onto {0 <= a <= C, z'a = 0} is computed by bisection on
the hyperplane multiplier. Shares no code with the production solver.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _project(v, box, z):  # pragma: no cover - jitted
    n = v.shape[0]
    r = 1.0
    for k in range(n):
        if abs(v[k]) > r:
            r = abs(v[k])
        if box[k] > r:
            r = box[k]
    lo = -2.0 * r
    hi = 2.0 * r
    for _ in range(80):
        lam = 0.5 * (lo + hi)
        total = 0.0
        for k in range(n):
            ak = v[k] - lam * z[k]
            if ak < 0.0:
                ak = 0.0
            elif ak > box[k]:
                ak = box[k]
            total += z[k] * ak
        if total > 0.0:
            lo = lam
        else:
            hi = lam
    lam = 0.5 * (lo + hi)
    out = np.empty(n)
    for k in range(n):
        ak = v[k] - lam * z[k]
        if ak < 0.0:
            ak = 0.0
        elif ak > box[k]:
            ak = box[k]
        out[k] = ak
    return out


@njit(cache=True)
def _fista(Q, p, box, z, step, max_iter):  # pragma: no cover - jitted
    n = p.shape[0]
    x = np.zeros(n)
    x_prev = x.copy()
    yk = x.copy()
    t = 1.0
    best = x.copy()
    best_f = 0.0
    prev_f = np.inf
    for _ in range(max_iter):
        grad = Q @ yk + p
        x = _project(yk - step * grad, box, z)
        f = 0.5 * x @ (Q @ x) + p @ x
        if f < best_f:
            best_f = f
            best[:] = x
        if f > prev_f:  # restart momentum on non-monotone step
            t = 1.0
            yk = x.copy()
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            yk = x + ((t - 1.0) / t_next) * (x - x_prev)
            t = t_next
        prev_f = f
        x_prev = x.copy()
    return best, best_f


def solve_svr_dual_reference(K, y, box, epsilon, max_iter=60000):
    """Solve the weighted epsilon-SVR dual by projected gradient.

    K: (n, n) Gram matrix; y: centered targets; box: per-sample C_i.
    Returns dict with alpha, alpha_star, beta, (max-form) objective, bias.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    box = np.asarray(box, dtype=float)
    n = len(y)
    Q = np.block([[K, -K], [-K, K]])
    p = np.concatenate([epsilon - y, epsilon + y])
    bounds = np.concatenate([box, box])
    z = np.concatenate([np.ones(n), -np.ones(n)])
    eigs = np.linalg.eigvalsh(Q)
    step = 1.0 / max(float(eigs[-1]), 1e-12)
    a, f_min = _fista(np.ascontiguousarray(Q), p, bounds, z, step, max_iter)
    alpha, alpha_star = a[:n], a[n:]
    beta = alpha - alpha_star
    return {
        "alpha": alpha,
        "alpha_star": alpha_star,
        "beta": beta,
        "objective": -f_min,
        "bias": _reference_bias(K, y, alpha, alpha_star, box, epsilon),
    }


def _reference_bias(K, y, alpha, alpha_star, box, epsilon):
    resid = y - K @ (alpha - alpha_star)
    tol = 1e-7 * max(float(np.max(box)), 1e-300)
    free_a = (alpha > tol) & (box - alpha > tol)
    free_s = (alpha_star > tol) & (box - alpha_star > tol)
    values = np.concatenate([resid[free_a] - epsilon, resid[free_s] + epsilon])
    if len(values):
        return float(np.mean(values))
    # No free multipliers: b lies in a KKT interval. alpha at 0 and
    # alpha_star at C bound b from below; alpha at C and alpha_star at 0
    # bound it from above. Return the midpoint.
    lows, ups = [], []
    for i in range(len(y)):
        if alpha[i] <= tol:
            lows.append(resid[i] - epsilon)
        if alpha[i] >= box[i] - tol:
            ups.append(resid[i] - epsilon)
        if alpha_star[i] <= tol:
            ups.append(resid[i] + epsilon)
        if alpha_star[i] >= box[i] - tol:
            lows.append(resid[i] + epsilon)
    lo = max(lows) if lows else 0.0
    hi = min(ups) if ups else 0.0
    return float(0.5 * (lo + hi))


def reference_predict(X_train, beta, bias, X_query, gamma):
    X_train = np.asarray(X_train, dtype=float)
    X_query = np.atleast_2d(np.asarray(X_query, dtype=float))
    sq = (
        np.sum(X_query**2, axis=1)[:, None]
        + np.sum(X_train**2, axis=1)[None, :]
        - 2.0 * X_query @ X_train.T
    )
    return np.exp(-gamma * np.maximum(sq, 0.0)) @ beta + bias
