"""Weighted epsilon-SVR with a Gaussian RBF kernel.

The dual is solved by SMO-style two-variable updates with maximal-violating-
pair selection. Per-sample instance weights enter as per-sample box
constraints C_i = c * w_i * N, which makes the weighted loss exact and keeps
boosting deterministic (no resampling).

Internally the dual is written in the single-variable form
beta_i = alpha_i - alpha_i*, maximizing

    phi(beta) = y'beta - 0.5 beta'K beta - epsilon * sum|beta_i|

subject to sum(beta) = 0 and |beta_i| <= C_i.  Pairwise updates preserve the
equality constraint exactly and each step maximizes the one-dimensional
piecewise-quadratic section exactly, so the objective never decreases.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from numba import njit

from .data import Dataset, Scaler, derived_rng, fit_scaler, rmse
from .errors import (
    DidNotConverge,
    EmptyGrid,
    TooFewSamples,
    WeightMismatch,
)

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 1_000_000


@dataclass(frozen=True)
class SvrParams:
    """Hyperparameters: regularization c, tube half-width epsilon (mm, in
    target units), RBF width gamma (per squared scaled-feature unit)."""

    c: float
    epsilon: float
    gamma: float

    def __post_init__(self):
        if not (self.c > 0 and self.gamma > 0 and self.epsilon >= 0):
            raise ValueError(f"invalid SVR params {self}")

    def to_dict(self) -> dict:
        return {"c": self.c, "epsilon": self.epsilon, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d: dict) -> "SvrParams":
        return cls(d["c"], d["epsilon"], d["gamma"])


def default_param_grid() -> list[SvrParams]:
    """Brute-force search grid; first-wins tie-breaking follows this order."""
    return [
        SvrParams(c=c, epsilon=e, gamma=g)
        for c, g, e in itertools.product(
            (0.1, 1.0, 10.0, 100.0), (0.01, 0.1, 1.0, 10.0), (0.001, 0.01, 0.05)
        )
    ]


def rbf_kernel(x, z, gamma: float) -> float:
    """exp(-gamma * ||x - z||^2); always in (0, 1]."""
    d = np.asarray(x, dtype=float) - np.asarray(z, dtype=float)
    return float(np.exp(-gamma * np.dot(d, d)))


def gram(X: np.ndarray, Z: np.ndarray, gamma: float) -> np.ndarray:
    """Dense RBF Gram matrix between row sets X and Z."""
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    sq = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(Z * Z, axis=1)[None, :]
        - 2.0 * (X @ Z.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@njit(cache=True)
def _smo(K, y, box, eps, tol, max_iter):  # pragma: no cover - jitted
    n = y.shape[0]
    beta = np.zeros(n)
    g = y.copy()  # g = y - K @ beta
    viol = np.inf
    it = 0
    while it < max_iter:
        best_up = -1e300
        best_low = 1e300
        i = -1
        for t in range(n):
            gt = g[t]
            bt = beta[t]
            fu = gt - eps if bt >= 0.0 else gt + eps
            fl = gt - eps if bt > 0.0 else gt + eps
            if bt < box[t] and fu > best_up:
                best_up = fu
                i = t
            if bt > -box[t] and fl < best_low:
                best_low = fl
        if i < 0:
            viol = 0.0
            break
        viol = best_up - best_low
        if viol <= tol:
            break
        # second-order choice of the partner: maximize the quadratic gain
        # estimate (fup_i - flow_t)^2 / q_it among sufficiently violating t
        j = -1
        best_gain = 0.0
        kii = K[i, i]
        for t in range(n):
            if t == i or beta[t] <= -box[t]:
                continue
            fl = g[t] - eps if beta[t] > 0.0 else g[t] + eps
            diff = best_up - fl
            if diff <= 0.0:
                continue
            qit = kii + K[t, t] - 2.0 * K[i, t]
            if qit < 1e-12:
                qit = 1e-12
            gain = diff * diff / qit
            if gain > best_gain:
                best_gain = gain
                j = t
        if j < 0:
            break
        bi = beta[i]
        bj = beta[j]
        lo = max(-box[i] - bi, bj - box[j])
        hi = min(box[i] - bi, bj + box[j])
        if hi <= lo:
            break
        gi = g[i]
        gj = g[j]
        q = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if q < 0.0:
            q = 0.0
        # Candidates: interval ends, the two |.| kinks, and the stationary
        # point of each sign orthant; the exact 1-D maximizer is among them.
        cand = np.empty(8)
        cand[0] = lo
        cand[1] = hi
        cand[2] = min(max(-bi, lo), hi)
        cand[3] = min(max(bj, lo), hi)
        m = 4
        if q > 1e-14:
            lin = gi - gj
            cand[4] = min(max((lin - eps - eps) / q, lo), hi)
            cand[5] = min(max((lin - eps + eps) / q, lo), hi)
            cand[6] = min(max((lin + eps - eps) / q, lo), hi)
            cand[7] = min(max((lin + eps + eps) / q, lo), hi)
            m = 8
        best_t = 0.0
        best_phi = 0.0
        for ci in range(m):
            t_ = cand[ci]
            phi = (
                (gi - gj) * t_
                - 0.5 * q * t_ * t_
                - eps * (abs(bi + t_) - abs(bi))
                - eps * (abs(bj - t_) - abs(bj))
            )
            if phi > best_phi:
                best_phi = phi
                best_t = t_
        if best_t == 0.0:
            break
        beta[i] = bi + best_t
        beta[j] = bj - best_t
        for t2 in range(n):
            g[t2] -= best_t * (K[i, t2] - K[j, t2])
        it += 1
        if it % 8192 == 0:  # rebuild g to cancel incremental-update drift
            for t2 in range(n):
                acc = 0.0
                for t3 in range(n):
                    acc += K[t2, t3] * beta[t3]
                g[t2] = y[t2] - acc
    return beta, g, it, viol


def _solve_bias(beta, g, box, eps):
    scale = float(np.max(box)) if len(box) else 1.0
    tol_b = 1e-10 * max(scale, 1e-300)
    free_pos = (beta > tol_b) & (box - beta > tol_b)
    free_neg = (beta < -tol_b) & (beta + box > tol_b)
    values = np.concatenate([g[free_pos] - eps, g[free_neg] + eps])
    if len(values):
        return float(np.mean(values))
    fup = np.where(beta >= 0, g - eps, g + eps)
    flow = np.where(beta > 0, g - eps, g + eps)
    up_ok = beta < box
    low_ok = beta > -box
    hi = np.max(fup[up_ok]) if np.any(up_ok) else 0.0
    lo = np.min(flow[low_ok]) if np.any(low_ok) else 0.0
    return float(0.5 * (hi + lo))


class SvrModel:
    """Trained epsilon-SVR.

    Keeps the full training-point set and the full dual coefficient vector
    (zeros included) so the dual objective can be evaluated afterwards;
    prediction only sums over the nonzero coefficients.
    """

    __slots__ = ("train_x", "dual_coef", "bias", "y_mean", "params", "scaler",
                 "_sv", "_sv_coef")

    def __init__(self, train_x, dual_coef, bias, y_mean, params: SvrParams,
                 scaler: Scaler):
        self.train_x = np.asarray(train_x, dtype=float)
        self.dual_coef = np.asarray(dual_coef, dtype=float)
        self.bias = float(bias)  # includes the removed target mean
        self.y_mean = float(y_mean)
        self.params = params
        self.scaler = scaler
        nz = np.flatnonzero(self.dual_coef)
        self._sv = self.train_x[nz]
        self._sv_coef = self.dual_coef[nz]

    @property
    def support_vectors(self) -> np.ndarray:
        return self._sv

    def decision(self, X_scaled: np.ndarray) -> np.ndarray:
        if len(self._sv) == 0:
            return np.full(len(X_scaled), self.bias)
        k = gram(np.atleast_2d(X_scaled), self._sv, self.params.gamma)
        return k @ self._sv_coef + self.bias

    def predict_many(self, f, s) -> np.ndarray:
        X = np.stack([np.asarray(f, dtype=float), np.asarray(s, dtype=float)], axis=1)
        return self.decision(self.scaler.transform(X))

    def predict_dataset(self, data: Dataset) -> np.ndarray:
        return self.predict_many(data.f, data.s)

    def to_dict(self) -> dict:
        return {
            "kind": "svr",
            "params": self.params.to_dict(),
            "scaler": self.scaler.to_dict(),
            "bias": self.bias,
            "y_mean": self.y_mean,
            "support_vectors": self.train_x.tolist(),
            "dual_coefficients": self.dual_coef.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvrModel":
        return cls(
            np.array(d["support_vectors"], dtype=float).reshape(-1, 2),
            d["dual_coefficients"],
            d["bias"],
            d["y_mean"],
            SvrParams.from_dict(d["params"]),
            Scaler.from_dict(d["scaler"]),
        )


def predict(model: SvrModel, f: float, s: float) -> float:
    """Predicted line width (mm) at one (f, s) point."""
    return float(model.predict_many([f], [s])[0])


def _normalized_weights(n: int, weights) -> np.ndarray:
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise WeightMismatch(f"{len(w)} weights for {n} samples")
    if np.any(w < 0) or not np.isfinite(w).all():
        raise WeightMismatch("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise WeightMismatch("weights sum to zero")
    return w / total


def _fit_scaled(K, X_scaled, y, weights, params: SvrParams, scaler: Scaler,
                tol: float, max_iter: int) -> SvrModel:
    """Core fit on pre-scaled features with a precomputed Gram matrix."""
    n = len(y)
    y_mean = float(np.mean(y))
    yc = np.ascontiguousarray(y - y_mean, dtype=float)
    box = np.ascontiguousarray(params.c * weights * n, dtype=float)
    beta, g, n_iter, viol = _smo(
        np.ascontiguousarray(K, dtype=float), yc, box,
        float(params.epsilon), float(tol), int(max_iter),
    )
    bias = _solve_bias(beta, g, box, params.epsilon) + y_mean
    model = SvrModel(X_scaled, beta, bias, y_mean, params, scaler)
    if viol > tol:
        raise DidNotConverge(model, n_iter, viol)
    return model


def fit_weighted_svr(train: Dataset, weights, params: SvrParams,
                     tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> SvrModel:
    """Fit a weighted epsilon-SVR; the scaler is fitted on `train` itself.

    Weights are normalized to sum 1 internally; `weights=None` means uniform.
    Raises DidNotConverge (with the model at the cap attached) if the maximal
    KKT violation is still above `tol` at the iteration cap.
    """
    if len(train) < 2:
        raise TooFewSamples(f"need >= 2 samples, got {len(train)}")
    w = _normalized_weights(len(train), weights)
    scaler = fit_scaler(train)
    X = scaler.transform(train.features)
    K = gram(X, X, params.gamma)
    return _fit_scaled(K, X, train.w, w, params, scaler, tol, max_iter)


def dual_objective(model: SvrModel, train: Dataset) -> float:
    """Dual objective value at the model's coefficients (0 at the origin)."""
    beta = model.dual_coef
    K = gram(model.train_x, model.train_x, model.params.gamma)
    yc = np.asarray(train.w, dtype=float) - model.y_mean
    return float(
        yc @ beta - 0.5 * beta @ K @ beta
        - model.params.epsilon * np.sum(np.abs(beta))
    )


def grid_search_cv(train: Dataset, weights, grid, k_folds: int = 5,
                   seed: int = 0, tol: float = DEFAULT_TOL) -> SvrParams:
    """Brute-force hyperparameter selection by k-fold cross-validated RMSE.

    Ties (and the initial comparison) break in grid order: first wins.
    Non-converged fold fits are scored with their at-cap model.
    """
    grid = list(grid)
    if not grid:
        raise EmptyGrid("empty hyperparameter grid")
    n = len(train)
    if k_folds < 2 or n < k_folds:
        raise TooFewSamples(f"{n} samples cannot form {k_folds} folds")
    w = _normalized_weights(n, weights)
    perm = derived_rng(int(seed)).permutation(n)
    folds = np.array_split(perm, k_folds)

    best_params = None
    best_score = np.inf
    for params in grid:
        fold_scores = []
        for fold in folds:
            val_idx = np.sort(fold)
            tr_idx = np.sort(np.setdiff1d(perm, fold, assume_unique=True))
            sub = train.subset(tr_idx)
            try:
                model = fit_weighted_svr(sub, w[tr_idx], params, tol=tol)
            except DidNotConverge as err:
                model = err.model
            val = train.subset(val_idx)
            fold_scores.append(rmse(model.predict_dataset(val), val.w))
        score = float(np.mean(fold_scores))
        if score < best_score:
            best_score = score
            best_params = params
    return best_params
