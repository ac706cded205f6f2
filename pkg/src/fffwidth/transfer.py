"""Instance-based transfer boosting (TrAdaBoost.R2, single-stage variant).

Source and target samples are pooled; each boosting round fits a weighted
SVR on the pool, computes adjusted errors normalized by the largest residual
over the pool, then multiplies source weights by beta_source**e_i (misfit
source instances decay) and target weights by beta_t**(-e_i) (misfit target
instances grow). The final hypothesis is the weighted median of the models
from the later half of the rounds, weighted by ln(1/beta_t).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, ORIGIN_SOURCE, ORIGIN_TARGET, concat, fit_scaler
from .errors import (
    AllTargetWeightZero,
    DidNotConverge,
    EmptyDataset,
    NotAGrid,
    StopBoosting,
)
from .svr import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    SvrModel,
    SvrParams,
    _fit_scaled,
    gram,
)

PERFECT_FIT_BETA = 1e-10  # keeps ln(1/beta) finite when a round fits exactly


class Loss(enum.Enum):
    LINEAR = "linear"
    SQUARE = "square"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class TransferConfig:
    svr_params: SvrParams
    n_iterations: int = 30
    loss: Loss = Loss.LINEAR
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")

    def to_dict(self) -> dict:
        return {
            "svr_params": self.svr_params.to_dict(),
            "n_iterations": self.n_iterations,
            "loss": self.loss.value,
            "tol": self.tol,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransferConfig":
        return cls(
            svr_params=SvrParams.from_dict(d["svr_params"]),
            n_iterations=d["n_iterations"],
            loss=Loss(d["loss"]),
            tol=d["tol"],
        )


def source_discount(n_source: int, n_iterations: int) -> float:
    """Fixed source weight-decay base 1/(1 + sqrt(2 ln n / N))."""
    return 1.0 / (1.0 + math.sqrt(2.0 * math.log(n_source) / n_iterations))


def adjusted_errors(model: SvrModel, data: Dataset, loss: Loss) -> tuple[np.ndarray, bool]:
    """Per-sample adjusted errors in [0, 1] plus a perfect-fit flag.

    Residuals are normalized by the largest residual over ALL samples; if
    that maximum is zero the fit is perfect and all errors are zero.
    """
    if len(data) == 0:
        raise EmptyDataset("adjusted_errors on empty dataset")
    residuals = np.abs(data.w - model.predict_dataset(data))
    d_max = float(residuals.max())
    if d_max == 0.0:
        return np.zeros(len(data)), True
    r = residuals / d_max
    if loss is Loss.LINEAR:
        e = r
    elif loss is Loss.SQUARE:
        e = r**2
    else:
        e = 1.0 - np.exp(-r)
    return e, False


def boost_step(weights: np.ndarray, errors: np.ndarray, is_source: np.ndarray,
               beta_source: float) -> tuple[np.ndarray, float]:
    """One TrAdaBoost.R2 weight update.

    Returns (new_weights, beta_t). Raises StopBoosting when the target-
    weighted error reaches 0.5 (terminal signal, not a failure).
    """
    weights = np.asarray(weights, dtype=float)
    errors = np.asarray(errors, dtype=float)
    is_source = np.asarray(is_source, dtype=bool)
    target = ~is_source
    target_mass = float(weights[target].sum())
    if target_mass <= 0.0:
        raise AllTargetWeightZero("target instances carry zero weight")
    eps_t = float(np.sum(weights[target] * errors[target]) / target_mass)
    if eps_t >= 0.5:
        raise StopBoosting(eps_t)
    beta_t = eps_t / (1.0 - eps_t)
    new_w = weights.copy()
    new_w[is_source] *= beta_source ** errors[is_source]
    if beta_t > 0.0:
        new_w[target] *= beta_t ** (-errors[target])
    return new_w / new_w.sum(), beta_t


@dataclass
class TransferEnsemble:
    """Sequence of per-round SVRs predicting via weighted median."""

    models: list[SvrModel]
    beta_t: list[float]
    beta_source: float
    n_source: int
    n_target: int
    config: TransferConfig
    perfect_fit: bool = field(default=False)

    def __post_init__(self):
        if len(self.models) != len(self.beta_t):
            raise ValueError("one beta_t per model required")

    def predict_many(self, f, s) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        s = np.asarray(s, dtype=float)
        start = math.ceil(len(self.models) / 2) - 1  # later half, 1-indexed ceil(T/2)..T
        preds = np.stack([m.predict_many(f, s) for m in self.models[start:]])
        w = np.log(1.0 / np.asarray(self.beta_t[start:], dtype=float))
        return _weighted_median(preds, w)

    def predict_dataset(self, data: Dataset) -> np.ndarray:
        return self.predict_many(data.f, data.s)

    def to_dict(self) -> dict:
        return {
            "kind": "transfer",
            "config": self.config.to_dict(),
            "beta_source": self.beta_source,
            "n_source": self.n_source,
            "n_target": self.n_target,
            "perfect_fit": self.perfect_fit,
            "models": [
                {"beta_t": b, **m.to_dict()}
                for m, b in zip(self.models, self.beta_t)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransferEnsemble":
        return cls(
            models=[SvrModel.from_dict(m) for m in d["models"]],
            beta_t=[m["beta_t"] for m in d["models"]],
            beta_source=d["beta_source"],
            n_source=d["n_source"],
            n_target=d["n_target"],
            config=TransferConfig.from_dict(d["config"]),
            perfect_fit=d["perfect_fit"],
        )


def _weighted_median(preds: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Column-wise weighted median: smallest prediction whose cumulative
    sorted weight reaches half the total. Always a member prediction."""
    if w.sum() <= 0.0:  # single rejected model: fall back to uniform weights
        w = np.ones_like(w)
    order = np.argsort(preds, axis=0, kind="stable")
    sorted_preds = np.take_along_axis(preds, order, axis=0)
    sorted_w = w[order]
    cum = np.cumsum(sorted_w, axis=0)
    half = 0.5 * w.sum()
    pick = np.argmax(cum >= half, axis=0)
    return sorted_preds[pick, np.arange(preds.shape[1])]


def weighted_median_predict(ensemble: TransferEnsemble, f: float, s: float) -> float:
    """Ensemble prediction (mm) at one (f, s) point."""
    return float(ensemble.predict_many([f], [s])[0])


def fit_tradaboost_r2(source: Dataset, target: Dataset, config: TransferConfig,
                      seed: int = 0) -> TransferEnsemble:
    """Fit the transfer ensemble on a source pool plus scarce target data.

    Both datasets must share the same h. The fit is deterministic: `seed`
    is accepted for interface uniformity but no randomness is consumed.
    """
    if len(source) == 0 or len(target) == 0:
        raise EmptyDataset("source and target must both be non-empty")
    if source.single_h() != target.single_h():
        raise NotAGrid("source and target h differ")
    pool = concat(source.with_origin(ORIGIN_SOURCE), target.with_origin(ORIGIN_TARGET))
    n, m = len(source), len(target)
    is_source = np.arange(n + m) < n
    beta_source = source_discount(n, config.n_iterations)

    # The pool and hyperparameters are fixed across rounds, so the scaler and
    # Gram matrix are computed once and shared by every weighted fit.
    scaler = fit_scaler(pool)
    X = scaler.transform(pool.features)
    K = gram(X, X, config.svr_params.gamma)

    weights = np.full(n + m, 1.0 / (n + m))
    models: list[SvrModel] = []
    betas: list[float] = []
    perfect = False
    for _ in range(config.n_iterations):
        w_norm = weights / weights.sum()
        try:
            model = _fit_scaled(K, X, pool.w, w_norm, config.svr_params, scaler,
                                config.tol, DEFAULT_MAX_ITER)
        except DidNotConverge as err:
            model = err.model
        errors, perfect = adjusted_errors(model, pool, config.loss)
        if perfect:
            models.append(model)
            betas.append(PERFECT_FIT_BETA)
            break
        try:
            weights, beta_t = boost_step(weights, errors, is_source, beta_source)
        except StopBoosting:
            if not models:
                # A lone rejected first model is still kept (as common
                # AdaBoost.R2 implementations do) so callers always get a
                # usable predictor; its median weight is immaterial.
                models.append(model)
                betas.append(1.0)
            break
        models.append(model)
        # eps_t can be exactly 0 without a perfect pool fit (all-zero target
        # errors); floor beta_t so the median weight ln(1/beta_t) stays finite
        betas.append(max(beta_t, PERFECT_FIT_BETA))
    return TransferEnsemble(
        models=models, beta_t=betas, beta_source=beta_source,
        n_source=n, n_target=m, config=config, perfect_fit=perfect,
    )
