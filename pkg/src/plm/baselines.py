"""Comparison models and error metrics.

* ordinary least squares (intercept first), minimum-norm when rank deficient
* fixed-topology two-layer network trained by full-batch Adam
* mean absolute error, overall and split by squared-residual rank
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .agdo import _Adam
from .errors import InvalidInputError
from .network import TwoLayerNet, augment, grad_workspace, loss_and_flat_grad


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LinearModel:
    coefficients: np.ndarray

    def __call__(self, X):
        X = np.asarray(X, dtype=np.float64)
        return self.coefficients[0] + X @ self.coefficients[1:]


def fit_linear(train) -> LinearModel:
    y = np.asarray(train.y, dtype=np.float64)
    if y.shape[0] == 0:
        raise InvalidInputError("cannot fit an empty dataset")
    A = augment(train.X)
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        warnings.warn(
            f"design matrix has rank {rank} < {A.shape[1]}; returning the minimum-norm solution",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return LinearModel(coef)


@dataclass(frozen=True)
class BackpropResult:
    net: TwoLayerNet
    initial_loss: float
    final_loss: float
    best_loss: float


def fit_backprop_2lnn(
    train,
    p_fixed: int,
    epochs: int = 500,
    seed: int = 0,
    eta: float = 1e-2,
    beta1: float = 0.9,
    beta2: float = 0.999,
    adam_eps: float = 1e-8,
    keep_best: bool = True,
) -> BackpropResult:
    """Train a ``p_fixed``-node network for exactly ``epochs`` full-batch steps.

    Initial weights are uniform in [-0.5, 0.5]. With ``keep_best`` the
    lowest-loss weights encountered are returned.
    """
    if p_fixed < 1:
        raise InvalidInputError("p_fixed must be >= 1")
    rng = np.random.default_rng(seed)
    net = TwoLayerNet.random(train.X.shape[1], p_fixed, rng, scale=0.5)
    Xa, y = augment(train.X), np.asarray(train.y, dtype=np.float64)
    k, shape = net.hidden.size, net.hidden.shape
    theta = np.concatenate([net.hidden.ravel(), net.output])
    work = grad_workspace(len(y), p_fixed)
    g = np.empty_like(theta)
    loss, _ = loss_and_flat_grad(Xa, y, theta[:k].reshape(shape), theta[k:], 0.0, g, work)
    initial = best = loss
    best_theta = theta
    adam = _Adam(theta.size, beta1, beta2, adam_eps)
    for _ in range(epochs):
        theta = adam.step(theta, g, eta)
        g = np.empty_like(theta)
        loss, _ = loss_and_flat_grad(Xa, y, theta[:k].reshape(shape), theta[k:], 0.0, g, work)
        if not math.isfinite(loss):
            break
        if loss < best:
            best, best_theta = loss, theta
    kept = best_theta if keep_best else theta
    final = TwoLayerNet(kept[:k].reshape(shape), kept[k:])
    return BackpropResult(final, float(initial), float(loss), float(best))


def mae(predict, ds) -> float:
    y = np.asarray(ds.y, dtype=np.float64)
    if y.shape[0] == 0:
        raise InvalidInputError("empty dataset")
    return float(np.mean(np.abs(predict(ds.X) - y)))


def mae_majority_split(predict, train, majority_count: int) -> tuple[float, float | None]:
    """MAE over the ``majority_count`` smallest squared residuals and over the rest.

    The second value is ``None`` when nothing remains.
    """
    y = np.asarray(train.y, dtype=np.float64)
    if not 1 <= majority_count <= y.shape[0]:
        raise InvalidInputError(f"majority_count must lie in [1, {y.shape[0]}]")
    abs_e = np.abs(predict(train.X) - y)
    order = np.argsort(abs_e * abs_e, kind="stable")
    head, tail = abs_e[order[:majority_count]], abs_e[order[majority_count:]]
    return float(head.mean()), (float(tail.mean()) if tail.size else None)


def overfitting_ratio(test_maes, majority_maes) -> float:
    """Average test MAE divided by average majority-train MAE."""
    return float(np.mean(test_maes) / np.mean(majority_maes))


def summary_stats(values) -> dict:
    """Min/Max/Avg/SD (sample SD, ddof=1; 0 for a single value)."""
    v = np.asarray(values, dtype=np.float64)
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return {"Min": float(v.min()), "Max": float(v.max()), "Avg": float(v.mean()), "SD": sd}
