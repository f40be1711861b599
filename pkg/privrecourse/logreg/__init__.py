"""
L2-regularized logistic regression trained by full-batch gradient descent.
The intercept is an appended constant-1 feature and is regularized like any weight.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from ..dataops import FeatureMatrix
from ..errors import DataError, ParameterError, TrainingError

logger = logging.getLogger(__name__)

MAX_REJECTED_STEPS = 10
ROUNDOFF = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    """
    Gradient descent settings.

    ``step_size=None`` selects 1/L, where L bounds the curvature of the
    objective on the training matrix.
    """

    reg_lambda: float = 1e-4
    max_iters: int = 2000
    step_size: Optional[float] = None
    tol: float = 1e-6

    def __post_init__(self):
        if not self.reg_lambda > 0:
            raise ParameterError(f"reg_lambda must be positive, got {self.reg_lambda}")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be positive, got {self.max_iters}")
        if self.step_size is not None and not self.step_size > 0:
            raise ParameterError(f"step_size must be positive, got {self.step_size}")
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")


@dataclass(frozen=True)
class LinearModel:
    """Weights and intercept of a trained logistic regression classifier."""

    weights: np.ndarray
    intercept: float = 0.0
    reg_lambda: float = 0.0
    converged: bool = True

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if not np.isfinite(weights).all() or not np.isfinite(self.intercept):
            raise ParameterError("model weights must be finite")
        if self.reg_lambda < 0:
            raise ParameterError(f"reg_lambda must be non-negative, got {self.reg_lambda}")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    @property
    def augmented(self) -> np.ndarray:
        """Weights with the intercept appended as the last coordinate."""
        return np.append(self.weights, self.intercept)

    @classmethod
    def from_augmented(cls, w_aug: np.ndarray, reg_lambda: float, converged: bool) -> "LinearModel":
        return cls(w_aug[:-1], float(w_aug[-1]), reg_lambda, converged)

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "intercept": self.intercept,
            "reg_lambda": self.reg_lambda,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LinearModel":
        return cls(
            np.asarray(payload["weights"], dtype=float),
            float(payload["intercept"]),
            float(payload["reg_lambda"]),
            bool(payload["converged"]),
        )


def augment(X: np.ndarray) -> np.ndarray:
    """Append the constant-1 intercept column."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X, np.ones((X.shape[0], 1))])


def signed_labels(labels: np.ndarray) -> np.ndarray:
    """Map {0, 1} labels to {-1, +1}."""
    return 2.0 * np.asarray(labels, dtype=float) - 1.0


def objective(w_aug: np.ndarray, X_aug: np.ndarray, y_signed: np.ndarray,
              reg_lambda: float) -> Tuple[float, np.ndarray]:
    """
    Regularized logistic loss and its gradient.

    (1/n) sum log(1 + exp(-y_i w^T x_i)) + (lambda/2) ||w||^2
    """
    margins = y_signed * (X_aug @ w_aug)
    loss = float(np.mean(np.logaddexp(0.0, -margins)) + 0.5 * reg_lambda * (w_aug @ w_aug))
    coef = -y_signed * expit(-margins)
    grad = X_aug.T @ coef / X_aug.shape[0] + reg_lambda * w_aug
    return loss, grad


def default_step_size(X_aug: np.ndarray, reg_lambda: float) -> float:
    """1/L with L = sigma_max(X)^2 / (4n) + lambda."""
    sigma_max = np.linalg.norm(X_aug, ord=2)
    return 1.0 / (sigma_max ** 2 / (4.0 * X_aug.shape[0]) + reg_lambda)


def fit_augmented(X_aug: np.ndarray, labels: np.ndarray, cfg: TrainConfig,
                  history: Optional[List[float]] = None) -> Tuple[np.ndarray, bool]:
    """
    Run gradient descent from zero on an intercept-augmented matrix.

    Steps that increase the loss are rejected and the step size halved;
    MAX_REJECTED_STEPS consecutive rejections raise TrainingError.
    Accepted losses are appended to ``history`` when given.

    Returns:
        (augmented weights, converged flag)
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        raise DataError("cannot train on an empty dataset")
    if labels.min() == labels.max():
        raise DataError("training data contains a single class")

    y = signed_labels(labels)
    step = cfg.step_size if cfg.step_size is not None else default_step_size(X_aug, cfg.reg_lambda)
    w = np.zeros(X_aug.shape[1])
    loss, grad = objective(w, X_aug, y, cfg.reg_lambda)
    rejected = 0

    for iteration in range(cfg.max_iters):
        if np.linalg.norm(grad) < cfg.tol:
            logger.debug("Converged after %d iterations (loss %.6g)", iteration, loss)
            return w, True

        candidate = w - step * grad
        cand_loss, cand_grad = objective(candidate, X_aug, y, cfg.reg_lambda)
        if cand_loss > loss:
            if cand_loss - loss <= ROUNDOFF * max(1.0, abs(loss)):
                # at the floating-point floor of the objective
                break
            rejected += 1
            if rejected >= MAX_REJECTED_STEPS:
                raise TrainingError(
                    f"loss increased for {rejected} consecutive steps (last step size {step:.3g})"
                )
            step *= 0.5
            continue

        rejected = 0
        w, loss, grad = candidate, cand_loss, cand_grad
        if history is not None:
            history.append(loss)

    converged = bool(np.linalg.norm(grad) < cfg.tol)
    logger.debug("Stopped with |grad| %.3g above tol (loss %.6g)", np.linalg.norm(grad), loss)
    return w, converged


def train(data: FeatureMatrix, cfg: TrainConfig) -> LinearModel:
    """
    Train a non-private logistic regression model.

    Args:
        data: Training data with both classes present
        cfg: Gradient descent settings

    Returns:
        Trained LinearModel
    """
    w_aug, converged = fit_augmented(augment(data.rows), data.labels, cfg)
    return LinearModel.from_augmented(w_aug, cfg.reg_lambda, converged)


def _as_matrix(model: LinearModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    X2 = np.atleast_2d(X)
    if X2.shape[1] != model.d:
        raise ParameterError(f"expected {model.d} features, got {X2.shape[1]}")
    return X2


def score_batch(model: LinearModel, X) -> np.ndarray:
    """Logit w^T x + b for every row."""
    return _as_matrix(model, X) @ model.weights + model.intercept


def predict_proba_batch(model: LinearModel, X) -> np.ndarray:
    """Pr(y=1|x) for every row."""
    return expit(score_batch(model, X))


def score(model: LinearModel, x) -> float:
    """Logit f(x) = w^T x + b of a single point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ParameterError("score expects a single point")
    return float(score_batch(model, x)[0])


def predict_proba(model: LinearModel, x) -> float:
    """Pr(y=1|x) = sigmoid(f(x)) of a single point."""
    return float(expit(score(model, x)))


def accuracy(model: LinearModel, data: FeatureMatrix) -> float:
    """Fraction of rows where (predict_proba >= 0.5) equals the label."""
    predicted = (predict_proba_batch(model, data.rows) >= 0.5).astype(int)
    return float(np.mean(predicted == data.labels))
