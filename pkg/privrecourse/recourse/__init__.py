"""
Counterfactual recourse for linear classifiers.
Closed-form minimum-l2 recourse and Laplace Recourse, which privatizes the
predicted probability before computing the counterfactual.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.special import logit

from ..dpcore import Mechanism, PrivacyBudget, sample_laplace
from ..errors import ParameterError
from ..interfaces import RecourseMechanism
from ..logreg import LinearModel, predict_proba_batch, score_batch

DEFAULT_CLAMP = 1e-6


@dataclass(frozen=True)
class TargetScore:
    """Decision-boundary target in logit space."""

    s: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.s):
            raise ParameterError(f"target score must be finite, got {self.s}")


@dataclass(frozen=True)
class RecourseOutcome:
    """Counterfactual x' = x + delta with cost ||delta||."""

    x_prime: np.ndarray
    delta: np.ndarray
    cost: float
    noisy: bool = False
    epsilon_used: Optional[float] = None


def _target(s: Union[float, TargetScore]) -> float:
    return s.s if isinstance(s, TargetScore) else TargetScore(float(s)).s


def _weight_norm(model: LinearModel) -> float:
    norm = float(np.linalg.norm(model.weights))
    if norm == 0.0:
        raise ParameterError("recourse is undefined for a zero weight vector")
    return norm


def _outcomes(model: LinearModel, X: np.ndarray, logits: np.ndarray, s: float,
              noisy: bool, epsilon: Optional[float]) -> List[RecourseOutcome]:
    w = model.weights
    norm = _weight_norm(model)
    steps = (s - logits) / norm ** 2
    costs = np.abs(s - logits) / norm
    return [
        RecourseOutcome(x + step * w, step * w, float(cost), noisy, epsilon)
        for x, step, cost in zip(X, steps, costs)
    ]


def counterfactual_distance(model: LinearModel, x, s: Union[float, TargetScore] = 0.0) -> RecourseOutcome:
    """
    Closed-form recourse: delta = ((s - f(x)) / ||w||^2) w.

    Args:
        model: Trained linear model with nonzero weights
        x: Query point
        s: Target logit on the decision boundary

    Returns:
        RecourseOutcome with cost |s - f(x)| / ||w||
    """
    x = np.asarray(x, dtype=float)
    return _outcomes(model, x[None, :], score_batch(model, x), _target(s), False, None)[0]


def noisy_logits(model: LinearModel, X, epsilon: float, rng: np.random.Generator,
                 clamp: float = DEFAULT_CLAMP, noise=None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Laplace-perturbed, clamped probabilities mapped back to logits.

    Returns:
        (noisy logits, mask of rows whose noisy probability hit a clamp bound)
    """
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if not 0 < clamp < 0.5:
        raise ParameterError(f"clamp must be in (0, 0.5), got {clamp}")
    p = predict_proba_batch(model, X)
    if noise is None:
        # probability query has global sensitivity 1
        noise = sample_laplace(1.0 / epsilon, rng, size=p.shape)
    p_noisy = p + np.broadcast_to(np.asarray(noise, dtype=float), p.shape)
    clamped = (p_noisy < clamp) | (p_noisy > 1.0 - clamp)
    return logit(np.clip(p_noisy, clamp, 1.0 - clamp)), clamped


def laplace_recourse(model: LinearModel, x, s: Union[float, TargetScore], epsilon: float,
                     rng: Optional[np.random.Generator], clamp: float = DEFAULT_CLAMP,
                     noise: Optional[float] = None) -> RecourseOutcome:
    """
    Laplace Recourse for a single point.

    Args:
        model: Trained linear model with nonzero weights
        x: Query point
        s: Target logit
        epsilon: Privacy loss of this query
        rng: Generator for the Laplace draw
        clamp: Noisy probabilities are clamped to [clamp, 1 - clamp]
        noise: Fixed noise value replacing the draw

    Returns:
        Noisy RecourseOutcome
    """
    x = np.asarray(x, dtype=float)
    _weight_norm(model)
    logits, _ = noisy_logits(model, x[None, :], epsilon, rng, clamp, noise)
    return _outcomes(model, x[None, :], logits, _target(s), True, epsilon)[0]


class ClosedFormRecourse(RecourseMechanism):
    """Noiseless recourse; serves the baseline and DP-trained models."""

    def __init__(self, s: Union[float, TargetScore] = 0.0):
        self.s = _target(s)

    def costs(self, model: LinearModel, X, rng=None) -> np.ndarray:
        return np.abs(self.s - score_batch(model, X)) / _weight_norm(model)

    def outcome(self, model: LinearModel, x, rng=None) -> RecourseOutcome:
        return counterfactual_distance(model, x, self.s)

    def outcomes(self, model: LinearModel, X, rng=None) -> List[RecourseOutcome]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return _outcomes(model, X, score_batch(model, X), self.s, False, None)


class LaplaceRecourse(RecourseMechanism):
    """Laplace Recourse with a fresh noise draw per query."""

    def __init__(self, epsilon: float, s: Union[float, TargetScore] = 0.0, clamp: float = DEFAULT_CLAMP):
        if not epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {epsilon}")
        self.epsilon = epsilon
        self.s = _target(s)
        self.clamp = clamp

    def draw(self, model: LinearModel, X, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Costs and clamp mask from one noise draw per row."""
        norm = _weight_norm(model)
        logits, clamped = noisy_logits(model, X, self.epsilon, rng, self.clamp)
        return np.abs(self.s - logits) / norm, clamped

    def costs(self, model: LinearModel, X, rng: np.random.Generator) -> np.ndarray:
        return self.draw(model, X, rng)[0]

    def outcome(self, model: LinearModel, x, rng: np.random.Generator) -> RecourseOutcome:
        return laplace_recourse(model, x, self.s, self.epsilon, rng, self.clamp)

    def outcomes(self, model: LinearModel, X, rng: np.random.Generator) -> List[RecourseOutcome]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        _weight_norm(model)
        logits, _ = noisy_logits(model, X, self.epsilon, rng, self.clamp)
        return _outcomes(model, X, logits, self.s, True, self.epsilon)


def mechanism_for(budget: PrivacyBudget, s: Union[float, TargetScore] = 0.0,
                  clamp: float = DEFAULT_CLAMP) -> RecourseMechanism:
    """
    Recourse mechanism answering queries under ``budget``.

    DPM's privacy lives in the model weights, so it answers queries in closed form.
    """
    if budget.mechanism is Mechanism.LR:
        return LaplaceRecourse(budget.epsilon, s, clamp)
    return ClosedFormRecourse(s)


def recourse_costs(model: LinearModel, X, s: Union[float, TargetScore], budget: PrivacyBudget,
                   rng: Optional[np.random.Generator] = None, clamp: float = DEFAULT_CLAMP) -> np.ndarray:
    """Recourse cost of every row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        return np.empty(0)
    return mechanism_for(budget, s, clamp).costs(model, X, rng)


def batch_recourse(model: LinearModel, X, s: Union[float, TargetScore], budget: PrivacyBudget,
                   rng: Optional[np.random.Generator] = None,
                   clamp: float = DEFAULT_CLAMP) -> List[RecourseOutcome]:
    """Recourse outcomes for every row of X under ``budget``."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return []
    return mechanism_for(budget, s, clamp).outcomes(model, X, rng)


def clamp_fraction(model: LinearModel, X, epsilon: float, rng: np.random.Generator,
                   clamp: float = DEFAULT_CLAMP) -> float:
    """Fraction of Laplace Recourse draws that hit a clamp bound."""
    _, clamped = noisy_logits(model, np.atleast_2d(np.asarray(X, dtype=float)), epsilon, rng, clamp)
    return float(np.mean(clamped))


def explain_negatives(model: LinearModel, X, s: Union[float, TargetScore], budget: PrivacyBudget,
                      rng: Optional[np.random.Generator] = None,
                      clamp: float = DEFAULT_CLAMP) -> List[Tuple[int, RecourseOutcome]]:
    """Recourse for the rows the model assigns a negative label, with their row indices."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    negative = np.flatnonzero(predict_proba_batch(model, X) < 0.5)
    if negative.size == 0:
        return []
    outcomes = batch_recourse(model, X[negative], s, budget, rng, clamp)
    return list(zip((int(i) for i in negative), outcomes))
