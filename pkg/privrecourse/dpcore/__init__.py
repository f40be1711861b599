"""
Differential-privacy primitives.
Laplace sampling, output-perturbed logistic regression and the
balanced-accuracy bound for attacks on epsilon-DP outputs.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from ..dataops import FeatureMatrix
from ..errors import ParameterError
from ..logreg import LinearModel, TrainConfig, augment, fit_augmented

logger = logging.getLogger(__name__)

SMALLEST_UNIFORM = 2.0 ** -53


class Mechanism(Enum):
    """How recourse is privatized."""
    NONE = "baseline"
    DPM = "dpm"
    LR = "lr"


@dataclass(frozen=True)
class PrivacyBudget:
    """Privacy loss epsilon and the mechanism spending it."""

    mechanism: Mechanism = Mechanism.NONE
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.mechanism is not Mechanism.NONE:
            if self.epsilon is None or not self.epsilon > 0:
                raise ParameterError(f"{self.mechanism.value} needs epsilon > 0, got {self.epsilon}")

    @classmethod
    def from_config(cls, mechanism: str, epsilon: Optional[float] = None) -> "PrivacyBudget":
        try:
            kind = Mechanism(mechanism)
        except ValueError as e:
            raise ParameterError(f"unknown mechanism {mechanism!r}") from e
        return cls(kind, epsilon if kind is not Mechanism.NONE else None)

    @property
    def is_private(self) -> bool:
        return self.mechanism is not Mechanism.NONE


@dataclass(frozen=True)
class NoiseDraw:
    """A noise sample with its scale and the RNG substream it came from."""

    value: Union[float, np.ndarray]
    scale: float
    lineage: Tuple[int, ...] = ()

    def __post_init__(self):
        if not self.scale > 0:
            raise ParameterError(f"noise scale must be positive, got {self.scale}")


def _lineage(rng: np.random.Generator) -> Tuple[int, ...]:
    bit_generator = rng.bit_generator
    seed_seq = getattr(bit_generator, "seed_seq", None) or getattr(bit_generator, "_seed_seq", None)
    return tuple(getattr(seed_seq, "spawn_key", ()))


def laplace_from_uniform(u, b: float):
    """Inverse CDF of Laplace(0, b): -b * sign(u - 1/2) * ln(1 - 2|u - 1/2|)."""
    if not b > 0:
        raise ParameterError(f"Laplace scale must be positive, got {b}")
    centred = np.asarray(u, dtype=float) - 0.5
    value = -b * np.sign(centred) * np.log1p(-2.0 * np.abs(centred))
    return float(value) if value.ndim == 0 else value


def sample_laplace(b: float, rng: np.random.Generator, size=None):
    """
    Draw from Laplace(0, b) through the inverse CDF of a uniform on (0, 1).

    Args:
        b: Scale, sensitivity / epsilon for the Laplace mechanism
        rng: Generator to draw from
        size: None for a scalar, else output shape

    Returns:
        float or ndarray of draws
    """
    if not b > 0:
        raise ParameterError(f"Laplace scale must be positive, got {b}")
    u = np.asarray(rng.random(size))
    # random() is on [0, 1); 2**-53 is its smallest positive value and keeps u - 0.5 above -0.5
    u = np.where(u == 0.0, SMALLEST_UNIFORM, u)
    return laplace_from_uniform(u, b)


def dp_noise_scale(n: int, reg_lambda: float, epsilon: float) -> float:
    """beta = 2 / (n * lambda * epsilon), the output-perturbation noise scale."""
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if not reg_lambda > 0:
        raise ParameterError("reg_lambda must be positive for finite sensitivity")
    if n < 1:
        raise ParameterError(f"n must be positive, got {n}")
    return 2.0 / (n * reg_lambda * epsilon)


def sample_dp_noise(dim: int, beta: float, rng: np.random.Generator) -> NoiseDraw:
    """
    Noise vector with density proportional to exp(-||eta|| / beta).

    Direction uniform on the sphere, norm Gamma(dim, beta) drawn as a sum of
    dim exponentials.
    """
    if dim < 1:
        raise ParameterError(f"dim must be positive, got {dim}")
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    norm = rng.exponential(beta, size=dim).sum()
    return NoiseDraw(direction * norm, beta, _lineage(rng))


def clip_rows(X: np.ndarray, max_norm: float = 1.0) -> np.ndarray:
    """Scale down rows whose l2 norm exceeds ``max_norm``."""
    norms = np.linalg.norm(X, axis=1)
    factors = np.minimum(1.0, max_norm / np.maximum(norms, np.finfo(float).tiny))
    return X * factors[:, None]


def clipped_baseline(data: FeatureMatrix, cfg: TrainConfig) -> Tuple[np.ndarray, bool]:
    """Non-private optimum on the row-clipped augmented matrix the DP trainer perturbs."""
    return fit_augmented(clip_rows(augment(data.rows)), data.labels, cfg)


def train_dp_logreg(data: FeatureMatrix, cfg: TrainConfig, epsilon: float,
                    rng: np.random.Generator) -> LinearModel:
    """
    Epsilon-DP logistic regression by output perturbation.

    Rows (intercept column included) are clipped to unit norm, the regularized
    optimum w* is found, and noise with scale 2 / (n lambda epsilon) is added.

    Args:
        data: Training data with both classes present
        cfg: Gradient descent settings (reg_lambda > 0)
        epsilon: Privacy loss
        rng: Generator for the noise draw

    Returns:
        Privatized LinearModel
    """
    beta = dp_noise_scale(data.n, cfg.reg_lambda, epsilon)
    w_star, converged = clipped_baseline(data, cfg)
    noise = sample_dp_noise(w_star.shape[0], beta, rng)
    logger.debug("DP noise: beta=%.4g, |eta|=%.4g, |w*|=%.4g",
                 beta, np.linalg.norm(noise.value), np.linalg.norm(w_star))
    return LinearModel.from_augmented(w_star + noise.value, cfg.reg_lambda, converged)


def ba_bound(epsilon: float) -> float:
    """Upper bound 1/2 + (1 - e^-epsilon)/2 on attack balanced accuracy."""
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    return 0.5 + (1.0 - math.exp(-epsilon)) / 2.0
