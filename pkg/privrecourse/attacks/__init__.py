"""
Counterfactual-distance membership inference attacks.
CFD thresholding and the one-sided CFD likelihood-ratio test with shadow
models, with global and local variance estimators.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import lognorm, norm

from ..dataops import FeatureMatrix, partition
from ..dpcore import Mechanism, PrivacyBudget, train_dp_logreg
from ..errors import DataError, ParameterError
from ..interfaces import RecourseMechanism
from ..logreg import LinearModel, TrainConfig, accuracy, train
from ..recourse import DEFAULT_CLAMP, ClosedFormRecourse, LaplaceRecourse, mechanism_for
from ..seeding import Stream, derive_rng

logger = logging.getLogger(__name__)

CFD_FLOOR = 1e-12
VARIANCE_FLOOR = CFD_FLOOR ** 2


class AttackKind(Enum):
    CFD = "cfd"
    LRT_GLOBAL = "lrt_global"
    LRT_LOCAL = "lrt_local"


class VarianceMode(Enum):
    GLOBAL = "global"
    LOCAL = "local"


class LrtTail(Enum):
    """Which side of the out-distribution counts as member-like."""
    LOWER = "lower"
    UPPER = "upper"


class Membership(Enum):
    MEMBER = "MEMBER"
    NON_MEMBER = "NON-MEMBER"


@dataclass(frozen=True)
class AttackScoreSet:
    """Per-query attack scores (higher is more member-like) with ground truth."""

    scores: np.ndarray
    is_member: np.ndarray
    attack_kind: AttackKind

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float).reshape(-1)
        is_member = np.asarray(self.is_member, dtype=bool).reshape(-1)
        if scores.shape != is_member.shape:
            raise ParameterError(f"{scores.size} scores for {is_member.size} membership labels")
        if not np.isfinite(scores).all():
            raise ParameterError("attack scores must be finite")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "is_member", is_member)

    @property
    def member_scores(self) -> np.ndarray:
        return self.scores[self.is_member]

    @property
    def nonmember_scores(self) -> np.ndarray:
        return self.scores[~self.is_member]

    def has_both_classes(self) -> bool:
        return bool(self.is_member.any() and (~self.is_member).any())

    @classmethod
    def concatenate(cls, parts: Sequence["AttackScoreSet"]) -> "AttackScoreSet":
        if not parts:
            raise ParameterError("nothing to concatenate")
        kinds = {p.attack_kind for p in parts}
        if len(kinds) != 1:
            raise ParameterError(f"cannot pool different attack kinds: {kinds}")
        return cls(
            np.concatenate([p.scores for p in parts]),
            np.concatenate([p.is_member for p in parts]),
            parts[0].attack_kind,
        )


@dataclass(frozen=True)
class AttackPipeline:
    """How the owner (and, mirrored, the adversary) trains models and answers recourse."""

    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    budget: PrivacyBudget = field(default_factory=PrivacyBudget)
    target_score: float = 0.0
    clamp: float = DEFAULT_CLAMP
    shadow_dp: bool = True

    def train_model(self, data: FeatureMatrix, rng: np.random.Generator) -> LinearModel:
        """Train one model; DPM perturbs the weights, every other mechanism trains plainly."""
        if self.budget.mechanism is Mechanism.DPM:
            return train_dp_logreg(data, self.train_cfg, self.budget.epsilon, rng)
        return train(data, self.train_cfg)

    def mechanism(self) -> RecourseMechanism:
        return mechanism_for(self.budget, self.target_score, self.clamp)

    def for_shadows(self) -> "AttackPipeline":
        """Pipeline the adversary runs; non-private unless shadow models mirror DP."""
        if self.shadow_dp:
            return self
        return replace(self, budget=PrivacyBudget())


@dataclass
class ShadowEnsemble:
    """Adversary's shadow models and the out-distribution CFDs of query points."""

    models: List[LinearModel]
    per_point_cfds: np.ndarray
    pipeline: AttackPipeline
    seed: int = 0

    @property
    def n_shadow(self) -> int:
        return len(self.models)

    def query(self, X: np.ndarray, noise_index: int = 0) -> np.ndarray:
        """
        CFD of every row of X under every shadow model.

        Returns:
            (n_query, n_shadow) matrix
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        mechanism = self.pipeline.mechanism()
        columns = [
            mechanism.costs(model, X, derive_rng(self.seed, Stream.NOISE, 1, noise_index, j))
            for j, model in enumerate(self.models)
        ]
        return np.column_stack(columns) if columns else np.empty((X.shape[0], 0))

    def with_queries(self, X: np.ndarray, noise_index: int = 0) -> "ShadowEnsemble":
        return ShadowEnsemble(self.models, self.query(X, noise_index), self.pipeline, self.seed)


@dataclass
class AttackExperimentResult:
    """Pooled attack scores over all target models plus model accuracy."""

    scores: Dict[AttackKind, AttackScoreSet]
    member_cfds: np.ndarray
    nonmember_cfds: np.ndarray
    train_accuracy: float
    test_accuracy: float
    clamp_fraction: Optional[float] = None


def cfd_attack_scores(target_model: LinearModel, queries, ground_truth,
                      mechanism: Optional[RecourseMechanism] = None,
                      rng: Optional[np.random.Generator] = None) -> AttackScoreSet:
    """
    Threshold attack on counterfactual distance: larger distance is more member-like.

    Args:
        target_model: Owner's model
        queries: Query matrix (or FeatureMatrix)
        ground_truth: Per-query membership
        mechanism: Recourse mechanism the owner answers with (closed form by default)
        rng: Generator for noisy mechanisms
    """
    X = queries.rows if isinstance(queries, FeatureMatrix) else np.atleast_2d(np.asarray(queries, dtype=float))
    if X.shape[0] == 0:
        raise ParameterError("no query points")
    mechanism = mechanism or ClosedFormRecourse()
    return AttackScoreSet(mechanism.costs(target_model, X, rng), ground_truth, AttackKind.CFD)


def train_shadow_ensemble(adversary_pool: FeatureMatrix, pipeline: AttackPipeline, n_shadow: int,
                          seed: int, sample_size: Optional[int] = None,
                          queries: Optional[np.ndarray] = None) -> ShadowEnsemble:
    """
    Train shadow models on independent subsamples of the adversary's pool.

    Args:
        adversary_pool: Preprocessed data the adversary holds
        pipeline: Owner pipeline the adversary mirrors
        n_shadow: Number of shadow models
        seed: Master seed; model j draws from the SHADOW_MODELS substream j
        sample_size: Rows per shadow training set (whole pool by default)
        queries: Optional query points whose CFDs are computed right away

    Returns:
        ShadowEnsemble
    """
    if n_shadow < 1:
        raise ParameterError(f"n_shadow must be positive, got {n_shadow}")
    sample_size = sample_size or adversary_pool.n
    if sample_size > adversary_pool.n or sample_size < 2:
        raise DataError(f"adversary pool of {adversary_pool.n} rows cannot supply {sample_size}-row samples")

    shadow_pipeline = pipeline.for_shadows()
    models = []
    for j in range(n_shadow):
        rng = derive_rng(seed, Stream.SHADOW_MODELS, j)
        sample = rng.choice(adversary_pool.n, size=sample_size, replace=False)
        models.append(shadow_pipeline.train_model(adversary_pool.subset(sample), rng))
    logger.info("Trained %d shadow models on %d-row samples", n_shadow, sample_size)

    ensemble = ShadowEnsemble(models, np.empty((0, n_shadow)), shadow_pipeline, seed)
    if queries is not None:
        ensemble = ensemble.with_queries(queries)
    return ensemble


def _log_cfds(cfds) -> np.ndarray:
    return np.log(np.maximum(np.asarray(cfds, dtype=float), CFD_FLOOR))


def out_distribution(shadow_cfds: np.ndarray, variance_mode: VarianceMode = VarianceMode.LOCAL):
    """
    Lognormal out-distribution parameters per query point.

    Returns:
        (mu, sigma) arrays over query points
    """
    logs = _log_cfds(np.atleast_2d(shadow_cfds))
    n_shadow = logs.shape[1]
    mu = logs.mean(axis=1)
    centred = logs - mu[:, None]

    if variance_mode is VarianceMode.LOCAL:
        if n_shadow < 2:
            raise ParameterError("local variance needs at least two shadow models")
        variance = np.mean(centred ** 2, axis=1)
        if (variance == 0).any():
            raise DataError("shadow CFDs are identical for some query point (zero variance)")
    else:
        if logs.size < 2:
            raise ParameterError("global variance needs at least two shadow CFDs")
        variance = np.full(mu.shape, max(float(np.mean(centred ** 2)), VARIANCE_FLOOR))
    return mu, np.sqrt(variance)


def lrt_attack_scores(ensemble, target_cfds, is_member,
                      variance_mode: VarianceMode = VarianceMode.GLOBAL,
                      tail: LrtTail = LrtTail.LOWER) -> AttackScoreSet:
    """
    One-sided likelihood-ratio attack on counterfactual distances.

    The score is the standardized log distance under the shadow
    out-distribution, negated for the lower tail so that thresholding at
    -z_{1-alpha} reproduces the one-sided quantile test.

    Args:
        ensemble: ShadowEnsemble or (n_query, n_shadow) CFD matrix
        target_cfds: CFD t0 of each query under the target model
        is_member: Ground truth
        variance_mode: Per-point (local) or pooled (global) variance
        tail: LOWER treats small t0 as member-like, UPPER large t0
    """
    shadow_cfds = ensemble.per_point_cfds if isinstance(ensemble, ShadowEnsemble) else ensemble
    shadow_cfds = np.atleast_2d(np.asarray(shadow_cfds, dtype=float))
    t0 = np.asarray(target_cfds, dtype=float).reshape(-1)
    if shadow_cfds.shape[0] != t0.shape[0]:
        raise ParameterError(f"{shadow_cfds.shape[0]} shadow rows for {t0.shape[0]} target CFDs")

    mu, sigma = out_distribution(shadow_cfds, variance_mode)
    standardized = (_log_cfds(t0) - mu) / sigma
    scores = -standardized if tail is LrtTail.LOWER else standardized
    kind = AttackKind.LRT_LOCAL if variance_mode is VarianceMode.LOCAL else AttackKind.LRT_GLOBAL
    return AttackScoreSet(scores, is_member, kind)


def lrt_threshold(alpha: float) -> float:
    """Lower-tail score threshold: MEMBER iff score >= -z_{1-alpha}."""
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must be in (0, 1), got {alpha}")
    return -float(norm.ppf(1.0 - alpha))


def one_sided_lrt_decision(shadow_cfds, t0: float, alpha: float) -> Membership:
    """
    Direct one-sided test for a single point with local MLE parameters.

    NON-MEMBER if t0 exceeds the 1 - alpha quantile of
    LogNormal(mu_out, sigma_out^2), MEMBER otherwise.
    """
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must be in (0, 1), got {alpha}")
    logs = _log_cfds(shadow_cfds).reshape(-1)
    mu = logs.mean()
    sigma = np.sqrt(np.mean((logs - mu) ** 2))
    cutoff = lognorm.ppf(1.0 - alpha, s=sigma, scale=np.exp(mu))
    return Membership.NON_MEMBER if max(t0, CFD_FLOOR) > cutoff else Membership.MEMBER


def _target_costs(mechanism: RecourseMechanism, model: LinearModel, X: np.ndarray,
                  rng: np.random.Generator):
    if isinstance(mechanism, LaplaceRecourse):
        return mechanism.draw(model, X, rng)
    return mechanism.costs(model, X, rng), None


def run_attack_experiment(owner_train: FeatureMatrix, owner_test: FeatureMatrix,
                          adversary_pool: FeatureMatrix, pipeline: AttackPipeline,
                          attacks: Sequence[AttackKind] = tuple(AttackKind),
                          n_ensemble: int = 20, n_shadow: int = 5, seed: int = 0,
                          tail: LrtTail = LrtTail.LOWER,
                          ensemble: Optional[ShadowEnsemble] = None) -> AttackExperimentResult:
    """
    Attack every owner target model and pool the scores.

    The owner pool is cut into ``n_ensemble`` disjoint training sets. Each
    target model is queried on its own training rows (members) and an equal
    number of owner_test rows (non-members). The shadow ensemble is trained
    once and reused for every target model.

    Args:
        owner_train: Owner's training pool
        owner_test: Owner's held-out rows, never trained on
        adversary_pool: Data for shadow models
        pipeline: Training and recourse settings
        attacks: Attack kinds to score
        n_ensemble: Number of target models
        n_shadow: Number of shadow models
        seed: Master seed
        tail: Orientation of the LRT scores
        ensemble: Pre-trained shadow ensemble (skips shadow training)

    Returns:
        AttackExperimentResult
    """
    attacks = list(dict.fromkeys(attacks))
    if n_ensemble < 1:
        raise ParameterError(f"n_ensemble must be positive, got {n_ensemble}")
    per_model = owner_train.n // n_ensemble
    if per_model < 2:
        raise DataError(f"{owner_train.n} owner rows cannot be split across {n_ensemble} target models")
    if owner_test.n < per_model:
        raise DataError(f"owner_test has {owner_test.n} rows, need {per_model} non-members per model")

    needs_shadows = any(kind is not AttackKind.CFD for kind in attacks)
    if needs_shadows and ensemble is None:
        ensemble = train_shadow_ensemble(adversary_pool, pipeline, n_shadow, seed, sample_size=per_model)

    mechanism = pipeline.mechanism()
    parts: Dict[AttackKind, List[AttackScoreSet]] = {kind: [] for kind in attacks}
    member_cfds, nonmember_cfds, clamp_masks, test_accuracies = [], [], [], []
    train_accuracy = 0.0

    for k, index in enumerate(partition(np.arange(owner_train.n), n_ensemble, per_model)):
        train_k = owner_train.subset(index)
        model = pipeline.train_model(train_k, derive_rng(seed, Stream.OWNER_MODELS, k))
        train_accuracy = accuracy(model, train_k)
        test_accuracies.append(accuracy(model, owner_test))

        outside = derive_rng(seed, Stream.QUERIES, k).choice(owner_test.n, size=per_model, replace=False)
        X = np.vstack([train_k.rows, owner_test.rows[outside]])
        is_member = np.repeat([True, False], per_model)

        t0, clamped = _target_costs(mechanism, model, X, derive_rng(seed, Stream.NOISE, 0, k))
        member_cfds.append(t0[is_member])
        nonmember_cfds.append(t0[~is_member])
        if clamped is not None:
            clamp_masks.append(clamped)

        if AttackKind.CFD in parts:
            parts[AttackKind.CFD].append(AttackScoreSet(t0, is_member, AttackKind.CFD))
        if needs_shadows:
            shadow_cfds = ensemble.query(X, noise_index=k)
            for kind, mode in ((AttackKind.LRT_GLOBAL, VarianceMode.GLOBAL),
                               (AttackKind.LRT_LOCAL, VarianceMode.LOCAL)):
                if kind in parts:
                    parts[kind].append(lrt_attack_scores(shadow_cfds, t0, is_member, mode, tail))
        logger.debug("Target model %d: train acc %.4f", k, train_accuracy)

    logger.info("Attacked %d target models with %d members each", n_ensemble, per_model)
    return AttackExperimentResult(
        scores={kind: AttackScoreSet.concatenate(sets) for kind, sets in parts.items()},
        member_cfds=np.concatenate(member_cfds),
        nonmember_cfds=np.concatenate(nonmember_cfds),
        train_accuracy=train_accuracy,
        test_accuracy=float(np.mean(test_accuracies)),
        clamp_fraction=float(np.mean(np.concatenate(clamp_masks))) if clamp_masks else None,
    )
