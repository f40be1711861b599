"""
Attack-efficacy metrics.
ROC curves, AUC, balanced accuracy, TPR at low FPR and score histograms.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.stats import wasserstein_distance
from sklearn.metrics import auc as trapezoid_area
from sklearn.metrics import roc_curve

from ..attacks import AttackExperimentResult, AttackScoreSet
from ..dpcore import PrivacyBudget, ba_bound
from ..errors import ParameterError

FPR_LEVELS = (0.001, 0.01, 0.1)


@dataclass(frozen=True)
class RocCurve:
    """ROC vertices ordered by descending threshold, from (0, 0) to (1, 1)."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> List[Tuple[float, float]]:
        return [(float(f), float(t)) for f, t in zip(self.fpr, self.tpr)]


@dataclass(frozen=True)
class Histogram:
    """Member / non-member counts over shared bin edges."""

    edges: np.ndarray
    train_counts: np.ndarray
    test_counts: np.ndarray

    def rows(self) -> List[Tuple[float, float, int, int]]:
        return [
            (float(self.edges[i]), float(self.edges[i + 1]), int(self.train_counts[i]), int(self.test_counts[i]))
            for i in range(len(self.train_counts))
        ]


@dataclass
class EvalReport:
    auc: float
    balanced_accuracy: float
    tpr_at: Dict[float, float]
    curve: RocCurve
    histogram: Histogram
    ba_bound: Optional[float] = None
    ba_violation: bool = False
    log_grid: List[Tuple[float, float]] = field(default_factory=list)


def _require_both_classes(scores: AttackScoreSet) -> None:
    if not scores.has_both_classes():
        raise ParameterError("metrics need at least one member and one non-member")


def roc(scores: AttackScoreSet) -> RocCurve:
    """ROC over every distinct score threshold; tied scores share one vertex."""
    _require_both_classes(scores)
    fpr, tpr, thresholds = roc_curve(scores.is_member, scores.scores, drop_intermediate=False)
    thresholds = np.asarray(thresholds, dtype=float).copy()
    thresholds[0] = np.inf
    return RocCurve(np.asarray(fpr, dtype=float), np.asarray(tpr, dtype=float), thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve."""
    return float(trapezoid_area(curve.fpr, curve.tpr))


def mann_whitney_auc(scores: AttackScoreSet) -> float:
    """P(member score > non-member score) + P(tie) / 2 by brute force over all pairs."""
    _require_both_classes(scores)
    diff = scores.member_scores[:, None] - scores.nonmember_scores[None, :]
    return float(np.mean(diff > 0) + 0.5 * np.mean(diff == 0))


def balanced_accuracy(scores: AttackScoreSet) -> float:
    """Best (TPR + TNR) / 2 over all thresholds."""
    curve = roc(scores)
    return float(np.max((curve.tpr + 1.0 - curve.fpr) / 2.0))


def tpr_at_fpr(curve: RocCurve, fpr_level: float) -> float:
    """Largest TPR among vertices with FPR <= fpr_level (no interpolation)."""
    if not 0 < fpr_level <= 1:
        raise ParameterError(f"fpr_level must be in (0, 1], got {fpr_level}")
    eligible = curve.tpr[curve.fpr <= fpr_level]
    return float(eligible.max()) if eligible.size else 0.0


def log_fpr_grid(curve: RocCurve, n_points: int = 61) -> List[Tuple[float, float]]:
    """Step-function TPR resampled on a log-spaced FPR grid from 1e-3 to 1."""
    return [(float(f), tpr_at_fpr(curve, f)) for f in np.logspace(-3, 0, n_points)]


def cfd_histogram(train_costs, test_costs, bins: int = 30) -> Histogram:
    """Counts of train and test values over bin edges spanning the pooled range."""
    train_costs = np.asarray(train_costs, dtype=float).reshape(-1)
    test_costs = np.asarray(test_costs, dtype=float).reshape(-1)
    if train_costs.size == 0 or test_costs.size == 0:
        raise ParameterError("histogram inputs must be nonempty")
    if bins < 1:
        raise ParameterError(f"bins must be positive, got {bins}")
    edges = np.histogram_bin_edges(np.concatenate([train_costs, test_costs]), bins=bins)
    train_counts, _ = np.histogram(train_costs, bins=edges)
    test_counts, _ = np.histogram(test_costs, bins=edges)
    return Histogram(edges, train_counts, test_counts)


def wasserstein(a, b) -> float:
    """1-Wasserstein distance between two empirical distributions."""
    return float(wasserstein_distance(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))


def evaluate(scores: AttackScoreSet, budget: Optional[PrivacyBudget] = None, bins: int = 30) -> EvalReport:
    """
    Full metric report for one attack.

    Private budgets annotate the report with the balanced-accuracy bound and
    flag a measured BA above it.
    """
    curve = roc(scores)
    ba = float(np.max((curve.tpr + 1.0 - curve.fpr) / 2.0))
    bound = ba_bound(budget.epsilon) if budget is not None and budget.is_private else None
    return EvalReport(
        auc=auc(curve),
        balanced_accuracy=ba,
        tpr_at={level: tpr_at_fpr(curve, level) for level in FPR_LEVELS},
        curve=curve,
        histogram=cfd_histogram(scores.member_scores, scores.nonmember_scores, bins),
        ba_bound=bound,
        ba_violation=bound is not None and ba > bound,
        log_grid=log_fpr_grid(curve),
    )


def accuracy_table(results: Mapping[str, AttackExperimentResult]) -> List[dict]:
    """Rows of (setting, train accuracy of the last target model, mean test accuracy)."""
    return [
        {"setting": setting, "train_accuracy": r.train_accuracy, "test_accuracy": r.test_accuracy}
        for setting, r in results.items()
    ]
