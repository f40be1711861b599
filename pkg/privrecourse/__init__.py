"""
privrecourse - Differentially private algorithmic recourse for linear classifiers.

Provides:
- Logistic regression trained by deterministic full-batch gradient descent
- Closed-form counterfactual recourse and Laplace Recourse (LR)
- Output-perturbed DP training (DPM)
- Counterfactual-distance membership inference attacks (CFD, CFD LRT)
- ROC / AUC / balanced-accuracy evaluation with the epsilon-DP bound
- A deterministic experiment runner with CSV/JSON artifacts

Example usage:
    import numpy as np
    from privrecourse import (
        PrivacyBudget, Mechanism, TrainConfig, generate_synthetic, preprocess,
        train, batch_recourse, load_config, ExperimentRunner,
    )

    # Data and model
    data = preprocess(generate_synthetic(d=10, n=200, seed=0))
    model = train(data, TrainConfig())

    # Private recourse
    budget = PrivacyBudget(Mechanism.LR, epsilon=1.0)
    outcomes = batch_recourse(model, data.rows[:5], 0.0, budget, rng=np.random.default_rng(0))
    for outcome in outcomes:
        print(outcome.cost)

    # Full experiment
    with ExperimentRunner() as runner:
        result = runner.run(load_config("experiment.cfg"))
        print(result.reports)
"""

__version__ = "1.0.0"
__description__ = "Differentially private algorithmic recourse and membership-inference evaluation"

from .errors import (
    PrivRecourseError, ParameterError, DataError, TrainingError,
    ConfigError, PipelineError
)
from .seeding import Stream, derive_rng
from .dataops import (
    FeatureMatrix, SplitSpec, Preprocessor, generate_synthetic, load_csv,
    preprocess, fit_preprocessor, split
)
from .logreg import (
    TrainConfig, LinearModel, train, score, predict_proba, accuracy
)
from .dpcore import (
    Mechanism, PrivacyBudget, NoiseDraw, sample_laplace, sample_dp_noise,
    train_dp_logreg, ba_bound
)
from .recourse import (
    TargetScore, RecourseOutcome, ClosedFormRecourse, LaplaceRecourse,
    counterfactual_distance, laplace_recourse, batch_recourse, explain_negatives
)
from .attacks import (
    AttackKind, AttackScoreSet, AttackPipeline, ShadowEnsemble, Membership,
    cfd_attack_scores, train_shadow_ensemble, lrt_attack_scores,
    one_sided_lrt_decision, run_attack_experiment
)
from .evaluation import (
    RocCurve, EvalReport, roc, auc, balanced_accuracy, tpr_at_fpr,
    cfd_histogram, evaluate
)
from .storage import ModelStore
from .config import ExperimentConfig, load_config
from .core import ExperimentRunner, RunResult

# Main exports
__all__ = [
    # Main classes
    "ExperimentRunner",
    "RunResult",
    "ExperimentConfig",
    "load_config",
    "ModelStore",

    # Errors
    "PrivRecourseError",
    "ParameterError",
    "DataError",
    "TrainingError",
    "ConfigError",
    "PipelineError",

    # Data
    "FeatureMatrix",
    "SplitSpec",
    "Preprocessor",
    "generate_synthetic",
    "load_csv",
    "preprocess",
    "fit_preprocessor",
    "split",
    "Stream",
    "derive_rng",

    # Models
    "TrainConfig",
    "LinearModel",
    "train",
    "score",
    "predict_proba",
    "accuracy",

    # Privacy
    "Mechanism",
    "PrivacyBudget",
    "NoiseDraw",
    "sample_laplace",
    "sample_dp_noise",
    "train_dp_logreg",
    "ba_bound",

    # Recourse
    "TargetScore",
    "RecourseOutcome",
    "ClosedFormRecourse",
    "LaplaceRecourse",
    "counterfactual_distance",
    "laplace_recourse",
    "batch_recourse",
    "explain_negatives",

    # Attacks
    "AttackKind",
    "AttackScoreSet",
    "AttackPipeline",
    "ShadowEnsemble",
    "Membership",
    "cfd_attack_scores",
    "train_shadow_ensemble",
    "lrt_attack_scores",
    "one_sided_lrt_decision",
    "run_attack_experiment",

    # Evaluation
    "RocCurve",
    "EvalReport",
    "roc",
    "auc",
    "balanced_accuracy",
    "tpr_at_fpr",
    "cfd_histogram",
    "evaluate",
]


def create_runner(model_cache: str = None) -> ExperimentRunner:
    """
    Convenience function to create an ExperimentRunner.

    Args:
        model_cache: Path of a persistent shadow-model cache (None for no caching)

    Returns:
        ExperimentRunner instance
    """
    return ExperimentRunner(model_cache)


def create_model_store(file_path: str = None) -> ModelStore:
    """
    Convenience function to create a ModelStore.

    Args:
        file_path: Path to store file (None for in-memory)

    Returns:
        ModelStore instance
    """
    return ModelStore(file_path)
