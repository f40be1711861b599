"""
Experiment runner.
Runs the data -> training -> recourse -> attack -> metrics pipeline for a
config and writes deterministic CSV/JSON artifacts.
"""

import csv
import datetime
import hashlib
import json
import logging
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pycache_handler.handler import py_cache_handler

from ..attacks import (
    AttackExperimentResult, AttackKind, LrtTail, ShadowEnsemble,
    run_attack_experiment, train_shadow_ensemble,
)
from ..config import ExperimentConfig
from ..dataops import (
    FeatureMatrix, Preprocessor, fit_preprocessor, generate_synthetic,
    load_csv, load_query_csv, split,
)
from ..dpcore import Mechanism
from ..errors import ConfigError, PipelineError, PrivRecourseError
from ..evaluation import EvalReport, accuracy_table, evaluate, wasserstein
from ..logreg import predict_proba_batch
from ..recourse import explain_negatives
from ..seeding import Stream, derive_rng
from ..storage import ModelStore, fingerprint

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ("epsilon", "attack", "auc", "ba", "wasserstein_to_baseline", "status")


def format_float(value: float) -> str:
    """17 significant digits; exact round trip."""
    return format(float(value), ".17g")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=2, allow_nan=False)
        f.write("\n")


def version_string() -> str:
    """Package version, with ``git describe`` appended when run from a checkout."""
    from .. import __version__

    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=os.path.dirname(os.path.abspath(__file__)),
            capture_output=True, text=True, timeout=5, check=True,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        described = ""
    return f"{__version__}+{described}" if described else __version__


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


@dataclass
class PreparedData:
    """Preprocessed owner/adversary partitions and the fitted transform."""

    owner_train: FeatureMatrix
    owner_test: FeatureMatrix
    adversary_pool: FeatureMatrix
    preprocessor: Preprocessor


@dataclass
class RunResult:
    """Outcome of one run: per-attack reports plus the raw experiment result."""

    config: ExperimentConfig
    reports: Dict[AttackKind, EvalReport]
    experiment: AttackExperimentResult
    output_dir: str

    @property
    def cfds(self) -> np.ndarray:
        """Recourse costs of every query point across all target models."""
        return np.concatenate([self.experiment.member_cfds, self.experiment.nonmember_cfds])


def prepare_data(config: ExperimentConfig) -> PreparedData:
    """Build, preprocess and split the dataset a config describes."""
    if config.dataset == "synthetic":
        raw = generate_synthetic(config.synthetic_d, config.total_rows, derive_rng(config.seed, Stream.DATA))
    else:
        raw = load_csv(config.csv_path, config.label_column, config.positive_label)

    preprocessor = fit_preprocessor(raw, config.corr_threshold)
    data = preprocessor.transform(raw)
    spec = split(data, (config.n_owner, config.n_owner_test, config.n_adversary),
                 derive_rng(config.seed, Stream.SPLIT))
    logger.info("Prepared %d x %d dataset (split %s, split seed %d)", data.n, data.d, spec.sizes(), spec.seed)
    return PreparedData(
        data.subset(spec.owner_train),
        data.subset(spec.owner_test),
        data.subset(spec.adversary_pool),
        preprocessor,
    )


def summary_payload(result: RunResult) -> dict:
    """summary.json body; identical inputs give identical bodies."""
    config = result.config
    budget = config.budget()
    experiment = result.experiment
    attacks = {}
    for kind, report in result.reports.items():
        attacks[kind.value] = {
            "auc": report.auc,
            "ba": report.balanced_accuracy,
            "tpr_at": {repr(level): tpr for level, tpr in report.tpr_at.items()},
            "ba_bound": report.ba_bound,
            "ba_violation": report.ba_violation,
        }
    return {
        "version": version_string(),
        "config": config.to_dict(),
        "mechanism": budget.mechanism.value,
        "epsilon": budget.epsilon,
        "ba_bound": next((r.ba_bound for r in result.reports.values()), None),
        "attacks": attacks,
        "train_accuracy": experiment.train_accuracy,
        "test_accuracy": experiment.test_accuracy,
        "clamp_fraction": experiment.clamp_fraction,
        "n_members": int(experiment.member_cfds.size),
        "n_nonmembers": int(experiment.nonmember_cfds.size),
        "cfd_train_test_wasserstein": wasserstein(experiment.member_cfds, experiment.nonmember_cfds),
    }


class ExperimentRunner:
    """
    Runs experiments and writes their artifacts.

    Args:
        model_cache: Path of a model store shared across runs (None: config's
            ``model_cache``, or no caching)
    """

    @py_cache_handler
    def __init__(self, model_cache: Optional[str] = None):
        self._model_cache = model_cache
        self._stores: Dict[str, ModelStore] = {}
        self._closed = False

    def run(self, config: ExperimentConfig) -> RunResult:
        """
        Execute one configured experiment.

        Writes roc_<attack>.csv, roc_<attack>_log.csv, hist_<attack>.csv,
        summary.json and manifest.json under ``config.output_dir``. On failure
        writes error.json there and raises PipelineError.
        """
        self._check_not_closed()
        config.validate()
        started = _utc_now()

        try:
            os.makedirs(config.output_dir, exist_ok=True)
            result = self._execute(config)
            written = self._write_artifacts(result)
            write_json(os.path.join(config.output_dir, "manifest.json"), {
                "seed": config.seed,
                "started_at": started,
                "finished_at": _utc_now(),
                "version": version_string(),
                "files": sorted(written),
            })
        except PrivRecourseError as e:
            self._write_error(config.output_dir, e)
            if isinstance(e, PipelineError):
                raise
            raise PipelineError(f"Run failed: {e}") from e
        except Exception as e:
            self._write_error(config.output_dir, e)
            raise PipelineError(f"Run failed: {e}") from e

        logger.info("Wrote %d artifacts to %s", len(written) + 1, config.output_dir)
        return result

    def sweep(self, config: ExperimentConfig, epsilons: Sequence[float], jobs: int = 1) -> List[dict]:
        """
        One baseline run plus one run per epsilon, each in its own subdirectory.

        Failed runs are recorded in sweep.csv with their error code and the
        sweep continues.

        Returns:
            sweep.csv rows as dicts
        """
        self._check_not_closed()
        if not epsilons:
            raise ConfigError("epsilon list is empty")
        if any(not eps > 0 for eps in epsilons):
            raise ConfigError(f"epsilons must be positive, got {list(epsilons)}")
        if jobs < 1:
            raise ConfigError(f"jobs must be positive, got {jobs}")
        config.validate()
        root = config.output_dir
        try:
            os.makedirs(root, exist_ok=True)
        except OSError as e:
            raise PipelineError(f"Cannot create sweep directory {root}: {e}") from e

        settings = [("baseline", config.as_baseline().with_output_dir(os.path.join(root, "baseline")))]
        for eps in epsilons:
            variant = config.with_epsilon(eps)
            label = repr(float(eps))
            settings.append((label, variant.with_output_dir(os.path.join(root, f"eps_{label}"))))
        for _, variant in settings:
            variant.validate()

        model_cache = self._model_cache or config.model_cache
        tasks = [(variant, model_cache) for _, variant in settings]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(_sweep_task, tasks))
        else:
            outcomes = [self._sweep_one(variant) for variant, _ in tasks]

        baseline_cfds = outcomes[0]["cfds"]
        rows, accuracy_rows = [], []
        for (label, _), outcome in zip(settings, outcomes):
            if outcome["status"] != "ok":
                rows.append({"epsilon": label, "attack": "", "auc": None, "ba": None,
                             "wasserstein_to_baseline": None, "status": outcome["status"]})
                continue
            distance = wasserstein(outcome["cfds"], baseline_cfds) if baseline_cfds is not None else None
            for attack, metrics in outcome["metrics"].items():
                rows.append({"epsilon": label, "attack": attack, "auc": metrics["auc"], "ba": metrics["ba"],
                             "wasserstein_to_baseline": distance, "status": "ok"})
            accuracy_rows.append(dict(outcome["accuracy"], setting=label))

        try:
            write_csv(os.path.join(root, "sweep.csv"), SWEEP_COLUMNS,
                      ([row[c] for c in SWEEP_COLUMNS] for row in rows))
            write_csv(os.path.join(root, "accuracy.csv"), ("setting", "train_accuracy", "test_accuracy"),
                      ([r["setting"], r["train_accuracy"], r["test_accuracy"]] for r in accuracy_rows))
        except OSError as e:
            raise PipelineError(f"Cannot write sweep tables under {root}: {e}") from e
        failed = sum(1 for o in outcomes if o["status"] != "ok")
        logger.info("Sweep finished: %d runs, %d failed", len(outcomes), failed)
        return rows

    def recourse(self, config: ExperimentConfig, queries_path: str, output_path: str) -> int:
        """
        Train one owner model and write recourse for its negatively classified queries.

        Query rows are raw feature rows; deltas are reported in raw units.

        Returns:
            Number of recourse rows written
        """
        self._check_not_closed()
        config.validate()
        try:
            prepared = prepare_data(config)
            per_model = config.n_owner // config.n_ensemble
            pipeline = config.pipeline()
            model = pipeline.train_model(prepared.owner_train.subset(np.arange(per_model)),
                                         derive_rng(config.seed, Stream.OWNER_MODELS, 0))
            preprocessor = prepared.preprocessor
            X = preprocessor.transform_rows(load_query_csv(queries_path, preprocessor.raw_names))
            explained = explain_negatives(model, X, config.target_score, config.budget(),
                                          derive_rng(config.seed, Stream.NOISE, 2), config.clamp)
        except (PrivRecourseError, OSError) as e:
            raise PipelineError(f"Recourse failed: {e}") from e

        probabilities = predict_proba_batch(model, X)
        names = preprocessor.feature_names
        header = ["row", "probability", "cost", "noisy"] + [f"delta_{name}" for name in names]
        rows = []
        for index, outcome in explained:
            raw_delta = preprocessor.to_raw_delta(outcome.delta)
            rows.append([index, probabilities[index], outcome.cost, outcome.noisy] + list(raw_delta))
        try:
            os.makedirs(os.path.dirname(os.path.abspath(output_path)), exist_ok=True)
            write_csv(output_path, header, rows)
        except OSError as e:
            raise PipelineError(f"Cannot write recourse output {output_path}: {e}") from e
        logger.info("Wrote recourse for %d of %d query rows to %s", len(rows), X.shape[0], output_path)
        return len(rows)

    def close(self) -> None:
        if not self._closed:
            for store in self._stores.values():
                store.close()
            self._stores.clear()
            self._closed = True

    def _sweep_one(self, config: ExperimentConfig) -> dict:
        try:
            return _sweep_outcome(self.run(config))
        except PrivRecourseError as e:
            logger.error("Sweep run in %s failed: %s", config.output_dir, e)
            return {"status": _root_code(e), "cfds": None}

    def _execute(self, config: ExperimentConfig) -> RunResult:
        prepared = prepare_data(config)
        pipeline = config.pipeline()
        attacks = config.attack_kinds()
        ensemble = None
        if any(kind is not AttackKind.CFD for kind in attacks):
            ensemble = self._shadow_ensemble(config, prepared, pipeline)

        experiment = run_attack_experiment(
            prepared.owner_train, prepared.owner_test, prepared.adversary_pool, pipeline,
            attacks=attacks, n_ensemble=config.n_ensemble, n_shadow=config.n_shadow,
            seed=config.seed, tail=LrtTail(config.lrt_tail), ensemble=ensemble,
        )
        budget = config.budget()
        reports = {kind: evaluate(experiment.scores[kind], budget, config.hist_bins) for kind in attacks}
        for kind, report in reports.items():
            if report.ba_violation:
                logger.warning("%s balanced accuracy %.4f exceeds the epsilon bound %.4f",
                               kind.value, report.balanced_accuracy, report.ba_bound)
        return RunResult(config, reports, experiment, config.output_dir)

    def _shadow_ensemble(self, config: ExperimentConfig, prepared: PreparedData, pipeline) -> ShadowEnsemble:
        per_model = config.n_owner // config.n_ensemble
        cache_path = self._model_cache or config.model_cache
        if cache_path is None:
            return train_shadow_ensemble(prepared.adversary_pool, pipeline, config.n_shadow,
                                         config.seed, sample_size=per_model)

        shadow_pipeline = pipeline.for_shadows()
        dp_trained = shadow_pipeline.budget.mechanism is Mechanism.DPM
        key = fingerprint(
            kind="shadow",
            adversary=hashlib.sha256(prepared.adversary_pool.rows.tobytes()).hexdigest(),
            labels=hashlib.sha256(prepared.adversary_pool.labels.tobytes()).hexdigest(),
            n_shadow=config.n_shadow,
            sample_size=per_model,
            seed=config.seed,
            train=[config.reg_lambda, config.max_iters, config.step_size, config.tol],
            dp_epsilon=shadow_pipeline.budget.epsilon if dp_trained else None,
        )
        store = self._store(cache_path)
        models = store.get_models(key)
        if models is not None:
            logger.info("Loaded %d shadow models from cache", len(models))
            return ShadowEnsemble(models, np.empty((0, len(models))), shadow_pipeline, config.seed)

        ensemble = train_shadow_ensemble(prepared.adversary_pool, pipeline, config.n_shadow,
                                         config.seed, sample_size=per_model)
        store.put_models(key, ensemble.models)
        store.flush()
        return ensemble

    def _store(self, path: str) -> ModelStore:
        if path not in self._stores:
            self._stores[path] = ModelStore(path)
        return self._stores[path]

    def _write_artifacts(self, result: RunResult) -> List[str]:
        out = result.output_dir
        written = []
        for kind, report in result.reports.items():
            name = kind.value
            curve = report.curve
            write_csv(os.path.join(out, f"roc_{name}.csv"), ("fpr", "tpr", "threshold"),
                      zip(curve.fpr, curve.tpr, curve.thresholds))
            write_csv(os.path.join(out, f"roc_{name}_log.csv"), ("fpr", "tpr"), report.log_grid)
            write_csv(os.path.join(out, f"hist_{name}.csv"),
                      ("bin_left", "bin_right", "train_count", "test_count"), report.histogram.rows())
            written += [f"roc_{name}.csv", f"roc_{name}_log.csv", f"hist_{name}.csv"]
        write_json(os.path.join(out, "summary.json"), summary_payload(result))
        written.append("summary.json")
        return written

    @staticmethod
    def _write_error(output_dir: str, error: Exception) -> None:
        if isinstance(error, PrivRecourseError):
            record = error.to_record()
        else:
            record = {"code": PipelineError.code, "type": type(error).__name__, "message": str(error)}
        logger.error("Run in %s failed: %s", output_dir, record["message"])
        try:
            write_json(os.path.join(output_dir, "error.json"), record)
        except OSError as e:
            logger.error("Cannot write error record: %s", e)

    def _check_not_closed(self) -> None:
        if self._closed:
            raise PipelineError("Experiment runner is closed")

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()


def _root_code(error: PrivRecourseError) -> str:
    cause = error.__cause__
    return cause.code if isinstance(cause, PrivRecourseError) else error.code


def _sweep_outcome(result: RunResult) -> dict:
    """Picklable digest of a run for sweep aggregation."""
    row = accuracy_table({"run": result.experiment})[0]
    return {
        "status": "ok",
        "cfds": result.cfds,
        "metrics": {
            kind.value: {"auc": report.auc, "ba": report.balanced_accuracy}
            for kind, report in result.reports.items()
        },
        "accuracy": {"train_accuracy": row["train_accuracy"], "test_accuracy": row["test_accuracy"]},
    }


def _sweep_task(task: Tuple[ExperimentConfig, Optional[str]]) -> dict:
    config, model_cache = task
    with ExperimentRunner(model_cache) as runner:
        return runner._sweep_one(config)
