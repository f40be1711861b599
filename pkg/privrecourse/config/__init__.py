"""
Experiment configuration.
A flat ``key = value`` text format mapped onto a frozen ExperimentConfig.
"""

import dataclasses
import math
import os
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

from ..attacks import AttackKind, AttackPipeline, LrtTail
from ..dpcore import Mechanism, PrivacyBudget
from ..errors import ConfigError, PrivRecourseError
from ..logreg import TrainConfig


@dataclass(frozen=True)
class ExperimentConfig:
    """All settings of one run: dataset, split sizes, mechanism, attacks, trainer, seed."""

    dataset: str = "synthetic"
    synthetic_d: int = 100
    csv_path: Optional[str] = None
    label_column: Optional[str] = None
    positive_label: Optional[str] = None
    corr_threshold: float = 0.95
    n_owner: int = 5000
    n_owner_test: int = 5000
    n_adversary: int = 5000
    mechanism: str = "baseline"
    epsilon: Optional[float] = None
    attacks: Tuple[str, ...] = ("cfd", "lrt_global", "lrt_local")
    n_shadow: int = 5
    n_ensemble: int = 20
    reg_lambda: float = 1e-4
    max_iters: int = 2000
    step_size: Optional[float] = None
    tol: float = 1e-6
    target_score: float = 0.0
    clamp: float = 1e-6
    shadow_dp: bool = True
    lrt_tail: str = "lower"
    hist_bins: int = 30
    seed: int = 0
    output_dir: str = "results"
    model_cache: Optional[str] = None

    def validate(self) -> "ExperimentConfig":
        """Raise ConfigError unless every field is in range."""
        if self.dataset not in ("synthetic", "csv"):
            raise ConfigError(f"dataset must be 'synthetic' or 'csv', got {self.dataset!r}")
        if self.dataset == "synthetic" and self.synthetic_d < 1:
            raise ConfigError("synthetic_d must be positive")
        if self.dataset == "csv" and not (self.csv_path and self.label_column and self.positive_label):
            raise ConfigError("csv datasets need csv_path, label_column and positive_label")
        for name in ("n_owner", "n_owner_test", "n_adversary", "n_shadow", "n_ensemble", "hist_bins", "max_iters"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.n_owner // self.n_ensemble < 2:
            raise ConfigError(f"n_owner={self.n_owner} leaves fewer than 2 rows per target model")
        if self.dataset == "synthetic" and self.total_rows % 2:
            raise ConfigError(f"synthetic datasets need an even total row count, got {self.total_rows}")
        if not 0 < self.corr_threshold <= 1:
            raise ConfigError(f"corr_threshold must be in (0, 1], got {self.corr_threshold}")
        if not 0 < self.clamp < 0.5:
            raise ConfigError(f"clamp must be in (0, 0.5), got {self.clamp}")
        if not math.isfinite(self.target_score):
            raise ConfigError("target_score must be finite")
        if not self.attacks:
            raise ConfigError("at least one attack is required")
        try:
            mechanism = Mechanism(self.mechanism)
            [AttackKind(a) for a in self.attacks]
            LrtTail(self.lrt_tail)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if mechanism is Mechanism.NONE and self.epsilon is not None:
            raise ConfigError("epsilon must be omitted for the baseline mechanism")
        if mechanism is not Mechanism.NONE and (self.epsilon is None or not self.epsilon > 0):
            raise ConfigError(f"mechanism {self.mechanism!r} requires epsilon > 0")
        try:
            self.train_config()
        except PrivRecourseError as e:
            raise ConfigError(str(e)) from e
        return self

    @property
    def total_rows(self) -> int:
        return self.n_owner + self.n_owner_test + self.n_adversary

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.reg_lambda, self.max_iters, self.step_size, self.tol)

    def budget(self) -> PrivacyBudget:
        return PrivacyBudget.from_config(self.mechanism, self.epsilon)

    def pipeline(self) -> AttackPipeline:
        return AttackPipeline(self.train_config(), self.budget(), self.target_score, self.clamp, self.shadow_dp)

    def attack_kinds(self) -> Tuple[AttackKind, ...]:
        return tuple(AttackKind(a) for a in self.attacks)

    def with_epsilon(self, epsilon: float, mechanism: Optional[str] = None) -> "ExperimentConfig":
        mechanism = mechanism or (self.mechanism if self.mechanism != "baseline" else "lr")
        return dataclasses.replace(self, mechanism=mechanism, epsilon=float(epsilon))

    def as_baseline(self) -> "ExperimentConfig":
        return dataclasses.replace(self, mechanism="baseline", epsilon=None)

    def with_output_dir(self, output_dir: str) -> "ExperimentConfig":
        return dataclasses.replace(self, output_dir=output_dir)

    def to_dict(self) -> dict:
        payload = dataclasses.asdict(self)
        payload["attacks"] = list(self.attacks)
        return payload


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _optional(convert: Callable) -> Callable:
    return lambda value: None if value == "" or value.lower() == "none" else convert(value)


def _parse_list(value: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in value.split(",") if item.strip())


_CONVERTERS: Dict[str, Callable[[str], object]] = {
    "dataset": str,
    "synthetic_d": int,
    "csv_path": _optional(str),
    "label_column": _optional(str),
    "positive_label": _optional(str),
    "corr_threshold": float,
    "n_owner": int,
    "n_owner_test": int,
    "n_adversary": int,
    "mechanism": str,
    "epsilon": _optional(float),
    "attacks": _parse_list,
    "n_shadow": int,
    "n_ensemble": int,
    "reg_lambda": float,
    "max_iters": int,
    "step_size": _optional(float),
    "tol": float,
    "target_score": float,
    "clamp": float,
    "shadow_dp": _parse_bool,
    "lrt_tail": str,
    "hist_bins": int,
    "seed": int,
    "output_dir": str,
    "model_cache": _optional(str),
}


def parse_config(text: str, base_dir: Optional[str] = None) -> ExperimentConfig:
    """
    Parse ``key = value`` lines; ``#`` starts a comment.

    Args:
        text: Config file content
        base_dir: Directory relative paths in the config resolve against

    Returns:
        Validated ExperimentConfig
    """
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONVERTERS:
            raise ConfigError(f"line {number}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {number}: duplicate key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as e:
            raise ConfigError(f"line {number}: bad value for {key}: {e}") from e

    if base_dir:
        for key in ("csv_path", "output_dir", "model_cache"):
            if values.get(key) and not os.path.isabs(values[key]):
                values[key] = os.path.join(base_dir, values[key])
    return ExperimentConfig(**values).validate()


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a config file; relative paths resolve against its directory."""
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def parse_epsilons(text: str) -> Tuple[float, ...]:
    """Comma-separated epsilon list for sweeps."""
    try:
        epsilons = tuple(float(item) for item in _parse_list(text))
    except ValueError as e:
        raise ConfigError(f"bad epsilon list {text!r}: {e}") from e
    if not epsilons:
        raise ConfigError("epsilon list is empty")
    if any(not eps > 0 for eps in epsilons):
        raise ConfigError(f"epsilons must be positive, got {epsilons}")
    return epsilons
