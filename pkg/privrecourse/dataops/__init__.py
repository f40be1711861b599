"""
Dataset construction and preprocessing.
Synthetic hypercube-vertex Gaussians, CSV ingestion and the
decorrelate / standardize / normalize pipeline.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import DataError, ParameterError
from ..seeding import SeedLike, as_generator

logger = logging.getLogger(__name__)

_CORR_BLOCK = 512


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-major numeric dataset with binary labels."""

    rows: np.ndarray
    labels: np.ndarray
    feature_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        raw_labels = np.asarray(self.labels).reshape(-1)
        if rows.ndim != 2:
            raise DataError(f"rows must be a 2-d matrix, got shape {rows.shape}")
        n, d = rows.shape
        if d < 1 or n < 2:
            raise DataError(f"dataset needs at least two rows and one feature, got {n}x{d}")
        if raw_labels.shape[0] != n:
            raise DataError(f"{raw_labels.shape[0]} labels for {n} rows")
        # checked before the cast so 0.9 or 1.7 cannot truncate into range
        if not np.isin(raw_labels, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        labels = raw_labels.astype(int)
        if not np.isfinite(rows).all():
            raise DataError("rows contain NaN or infinite values")
        names = list(self.feature_names) or [f"x{j}" for j in range(d)]
        if len(names) != d:
            raise DataError(f"{len(names)} feature names for {d} features")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def subset(self, index: Sequence[int]) -> "FeatureMatrix":
        """Rows selected by ``index``, in that order."""
        index = np.asarray(index, dtype=int)
        return FeatureMatrix(self.rows[index], self.labels[index], self.feature_names)

    def has_both_classes(self) -> bool:
        return bool(self.labels.min() == 0 and self.labels.max() == 1)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint owner-train / owner-test / adversary index sets."""

    owner_train: np.ndarray
    owner_test: np.ndarray
    adversary_pool: np.ndarray
    seed: int

    def sizes(self) -> Tuple[int, int, int]:
        return len(self.owner_train), len(self.owner_test), len(self.adversary_pool)


def generate_synthetic(d: int, n: int, seed: SeedLike) -> FeatureMatrix:
    """
    Two unit-variance isotropic Gaussians centred on distinct hypercube vertices.

    Args:
        d: Feature dimension
        n: Total number of points, split evenly between the two classes
        seed: Integer seed or Generator

    Returns:
        FeatureMatrix with labels recording the generating class
    """
    if d < 1:
        raise ParameterError(f"d must be positive, got {d}")
    if n < 2 or n % 2:
        raise ParameterError(f"n must be even and at least 2, got {n}")

    rng = as_generator(seed)
    v0, v1 = _draw_vertices(rng, d)

    half = n // 2
    rows = np.empty((n, d))
    rows[:half] = v0 + rng.standard_normal((half, d))
    rows[half:] = v1 + rng.standard_normal((half, d))
    labels = np.repeat([0, 1], half)

    order = rng.permutation(n)
    logger.debug("Generated %d synthetic points in d=%d", n, d)
    return FeatureMatrix(rows[order], labels[order])


def synthetic_vertices(d: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Class vertices ``generate_synthetic`` uses for an integer seed."""
    return _draw_vertices(np.random.default_rng(seed), d)


def _draw_vertices(rng: np.random.Generator, d: int) -> Tuple[np.ndarray, np.ndarray]:
    v0 = rng.integers(0, 2, size=d)
    v1 = rng.integers(0, 2, size=d)
    while np.array_equal(v0, v1):
        v1 = rng.integers(0, 2, size=d)
    return v0, v1


def load_csv(path: str, label_column: str, positive_label: str) -> FeatureMatrix:
    """
    Load a comma-delimited UTF-8 file with a header row.

    Numeric columns become features, the label column is mapped to 1 where it
    equals ``positive_label``. Rows with unparseable numerics are dropped.
    """
    if not os.path.exists(path):
        raise DataError(f"File not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, encoding="utf-8", skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DataError(f"Empty CSV file: {path}") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"Failed to parse {path}: {e}") from e

    if label_column not in frame.columns:
        raise DataError(f"Label column {label_column!r} not in {list(frame.columns)}")

    raw_labels = frame[label_column].str.strip()
    distinct = sorted(raw_labels.dropna().unique())
    if len(distinct) > 2:
        raise DataError(f"Label column {label_column!r} is not binary: {distinct}")
    if len(distinct) == 2 and positive_label not in distinct:
        raise DataError(f"Positive label {positive_label!r} not among {distinct}")

    features = frame.drop(columns=[label_column]).apply(pd.to_numeric, errors="coerce")
    features = features.loc[:, features.notna().any(axis=0)]
    if features.shape[1] == 0:
        raise DataError(f"No numeric feature columns in {path}")

    usable = features.notna().all(axis=1) & raw_labels.notna()
    usable &= np.isfinite(features.to_numpy(dtype=float, na_value=np.nan)).all(axis=1)
    rejected = int((~usable).sum())
    if rejected:
        logger.warning("Rejected %d rows with unparseable values from %s", rejected, path)
    if not usable.any():
        raise DataError(f"No usable rows in {path}")

    rows = features[usable].to_numpy(dtype=float)
    labels = (raw_labels[usable] == positive_label).to_numpy(dtype=int)
    logger.info("Loaded %d rows x %d features from %s", rows.shape[0], rows.shape[1], path)
    return FeatureMatrix(rows, labels, [str(c) for c in features.columns])


def _decorrelated_columns(X: np.ndarray, threshold: float) -> List[int]:
    """Greedy keep-first selection of columns below the correlation threshold."""
    n, d = X.shape
    # exact spread; std of identical non-dyadic values can round above zero
    varying = np.ptp(X, axis=0) > 0
    std = np.where(varying, X.std(axis=0), 1.0)
    Z = np.zeros_like(X)
    Z[:, varying] = (X[:, varying] - X[:, varying].mean(axis=0)) / (std[varying] * np.sqrt(n))

    kept = np.zeros(d, dtype=bool)
    for start in range(0, d, _CORR_BLOCK):
        stop = min(start + _CORR_BLOCK, d)
        # correlations of this block against every earlier column
        corr = np.abs(Z[:, :stop].T @ Z[:, start:stop])
        for j in range(start, stop):
            if not varying[j]:
                continue
            if not (corr[:j, j - start][kept[:j]] > threshold).any():
                kept[j] = True
    return [int(j) for j in np.flatnonzero(kept)]


@dataclass(frozen=True)
class Preprocessor:
    """
    Fitted column selection and affine rescaling.

    A kept raw column j maps to (x - center[j]) / scale[j], where scale is the
    population standard deviation times the l2 norm of the standardized column.
    """

    kept: List[int]
    center: np.ndarray
    scale: np.ndarray
    raw_names: List[str]

    @property
    def feature_names(self) -> List[str]:
        return [self.raw_names[j] for j in self.kept]

    def transform_rows(self, rows) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != len(self.raw_names):
            raise ParameterError(f"expected {len(self.raw_names)} raw features, got {rows.shape[1]}")
        return (rows[:, self.kept] - self.center) / self.scale

    def transform(self, data: FeatureMatrix) -> FeatureMatrix:
        return FeatureMatrix(self.transform_rows(data.rows), data.labels, self.feature_names)

    def to_raw_delta(self, delta) -> np.ndarray:
        """Perturbation in preprocessed space expressed in raw feature units."""
        return np.asarray(delta, dtype=float) * self.scale


def fit_preprocessor(data: FeatureMatrix, corr_threshold: float = 0.95) -> Preprocessor:
    """
    Fit the decorrelate / standardize / normalize pipeline on ``data``.

    Args:
        data: Raw dataset
        corr_threshold: Drop a feature whose |Pearson r| with an already kept
            feature exceeds this value

    Returns:
        Preprocessor (constant columns removed)
    """
    if not 0 < corr_threshold <= 1:
        raise ParameterError(f"corr_threshold must be in (0, 1], got {corr_threshold}")
    if data.n < 2:
        raise DataError("preprocessing needs at least two rows")

    kept = _decorrelated_columns(data.rows, corr_threshold)
    if not kept:
        raise DataError("every feature was dropped during preprocessing")

    X = data.rows[:, kept]
    center = X.mean(axis=0)
    std = X.std(axis=0)
    scale = std * np.linalg.norm((X - center) / std, axis=0)

    dropped = data.d - len(kept)
    if dropped:
        logger.info("Dropped %d of %d features (constant or |r| > %s)", dropped, data.d, corr_threshold)
    return Preprocessor(kept, center, scale, list(data.feature_names))


def preprocess(data: FeatureMatrix, corr_threshold: float = 0.95) -> FeatureMatrix:
    """Remove multicollinear features, standardize, then scale each column to unit l2 norm."""
    return fit_preprocessor(data, corr_threshold).transform(data)


def load_query_csv(path: str, feature_names: Sequence[str]) -> np.ndarray:
    """
    Load query rows holding at least the named raw feature columns.

    Extra columns (such as a label) are ignored; every row must parse.
    """
    if not os.path.exists(path):
        raise DataError(f"File not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, encoding="utf-8", skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DataError(f"Empty CSV file: {path}") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"Failed to parse {path}: {e}") from e

    missing = [name for name in feature_names if name not in frame.columns]
    if missing:
        raise DataError(f"Query file {path} lacks feature columns {missing}")
    if frame.shape[0] == 0:
        raise DataError(f"No query rows in {path}")

    rows = frame[list(feature_names)].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(rows).all(axis=1))
    if bad.size:
        raise DataError(f"Unparseable query rows in {path}: {bad.tolist()[:10]}")
    return rows


def split(data: FeatureMatrix, sizes: Sequence[int], seed: SeedLike) -> SplitSpec:
    """
    Draw disjoint owner-train, owner-test and adversary index sets.

    Args:
        data: Dataset to split
        sizes: (owner_train, owner_test, adversary_pool) sizes
        seed: Integer seed, or a Generator from which a 64-bit seed is drawn;
            either way the SplitSpec records the integer seed that reproduces it

    Returns:
        SplitSpec, deterministic given the seed
    """
    if len(sizes) != 3 or any(int(s) < 0 for s in sizes):
        raise ParameterError(f"sizes must be three non-negative integers, got {sizes}")
    n_train, n_test, n_adv = (int(s) for s in sizes)
    if n_train + n_test + n_adv > data.n:
        raise DataError(f"requested {n_train + n_test + n_adv} rows but dataset has {data.n}")

    if isinstance(seed, (int, np.integer)):
        recorded = int(seed)
    else:
        recorded = int(as_generator(seed).integers(0, np.iinfo(np.int64).max))
    perm = np.random.default_rng(recorded).permutation(data.n)
    return SplitSpec(
        owner_train=perm[:n_train],
        owner_test=perm[n_train:n_train + n_test],
        adversary_pool=perm[n_train + n_test:n_train + n_test + n_adv],
        seed=recorded,
    )


def partition(index: np.ndarray, parts: int, size: Optional[int] = None) -> List[np.ndarray]:
    """Cut ``index`` into ``parts`` disjoint consecutive chunks of ``size`` rows."""
    if parts < 1:
        raise ParameterError(f"parts must be positive, got {parts}")
    size = size if size is not None else len(index) // parts
    if size < 1 or size * parts > len(index):
        raise DataError(f"cannot cut {len(index)} rows into {parts} parts of {size}")
    return [index[i * size:(i + 1) * size] for i in range(parts)]
