"""CSV ingestion and preprocessing of tabular fairness datasets."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .estimators import ObjectiveDataset

log = logging.getLogger(__name__)


class MissingColumn(KeyError):
    pass


class UnparsableCell(ValueError):
    def __init__(self, path, row: int, column: str, text: str):
        self.row = row
        self.column = column
        super().__init__(f"{path}: row {row}, column {column!r}: cannot parse {text!r} as a number")


class InsufficientRows(ValueError):
    pass


@dataclass(frozen=True)
class CsvSchema:
    target_column: str
    group_column: str
    drop_columns: tuple = ()
    positive_group_value: str = "1"

    def __post_init__(self):
        if self.target_column == self.group_column:
            raise ValueError("target and group columns must differ")
        object.__setattr__(self, "drop_columns", tuple(self.drop_columns))


@dataclass(frozen=True)
class PreprocessPlan:
    n_labeled: int
    n_unlabeled: int
    noise_features: int = 0
    standardize: bool = True
    seed: int = 0
    # statistics from "train" (labeled + unlabeled) or "labeled" rows only
    standardize_on: str = "train"
    center_target: bool = False

    def __post_init__(self):
        if self.n_labeled < 1 or self.n_unlabeled < 0 or self.noise_features < 0:
            raise ValueError("need n_labeled >= 1, n_unlabeled >= 0, noise_features >= 0")
        if self.standardize_on not in ("train", "labeled"):
            raise ValueError("standardize_on must be 'train' or 'labeled'")


@dataclass(frozen=True, eq=False)
class RawTable:
    features: np.ndarray
    target: np.ndarray
    group: np.ndarray
    feature_names: tuple
    rejected_rows: int = 0

    @property
    def rows(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True, eq=False)
class HeldOutSplit:
    features: np.ndarray
    target: np.ndarray
    group: np.ndarray


@dataclass(frozen=True, eq=False)
class Preprocessed:
    train: ObjectiveDataset
    test: HeldOutSplit
    labeled_index: np.ndarray
    unlabeled_index: np.ndarray
    test_index: np.ndarray
    constant_columns: tuple = ()
    target_offset: float = 0.0
    mean: np.ndarray = field(default=None, repr=False)
    scale: np.ndarray = field(default=None, repr=False)


# presets: (n_labeled, n_unlabeled, noise_features, test metric)
PRESETS = {
    "communities": (150, 350, 0, "squared_loss"),
    "adult": (1000, 2000, 1000, "error_rate"),
    "hsls": (1000, 4000, 0, "error_rate"),
    "enem": (2000, 8000, 0, "error_rate"),
}


def preset_plan(name: str, seed: int = 0, **overrides) -> PreprocessPlan:
    try:
        n, N, noise, _ = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown dataset preset {name!r}; choose from {sorted(PRESETS)}") from None
    kwargs = dict(n_labeled=n, n_unlabeled=N, noise_features=noise, seed=seed)
    kwargs.update(overrides)
    return PreprocessPlan(**kwargs)


def load_csv(path, schema: CsvSchema) -> RawTable:
    """Read a header-first, comma-separated UTF-8 file.

    Rows with any blank kept cell are skipped and counted in ``rejected_rows``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        for col in (schema.target_column, schema.group_column, *schema.drop_columns):
            if col not in header:
                raise MissingColumn(f"{path}: column {col!r} not in header {header}")
        skip = {schema.target_column, schema.group_column, *schema.drop_columns}
        feat_idx = [i for i, h in enumerate(header) if h not in skip]
        t_idx = header.index(schema.target_column)
        g_idx = header.index(schema.group_column)
        feats, target, group = [], [], []
        rejected = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}")
            kept = [row[i].strip() for i in (*feat_idx, t_idx, g_idx)]
            if any(c == "" for c in kept):
                rejected += 1
                continue
            values = []
            for i in (*feat_idx, t_idx):
                try:
                    values.append(float(row[i]))
                except ValueError:
                    raise UnparsableCell(path, lineno, header[i], row[i]) from None
            feats.append(values[:-1])
            target.append(values[-1])
            group.append(1.0 if row[g_idx].strip() == schema.positive_group_value else -1.0)
    if rejected:
        log.warning("%s: rejected %d rows with blank cells", path, rejected)
    d = len(feat_idx)
    X = np.array(feats, dtype=float).reshape(len(feats), d)
    return RawTable(X, np.array(target), np.array(group), tuple(header[i] for i in feat_idx), rejected)


def write_csv(table: RawTable, path, target_column: str = "target", group_column: str = "group") -> None:
    """Write a table that ``load_csv`` reads back identically (group +1 written as "1")."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*table.feature_names, target_column, group_column])
        for x, y, g in zip(table.features, table.target, table.group):
            writer.writerow([*(repr(float(v)) for v in x), repr(float(y)), "1" if g > 0 else "-1"])


def preprocess(table: RawTable, plan: PreprocessPlan) -> Preprocessed:
    """Append noise features, split uniformly into labeled/unlabeled/test, standardize."""
    m = table.rows
    if plan.n_labeled + plan.n_unlabeled > m:
        raise InsufficientRows(
            f"plan needs {plan.n_labeled + plan.n_unlabeled} training rows, table has {m}"
        )
    X = table.features
    if plan.noise_features:
        # drawn from the seed alone, before the split and independent of the target
        noise = rng.normal(rng.stream(plan.seed, "noise-features"), (m, plan.noise_features))
        X = np.hstack([X, noise])
    perm = rng.stream(plan.seed, "split").permutation(m)
    lab = perm[:plan.n_labeled]
    unl = perm[plan.n_labeled:plan.n_labeled + plan.n_unlabeled]
    test = perm[plan.n_labeled + plan.n_unlabeled:]

    d = X.shape[1]
    mean = np.zeros(d)
    scale = np.ones(d)
    constant: tuple = ()
    if plan.standardize:
        fit_rows = lab if plan.standardize_on == "labeled" else np.concatenate([lab, unl])
        mean = X[fit_rows].mean(axis=0)
        sd = X[fit_rows].std(axis=0)
        const_mask = sd <= 1e-12 * np.maximum(1.0, np.abs(mean))
        constant = tuple(int(j) for j in np.flatnonzero(const_mask))
        if constant:
            log.info("zeroing %d constant columns: %s", len(constant), constant)
        scale = np.where(const_mask, np.inf, sd)
    Z = (X - mean) / scale

    offset = float(table.target[lab].mean()) if plan.center_target else 0.0
    y = table.target - offset
    train = ObjectiveDataset(Z[lab], y[lab], Z[unl], np.concatenate([table.group[lab], table.group[unl]]))
    test_split = HeldOutSplit(Z[test], table.target[test], table.group[test])
    return Preprocessed(train, test_split, lab, unl, test, constant, offset, mean, scale)
