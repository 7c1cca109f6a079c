"""Dataset loading, validation, standardization and splitting.

A Dataset is an immutable bundle of a dense feature matrix and integer
class ids remapped to 0..r-1. CSV (header required) and libsvm formats
are supported. Standardization is z-score per feature, fitted on one
dataset and replayable on another via the record stored in ``meta``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, DimensionMismatch, ParseError, SplitError


@dataclass(frozen=True)
class Dataset:
    """n x psi feature matrix with labels in {0..r-1}.

    ``class_names`` maps internal ids back to the labels found in the
    source file. ``meta`` carries provenance: source path, feature
    names, the label remapping, and the standardization record if any.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: Optional[dict[int, str]] = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def psi(self) -> int:
        return self.features.shape[1]

    @property
    def r(self) -> int:
        return int(self.labels.max()) + 1

    def class_rows(self, class_id: int) -> np.ndarray:
        if class_id not in set(np.unique(self.labels)):
            raise DataError(f"class id {class_id} not present in dataset")
        return self.features[self.labels == class_id]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0,1), got {self.train_fraction}")


def make_dataset(features, labels, class_names=None, meta=None) -> Dataset:
    """Validate and freeze arrays into a Dataset."""
    x = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2:
        raise DataError(f"features must be 2-D, got shape {x.shape}")
    if y.shape != (x.shape[0],):
        raise DataError(f"labels shape {y.shape} does not match {x.shape[0]} rows")
    if x.shape[0] < 2:
        raise DataError(f"need at least 2 rows, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.isfinite(x))
        cells = ", ".join(f"(row {i}, col {j})" for i, j in bad[:10])
        raise DataError(f"non-finite feature values at {cells}" + (" ..." if len(bad) > 10 else ""))
    present = np.unique(y)
    if present.size < 2:
        raise DataError("dataset contains a single class; need r >= 2")
    if present[0] != 0 or present[-1] != present.size - 1:
        raise DataError(f"labels must cover 0..r-1 contiguously, got {present.tolist()}")
    x.setflags(write=False)
    y.setflags(write=False)
    return Dataset(x, y, class_names, dict(meta or {}))


def _remap_labels(raw: Sequence[str]) -> tuple[np.ndarray, dict[int, str]]:
    order: dict[str, int] = {}
    for tok in raw:
        if tok not in order:
            order[tok] = len(order)
    # remap in sorted-token order so ids are stable across row shuffles
    names = sorted(order)
    mapping = {tok: i for i, tok in enumerate(names)}
    labels = np.array([mapping[tok] for tok in raw], dtype=np.int64)
    return labels, {i: tok for tok, i in mapping.items()}


def _parse_float(tok: str, path, line_no) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(path, line_no, f"not a number: {tok!r}") from None


def load_dataset(path, format: str = "csv", label_column="label") -> Dataset:
    """Load a labeled dataset from disk.

    CSV requires a header row; the label column is selected by name or
    integer position. libsvm lines are "<label> <idx>:<val> ..." with
    1-based indices; gaps are zero-filled and psi is the max index seen.
    """
    if format == "csv":
        return _load_csv(path, label_column)
    if format == "libsvm":
        return _load_libsvm(path)
    raise DataError(f"unknown format {format!r}")


def _load_csv(path, label_column) -> Dataset:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError(path, 1, "empty file; header row is required") from None
            if isinstance(label_column, int):
                label_idx = label_column if label_column >= 0 else len(header) + label_column
            else:
                if label_column not in header:
                    raise ParseError(path, 1, f"label column {label_column!r} not in header {header}")
                label_idx = header.index(label_column)
            if not 0 <= label_idx < len(header):
                raise ParseError(path, 1, f"label column index {label_column} out of range")
            feat_names = [h for i, h in enumerate(header) if i != label_idx]
            rows, raw_labels = [], []
            for line_no, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != len(header):
                    raise ParseError(path, line_no, f"expected {len(header)} fields, got {len(rec)}")
                raw_labels.append(rec[label_idx].strip())
                rows.append([_parse_float(tok, path, line_no) for i, tok in enumerate(rec) if i != label_idx])
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(path, 2, "no data rows")
    labels, class_names = _remap_labels(raw_labels)
    meta = {"source": str(path), "format": "csv", "feature_names": feat_names,
            "label_map": {v: k for k, v in class_names.items()}}
    return make_dataset(np.array(rows, dtype=np.float64), labels, class_names, meta)


def _load_libsvm(path) -> Dataset:
    entries = []
    raw_labels = []
    max_idx = 0
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                toks = line.split()
                raw_labels.append(toks[0])
                pairs = []
                for tok in toks[1:]:
                    if ":" not in tok:
                        raise ParseError(path, line_no, f"expected idx:val, got {tok!r}")
                    idx_s, val_s = tok.split(":", 1)
                    try:
                        idx = int(idx_s)
                    except ValueError:
                        raise ParseError(path, line_no, f"bad feature index {idx_s!r}") from None
                    if idx < 1:
                        raise ParseError(path, line_no, f"libsvm indices are 1-based, got {idx}")
                    pairs.append((idx, _parse_float(val_s, path, line_no)))
                max_idx = max(max_idx, max((i for i, _ in pairs), default=0))
                entries.append(pairs)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not entries:
        raise ParseError(path, 1, "no data rows")
    x = np.zeros((len(entries), max_idx), dtype=np.float64)
    for row, pairs in enumerate(entries):
        for idx, val in pairs:
            x[row, idx - 1] = val
    labels, class_names = _remap_labels(raw_labels)
    meta = {"source": str(path), "format": "libsvm",
            "feature_names": [f"f{j}" for j in range(max_idx)],
            "label_map": {v: k for k, v in class_names.items()}}
    return make_dataset(x, labels, class_names, meta)


def write_csv(d: Dataset, path) -> None:
    """Write a Dataset back to CSV; reloading round-trips labels exactly."""
    names = d.meta.get("feature_names") or [f"f{j}" for j in range(d.psi)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + ["label"])
        for i in range(d.n):
            label = d.class_names[int(d.labels[i])] if d.class_names else str(int(d.labels[i]))
            writer.writerow([repr(float(v)) for v in d.features[i]] + [label])


def standardize(d: Dataset) -> Dataset:
    """Z-score each feature column (population std, ddof=0).

    Columns with zero variance are set to 0 and flagged in the record.
    The (mean, scale) record lands in meta["standardization"] so test
    data can be transformed identically via apply_standardization.
    """
    mean = d.features.mean(axis=0)
    std = d.features.std(axis=0, ddof=0)
    constant = std <= 0.0
    scale = np.where(constant, 1.0, std)
    record = {"mean": mean.tolist(), "scale": scale.tolist(),
              "constant_columns": np.nonzero(constant)[0].tolist()}
    return apply_standardization(d, record)


def apply_standardization(d: Dataset, record: dict) -> Dataset:
    mean = np.asarray(record["mean"], dtype=np.float64)
    scale = np.asarray(record["scale"], dtype=np.float64)
    if mean.shape != (d.psi,):
        raise DimensionMismatch(f"record has {mean.shape[0]} columns, dataset has {d.psi}")
    x = (d.features - mean) / scale
    constant = record.get("constant_columns", [])
    if constant:
        x[:, list(constant)] = 0.0
    meta = dict(d.meta)
    meta["standardization"] = record
    return make_dataset(x, d.labels, d.class_names, meta)


def _subset(d: Dataset, idx: np.ndarray) -> Dataset:
    return make_dataset(d.features[idx], d.labels[idx], d.class_names, d.meta)


def split(d: Dataset, s: SplitSpec) -> tuple[Dataset, Dataset]:
    """Disjoint train/test split of the row indices, deterministic per seed.

    Stratified mode keeps per-class train counts within +-1 of the exact
    quota (largest-remainder apportionment of round(frac*n) slots).
    """
    rng = np.random.default_rng(s.seed)
    n_train_total = int(round(s.train_fraction * d.n))
    if s.stratified:
        class_ids = np.unique(d.labels)
        quotas = {}
        for c in class_ids:
            n_c = int((d.labels == c).sum())
            quotas[int(c)] = s.train_fraction * n_c
        base = {c: int(math.floor(q)) for c, q in quotas.items()}
        leftover = n_train_total - sum(base.values())
        by_remainder = sorted(quotas, key=lambda c: (-(quotas[c] - base[c]), c))
        for c in by_remainder[:max(leftover, 0)]:
            base[c] += 1
        train_parts, test_parts = [], []
        for c in class_ids:
            members = np.nonzero(d.labels == c)[0]
            k = min(max(base[int(c)], 1), members.size - 1)
            if members.size < 2:
                raise SplitError(f"class {c} has {members.size} member(s); both splits need it")
            perm = rng.permutation(members)
            train_parts.append(perm[:k])
            test_parts.append(perm[k:])
        train_idx = np.sort(np.concatenate(train_parts))
        test_idx = np.sort(np.concatenate(test_parts))
    else:
        perm = rng.permutation(d.n)
        train_idx = np.sort(perm[:n_train_total])
        test_idx = np.sort(perm[n_train_total:])
        for c in np.unique(d.labels):
            if not (d.labels[train_idx] == c).any() or not (d.labels[test_idx] == c).any():
                raise SplitError(f"class {c} missing from one side of the split; "
                                 "use stratified=True or adjust the fraction")
    if train_idx.size == 0 or test_idx.size == 0:
        raise SplitError("split produced an empty side")
    return _subset(d, train_idx), _subset(d, test_idx)


def binary_pair_arrays(d: Dataset, class_a: int, class_b: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows of two classes with +-1 labels; the lower id becomes +1."""
    lo, hi = min(class_a, class_b), max(class_a, class_b)
    mask = (d.labels == lo) | (d.labels == hi)
    if not mask.any():
        raise DataError(f"classes {class_a}/{class_b} not present")
    x = d.features[mask]
    y = np.where(d.labels[mask] == lo, 1.0, -1.0)
    return x, y
