"""Grid-search k-fold cross-validation baseline.

Every (kernel candidate, C, fold) combination trains the same linear
solver on the same explicit feature maps the selection pipeline uses,
so wall-clock differences against the S&S route reflect search strategy
rather than solver choice. ``fit_count`` tallies every SVM training and
must equal m_q * m_C * k * C(r,2).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
import numpy as np

from . import kernel as kern
from . import svm as svm_mod
from .dataio import Dataset
from .errors import SplitError
from .kernel import KernelSpec
from .select import KernelGrid, OvOModel, _derived_seed


@dataclass(frozen=True)
class CvConfig:
    kernel_grid: KernelGrid
    folds: int = 5
    c_grid: tuple = tuple(np.geomspace(0.01, 1000.0, 13))
    score: str = "f1"  # or "hinge"
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if not self.c_grid or any(c <= 0.0 for c in self.c_grid):
            raise ValueError("c_grid must be nonempty with positive entries")
        if self.score not in ("f1", "hinge"):
            raise ValueError(f"score must be f1 or hinge, got {self.score!r}")


@dataclass
class CvResult:
    best_spec: KernelSpec
    best_c: float
    table: list  # rows: dict(spec, c, mean, std, failed)
    timings: dict = field(default_factory=dict)
    fit_count: int = 0
    score: str = "f1"

    def to_json_dict(self) -> dict:
        return {
            "best": {"spec": self.best_spec.to_json_dict(), "c": self.best_c},
            "score": self.score,
            "fit_count": self.fit_count,
            "table": [{"spec": row["spec"].to_json_dict(), "c": row["c"],
                       "mean": row["mean"], "std": row["std"], "failed": row["failed"]}
                      for row in self.table],
            "timings": self.timings,
        }


def kfold_indices(n: int, labels: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Stratified disjoint folds covering 0..n-1, deterministic per seed."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    counts = {int(c): int((labels == c).sum()) for c in np.unique(labels)}
    too_small = [c for c, m in counts.items() if m < k]
    if too_small:
        raise SplitError(f"classes {too_small} have fewer than k={k} members")
    folds: list[list[int]] = [[] for _ in range(k)]
    for c in sorted(counts):
        members = rng.permutation(np.nonzero(labels == c)[0])
        for pos, idx in enumerate(members):
            folds[pos % k].append(int(idx))
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def f1_score(predictions, labels) -> float:
    """Binary F1 on class 1; unweighted macro over all classes for r > 2.

    A class with an empty precision or recall denominator contributes 0.
    """
    pred = np.asarray(predictions).ravel()
    true = np.asarray(labels).ravel()
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch: {pred.shape[0]} predictions vs {true.shape[0]} labels")
    if true.size == 0:
        raise ValueError("empty inputs")
    classes = sorted(set(np.unique(true)) | set(np.unique(pred)))
    if set(classes) <= {0, 1}:
        return _binary_f1(pred, true, positive=1)
    return float(np.mean([_binary_f1(pred, true, positive=c) for c in classes]))


def _binary_f1(pred, true, positive) -> float:
    tp = int(((pred == positive) & (true == positive)).sum())
    fp = int(((pred == positive) & (true != positive)).sum())
    fn = int(((pred != positive) & (true == positive)).sum())
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def _fit_fold_models(x_tr, y_tr, class_ids, c, solver_cfg, counter) -> dict:
    models = {}
    for a_pos, i in enumerate(class_ids):
        for j in class_ids[a_pos + 1:]:
            mask = (y_tr == i) | (y_tr == j)
            yb = np.where(y_tr[mask] == i, 1.0, -1.0)
            models[(i, j)] = svm_mod.train(x_tr[mask], yb, c, solver_cfg)
            counter[0] += 1
    return models


def _score_fold(models, class_ids, x_te, y_te, score: str) -> float:
    if score == "f1":
        ovo = OvOModel(models, None, class_ids)
        return f1_score(ovo.predict(x_te), y_te)
    # hinge: mean over pair models of held-out hinge on that pair's rows
    vals = []
    for (i, j), m in models.items():
        mask = (y_te == i) | (y_te == j)
        if not mask.any():
            continue
        yb = np.where(y_te[mask] == i, 1.0, -1.0)
        vals.append(svm_mod.hinge_loss(m, x_te[mask], yb))
    return float(np.mean(vals)) if vals else math.inf


def grid_search_cv(train: Dataset, cfg: CvConfig,
                   solver_cfg: svm_mod.SolverConfig = svm_mod.SolverConfig()) -> CvResult:
    """Exhaustive (kernel, C) search scored by stratified k-fold CV.

    Feature maps are fitted on the k-1 training folds only. A failing
    combination is flagged and scored as worst-possible. Ties break
    toward smaller C, then the earlier kernel candidate.
    """
    t_start = time.perf_counter()
    specs = cfg.kernel_grid.expand()
    folds = kfold_indices(train.n, train.labels, cfg.folds, cfg.seed)
    class_ids = [int(c) for c in np.unique(train.labels)]
    c_grid = sorted(float(c) for c in cfg.c_grid)
    counter = [0]
    cells: dict[tuple[int, int], list[float]] = {(q, ci): [] for q in range(len(specs))
                                                 for ci in range(len(c_grid))}
    failed: set[tuple[int, int]] = set()
    per_combination: list[float] = []
    for q, spec in enumerate(specs):
        t_q = time.perf_counter()
        for f, held_out in enumerate(folds):
            tr_idx = np.sort(np.concatenate([folds[g] for g in range(cfg.folds) if g != f]))
            x_tr_raw, y_tr = train.features[tr_idx], train.labels[tr_idx]
            x_te_raw, y_te = train.features[held_out], train.labels[held_out]
            try:
                fmap = kern.fit_feature_map(spec, kern.PREFERRED_METHOD[spec.family],
                                            cfg.kernel_grid.scan_dim,
                                            _derived_seed(cfg.seed, q, f), x_tr_raw)
                x_tr = kern.transform(fmap, x_tr_raw)
                x_te = kern.transform(fmap, x_te_raw)
            except Exception:
                for ci in range(len(c_grid)):
                    failed.add((q, ci))
                continue
            for ci, c in enumerate(c_grid):
                try:
                    models = _fit_fold_models(x_tr, y_tr, class_ids, c, solver_cfg, counter)
                    cells[(q, ci)].append(_score_fold(models, class_ids, x_te, y_te, cfg.score))
                except Exception:
                    failed.add((q, ci))
        per_combination.append(time.perf_counter() - t_q)
    worst = -math.inf if cfg.score == "f1" else math.inf
    table = []
    for q, spec in enumerate(specs):
        for ci, c in enumerate(c_grid):
            vals = cells[(q, ci)]
            bad = (q, ci) in failed or not vals
            mean = worst if bad else float(np.mean(vals))
            std = 0.0 if bad else float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            table.append({"spec": spec, "c": c, "mean": mean, "std": std, "failed": bad})
    sign = -1.0 if cfg.score == "f1" else 1.0
    best = min(range(len(table)),
               key=lambda t: (sign * table[t]["mean"], table[t]["c"], t // len(c_grid)))
    result = CvResult(best_spec=table[best]["spec"], best_c=table[best]["c"], table=table,
                      fit_count=counter[0], score=cfg.score)
    result.timings = {"total": time.perf_counter() - t_start,
                      "per_combination": per_combination}
    return result
