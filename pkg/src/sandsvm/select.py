"""End-to-end model selection driven by the S&S ratio.

The pipeline scores the raw data first; if the worst class pair sits
above -5 dB the data is treated as linearly separable and C comes
straight off the fitted curves. Otherwise every kernel candidate is
scanned by computing the S&S of its (cheap, low-dimensional) feature
map, candidates at or below -5 dB are rejected, the argmax survivor
wins, and one SVM per class pair is trained with the shared
(kernel, parameters, C) choice. The kernel grid is never scanned with
SVM fits, so training cost is exactly C(r,2) solver runs.
"""

from __future__ import annotations

import itertools
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernel as kern
from . import svm as svm_mod
from .copt import CoptDecision, c_opt_from_sands
from .dataio import Dataset
from .errors import NoSuitableKernelError
from .kernel import FeatureMap, KernelSpec
from .stats import DEFAULT_ALPHA, KERNEL_REQUIRED_DB, SAndSReport, pairwise_sands

SIGMA_FLOOR = 1e-9


@dataclass(frozen=True)
class KernelGridEntry:
    family: str
    params: dict  # param name -> list of values

    def expand(self) -> list[KernelSpec]:
        names = sorted(self.params)
        specs = []
        for combo in itertools.product(*(self.params[k] for k in names)):
            kwargs = dict(zip(names, combo))
            specs.append(KernelSpec(self.family, **kwargs))
        return specs


@dataclass(frozen=True)
class KernelGrid:
    entries: tuple
    scan_dim: int = kern.SCAN_DIM
    seed: int = 0

    def expand(self) -> list[KernelSpec]:
        if not self.entries:
            raise ValueError("kernel grid is empty")
        out = []
        for entry in self.entries:
            out.extend(entry.expand())
        return out

    def to_json_dict(self) -> dict:
        return {"scan_dim": self.scan_dim, "seed": self.seed,
                "entries": [{"family": e.family, **e.params} for e in self.entries]}


def kernel_grid_from_json_dict(d: dict) -> KernelGrid:
    entries = []
    for raw in d["entries"]:
        raw = dict(raw)
        family = raw.pop("family")
        entries.append(KernelGridEntry(family, {k: list(v) for k, v in raw.items()}))
    return KernelGrid(tuple(entries), int(d.get("scan_dim", kern.SCAN_DIM)), int(d.get("seed", 0)))


def default_kernel_grid(psi: int, scan_dim: int = kern.SCAN_DIM, seed: int = 0) -> KernelGrid:
    """Conventional ranges for the three families, rbf/poly scaled by 1/psi."""
    return KernelGrid((
        KernelGridEntry("rbf", {"gamma": [g / psi for g in (0.01, 0.1, 1.0, 10.0)]}),
        KernelGridEntry("polynomial", {"degree": [2, 3], "gamma": [1.0 / psi], "coef0": [0.0, 1.0]}),
        KernelGridEntry("sigmoid", {"gamma": [0.01, 0.1], "coef0": [-1.0, 0.0]}),
    ), scan_dim=scan_dim, seed=seed)


@dataclass(frozen=True)
class CandidateResult:
    spec: KernelSpec
    min_pair: Optional[tuple[int, int]]
    sands: Optional[SAndSReport]
    accepted: bool
    error: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {"spec": self.spec.to_json_dict(),
                "min_pair": list(self.min_pair) if self.min_pair else None,
                "sands": self.sands.to_json_dict() if self.sands else None,
                "accepted": self.accepted, "error": self.error}


@dataclass(frozen=True)
class Chosen:
    spec: Optional[KernelSpec]  # None means the identity map / input space
    sands: SAndSReport
    copt: CoptDecision

    def to_json_dict(self) -> dict:
        return {"spec": self.spec.to_json_dict() if self.spec else None,
                "sands": self.sands.to_json_dict(), "copt": self.copt.to_json_dict()}


@dataclass
class SelectionReport:
    per_candidate: list = field(default_factory=list)
    chosen: Optional[Chosen] = None
    mode: Optional[str] = None  # "input_space" | "kernel_space"
    input_sands: Optional[SAndSReport] = None
    input_min_pair: Optional[tuple[int, int]] = None
    timings: dict = field(default_factory=dict)

    @property
    def kernel_required(self) -> bool:
        return self.input_sands is not None and self.input_sands.ratio_db <= KERNEL_REQUIRED_DB

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "input_sands": self.input_sands.to_json_dict() if self.input_sands else None,
            "input_min_pair": list(self.input_min_pair) if self.input_min_pair else None,
            "kernel_required": self.kernel_required if self.input_sands else None,
            "per_candidate": [c.to_json_dict() for c in self.per_candidate],
            "chosen": self.chosen.to_json_dict() if self.chosen else None,
            "timings": self.timings,
        }


def sands_min_pair(pairwise: dict) -> tuple[tuple[int, int], SAndSReport]:
    """Entry with the lowest ratio; ties go to the smallest class pair."""
    if not pairwise:
        raise ValueError("empty pairwise collection")
    best = min(sorted(pairwise), key=lambda p: (pairwise[p].ratio_db, p))
    return best, pairwise[best]


def sands_min(pairwise: dict) -> SAndSReport:
    return sands_min_pair(pairwise)[1]


def _floored_pairwise(d: Dataset, fmap, alpha, mode):
    reports = pairwise_sands(d, fmap, alpha, mode, sigma_floor=SIGMA_FLOOR)
    for pair, rep in reports.items():
        if rep.sigma == SIGMA_FLOOR:
            warnings.warn(f"class pair {pair} has zero spread; sigma floored at {SIGMA_FLOOR}")
    return reports


def _derived_seed(*path: int) -> int:
    return int(np.random.SeedSequence(list(path)).generate_state(1)[0])


def select_input_space(train: Dataset, alpha: float = DEFAULT_ALPHA,
                       mode: str = "directional") -> SelectionReport:
    """Score the raw data; resolve to input_space unless below -5 dB."""
    t0 = time.perf_counter()
    pair, report = sands_min_pair(_floored_pairwise(train, None, alpha, mode))
    out = SelectionReport(input_sands=report, input_min_pair=pair)
    if report.ratio_db > KERNEL_REQUIRED_DB:
        out.mode = "input_space"
        out.chosen = Chosen(None, report, c_opt_from_sands(report))
    out.timings["input_scan"] = time.perf_counter() - t0
    return out


def select_kernel(train: Dataset, grid: KernelGrid, alpha: float = DEFAULT_ALPHA,
                  mode: str = "directional") -> SelectionReport:
    """Scan the kernel grid by feature-space S&S and pick the argmax survivor."""
    t0 = time.perf_counter()
    specs = grid.expand()
    out = SelectionReport(mode="kernel_space")
    best_idx = None
    for idx, spec in enumerate(specs):
        try:
            fmap = kern.fit_feature_map(spec, kern.PREFERRED_METHOD[spec.family],
                                        grid.scan_dim, _derived_seed(grid.seed, idx),
                                        train.features)
            pair, rep = sands_min_pair(_floored_pairwise(train, fmap, alpha, mode))
        except Exception as exc:  # per-candidate failures are recorded, not fatal
            out.per_candidate.append(CandidateResult(spec, None, None, False, f"{type(exc).__name__}: {exc}"))
            continue
        accepted = rep.ratio_db > KERNEL_REQUIRED_DB
        out.per_candidate.append(CandidateResult(spec, pair, rep, accepted))
        if accepted and (best_idx is None
                         or rep.ratio_db > out.per_candidate[best_idx].sands.ratio_db):
            best_idx = idx
    if best_idx is not None:
        winner = out.per_candidate[best_idx]
        out.chosen = Chosen(winner.spec, winner.sands, c_opt_from_sands(winner.sands))
    out.timings["kernel_scan"] = time.perf_counter() - t0
    return out


@dataclass
class OvOModel:
    """One linear SVM per class pair sharing a single (kernel, C) choice."""

    models: dict  # (i, j) with i<j -> SvmModel; the lower id is the +1 side
    feature_map: Optional[FeatureMap]
    class_ids: list

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Majority vote over pairs; vote ties break by summed margin score."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        z = kern.transform(self.feature_map, x) if self.feature_map is not None else x
        r = len(self.class_ids)
        pos = {c: k for k, c in enumerate(self.class_ids)}
        votes = np.zeros((z.shape[0], r))
        scores = np.zeros((z.shape[0], r))
        for (i, j), m in self.models.items():
            s = z @ m.w + m.b
            votes[:, pos[i]] += (s >= 0.0)
            votes[:, pos[j]] += (s < 0.0)
            scores[:, pos[i]] += s
            scores[:, pos[j]] -= s
        tied = votes == votes.max(axis=1, keepdims=True)
        pick = np.where(tied, scores, -np.inf).argmax(axis=1)
        return np.asarray(self.class_ids, dtype=np.int64)[pick]


def fit_pipeline(train: Dataset, grid: Optional[KernelGrid] = None,
                 alpha: float = DEFAULT_ALPHA,
                 solver_cfg: svm_mod.SolverConfig = svm_mod.SolverConfig(),
                 mode: str = "directional",
                 train_dim: int = kern.TRAIN_DIM) -> tuple[OvOModel, SelectionReport]:
    """Full S&S-driven selection and training.

    Raw S&S above -5 dB trains directly in input space; otherwise the
    kernel scan picks the map, which is refitted at ``train_dim`` for the
    final models. Exactly C(r,2) SVM trainings happen either way.
    """
    if grid is None:
        grid = default_kernel_grid(train.psi)
    report = select_input_space(train, alpha, mode)
    fmap = None
    if report.mode == "input_space":
        x_all = train.features
    else:
        kernel_report = select_kernel(train, grid, alpha, mode)
        kernel_report.input_sands = report.input_sands
        kernel_report.input_min_pair = report.input_min_pair
        kernel_report.timings.update(report.timings)
        report = kernel_report
        if report.chosen is None:
            raise NoSuitableKernelError(
                "every kernel candidate scored at or below -5 dB; no suitable kernel")
        spec = report.chosen.spec
        fmap = kern.fit_feature_map(spec, kern.PREFERRED_METHOD[spec.family], train_dim,
                                    _derived_seed(grid.seed, 10_000_019), train.features)
        x_all = kern.transform(fmap, train.features)
    c_opt = report.chosen.copt.c_opt
    t0 = time.perf_counter()
    class_ids = [int(c) for c in np.unique(train.labels)]
    models = {}
    for a_pos, i in enumerate(class_ids):
        for j in class_ids[a_pos + 1:]:
            mask = (train.labels == i) | (train.labels == j)
            y = np.where(train.labels[mask] == i, 1.0, -1.0)
            models[(i, j)] = svm_mod.train(x_all[mask], y, c_opt, solver_cfg,
                                           feature_map=fmap)
    report.timings["train"] = time.perf_counter() - t0
    return OvOModel(models, fmap, class_ids), report
