"""Class geometry and the separability/scatteredness (S&S) ratio.

Separability d is the distance between two class centers; scatteredness
sigma pools the per-class spreads; their ratio in dB,

    20 * log10(d / (alpha * sigma)),

scores how cleanly a pair of classes can be cut by a hyperplane. The
verdict thresholds are 0 dB (optimum-C regime flips) and -5 dB (below
which the pair is treated as not linearly separable).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataio import Dataset
from .errors import DataError, DimensionMismatch

DEFAULT_ALPHA = 6.0
KERNEL_REQUIRED_DB = -5.0


class Verdict(str, enum.Enum):
    LINEAR_INCREASING = "LinearIncreasing"
    LINEAR_DECREASING = "LinearDecreasing"
    KERNEL_REQUIRED = "KernelRequired"


@dataclass(frozen=True)
class ClassGeometry:
    """Center, size and scalar spreads of one class.

    ``spread`` is the root-mean of per-dimension sample variances, which
    recovers the generating sigma for isotropic Gaussian classes.
    ``directional_spread`` is the sample std of projections onto a given
    center-line direction (equal to ``spread`` when no direction applies).
    """

    mean: np.ndarray
    count: int
    spread: float
    directional_spread: float


@dataclass(frozen=True)
class SAndSReport:
    d: float
    sigma: float
    ratio_db: float
    alpha: float
    mode: str
    verdict: Verdict

    def to_json_dict(self) -> dict:
        ratio = self.ratio_db if math.isfinite(self.ratio_db) else None
        return {"d": self.d, "sigma": self.sigma, "ratio_db": ratio,
                "alpha": self.alpha, "mode": self.mode, "verdict": self.verdict.value}


def verdict_for(ratio_db: float) -> Verdict:
    """0 dB falls to LinearDecreasing, -5 dB to KernelRequired."""
    if ratio_db > 0.0:
        return Verdict.LINEAR_INCREASING
    if ratio_db > KERNEL_REQUIRED_DB:
        return Verdict.LINEAR_DECREASING
    return Verdict.KERNEL_REQUIRED


def class_geometry(d: Dataset, class_id: int,
                   direction: Optional[np.ndarray] = None) -> ClassGeometry:
    """Mean and spreads of one class; ``direction`` sets the center-line."""
    rows = d.class_rows(class_id)
    return _geometry_of_rows(rows, direction)


def _geometry_of_rows(rows: np.ndarray, direction: Optional[np.ndarray] = None) -> ClassGeometry:
    n = rows.shape[0]
    mean = rows.mean(axis=0)
    if n < 2:
        return ClassGeometry(mean, n, 0.0, 0.0)
    per_dim_var = rows.var(axis=0, ddof=1)
    spread = float(np.sqrt(per_dim_var.mean()))
    if direction is not None:
        norm = float(np.linalg.norm(direction))
        if direction.shape != mean.shape:
            raise DimensionMismatch(f"direction has shape {direction.shape}, rows have {mean.shape}")
        if norm > 0.0:
            proj = rows @ (np.asarray(direction, dtype=np.float64) / norm)
            directional = float(proj.std(ddof=1))
        else:
            directional = spread
    else:
        directional = spread
    return ClassGeometry(mean, n, spread, directional)


def separability(g1: ClassGeometry, g2: ClassGeometry) -> float:
    """Euclidean distance between the two class centers."""
    if g1.mean.shape != g2.mean.shape:
        raise DimensionMismatch(f"center dims differ: {g1.mean.shape} vs {g2.mean.shape}")
    return float(np.linalg.norm(g1.mean - g2.mean))


def pooled_scatteredness(g1: ClassGeometry, g2: ClassGeometry, mode: str = "pooled") -> float:
    """sqrt((n1*s1^2 + n2*s2^2) / (n1 + n2)) with s per ``mode``."""
    if g1.count + g2.count < 2:
        raise DataError("pooled scatteredness needs n1+n2 >= 2")
    if mode == "pooled":
        s1, s2 = g1.spread, g2.spread
    elif mode == "directional":
        s1, s2 = g1.directional_spread, g2.directional_spread
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return float(math.sqrt((g1.count * s1 ** 2 + g2.count * s2 ** 2) / (g1.count + g2.count)))


def sands_ratio(d: float, sigma: float, alpha: float = DEFAULT_ALPHA,
                mode: str = "directional") -> SAndSReport:
    """S&S ratio in dB. d=0 yields -inf and a KernelRequired verdict."""
    if d < 0.0:
        raise ValueError(f"separability must be >= 0, got {d}")
    if sigma <= 0.0:
        raise ValueError(f"scatteredness must be > 0, got {sigma}; "
                         "handle zero-spread classes upstream")
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if d == 0.0:
        ratio = -math.inf
    else:
        ratio = 20.0 * math.log10(d / (alpha * sigma))
    return SAndSReport(float(d), float(sigma), ratio, float(alpha), mode, verdict_for(ratio))


def pairwise_sands(d: Dataset, feature_map=None, alpha: float = DEFAULT_ALPHA,
                   mode: str = "directional",
                   sigma_floor: float = 0.0) -> dict[tuple[int, int], SAndSReport]:
    """S&S report for every unordered class pair, keyed (i, j) with i<j.

    When ``feature_map`` is given the rows are transformed first, so the
    geometry lives in approximate kernel feature space. ``sigma_floor``
    replaces a nonpositive pooled sigma instead of raising (used by the
    selection pipeline to survive duplicate-heavy tiny classes).
    """
    from .kernel import transform  # local import to avoid a cycle

    x = transform(feature_map, d.features) if feature_map is not None else d.features
    class_ids = [int(c) for c in np.unique(d.labels)]
    out: dict[tuple[int, int], SAndSReport] = {}
    for a_pos, i in enumerate(class_ids):
        rows_i_all = x[d.labels == i]
        for j in class_ids[a_pos + 1:]:
            rows_j = x[d.labels == j]
            mu_i = rows_i_all.mean(axis=0)
            mu_j = rows_j.mean(axis=0)
            direction = mu_i - mu_j
            g_i = _geometry_of_rows(rows_i_all, direction)
            g_j = _geometry_of_rows(rows_j, direction)
            dist = separability(g_i, g_j)
            sigma = pooled_scatteredness(g_i, g_j, mode=mode)
            if sigma <= 0.0:
                if sigma_floor > 0.0:
                    sigma = sigma_floor
                else:
                    raise DataError(f"class pair ({i},{j}) has zero spread; "
                                    "pass sigma_floor to tolerate degenerate classes")
            out[(i, j)] = sands_ratio(dist, sigma, alpha, mode)
    return out
