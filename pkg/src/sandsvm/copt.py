"""Closed-form choice of the regularization parameter from an S&S report.

Two fitted exponentials a*exp(b*(sigma/d)) + c cover the regimes on
either side of the 0 dB breakpoint at sigma/d = 1/6; at or below -5 dB
(sigma/d >= 10^0.25/6) no C is produced and the caller must switch to
kernel selection. The fit constants are fixed; re-fitting them from
fresh Monte Carlo data is a diagnostic of the experiments module and
never overrides these values.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .stats import DEFAULT_ALPHA, KERNEL_REQUIRED_DB, SAndSReport

# (a, b, c) of C_opt = a * exp(b * sigma/d) + c
INCREASING_FIT = (0.7345, 33.6915, -0.5247)
DECREASING_FIT = (5164.4657, -21.2514, -0.8548)
C_OPT_FLOOR = 0.01

# sigma/d at the 0 dB and -5 dB ratio thresholds (alpha = 6)
BREAKPOINT_SIGMA_OVER_D = 1.0 / 6.0
KERNEL_SIGMA_OVER_D = 10.0 ** 0.25 / 6.0


class Branch(str, enum.Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    KERNEL_REQUIRED = "KernelRequired"


@dataclass(frozen=True)
class CoptDecision:
    c_opt: Optional[float]
    branch: Branch
    input_ratio_db: float
    sigma_over_d: float

    def to_json_dict(self) -> dict:
        ratio = self.input_ratio_db if math.isfinite(self.input_ratio_db) else None
        sod = self.sigma_over_d if math.isfinite(self.sigma_over_d) else None
        return {"c_opt": self.c_opt, "branch": self.branch.value,
                "input_ratio_db": ratio, "sigma_over_d": sod}


def _branch_for(ratio_db: float) -> Branch:
    if ratio_db > 0.0:
        return Branch.INCREASING
    if ratio_db > KERNEL_REQUIRED_DB:
        return Branch.DECREASING
    return Branch.KERNEL_REQUIRED


def _eval_fit(fit: tuple[float, float, float], sigma_over_d: float) -> float:
    a, b, c = fit
    return max(C_OPT_FLOOR, a * math.exp(b * sigma_over_d) + c)


def c_opt_from_sands(r: SAndSReport) -> CoptDecision:
    """Route an S&S report through the decision chart.

    A KernelRequired branch is a signal, not a failure: c_opt is None
    and the caller is expected to move on to kernel selection.
    """
    if not math.isclose(r.alpha, DEFAULT_ALPHA, rel_tol=0.0, abs_tol=1e-12):
        raise ValueError(f"the fitted curves were produced under alpha=6; got alpha={r.alpha}")
    ratio = r.ratio_db
    if math.isinf(ratio) and ratio < 0:
        sigma_over_d = math.inf
    else:
        sigma_over_d = 1.0 / (r.alpha * 10.0 ** (ratio / 20.0))
    branch = _branch_for(ratio)
    if branch is Branch.INCREASING:
        c_opt = _eval_fit(INCREASING_FIT, sigma_over_d)
    elif branch is Branch.DECREASING:
        c_opt = _eval_fit(DECREASING_FIT, sigma_over_d)
    else:
        c_opt = None
    return CoptDecision(c_opt, branch, ratio, sigma_over_d)


def ratio_db_for_sigma_over_d(sigma_over_d: float, alpha: float = DEFAULT_ALPHA) -> float:
    return -20.0 * math.log10(alpha * sigma_over_d)


def c_opt_table(grid: Sequence[float]) -> list[tuple[float, float, Optional[float], Branch]]:
    """(sigma/d, ratio_db, c_opt, branch) rows for a grid of sigma/d values."""
    rows = []
    for sod in grid:
        if not 0.0 < sod <= 0.35:
            raise ValueError(f"sigma/d grid values must lie in (0, 0.35], got {sod}")
        ratio = ratio_db_for_sigma_over_d(sod)
        branch = _branch_for(ratio)
        if branch is Branch.KERNEL_REQUIRED:
            c_opt = None
        elif branch is Branch.INCREASING:
            c_opt = _eval_fit(INCREASING_FIT, sod)
        else:
            c_opt = _eval_fit(DECREASING_FIT, sod)
        rows.append((float(sod), ratio, c_opt, branch))
    return rows


def write_table_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma_over_d", "ratio_db", "c_opt", "branch"])
        for sod, ratio, c_opt, branch in rows:
            writer.writerow([repr(sod), repr(ratio),
                             "" if c_opt is None else repr(c_opt), branch.value])
