"""Figure rendering for the CLI report paths.

Every experiment command writes a PNG next to its CSV/JSON output.
This module owns all matplotlib usage; the library modules stay
plot-free so they can run headless and be consumed programmatically.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .copt import DECREASING_FIT, INCREASING_FIT, KERNEL_SIGMA_OVER_D
from .experiments import SweepResult


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_sweep(result: SweepResult, path, title: str = "") -> str:
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    ax.errorbar(result.c_values, result.mean_curve, yerr=result.std_curve,
                fmt="o-", ms=3, capsize=2, lw=1)
    ax.set_xscale("log")
    ax.set_xlabel("C")
    ax.set_ylabel(result.quantity.replace("_", " "))
    ax.set_title(title or f"{result.quantity} vs C ({result.runs} runs)")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_margin_cases(cases: list[tuple[str, SweepResult]], path) -> str:
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for label, res in cases:
        ax.plot(res.c_values, res.mean_curve, "o-", ms=3, lw=1, label=label)
        ax.fill_between(res.c_values, res.mean_curve - res.std_curve,
                        res.mean_curve + res.std_curve, alpha=0.15)
    ax.set_xscale("log")
    ax.set_xlabel("C")
    ax.set_ylabel("margin width")
    ax.set_title("Margin width vs C, equal pooled spread")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_hinge_curves(train_res: SweepResult, test_res: SweepResult, path,
                      sigma: float) -> str:
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    ax.plot(train_res.c_values, train_res.mean_curve, "o-", ms=3, lw=1, label="train")
    ax.plot(test_res.c_values, test_res.mean_curve, "s-", ms=3, lw=1, label="test")
    lo = int(np.nanargmin(test_res.mean_curve))
    ax.axvline(test_res.c_values[lo], color="gray", ls="--", lw=1,
               label=f"argmin C = {test_res.c_values[lo]:.3g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("C")
    ax.set_ylabel("mean hinge loss")
    ax.set_title(f"Hinge loss vs C (sigma = {sigma:g})")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_copt_table(rows: list[tuple[float, float]], path) -> str:
    """Empirical optima with the fitted closed-form curves overlaid."""
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    sods = np.array([r[0] for r in rows])
    copts = np.array([r[1] for r in rows])
    ax.plot(sods, copts, "ko", label="empirical argmin C")
    xs = np.linspace(max(1e-3, sods.min() * 0.8), 1.0 / 6.0, 200)
    a, b, c = INCREASING_FIT
    ax.plot(xs, np.maximum(0.01, a * np.exp(b * xs) + c), "-", lw=1.2, label="rising fit")
    xs = np.linspace(1.0 / 6.0, KERNEL_SIGMA_OVER_D, 200)
    a, b, c = DECREASING_FIT
    ax.plot(xs, np.maximum(0.01, a * np.exp(b * xs) + c), "-", lw=1.2, label="falling fit")
    ax.axvline(1.0 / 6.0, color="gray", ls=":", lw=1)
    ax.set_yscale("log")
    ax.set_xlabel("sigma / d")
    ax.set_ylabel("optimal C")
    ax.set_title("Optimal C vs sigma/d")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_fit_curve(points: list[tuple[float, float]], fit: tuple[float, float, float],
                   path, label: str = "") -> str:
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    ax.plot(xs, ys, "ko", label="data")
    a, b, c = fit
    grid = np.linspace(xs.min(), xs.max(), 200)
    ax.plot(grid, a * np.exp(b * grid) + c, "-", lw=1.2,
            label=f"{a:.3g} exp({b:.3g} x) + {c:.3g}")
    ax.set_xlabel("sigma / d")
    ax.set_ylabel("optimal C")
    ax.set_title(label or "Exponential fit")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_benchmark(rows: list[dict], path) -> str:
    ok = [r for r in rows if not r.get("error")]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
    names = [r["dataset"] for r in ok]
    x = np.arange(len(ok))
    width = 0.27
    for off, key, label in ((-1, "f1_cv_f1", "CV (F1)"), (0, "f1_cv_hinge", "CV (hinge)"),
                            (1, "f1_sandsrb", "S&S-RB")):
        ax1.bar(x + off * width, [r[key] for r in ok], width, label=label)
    ax1.set_xticks(x, names, rotation=30, ha="right")
    ax1.set_ylabel("test F1")
    ax1.set_ylim(0, 1.05)
    ax1.legend(fontsize=8)
    ax1.set_title("Accuracy")
    for off, key, label in ((-1, "t_cv_f1", "CV (F1)"), (0, "t_cv_hinge", "CV (hinge)"),
                            (1, "t_sandsrb", "S&S-RB")):
        vals = [max(r[key], 1e-4) for r in ok]
        ax2.bar(x + off * width, vals, width, label=label)
    ax2.set_yscale("log")
    ax2.set_xticks(x, names, rotation=30, ha="right")
    ax2.set_ylabel("wall-clock (s)")
    ax2.legend(fontsize=8)
    ax2.set_title("Runtime")
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3, axis="y")
    return _save(fig, path)
