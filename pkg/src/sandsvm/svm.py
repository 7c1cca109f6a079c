"""Soft-margin linear SVM trained by dual coordinate descent.

The solver minimizes

    0.5 * ||w_aug||^2 + C * sum_i max(0, 1 - y_i * w_aug . x_aug_i)

where x_aug appends a constant 1 to each row, so the bias is the last
weight and is regularized. The dual is box-constrained only (no
equality constraint), which lets plain coordinate descent with a seeded
random permutation per epoch converge to the optimum; optional
shrinking skips samples that are pinned at a bound.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .errors import DataError, DimensionMismatch, SolverError

# module-level tally of solver invocations; the selection pipeline's
# "train exactly C(r,2) times" property is asserted against it
_TRAIN_CALLS = 0


def train_call_count() -> int:
    return _TRAIN_CALLS


def reset_train_call_count() -> None:
    global _TRAIN_CALLS
    _TRAIN_CALLS = 0


@dataclass(frozen=True)
class SolverConfig:
    max_epochs: int = 1000
    tolerance: float = 1e-4
    seed: int = 0
    shrinking: bool = True

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be > 0")


@dataclass(frozen=True)
class SvmModel:
    w: np.ndarray
    b: float
    c: float
    map: Optional[object] = None  # kernel.FeatureMap when trained in feature space
    diagnostics: dict = field(default_factory=dict)
    alpha: Optional[np.ndarray] = field(default=None, repr=False)  # dual vector, not serialized

    def _mapped(self, x: np.ndarray) -> np.ndarray:
        from .kernel import transform

        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.map is not None:
            x = transform(self.map, x)
        if x.shape[1] != self.w.shape[0]:
            raise DimensionMismatch(f"input dim {x.shape[1]} != weight dim {self.w.shape[0]}")
        return x


@njit(cache=True)
def _splitmix64(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def _dual_cd(x, y, c, max_epochs, tol, seed, shrinking, alpha, w, dual_curve):
    """In-place dual coordinate descent; returns (epochs, converged).

    ``dual_curve[e]`` records the dual objective after epoch e so callers
    can assert its monotone increase. Convergence requires a full pass
    over the *unshrunk* set with every projected gradient within tol.
    """
    n, p = x.shape
    qdiag = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(p):
            s += x[i, j] * x[i, j]
        qdiag[i] = s
    idx = np.arange(n)
    active = n
    state = np.uint64(seed) * np.uint64(2654435761) + np.uint64(88172645463325252)
    pg_max_old = np.inf
    pg_min_old = -np.inf
    epochs = 0
    converged = False
    while epochs < max_epochs:
        # seeded Fisher-Yates permutation of the active prefix
        for k in range(active - 1, 0, -1):
            state, r = _splitmix64(state)
            j = int(r % np.uint64(k + 1))
            idx[k], idx[j] = idx[j], idx[k]
        pg_max = -np.inf
        pg_min = np.inf
        k = 0
        while k < active:
            i = idx[k]
            g = 0.0
            for j in range(p):
                g += w[j] * x[i, j]
            g = g * y[i] - 1.0
            a = alpha[i]
            pg = g
            if a == 0.0:
                if shrinking and g > pg_max_old:
                    active -= 1
                    idx[k], idx[active] = idx[active], idx[k]
                    continue
                if g > 0.0:
                    pg = 0.0
            elif a == c:
                if shrinking and g < pg_min_old:
                    active -= 1
                    idx[k], idx[active] = idx[active], idx[k]
                    continue
                if g < 0.0:
                    pg = 0.0
            if pg > pg_max:
                pg_max = pg
            if pg < pg_min:
                pg_min = pg
            if pg != 0.0 and qdiag[i] > 0.0:
                anew = a - g / qdiag[i]
                if anew < 0.0:
                    anew = 0.0
                elif anew > c:
                    anew = c
                delta = (anew - a) * y[i]
                if delta != 0.0:
                    for j in range(p):
                        w[j] += delta * x[i, j]
                    alpha[i] = anew
            k += 1
        wsq = 0.0
        for j in range(p):
            wsq += w[j] * w[j]
        dual_curve[epochs] = alpha.sum() - 0.5 * wsq
        epochs += 1
        if pg_max <= tol and pg_min >= -tol:
            if active == n:
                converged = True
                break
            active = n
            pg_max_old = np.inf
            pg_min_old = -np.inf
            continue
        pg_max_old = pg_max if pg_max > 0.0 else np.inf
        pg_min_old = pg_min if pg_min < 0.0 else -np.inf
    return epochs, converged


def train(x, y, c: float, cfg: SolverConfig = SolverConfig(),
          feature_map=None, warm_alpha=None, keep_dual_curve: bool = False) -> SvmModel:
    """Fit a binary soft-margin SVM on rows ``x`` with labels in {-1,+1}.

    ``feature_map`` is attached to the model for prediction-time use; the
    rows passed in must already be transformed. ``warm_alpha`` seeds the
    dual vector (used by C sweeps); results stay deterministic for fixed
    inputs. A non-converged fit returns the best iterate with
    diagnostics["converged"] False rather than raising.
    """
    global _TRAIN_CALLS
    _TRAIN_CALLS += 1
    if c <= 0.0:
        raise ValueError(f"regularization parameter must be > 0, got {c}")
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DataError(f"bad shapes: x {x.shape}, y {y.shape}")
    labs = np.unique(y)
    if not np.all(np.isin(labs, (-1.0, 1.0))):
        raise DataError(f"labels must be in {{-1,+1}}, got {labs.tolist()}")
    if labs.size < 2:
        raise DataError("training data contains a single class")
    n, psi = x.shape
    xa = np.ascontiguousarray(np.hstack([x, np.ones((n, 1))]))
    if warm_alpha is not None:
        if warm_alpha.shape != (n,):
            raise DimensionMismatch("warm_alpha length mismatch")
        alpha = np.clip(warm_alpha.astype(np.float64), 0.0, c)
    else:
        alpha = np.zeros(n)
    w_aug = (alpha * y) @ xa
    dual_curve = np.empty(cfg.max_epochs)
    epochs, converged = _dual_cd(xa, y, float(c), cfg.max_epochs, cfg.tolerance,
                                 cfg.seed, cfg.shrinking, alpha, w_aug, dual_curve)
    if not np.all(np.isfinite(w_aug)):
        raise SolverError("solver produced non-finite weights")
    w = w_aug[:psi].copy()
    b = float(w_aug[psi])
    margins = 1.0 - y * (x @ w + b)
    train_hinge = float(np.maximum(0.0, margins).mean())
    norm_w = float(np.linalg.norm(w))
    diagnostics = {
        "train_hinge": train_hinge,
        "margin_width": (2.0 / norm_w) if norm_w > 0.0 else None,
        "iterations": int(epochs),
        "converged": bool(converged),
    }
    if keep_dual_curve:
        diagnostics["dual_curve"] = dual_curve[:epochs].copy()
    return SvmModel(w=w, b=b, c=float(c), map=feature_map,
                    diagnostics=diagnostics, alpha=alpha)


def decision_function(m: SvmModel, x) -> np.ndarray:
    """Margin scores w . phi(x) + b."""
    return m._mapped(x) @ m.w + m.b


def predict(m: SvmModel, x) -> np.ndarray:
    """Signs of the margin scores; a score of exactly 0 resolves to +1."""
    return np.where(decision_function(m, x) >= 0.0, 1.0, -1.0)


def hinge_loss(m: SvmModel, x, y) -> float:
    """Mean per-point hinge loss max(0, 1 - y * (w . phi(x) + b))."""
    y = np.asarray(y, dtype=np.float64).ravel()
    scores = decision_function(m, x)
    if scores.shape != y.shape:
        raise DimensionMismatch(f"{scores.shape[0]} rows vs {y.shape[0]} labels")
    return float(np.maximum(0.0, 1.0 - y * scores).mean())


def margin_width(m: SvmModel) -> float:
    norm_w = float(np.linalg.norm(m.w))
    if norm_w == 0.0:
        raise ValueError("margin width undefined for a zero weight vector")
    return 2.0 / norm_w


def primal_objective(m: SvmModel, x, y) -> float:
    """The solver's objective: 0.5*(||w||^2 + b^2) + C * sum hinge."""
    y = np.asarray(y, dtype=np.float64).ravel()
    scores = decision_function(m, x)
    hinge_sum = float(np.maximum(0.0, 1.0 - y * scores).sum())
    return 0.5 * (float(m.w @ m.w) + m.b ** 2) + m.c * hinge_sum


def dual_objective(m: SvmModel) -> float:
    """sum(alpha) - 0.5*||w_aug||^2; lower-bounds the primal optimum."""
    if m.alpha is None:
        raise ValueError("model carries no dual vector")
    return float(m.alpha.sum() - 0.5 * (float(m.w @ m.w) + m.b ** 2))


def _arr_to_b64(a: np.ndarray) -> dict:
    return {"dtype": str(a.dtype), "shape": list(a.shape),
            "data": base64.b64encode(np.ascontiguousarray(a).tobytes()).decode("ascii")}


def _arr_from_b64(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=d["dtype"]).reshape(d["shape"]).copy()


def model_to_json_dict(m: SvmModel) -> dict:
    from .kernel import feature_map_to_json_dict

    return {
        "w": _arr_to_b64(m.w),
        "b": m.b,
        "c": m.c,
        "map": feature_map_to_json_dict(m.map) if m.map is not None else None,
        "diagnostics": {k: v for k, v in m.diagnostics.items() if k != "dual_curve"},
    }


def model_from_json_dict(d: dict) -> SvmModel:
    from .kernel import feature_map_from_json_dict

    fmap = feature_map_from_json_dict(d["map"]) if d.get("map") else None
    return SvmModel(w=_arr_from_b64(d["w"]), b=float(d["b"]), c=float(d["c"]),
                    map=fmap, diagnostics=dict(d.get("diagnostics", {})))
