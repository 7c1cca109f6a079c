"""Kernels and explicit approximate feature maps.

Three families (rbf, polynomial, sigmoid) with exact Gram evaluation,
plus randomized feature maps whose inner products approximate the
kernel: random Fourier features for rbf, tensor sketch for polynomial,
and landmark eigendecomposition for anything (required for sigmoid,
whose Gram is indefinite; its negative eigenvalues are truncated).
Training linear SVMs on the mapped rows stands in for a kernel SVM.
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError, DimensionMismatch

FAMILIES = ("rbf", "polynomial", "sigmoid")
METHODS = ("rff", "tensor_sketch", "nystrom_eig")
PREFERRED_METHOD = {"rbf": "rff", "polynomial": "tensor_sketch", "sigmoid": "nystrom_eig"}
SCAN_DIM = 512        # cheap dimension for S&S scanning
TRAIN_DIM = 2048      # higher-fidelity dimension for final training
NYSTROM_LANDMARKS = 256
EIG_FLOOR = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    family: str
    gamma: float = 1.0
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.family == "polynomial":
            if not (isinstance(self.degree, (int, np.integer)) and 1 <= self.degree <= 10):
                raise ValueError(f"polynomial degree must be an integer in [1,10], got {self.degree}")
            if self.coef0 < 0.0:
                raise ValueError(f"polynomial coef0 must be >= 0, got {self.coef0}")

    def label(self) -> str:
        if self.family == "rbf":
            return f"rbf(gamma={self.gamma:g})"
        if self.family == "polynomial":
            return f"poly(degree={self.degree}, gamma={self.gamma:g}, coef0={self.coef0:g})"
        return f"sigmoid(gamma={self.gamma:g}, coef0={self.coef0:g})"

    def to_json_dict(self) -> dict:
        return {"family": self.family, "gamma": self.gamma,
                "degree": self.degree, "coef0": self.coef0}


def kernel_spec_from_json_dict(d: dict) -> KernelSpec:
    return KernelSpec(d["family"], float(d["gamma"]), int(d["degree"]), float(d["coef0"]))


@dataclass(frozen=True)
class FeatureMap:
    """A fitted transformation into D-dimensional approximate feature space.

    ``state`` holds method-specific arrays; ``effective_dim`` <= dim is
    the number of informative output coordinates (nystrom_eig pads the
    rest with zeros so every transform emits exactly ``dim`` columns).
    """

    spec: KernelSpec
    method: str
    dim: int
    seed: int
    input_dim: int
    state: dict
    effective_dim: int


def gram(spec: KernelSpec, rows_a: np.ndarray, rows_b: np.ndarray) -> np.ndarray:
    """Pairwise kernel matrix G[i,j] = k(a_i, b_j)."""
    a = np.atleast_2d(np.asarray(rows_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(rows_b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    if spec.family == "rbf":
        sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-spec.gamma * sq)
    inner = spec.gamma * (a @ b.T) + spec.coef0
    if spec.family == "polynomial":
        return inner ** spec.degree
    return np.tanh(inner)


def fit_feature_map(spec: KernelSpec, method: str, dim: int, seed: int,
                    fit_data: np.ndarray) -> FeatureMap:
    """Draw/fit the randomized state of a feature map.

    ``fit_data`` supplies the input dimensionality for every method;
    only nystrom_eig reads its values (as landmark candidates).
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    x = np.atleast_2d(np.asarray(fit_data, dtype=np.float64))
    if x.size == 0:
        raise DataError("fit_data must be nonempty")
    psi = x.shape[1]
    if method == "rff" and spec.family != "rbf":
        raise ValueError("rff applies to the rbf family only")
    if method == "tensor_sketch" and spec.family != "polynomial":
        raise ValueError("tensor_sketch applies to the polynomial family only")
    if spec.family == "sigmoid" and method != "nystrom_eig":
        raise ValueError("sigmoid kernels require the nystrom_eig method")
    rng = np.random.default_rng(seed)
    if method == "rff":
        freqs = rng.normal(0.0, math.sqrt(2.0 * spec.gamma), size=(psi, dim))
        phases = rng.uniform(0.0, 2.0 * math.pi, size=dim)
        state = {"freqs": freqs, "phases": phases}
        return FeatureMap(spec, method, dim, seed, psi, state, dim)
    if method == "tensor_sketch":
        # the inhomogeneous kernel (g*x.y + c)^p is sketched homogeneously
        # on rows augmented with sqrt(c) and scaled by sqrt(g)
        aug = psi + 1
        hash_idx = rng.integers(0, dim, size=(spec.degree, aug))
        hash_sign = rng.choice(np.array([-1.0, 1.0]), size=(spec.degree, aug))
        state = {"hash_idx": hash_idx, "hash_sign": hash_sign}
        return FeatureMap(spec, method, dim, seed, psi, state, dim)
    # nystrom_eig
    m = min(x.shape[0], NYSTROM_LANDMARKS)
    pick = np.sort(rng.choice(x.shape[0], size=m, replace=False))
    landmarks = x[pick].copy()
    k_mm = gram(spec, landmarks, landmarks)
    k_mm = 0.5 * (k_mm + k_mm.T)
    eigvals, eigvecs = np.linalg.eigh(k_mm)
    keep = eigvals > EIG_FLOOR
    if not keep.any():
        raise DataError("degenerate eigenspectrum: all landmark Gram eigenvalues <= 1e-10")
    eigvals = eigvals[keep][::-1]
    eigvecs = eigvecs[:, keep][:, ::-1]
    k_eff = min(dim, eigvals.size)
    proj = eigvecs[:, :k_eff] / np.sqrt(eigvals[:k_eff])
    state = {"landmarks": landmarks, "proj": np.ascontiguousarray(proj)}
    return FeatureMap(spec, method, dim, seed, psi, state, k_eff)


def transform(fmap: FeatureMap, rows: np.ndarray) -> np.ndarray:
    """Map raw rows into feature space; output is always n x dim."""
    x = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if x.shape[1] != fmap.input_dim:
        raise DimensionMismatch(f"rows have {x.shape[1]} columns, map was fitted on {fmap.input_dim}")
    if fmap.method == "rff":
        return math.sqrt(2.0 / fmap.dim) * np.cos(x @ fmap.state["freqs"] + fmap.state["phases"])
    if fmap.method == "tensor_sketch":
        spec = fmap.spec
        aug = np.hstack([math.sqrt(spec.gamma) * x,
                         np.full((x.shape[0], 1), math.sqrt(spec.coef0))])
        prod = None
        for t in range(spec.degree):
            cs = np.zeros((x.shape[0], fmap.dim))
            idx = fmap.state["hash_idx"][t]
            sign = fmap.state["hash_sign"][t]
            np.add.at(cs.T, idx, (aug * sign).T)
            f = np.fft.rfft(cs, axis=1)
            prod = f if prod is None else prod * f
        return np.fft.irfft(prod, n=fmap.dim, axis=1)
    # nystrom_eig
    feats = gram(fmap.spec, x, fmap.state["landmarks"]) @ fmap.state["proj"]
    if fmap.effective_dim < fmap.dim:
        out = np.zeros((x.shape[0], fmap.dim))
        out[:, :fmap.effective_dim] = feats
        return out
    return feats


def _arr_to_b64(a: np.ndarray) -> dict:
    return {"dtype": str(a.dtype), "shape": list(a.shape),
            "data": base64.b64encode(np.ascontiguousarray(a).tobytes()).decode("ascii")}


def _arr_from_b64(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=d["dtype"]).reshape(d["shape"]).copy()


def feature_map_to_json_dict(fmap: Optional[FeatureMap]) -> Optional[dict]:
    if fmap is None:
        return None
    return {
        "spec": fmap.spec.to_json_dict(),
        "method": fmap.method,
        "dim": fmap.dim,
        "seed": fmap.seed,
        "input_dim": fmap.input_dim,
        "effective_dim": fmap.effective_dim,
        "state": {k: _arr_to_b64(v) for k, v in fmap.state.items()},
    }


def feature_map_from_json_dict(d: Optional[dict]) -> Optional[FeatureMap]:
    if d is None:
        return None
    return FeatureMap(
        spec=kernel_spec_from_json_dict(d["spec"]),
        method=d["method"],
        dim=int(d["dim"]),
        seed=int(d["seed"]),
        input_dim=int(d["input_dim"]),
        state={k: _arr_from_b64(v) for k, v in d["state"].items()},
        effective_dim=int(d["effective_dim"]),
    )
