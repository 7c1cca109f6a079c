import numpy as np
import pytest
from scipy.optimize import minimize

from sandsvm.dataio import make_dataset
from sandsvm.experiments import GaussianPairSpec, gen_gaussian_pair
from sandsvm.svm import SolverConfig



def reference_qp_solve(x, y, c):
    """Independent reference: L-BFGS-B on the box-constrained dual QP.

    Same optimization problem as the trained model (bias regularized via
    the constant-1 augmented column) solved by a different algorithm.
    Returns (w, b, alpha).
    """
    n = x.shape[0]
    xa = np.hstack([x, np.ones((n, 1))])
    q = (xa * y[:, None]) @ (xa * y[:, None]).T
    res = minimize(lambda a: 0.5 * a @ q @ a - a.sum(),
                   np.zeros(n), jac=lambda a: q @ a - np.ones(n),
                   method="L-BFGS-B", bounds=[(0.0, c)] * n,
                   options={"maxiter": 20000, "ftol": 1e-16, "gtol": 1e-12})
    w_aug = (res.x * y) @ xa
    return w_aug[:-1], w_aug[-1], res.x


def primal_value(x, y, w, b, c):
    hinge = np.maximum(0.0, 1.0 - y * (x @ w + b)).sum()
    return 0.5 * (w @ w + b * b) + c * hinge


def random_binary_instance(rng, n, psi=3, spread=0.8):
    x = rng.normal(size=(n, psi))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    if len(np.unique(y)) < 2:
        y[0] = -y[0]
    x += spread * np.outer(y, rng.normal(size=psi))
    return x, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fast_cfg():
    return SolverConfig(max_epochs=300, tolerance=1e-3, seed=0)


@pytest.fixture
def tight_cfg():
    return SolverConfig(max_epochs=500_000, tolerance=1e-6, seed=0)


@pytest.fixture
def toy_dataset():
    """4 points, 2 well-separated classes."""
    x = np.array([[0.0, 0.0], [0.1, 0.1], [3.0, 3.0], [3.1, 2.9]])
    return make_dataset(x, np.array([0, 0, 1, 1]), {0: "A", 1: "B"})


@pytest.fixture
def gaussian_pair():
    def factory(sigma=0.12, n=300, d=1.0, seed=0):
        spec = GaussianPairSpec((0.0, 0.0), (d, 0.0), sigma, sigma, n, n, seed=seed)
        return gen_gaussian_pair(spec)
    return factory


@pytest.fixture
def rings_dataset():
    """Two concentric rings, radii 1 and 3: the classic kernel-required case."""
    rng = np.random.default_rng(99)
    n = 200
    rows, labels = [], []
    for cls, radius in ((0, 1.0), (1, 3.0)):
        theta = rng.uniform(0, 2 * np.pi, n)
        r = radius + rng.normal(0, 0.05, n)
        rows.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        labels.append(np.full(n, cls))
    return make_dataset(np.vstack(rows), np.concatenate(labels))

