import math

import numpy as np
import pytest

from sandsvm.errors import DataError, DimensionMismatch
from sandsvm.kernel import (FeatureMap, KernelSpec, feature_map_from_json_dict,
                            feature_map_to_json_dict, fit_feature_map, gram, transform)


RBF = KernelSpec("rbf", gamma=1.0)
POLY2 = KernelSpec("polynomial", gamma=1.0, degree=2, coef0=0.0)


class TestSpecValidation:
    def test_bad_family(self):
        with pytest.raises(ValueError):
            KernelSpec("linear")

    def test_bad_gamma(self):
        with pytest.raises(ValueError):
            KernelSpec("rbf", gamma=0.0)

    def test_degree_bounds(self):
        with pytest.raises(ValueError):
            KernelSpec("polynomial", gamma=1.0, degree=11)
        with pytest.raises(ValueError):
            KernelSpec("polynomial", gamma=1.0, degree=0)

    def test_poly_coef0_nonnegative(self):
        with pytest.raises(ValueError):
            KernelSpec("polynomial", gamma=1.0, degree=2, coef0=-1.0)


class TestGram:
    def test_rbf_self_is_one(self):
        x = np.array([[0.3, -0.7]])
        assert gram(RBF, x, x)[0, 0] == pytest.approx(1.0)

    def test_poly_square(self):
        x = np.array([[1.0, 1.0]])
        assert gram(POLY2, x, x)[0, 0] == pytest.approx(4.0)

    def test_rbf_value(self):
        spec = KernelSpec("rbf", gamma=0.5)
        v = gram(spec, np.array([[0.0, 0.0]]), np.array([[2.0, 0.0]]))[0, 0]
        assert v == pytest.approx(math.exp(-2.0), abs=1e-12)

    def test_sigmoid_value(self):
        spec = KernelSpec("sigmoid", gamma=0.5, coef0=-1.0)
        v = gram(spec, np.array([[1.0, 1.0]]), np.array([[1.0, 1.0]]))[0, 0]
        assert v == pytest.approx(math.tanh(0.0), abs=1e-12)

    def test_symmetry(self, rng):
        x = rng.normal(size=(20, 4))
        for spec in (RBF, POLY2, KernelSpec("sigmoid", gamma=0.1, coef0=0.0)):
            g = gram(spec, x, x)
            assert np.abs(g - g.T).max() < 1e-12

    def test_psd_rbf_poly(self, rng):
        for trial in range(100):
            x = rng.normal(size=(30, 3))
            for spec in (RBF, KernelSpec("polynomial", gamma=0.7, degree=3, coef0=1.0)):
                g = gram(spec, x, x)
                vals = np.linalg.eigvalsh(0.5 * (g + g.T))
                assert vals.min() >= -1e-8 * max(vals.max(), 1.0)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatch):
            gram(RBF, np.zeros((2, 3)), np.zeros((2, 4)))

    def test_gram_shift_invariance_rbf(self, rng):
        x = rng.normal(size=(10, 3))
        y = rng.normal(size=(10, 3))
        t = rng.normal(size=3)
        assert np.abs(gram(RBF, x, y) - gram(RBF, x + t, y + t)).max() < 1e-12


class TestFitValidation:
    def test_rff_requires_rbf(self):
        with pytest.raises(ValueError):
            fit_feature_map(POLY2, "rff", 16, 0, np.zeros((2, 2)))

    def test_tensor_sketch_requires_poly(self):
        with pytest.raises(ValueError):
            fit_feature_map(RBF, "tensor_sketch", 16, 0, np.zeros((2, 2)))

    def test_sigmoid_requires_nystrom(self):
        spec = KernelSpec("sigmoid", gamma=0.1, coef0=0.0)
        with pytest.raises(ValueError):
            fit_feature_map(spec, "rff", 16, 0, np.zeros((2, 2)))

    def test_degenerate_eigenspectrum(self):
        # all-zero rows under a homogeneous polynomial kernel: Gram is zero
        with pytest.raises(DataError, match="degenerate"):
            fit_feature_map(POLY2, "nystrom_eig", 8, 0, np.zeros((20, 2)))


class TestRff:
    def test_frequency_variance(self):
        fm = fit_feature_map(KernelSpec("rbf", gamma=0.7), "rff", 500, 7, np.zeros((2, 3)))
        assert fm.state["freqs"].shape == (3, 500)
        pooled_var = fm.state["freqs"].var()
        assert pooled_var == pytest.approx(2 * 0.7, rel=0.10)

    def test_phases_in_range(self):
        fm = fit_feature_map(RBF, "rff", 256, 3, np.zeros((2, 2)))
        assert fm.state["phases"].min() >= 0.0
        assert fm.state["phases"].max() < 2 * math.pi

    def test_approximation_d2000(self, rng):
        x = rng.normal(size=(50, 3))
        y = rng.normal(size=(50, 3))
        exact = np.exp(-((x - y) ** 2).sum(axis=1))
        fm = fit_feature_map(RBF, "rff", 2000, 11, x)
        approx = (transform(fm, x) * transform(fm, y)).sum(axis=1)
        assert np.abs(approx - exact).max() <= 0.08

    def test_shift_changes_estimate_within_noise(self, rng):
        # the phase construction is shift-invariant in expectation only;
        # the x+y dependent half averages out at O(1/sqrt(D))
        x = rng.normal(size=(20, 3))
        y = rng.normal(size=(20, 3))
        t = rng.normal(size=3)
        fm = fit_feature_map(RBF, "rff", 4096, 5, x)
        a = (transform(fm, x) * transform(fm, y)).sum(axis=1)
        b = (transform(fm, x + t) * transform(fm, y + t)).sum(axis=1)
        assert np.abs(a - b).max() <= 6.0 / math.sqrt(4096)


class TestTensorSketch:
    def test_hash_table_construction(self):
        spec = KernelSpec("polynomial", gamma=1.0, degree=2, coef0=0.0)
        fm = fit_feature_map(spec, "tensor_sketch", 256, 3, np.zeros((2, 5)))
        idx = fm.state["hash_idx"]
        sign = fm.state["hash_sign"]
        assert idx.shape == (2, 6) and sign.shape == (2, 6)
        assert idx.min() >= 0 and idx.max() < 256
        assert set(np.unique(sign)) <= {-1.0, 1.0}

    def test_unbiased_mean_over_seeds(self, rng):
        spec = KernelSpec("polynomial", gamma=0.5, degree=2, coef0=1.0)
        x = rng.normal(size=(20, 4)) / 2
        y = rng.normal(size=(20, 4)) / 2
        exact = (0.5 * (x * y).sum(axis=1) + 1.0) ** 2
        acc = np.zeros(20)
        seeds = 60
        for s in range(seeds):
            fm = fit_feature_map(spec, "tensor_sketch", 2048, s, x)
            acc += (transform(fm, x) * transform(fm, y)).sum(axis=1)
        rel = np.abs(acc / seeds - exact) / np.abs(exact)
        assert rel.max() < 0.05

    def test_degree_one_is_count_sketch(self, rng):
        spec = KernelSpec("polynomial", gamma=1.0, degree=1, coef0=0.0)
        x = rng.normal(size=(10, 4))
        acc = np.zeros((10, 10))
        for s in range(50):
            fm = fit_feature_map(spec, "tensor_sketch", 1024, s, x)
            z = transform(fm, x)
            acc += z @ z.T
        np.testing.assert_allclose(acc / 50, x @ x.T, atol=0.15)


class TestNystrom:
    def test_exact_on_landmarks(self, rng):
        spec = KernelSpec("sigmoid", gamma=0.1, coef0=-1.0)
        pts = rng.normal(size=(100, 3))
        fm = fit_feature_map(spec, "nystrom_eig", 64, 5, pts)
        lms = fm.state["landmarks"]
        k = gram(spec, lms, lms)
        k = 0.5 * (k + k.T)
        vals, vecs = np.linalg.eigh(k)
        keep = vals > 1e-10
        k_psd = (vecs[:, keep] * vals[keep]) @ vecs[:, keep].T
        feats = transform(fm, lms)
        assert np.abs(feats @ feats.T - k_psd).max() < 1e-8

    def test_truncation_contract(self, rng):
        spec = KernelSpec("sigmoid", gamma=0.1, coef0=-1.0)
        fm = fit_feature_map(spec, "nystrom_eig", 64, 5, rng.normal(size=(100, 3)))
        assert 0 < fm.effective_dim <= 64

    def test_output_dim_always_d(self, rng):
        spec = KernelSpec("rbf", gamma=1.0)
        pts = rng.normal(size=(10, 2))
        fm = fit_feature_map(spec, "nystrom_eig", 64, 5, pts)  # rank <= 10 < 64
        z = transform(fm, rng.normal(size=(7, 2)))
        assert z.shape == (7, 64)
        assert fm.effective_dim <= 10


class TestDeterminismAndConvergence:
    def test_transform_deterministic(self, rng):
        x = rng.normal(size=(30, 3))
        for spec, method in ((RBF, "rff"), (POLY2, "tensor_sketch"), (RBF, "nystrom_eig")):
            a = fit_feature_map(spec, method, 64, 9, x)
            b = fit_feature_map(spec, method, 64, 9, x)
            np.testing.assert_array_equal(transform(a, x), transform(b, x))

    def test_error_decreases_with_dim(self, rng):
        x = rng.normal(size=(40, 3))
        y = rng.normal(size=(40, 3))
        for spec, method in ((RBF, "rff"),
                             (KernelSpec("polynomial", gamma=0.5, degree=2, coef0=1.0),
                              "tensor_sketch")):
            exact = np.array([gram(spec, x[i:i + 1], y[i:i + 1])[0, 0] for i in range(40)])
            medians = []
            for dim in (128, 512, 2048):
                errs = []
                for seed in range(5):
                    fm = fit_feature_map(spec, method, dim, seed, x)
                    approx = (transform(fm, x) * transform(fm, y)).sum(axis=1)
                    errs.append(np.median(np.abs(approx - exact)))
                medians.append(np.median(errs))
            assert medians[0] >= medians[1] >= medians[2]


def test_json_round_trip(rng):
    x = rng.normal(size=(50, 3))
    for spec, method in ((RBF, "rff"),
                         (KernelSpec("polynomial", gamma=0.5, degree=3, coef0=1.0), "tensor_sketch"),
                         (KernelSpec("sigmoid", gamma=0.1, coef0=0.5), "nystrom_eig")):
        fm = fit_feature_map(spec, method, 32, 4, x)
        back = feature_map_from_json_dict(feature_map_to_json_dict(fm))
        assert back.spec == fm.spec and back.method == fm.method
        assert back.effective_dim == fm.effective_dim
        np.testing.assert_array_equal(transform(back, x), transform(fm, x))


def test_transform_dim_mismatch(rng):
    fm = fit_feature_map(RBF, "rff", 16, 0, rng.normal(size=(5, 3)))
    with pytest.raises(DimensionMismatch):
        transform(fm, rng.normal(size=(5, 4)))
