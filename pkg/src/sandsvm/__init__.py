"""Soft-margin SVM toolkit with S&S-ratio hyperparameter selection."""

__version__ = "0.1.0"

from .dataio import Dataset, SplitSpec, load_dataset, split, standardize
from .stats import SAndSReport, class_geometry, pairwise_sands, sands_ratio
from .svm import SolverConfig, SvmModel, hinge_loss, margin_width, predict, train
from .copt import CoptDecision, c_opt_from_sands, c_opt_table
from .kernel import FeatureMap, KernelSpec, fit_feature_map, gram, transform
from .select import KernelGrid, SelectionReport, fit_pipeline, select_input_space, select_kernel
from .cv import CvConfig, CvResult, f1_score, grid_search_cv, kfold_indices
from .experiments import GaussianPairSpec, SweepResult, benchmark_compare, fit_exponential, gen_gaussian_pair, sweep

__all__ = [
    "Dataset", "SplitSpec", "load_dataset", "split", "standardize",
    "SAndSReport", "class_geometry", "pairwise_sands", "sands_ratio",
    "SolverConfig", "SvmModel", "hinge_loss", "margin_width", "predict", "train",
    "CoptDecision", "c_opt_from_sands", "c_opt_table",
    "FeatureMap", "KernelSpec", "fit_feature_map", "gram", "transform",
    "KernelGrid", "SelectionReport", "fit_pipeline", "select_input_space", "select_kernel",
    "CvConfig", "CvResult", "f1_score", "grid_search_cv", "kfold_indices",
    "GaussianPairSpec", "SweepResult", "benchmark_compare", "fit_exponential",
    "gen_gaussian_pair", "sweep",
]
