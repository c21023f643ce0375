"""fairexpand: individually fair node representations from partial
similarity information, with an epsilon-greedy PU link-prediction loop."""

from .data import Dataset, Splits, generate_synthetic, load_dataset, make_splits, save_dataset
from .errors import (ConfigError, DatasetError, ExpansionError, FairExpandError,
                     GraphError, MetricsError, SimilarityError, TrainingError)
from .estimator import FairExpand
from .expansion import ExpansionStrategy, expand, negative_sampling, pull_train, select_edges
from .graph import (LaplacianMatrix, SparseGraph, build_graph, laplacian,
                    node_set, symmetric_normalize, trace_quadratic)
from .metrics import MetricsRecord, balance, bias, local_mean_identity_gap, micro_f1, nor
from .nn import (AdamState, GcnModel, adam_step, combined_backward, cross_entropy,
                 finite_difference_check, gcn_forward, glorot_init)
from .pipeline import (FairExpandConfig, RunLog, run_ablation, run_fairexpand,
                       run_sweep, train_phase1)
from .similarity import (SimilaritySpec, build_partial_similarity,
                         build_test_similarity, cosine_similarity,
                         feature_split, threshold_census)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "ConfigError", "Dataset", "DatasetError", "ExpansionError",
    "ExpansionStrategy", "FairExpand", "FairExpandConfig", "FairExpandError",
    "GcnModel", "GraphError", "LaplacianMatrix", "MetricsError",
    "MetricsRecord", "RunLog", "SimilarityError", "SimilaritySpec",
    "SparseGraph", "Splits", "TrainingError", "adam_step", "balance", "bias",
    "build_graph", "build_partial_similarity", "build_test_similarity",
    "combined_backward", "cosine_similarity", "cross_entropy", "expand",
    "feature_split", "finite_difference_check", "gcn_forward",
    "generate_synthetic", "glorot_init", "laplacian",
    "local_mean_identity_gap", "load_dataset", "make_splits", "micro_f1",
    "negative_sampling", "node_set", "nor", "pull_train", "run_ablation",
    "run_fairexpand", "run_sweep", "save_dataset", "select_edges",
    "symmetric_normalize", "threshold_census", "trace_quadratic",
    "train_phase1",
]
