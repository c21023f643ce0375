"""Scikit-learn style estimator wrapping the FairExpand pipeline.

The task is transductive node classification: ``fit`` takes the feature
matrix, full label vector, and the graph's edge list, splits nodes
internally, and learns individually fair class-probability embeddings
for every node.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .data import Dataset
from .errors import DatasetError
from .graph import SparseGraph, build_graph
from .pipeline import FairExpandConfig, run_fairexpand
from .validation import check_feature_matrix, check_labels


class FairExpand(BaseEstimator):
    """Individually fair node classifier under partial similarity information.

    Parameters
    ----------
    fairness_weight : float, default=0.5
        Weight of the Laplacian fairness regularizer (0 disables it).
    epsilon : float, default=0.2
        Fraction of expansion edges drawn uniformly at random.
    n_iterations : int, default=15
        Number of train/expand alternations (0 keeps only Phase 1).
    m_add : int, default=10
        Edges added to the similarity graph per iteration.
    tau : float, default=0.4
        Cosine threshold for observed similarity pairs.
    s0_count : int, default=20
        Number of observed similarity edges sampled at the start.
    learning_rate : float, default=0.01
    hidden_dim : int, default=64
    strategy : str, default="epsilon_greedy_pull"
        One of dot_product, gcn, pull, epsilon_greedy_pull.
    max_epochs : int, default=500
    patience : int, default=20
        Early-stopping patience on validation micro-F1.
    alpha : float, default=0.7
        Utility weight inside the balance score.
    feature_split : bool, default=False
        Use half the feature columns for similarity, half for the model.
    random_state : int, default=0

    Attributes
    ----------
    embeddings_ : ndarray of shape (n_nodes, n_classes)
        Final fair class-probability embeddings.
    classes_ : ndarray
        Sorted class labels seen in ``y``.
    runlog_ : RunLog
        Per-iteration F1/bias/NOR trajectory of the fitted run.
    """

    def __init__(self, fairness_weight=0.5, epsilon=0.2, n_iterations=15,
                 m_add=10, tau=0.4, s0_count=20, learning_rate=0.01,
                 hidden_dim=64, strategy="epsilon_greedy_pull",
                 max_epochs=500, patience=20, alpha=0.7,
                 feature_split=False, random_state=0):
        self.fairness_weight = fairness_weight
        self.epsilon = epsilon
        self.n_iterations = n_iterations
        self.m_add = m_add
        self.tau = tau
        self.s0_count = s0_count
        self.learning_rate = learning_rate
        self.hidden_dim = hidden_dim
        self.strategy = strategy
        self.max_epochs = max_epochs
        self.patience = patience
        self.alpha = alpha
        self.feature_split = feature_split
        self.random_state = random_state

    def _config(self) -> FairExpandConfig:
        return FairExpandConfig(
            lambda_=self.fairness_weight, epsilon=self.epsilon,
            k_iters=self.n_iterations, m_add=self.m_add, tau=self.tau,
            s0_count=self.s0_count, lr=self.learning_rate,
            hidden_dim=self.hidden_dim, seed=self.random_state,
            strategy=self.strategy, max_epochs=self.max_epochs,
            patience=self.patience, alpha=self.alpha,
            feature_split_mode=self.feature_split)

    def fit(self, X, y, edges):
        """Fit on one attributed graph.

        Parameters
        ----------
        X : array-like of shape (n_nodes, n_features)
        y : array-like of shape (n_nodes,)
            Integer class label of every node.
        edges : array-like of shape (n_edges, 2) or SparseGraph
            Undirected graph structure over the nodes.
        """
        X = check_feature_matrix(X)
        n = X.shape[0]
        y = np.asarray(y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise DatasetError("need at least 2 classes")
        labels = check_labels(encoded, n)
        graph = edges if isinstance(edges, SparseGraph) else build_graph(n, edges)
        dataset = Dataset(graph, X, labels, int(self.classes_.size), "estimator")
        embeddings, runlog = run_fairexpand(dataset, self._config())
        self.embeddings_ = embeddings
        self.runlog_ = runlog
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "embeddings_"):
            raise DatasetError("call fit before predict/transform")

    def predict_proba(self, indices=None) -> np.ndarray:
        """Class probabilities for the fitted nodes (or a subset)."""
        self._check_fitted()
        if indices is None:
            return self.embeddings_
        return self.embeddings_[np.asarray(indices, dtype=np.int64)]

    def predict(self, indices=None) -> np.ndarray:
        """Predicted class label for the fitted nodes (or a subset)."""
        return self.classes_[self.predict_proba(indices).argmax(axis=1)]

    def transform(self, X=None) -> np.ndarray:
        """Return the fair embeddings (transductive; ``X`` is ignored)."""
        self._check_fitted()
        return self.embeddings_

    def fit_transform(self, X, y, edges) -> np.ndarray:
        return self.fit(X, y, edges).transform()
