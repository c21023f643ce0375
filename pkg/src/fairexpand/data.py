"""Dataset ingestion, train/val/test splits, and synthetic fixtures.

File formats: the edge file has one whitespace-separated "i j" pair per
line (0-indexed, '#' comments allowed), features are a headerless numeric
CSV, and labels are one integer per line. Arbitrary integer labels are
remapped to a contiguous 0..C-1 range.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetError
from .graph import SparseGraph, build_graph
from .nn import Rng
from .validation import check_feature_matrix

SPLIT_RATIOS = (0.6, 0.2, 0.2)


@dataclass(frozen=True)
class Dataset:
    graph: SparseGraph
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    name: str = "unnamed"

    @property
    def n(self) -> int:
        return self.graph.n

    def __post_init__(self):
        if self.features.shape[0] != self.n:
            raise DatasetError("feature rows do not match node count")
        if self.labels.shape[0] != self.n:
            raise DatasetError("label rows do not match node count")
        if self.num_classes < 2:
            raise DatasetError("need at least 2 classes")


@dataclass(frozen=True)
class Splits:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def _parse_labels(path: Path) -> np.ndarray:
    raw = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                raw.append(int(text))
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: expected an integer label, "
                                   f"got {text!r}") from None
    if not raw:
        raise DatasetError(f"{path}: no labels found")
    return np.asarray(raw, dtype=np.int64)


def _parse_features(path: Path) -> np.ndarray:
    try:
        arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2,
                         comments="#")
    except Exception:
        # Slow pass to name the offending line.
        with path.open() as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                try:
                    [float(tok) for tok in text.split(",")]
                except ValueError:
                    raise DatasetError(
                        f"{path}:{lineno}: could not parse feature row") from None
        raise DatasetError(f"{path}: could not parse feature matrix") from None
    return check_feature_matrix(arr, str(path))


def _parse_edges(path: Path, n: int) -> list[tuple[int, int, float]]:
    edges = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise DatasetError(f"{path}:{lineno}: expected 'i j', got {text!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-integer node id") from None
            if not (0 <= i < n and 0 <= j < n):
                raise DatasetError(f"{path}:{lineno}: node id outside [0, {n})")
            if i == j:
                continue  # tolerate self-citation lines
            edges.append((i, j, 1.0))
    return edges


def load_dataset(edges_path, features_path, labels_path,
                 name: str | None = None) -> Dataset:
    """Load a dataset from the three standard files.

    The graph is symmetrized and deduplicated; labels are remapped to a
    contiguous range and counted. Row mismatches between the files raise.
    """
    edges_path = Path(edges_path)
    features_path = Path(features_path)
    labels_path = Path(labels_path)
    for p in (edges_path, features_path, labels_path):
        if not p.exists():
            raise DatasetError(f"missing dataset file: {p}")
    labels = _parse_labels(labels_path)
    features = _parse_features(features_path)
    if features.shape[0] != labels.shape[0]:
        raise DatasetError(
            f"{features_path} has {features.shape[0]} rows but "
            f"{labels_path} has {labels.shape[0]} labels")
    n = labels.shape[0]
    classes = np.unique(labels)
    labels = np.searchsorted(classes, labels)
    edges = _parse_edges(edges_path, n)
    graph = build_graph(n, edges) if edges else SparseGraph.empty(n)
    return Dataset(graph, features, labels, int(classes.size),
                   name or edges_path.stem)


def save_dataset(dataset: Dataset, out_dir) -> dict[str, Path]:
    """Write edges.txt / features.csv / labels.txt; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"edges": out / "edges.txt", "features": out / "features.csv",
             "labels": out / "labels.txt"}
    ei, ej, _ = dataset.graph.edge_array()
    with paths["edges"].open("w") as fh:
        for a, b in zip(ei, ej):
            fh.write(f"{a} {b}\n")
    np.savetxt(paths["features"], dataset.features, delimiter=",", fmt="%.17g")
    with paths["labels"].open("w") as fh:
        for lab in dataset.labels:
            fh.write(f"{lab}\n")
    return paths


def make_splits(n: int, ratios, rng: Rng) -> Splits:
    """Shuffle nodes and cut by cumulative ratio; leftovers go to train."""
    if n < 5:
        raise DatasetError("need at least 5 nodes to split")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise DatasetError(f"ratios must be 3 nonnegative numbers summing to 1, got {ratios}")
    n_val = int(np.floor(ratios[1] * n))
    n_test = int(np.floor(ratios[2] * n))
    n_train = n - n_val - n_test
    perm = rng.permutation(n)
    return Splits(np.sort(perm[:n_train]),
                  np.sort(perm[n_train:n_train + n_val]),
                  np.sort(perm[n_train + n_val:]))


def generate_synthetic(blocks, p_in: float, p_out: float, d1: int,
                       feature_noise: float, rng: Rng,
                       name: str = "synthetic") -> Dataset:
    """Planted-partition graph with per-class centroid features.

    Nodes of block c get the one-hot centroid e_c plus uniform noise of
    amplitude ``feature_noise``; edges appear with probability ``p_in``
    inside a block and ``p_out`` across blocks.
    """
    blocks = [int(b) for b in blocks]
    if not blocks or min(blocks) < 1:
        raise DatasetError("blocks must be a nonempty list of positive sizes")
    if not (0.0 <= p_out < p_in <= 1.0):
        raise DatasetError("need 0 <= p_out < p_in <= 1")
    if feature_noise < 0:
        raise DatasetError("feature_noise must be >= 0")
    if d1 < len(blocks):
        raise DatasetError(f"d1 must be >= number of blocks ({len(blocks)})")
    n = sum(blocks)
    labels = np.repeat(np.arange(len(blocks), dtype=np.int64), blocks)

    features = np.zeros((n, d1))
    features[np.arange(n), labels] = 1.0
    if feature_noise > 0:
        features = features + rng.uniform(-feature_noise, feature_noise,
                                          size=(n, d1))

    edge_rows = []
    block_size = 512
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        prob = np.where(labels[start:stop, None] == labels[None, :], p_in, p_out)
        draws = rng.random((stop - start, n))
        li, lj = np.nonzero(draws < prob)
        keep = li + start < lj
        if keep.any():
            edge_rows.append(np.column_stack([li[keep] + start, lj[keep]]))
    if edge_rows:
        edges = np.concatenate(edge_rows)
        graph = build_graph(n, np.column_stack([edges, np.ones(edges.shape[0])]))
    else:
        graph = SparseGraph.empty(n)
    return Dataset(graph, features, labels, len(blocks), name)
