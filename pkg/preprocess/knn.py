"""Directed K-nearest-neighbour edges under L1 distance."""

from typing import List, Tuple

import numpy as np
from sklearn.metrics import pairwise_distances

from preprocess.constants import DISTANCE_METRIC


def knn_edges(features: np.ndarray, k: int) -> List[Tuple[int, int]]:
    """Connect every node to its ``min(k, n - 1)`` nearest other nodes.

    Distances are L1; ties go to the smaller node index. Self edges are never
    produced.

    :param features: (nodes, features) array
    :param k: neighbours per node, at least 1
    :return: list of (src, dst) pairs ordered by src then distance
    """
    features = np.asarray(features, dtype=np.float64)
    count = features.shape[0]
    if count <= 1:
        return []
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    distances = pairwise_distances(features, metric=DISTANCE_METRIC)
    np.fill_diagonal(distances, np.inf)
    keep = min(k, count - 1)
    # stable sort keeps the smaller index first among equal distances
    order = np.argsort(distances, axis=1, kind="stable")[:, :keep]
    return [(src, int(dst)) for src in range(count) for dst in order[src]]
