"""Partition agreement and bundled benchmark graphs."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .graph import SimilarityGraph


def _pairs(x):
    return x * (x - 1) / 2.0


def adjusted_rand_index(labels_true, labels_pred) -> float:
    """Pair-counting agreement between two labelings, corrected for chance.

    1.0 for identical partitions up to relabelling, about 0 for independent
    ones.  When both labelings are all-singletons or all-one-cluster the
    index is defined as 1.0.
    """
    a = np.asarray(labels_true)
    b = np.asarray(labels_pred)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be 1-d and of equal length")
    n = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max(initial=-1) + 1, bi.max(initial=-1) + 1))
    np.add.at(table, (ai.ravel(), bi.ravel()), 1)
    index = _pairs(table).sum()
    rows = _pairs(table.sum(axis=1)).sum()
    cols = _pairs(table.sum(axis=0)).sum()
    expected = rows * cols / _pairs(n) if n > 1 else 0.0
    maximum = (rows + cols) / 2.0
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))


def karate_club(weight: float = 1.0) -> SimilarityGraph:
    """Zachary's karate club with a uniform edge weight.

    Node labels are the member numbers ``"0"``..``"33"``.
    """
    text = resources.files(__package__).joinpath("data/karate_club.edgelist").read_text()
    pairs = [tuple(map(int, line.split())) for line in text.splitlines()
             if line and not line.startswith("#")]
    return SimilarityGraph.from_edges([str(i) for i in range(34)],
                                      [(u, v, weight) for u, v in pairs])
