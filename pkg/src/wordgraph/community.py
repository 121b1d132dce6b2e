"""Weighted modularity and Louvain community detection.

Louvain alternates a local-move phase (each node moves to the neighbouring
community with the best modularity gain) with an aggregation phase that
collapses every community into one node carrying a self-loop.  Node visit
order is ascending id unless a seed is given.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .embedding import word_sort_key
from .errors import ParseError, UndefinedModularityError
from .graph import SimilarityGraph

DEFAULT_MIN_GAIN = 1e-7


def _csr(n, src, dst, w):
    rows = np.concatenate([src, dst])
    cols = np.concatenate([dst, src])
    ws = np.concatenate([w, w])
    order = np.lexsort((cols, rows))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, cols[order].astype(np.int64), ws[order].astype(np.float64)


@dataclass(frozen=True)
class AggregatedGraph:
    """Weighted graph whose nodes may carry a self-loop.

    ``self_loops[c]`` is the total weight of the edges collapsed inside node
    ``c`` (each counted once), so the total weight ``m`` is unchanged by
    aggregation.  Adjacency arrays hold ordinary edges in both directions.
    """

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    self_loops: np.ndarray

    @classmethod
    def from_graph(cls, g: SimilarityGraph) -> "AggregatedGraph":
        return cls(g.indptr, g.indices, g.weights, np.zeros(g.node_count))

    @property
    def node_count(self) -> int:
        return self.self_loops.size

    @property
    def weighted_degrees(self) -> np.ndarray:
        n = self.node_count
        rows = np.repeat(np.arange(n), np.diff(self.indptr))
        return np.bincount(rows, weights=self.weights, minlength=n) + 2.0 * self.self_loops

    def total_weight(self) -> float:
        return float(self.weights.sum() / 2.0 + self.self_loops.sum())

    def edges(self):
        """Ordinary edges as ``(u, v, w)`` with ``u < v``."""
        n = self.node_count
        rows = np.repeat(np.arange(n), np.diff(self.indptr))
        keep = rows < self.indices
        return list(zip(rows[keep].tolist(), self.indices[keep].tolist(),
                        self.weights[keep].tolist()))


def _as_level(g) -> AggregatedGraph:
    return g if isinstance(g, AggregatedGraph) else AggregatedGraph.from_graph(g)


def _community_sums(lg: AggregatedGraph, assignment: np.ndarray, count: int):
    n = lg.node_count
    rows = np.repeat(np.arange(n), np.diff(lg.indptr))
    cu, cv = assignment[rows], assignment[lg.indices]
    intra = cu == cv
    sigma_tot = np.bincount(assignment, weights=lg.weighted_degrees, minlength=count)
    sigma_in = (np.bincount(cu[intra], weights=lg.weights[intra], minlength=count)
                + 2.0 * np.bincount(assignment, weights=lg.self_loops, minlength=count))
    return sigma_tot, sigma_in


def _compact(labels: np.ndarray):
    """Relabel to 0..c-1 in order of first appearance."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.ravel()], first.size


@dataclass(frozen=True)
class Partition:
    """Community id per node with cached per-community weight sums.

    ``sigma_tot[c]`` is the summed weighted degree of community ``c`` and
    ``sigma_in[c]`` twice the weight of edges inside it.
    """

    assignment: np.ndarray
    community_count: int
    sigma_tot: np.ndarray
    sigma_in: np.ndarray

    @classmethod
    def from_assignment(cls, g, labels, relabel: bool = True) -> "Partition":
        """Partition of ``g`` from one community label per node.

        With ``relabel`` the labels are compacted to ``0..c-1`` in order of
        first appearance; without it they must already be compact.
        """
        lg = _as_level(g)
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (lg.node_count,):
            raise ValueError(f"expected {lg.node_count} labels, got {labels.shape}")
        if relabel:
            assignment, count = _compact(labels)
        else:
            count = int(labels.max()) + 1 if labels.size else 0
            if labels.size and (labels.min() < 0
                                or np.unique(labels).size != count):
                raise ValueError("community ids must be compact 0..c-1")
            assignment = labels.copy()
        assignment.setflags(write=False)
        tot, inn = _community_sums(lg, assignment, count)
        return cls(assignment, count, tot, inn)

    @classmethod
    def singletons(cls, g) -> "Partition":
        return cls.from_assignment(g, np.arange(_as_level(g).node_count))

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == c)

    def communities(self) -> list:
        """Member ids of every community, indexed by community id."""
        order = np.argsort(self.assignment, kind="stable")
        bounds = np.cumsum(np.bincount(self.assignment, minlength=self.community_count))
        return np.split(order, bounds[:-1])

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.community_count)


def _q_from_sums(sigma_tot, sigma_in, m):
    m2 = 2.0 * m
    return float(np.sum(sigma_in / m2 - (sigma_tot / m2) ** 2))


def modularity(g, p: Partition) -> float:
    """Newman modularity of ``p`` on ``g``.

    Evaluated per community as ``sum(sigma_in/2m - (sigma_tot/2m)**2)``.
    Raises :class:`UndefinedModularityError` when the graph has no weight.
    """
    lg = _as_level(g)
    m = lg.total_weight()
    if m <= 0.0:
        raise UndefinedModularityError("modularity is undefined on a graph with no edges")
    if p.assignment.shape != (lg.node_count,):
        raise ValueError("partition does not match the graph")
    q = _q_from_sums(p.sigma_tot, p.sigma_in, m)
    if not -1.0 - 1e-12 <= q <= 1.0 + 1e-12:
        raise AssertionError(f"modularity {q} outside [-1, 1]")
    return q


def aggregate(g, p: Partition) -> AggregatedGraph:
    """Collapse every community of ``p`` into a single node."""
    return _aggregate(_as_level(g), p.assignment, p.community_count)


def _aggregate(lg: AggregatedGraph, comm: np.ndarray, count: int) -> AggregatedGraph:
    n = lg.node_count
    rows = np.repeat(np.arange(n), np.diff(lg.indptr))
    upper = rows < lg.indices
    cu, cv, w = comm[rows[upper]], comm[lg.indices[upper]], lg.weights[upper]
    intra = cu == cv
    loops = (np.bincount(comm, weights=lg.self_loops, minlength=count)
             + np.bincount(cu[intra], weights=w[intra], minlength=count))
    a = np.minimum(cu, cv)[~intra]
    b = np.maximum(cu, cv)[~intra]
    key, inverse = np.unique(a * count + b, return_inverse=True)
    summed = np.bincount(inverse.ravel(), weights=w[~intra], minlength=key.size)
    indptr, indices, weights = _csr(count, key // count, key % count, summed)
    return AggregatedGraph(indptr, indices, weights, loops)


class LevelInfo(NamedTuple):
    level: int
    node_count: int
    modularity: float


class LouvainResult(NamedTuple):
    partition: Partition
    modularity: float
    levels: list


def _move_nodes(lg: AggregatedGraph, order, min_gain: float):
    """Local-move phase on one level; returns (community per node, moved?)."""
    indptr = lg.indptr.tolist()
    indices = lg.indices.tolist()
    weights = lg.weights.tolist()
    loops = lg.self_loops.tolist()
    k = lg.weighted_degrees.tolist()
    m = lg.total_weight()
    scale = 2.0 * m * m
    comm = list(range(lg.node_count))
    tot = list(k)
    inn = [2.0 * x for x in loops]
    moved = False
    while True:
        moves = 0
        for i in order:
            ki = k[i]
            ci = comm[i]
            links = {}
            for p in range(indptr[i], indptr[i + 1]):
                c = comm[indices[p]]
                links[c] = links.get(c, 0.0) + weights[p]
            own = links.get(ci, 0.0)
            tot[ci] -= ki
            inn[ci] -= 2.0 * (own + loops[i])
            # gain of (re)inserting i into each candidate, i already removed
            stay = own / m - tot[ci] * ki / scale
            best, best_gain = ci, stay
            for c in sorted(links):
                if c == ci:
                    continue
                gain = links[c] / m - tot[c] * ki / scale
                if gain > best_gain and gain - stay > min_gain:
                    best, best_gain = c, gain
            tot[best] += ki
            inn[best] += 2.0 * (links.get(best, 0.0) + loops[i])
            if best != ci:
                comm[i] = best
                moves += 1
        if not moves:
            break
        moved = True
    return np.asarray(comm, dtype=np.int64), moved, tot, inn


def louvain(g, min_gain: float = DEFAULT_MIN_GAIN, rng_seed=None) -> LouvainResult:
    """Partition ``g`` by Louvain modularity maximisation.

    Parameters
    ----------
    g : SimilarityGraph or AggregatedGraph
    min_gain : float
        A node moves only if that raises modularity by more than this; a
        level that improves modularity by no more than this ends the run.
    rng_seed : int, optional
        If given, nodes are visited in a seeded random order at every level;
        otherwise in ascending id order.

    Returns
    -------
    LouvainResult
        ``(partition, modularity, levels)`` where ``levels`` holds one
        :class:`LevelInfo` per level that changed the partition.
    """
    if min_gain < 0:
        raise ValueError("min_gain must be non-negative")
    lg = _as_level(g)
    m = lg.total_weight()
    if m <= 0.0:
        raise UndefinedModularityError("modularity is undefined on a graph with no edges")
    rng = np.random.default_rng(rng_seed) if rng_seed is not None else None
    assignment = np.arange(lg.node_count)
    tot, inn = _community_sums(lg, assignment, lg.node_count)
    q = _q_from_sums(tot, inn, m)
    levels = []
    while True:
        n = lg.node_count
        order = range(n) if rng is None else rng.permutation(n).tolist()
        comm, moved, tot, inn = _move_nodes(lg, order, min_gain)
        if not moved:
            break
        new_q = _q_from_sums(np.asarray(tot), np.asarray(inn), m)
        if new_q - q <= min_gain:
            break
        comm, count = _compact(comm)
        assignment = comm[assignment]
        q = new_q
        levels.append(LevelInfo(len(levels), n, q))
        lg = _aggregate(lg, comm, count)
    if not levels:
        levels.append(LevelInfo(0, lg.node_count, q))
    return LouvainResult(Partition.from_assignment(g, assignment), q, levels)


# -- partition TSV ----------------------------------------------------------

def format_partition(g: SimilarityGraph, p: Partition) -> str:
    """``word<TAB>community_id`` lines sorted by word."""
    rows = sorted(zip(g.labels, p.assignment.tolist()),
                  key=lambda r: word_sort_key(r[0]))
    return "".join(f"{w}\t{c}\n" for w, c in rows)


def load_partition(stream, g: SimilarityGraph) -> Partition:
    """Read a partition TSV that must cover exactly the nodes of ``g``.

    Community ids are kept when already compact, otherwise relabelled.
    """
    labels = np.full(g.node_count, -1, dtype=np.int64)
    lineno = 0
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8", errors="surrogateescape")
        parts = raw.rstrip("\r\n").split("\t")
        if len(parts) != 2 or not parts[0]:
            raise ParseError("malformed", "expected 'word<TAB>community_id'", lineno)
        word, text = parts
        try:
            c = int(text)
        except ValueError:
            raise ParseError("malformed", f"community id {text!r} is not an integer", lineno)
        if c < 0:
            raise ParseError("malformed", "community id must be non-negative", lineno)
        try:
            i = g.index_of(word)
        except KeyError:
            raise ParseError("unknown", f"word {word!r} is not in the graph", lineno)
        if labels[i] >= 0:
            raise ParseError("duplicate", f"word {word!r} assigned twice", lineno)
        labels[i] = c
    missing = np.flatnonzero(labels < 0)
    if missing.size:
        raise ParseError(
            "missing", f"{missing.size} graph nodes have no community, "
            f"e.g. {g.labels[missing[0]]!r}", lineno)
    compact = labels.size == 0 or np.unique(labels).size == labels.max() + 1
    return Partition.from_assignment(g, labels, relabel=not compact)
