"""Weighted betweenness centrality and per-community seed words.

Similarities are turned into distances before any shortest-path search, so
that closely related words are near each other.  Betweenness is Brandes'
accumulation over single-source Dijkstra runs; sources are processed in
fixed-size blocks whose contributions are summed in a fixed order, so the
result does not depend on the number of threads.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum

import numba
import numpy as np

from .community import Partition
from .embedding import word_sort_key
from .graph import SimilarityGraph, subgraph

# path lengths closer than this count as equal
PATH_TOLERANCE = 1e-12
DEFAULT_SIZE_CUTOFF = 20_000
DEFAULT_TOP_R = 10
_SOURCE_BLOCK = 64

# skip the TBB probe; it warns on older system TBB builds
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


class DistanceTransform(str, Enum):
    ONE_MINUS_S = "one_minus_s"
    RECIPROCAL = "reciprocal"


def distance_of(similarity: float, transform=DistanceTransform.ONE_MINUS_S) -> float:
    """Edge length for a similarity in (0, 1): ``1 - s`` or ``1 / s``."""
    if not 0.0 < similarity < 1.0:
        raise ValueError(f"similarity {similarity} outside (0, 1)")
    if DistanceTransform(transform) is DistanceTransform.RECIPROCAL:
        return 1.0 / similarity
    return 1.0 - similarity


def edge_distances(weights: np.ndarray, transform=DistanceTransform.ONE_MINUS_S) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size and not ((weights > 0.0) & (weights < 1.0)).all():
        raise ValueError("betweenness needs every edge weight in (0, 1)")
    if DistanceTransform(transform) is DistanceTransform.RECIPROCAL:
        return 1.0 / weights
    return 1.0 - weights


@numba.njit(cache=True)
def _dependencies(s, indptr, indices, dist, tol, delta):
    """Brandes dependency of source ``s`` on every node, written to ``delta``."""
    n = indptr.size - 1
    d = np.full(n, np.inf)
    sigma = np.zeros(n)
    pos = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    count = 0
    d[s] = 0.0
    heap = [(0.0, s)]
    while heap:
        dv, v = heapq.heappop(heap)
        if pos[v] >= 0:
            continue
        pos[v] = count
        order[count] = v
        count += 1
        for p in range(indptr[v], indptr[v + 1]):
            w = indices[p]
            alt = dv + dist[p]
            if alt < d[w]:
                d[w] = alt
                heapq.heappush(heap, (alt, w))
    # predecessors: settled earlier and on a shortest path within tolerance
    sigma[s] = 1.0
    for t in range(1, count):
        w = order[t]
        for p in range(indptr[w], indptr[w + 1]):
            v = indices[p]
            if 0 <= pos[v] < t and d[v] + dist[p] <= d[w] + tol:
                sigma[w] += sigma[v]
    delta[:] = 0.0
    for t in range(count - 1, 0, -1):
        w = order[t]
        coeff = (1.0 + delta[w]) / sigma[w]
        for p in range(indptr[w], indptr[w + 1]):
            v = indices[p]
            if 0 <= pos[v] < t and d[v] + dist[p] <= d[w] + tol:
                delta[v] += sigma[v] * coeff
    delta[s] = 0.0


@numba.njit(parallel=True, cache=True)
def _dependency_block(sources, indptr, indices, dist, tol, out):
    for b in numba.prange(sources.size):
        _dependencies(sources[b], indptr, indices, dist, tol, out[b])


@dataclass(frozen=True)
class CentralityTable:
    """Betweenness per node of one graph.

    ``scores`` are normalised by ``2/((n-1)(n-2))`` when ``normalized`` is
    set; ``raw`` always holds the unnormalised values.
    """

    labels: tuple
    raw: np.ndarray
    normalized: bool
    scale: float = 1.0

    @property
    def scores(self) -> np.ndarray:
        return self.raw * self.scale if self.normalized else self.raw

    @property
    def normalized_scores(self) -> np.ndarray:
        return self.raw * self.scale

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.scores.tolist()))


def normalization_scale(n: int) -> float:
    return 2.0 / ((n - 1) * (n - 2)) if n > 2 else 1.0


def betweenness(g: SimilarityGraph, transform=DistanceTransform.ONE_MINUS_S,
                normalize: bool = False, sources=None) -> CentralityTable:
    """Betweenness centrality with similarity-derived edge lengths.

    Each unordered pair of endpoints contributes the fraction of its
    shortest paths that pass through a node; endpoints themselves are not
    credited.  Equal-length paths (within ``PATH_TOLERANCE``) are all
    counted.  Unreachable pairs contribute nothing.

    Parameters
    ----------
    g : SimilarityGraph
        Edge weights must lie in (0, 1).
    transform : DistanceTransform or str
        ``"one_minus_s"`` (default) or ``"reciprocal"``.
    normalize : bool
        Report scores scaled by ``2/((n-1)(n-2))``.
    sources : array_like of int, optional
        Restrict accumulation to these sources and rescale by
        ``n / len(sources)``, an unbiased estimate of the exact scores.
    """
    n = g.node_count
    dist = edge_distances(g.weights, transform)
    if sources is None:
        sources = np.arange(n, dtype=np.int64)
        factor = 0.5
    else:
        sources = np.unique(np.asarray(sources, dtype=np.int64))
        if sources.size and (sources[0] < 0 or sources[-1] >= n):
            raise IndexError("source id out of range")
        factor = 0.5 * n / sources.size if sources.size else 0.0
    total = np.zeros(n)
    if n > 2 and g.edge_count:
        block = np.empty((_SOURCE_BLOCK, n))
        for start in range(0, sources.size, _SOURCE_BLOCK):
            chunk = sources[start:start + _SOURCE_BLOCK]
            out = block[:chunk.size]
            _dependency_block(chunk, g.indptr, g.indices, dist, PATH_TOLERANCE, out)
            for row in out:
                total += row
    raw = total * factor
    raw.setflags(write=False)
    return CentralityTable(g.labels, raw, bool(normalize), normalization_scale(n))


@dataclass(frozen=True)
class Seed:
    word: str
    score: float
    normalized_score: float


@dataclass(frozen=True)
class CommunitySeeds:
    id: int
    size: int
    members: tuple
    seeds: list
    approximate: bool = False


@dataclass
class SeedReport:
    communities: list
    transform: str = DistanceTransform.ONE_MINUS_S.value
    normalized: bool = False
    schema_version: int = 1
    extra: dict = field(default_factory=dict)

    def to_dict(self, members_sample: int = 10) -> dict:
        out = {"schema_version": self.schema_version,
               "transform": self.transform,
               "normalized": self.normalized}
        out.update(self.extra)
        out["communities"] = [
            {"id": c.id,
             "size": c.size,
             "approximate": c.approximate,
             "seeds": [{"word": s.word, "score": s.score,
                        "normalized_score": s.normalized_score} for s in c.seeds],
             "members_sample": list(c.members[:members_sample])}
            for c in self.communities
        ]
        return out


def rank_seeds(table: CentralityTable, r: int) -> list:
    """Top ``r`` nodes by score, ties broken by the word's byte order."""
    scores = table.scores.tolist()
    normed = table.normalized_scores.tolist()
    order = sorted(range(len(scores)),
                   key=lambda i: (-scores[i], word_sort_key(table.labels[i])))
    return [Seed(table.labels[i], scores[i], normed[i]) for i in order[:r]]


def extract_seeds(g: SimilarityGraph, p: Partition, r: int = DEFAULT_TOP_R,
                  transform=DistanceTransform.ONE_MINUS_S, normalize: bool = False,
                  approximate: bool = False, size_cutoff: int = DEFAULT_SIZE_CUTOFF,
                  sample_size: int = 1024, rng_seed: int = 0) -> SeedReport:
    """Rank seed words inside every community.

    Betweenness is computed on each community's induced subgraph.  With
    ``approximate`` set, communities larger than ``size_cutoff`` use
    ``sample_size`` uniformly sampled sources instead of all of them.
    """
    if r < 1:
        raise ValueError("r must be a positive integer")
    if p.assignment.shape != (g.node_count,):
        raise ValueError("partition does not match the graph")
    transform = DistanceTransform(transform)
    rng = np.random.default_rng(rng_seed)
    communities = []
    for cid, members in enumerate(p.communities()):
        sub = subgraph(g, members)
        sources = None
        if approximate and sub.node_count > size_cutoff:
            sources = rng.choice(sub.node_count, size=min(sample_size, sub.node_count),
                                 replace=False)
        table = betweenness(sub, transform, normalize, sources)
        words = tuple(sorted(sub.labels, key=word_sort_key))
        communities.append(CommunitySeeds(cid, sub.node_count, words,
                                          rank_seeds(table, r), sources is not None))
    return SeedReport(communities, transform.value, bool(normalize))
