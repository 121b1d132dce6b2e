"""Undirected weighted similarity graph and its file formats.

The graph is stored as CSR arrays with both directions of every edge, so
neighbour iteration is a slice.  Node ids are dense integers; each node
carries its word as a label.
"""

from __future__ import annotations

import io
import xml.etree.ElementTree as ET

import numpy as np

from .embedding import (DEFAULT_FLOOR, DEFAULT_K, EmbeddingStore, iter_top_k,
                        word_sort_key)
from .errors import DomainError, ParseError

# Edge weights are kept inside the open unit interval at a resolution the
# 6-decimal edge file can represent.
MIN_WEIGHT = 1e-6
MAX_WEIGHT = 1.0 - 1e-6


class SimilarityGraph:
    """Immutable undirected graph with positive edge weights.

    Use :meth:`from_edges` to construct one.  ``parent_ids`` is set on
    induced subgraphs and maps each local node id to its id in the graph the
    subgraph was cut from.
    """

    def __init__(self, labels, indptr, indices, weights, parent_ids=None):
        self.labels = tuple(labels)
        self.indptr = indptr
        self.indices = indices
        self.weights = weights
        self.parent_ids = parent_ids
        for arr in (indptr, indices, weights):
            arr.setflags(write=False)
        self._degrees = None
        self._index = None

    @classmethod
    def from_edges(cls, labels, edges, parent_ids=None) -> "SimilarityGraph":
        """Build from ``(i, j, weight)`` triples, one per undirected edge.

        Raises ``ValueError`` on self-loops, repeated pairs, out-of-range ids
        or weights that are not positive and finite.
        """
        labels = tuple(labels)
        edges = list(edges)
        if edges:
            src = np.fromiter((e[0] for e in edges), np.int64, len(edges))
            dst = np.fromiter((e[1] for e in edges), np.int64, len(edges))
            w = np.fromiter((e[2] for e in edges), np.float64, len(edges))
        else:
            src = dst = np.empty(0, np.int64)
            w = np.empty(0, np.float64)
        return cls._from_arrays(labels, src, dst, w, parent_ids)

    @classmethod
    def _from_arrays(cls, labels, src, dst, w, parent_ids=None):
        n = len(labels)
        if src.size:
            if min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n:
                raise ValueError("edge endpoint out of range")
            if (src == dst).any():
                raise ValueError("self-loops are not allowed")
            if not (np.isfinite(w).all() and (w > 0).all()):
                raise ValueError("edge weights must be positive and finite")
            lo, hi = np.minimum(src, dst), np.maximum(src, dst)
            key = lo * n + hi
            if np.unique(key).size != key.size:
                raise ValueError("parallel edges are not allowed")
        rows = np.concatenate([src, dst])
        cols = np.concatenate([dst, src])
        ws = np.concatenate([w, w])
        order = np.lexsort((cols, rows))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(labels, indptr, cols[order].astype(np.int64),
                   ws[order].astype(np.float64), parent_ids)

    @property
    def node_count(self) -> int:
        return len(self.labels)

    @property
    def edge_count(self) -> int:
        return self.indices.size // 2

    def __len__(self):
        return len(self.labels)

    def __repr__(self):
        return f"SimilarityGraph(nodes={self.node_count}, edges={self.edge_count})"

    def index_of(self, label: str) -> int:
        if self._index is None:
            self._index = {w: i for i, w in enumerate(self.labels)}
        return self._index[label]

    def neighbors(self, i: int):
        """``(neighbour ids, weights)`` of node ``i``, ids ascending."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])

    @property
    def weighted_degrees(self) -> np.ndarray:
        if self._degrees is None:
            rows = np.repeat(np.arange(self.node_count), np.diff(self.indptr))
            deg = np.bincount(rows, weights=self.weights, minlength=self.node_count)
            deg.setflags(write=False)
            self._degrees = deg
        return self._degrees

    def total_weight(self) -> float:
        """Sum of edge weights, each undirected edge once (``m``)."""
        return float(self.edge_arrays()[2].sum())

    def edge_arrays(self):
        """``(u, v, w)`` arrays with ``u < v``, sorted by ``(u, v)``."""
        rows = np.repeat(np.arange(self.node_count), np.diff(self.indptr))
        keep = rows < self.indices
        return rows[keep], self.indices[keep], self.weights[keep]

    def edges(self):
        u, v, w = self.edge_arrays()
        return list(zip(u.tolist(), v.tolist(), w.tolist()))

    def validate(self) -> None:
        """Check the structural invariants; raise ``AssertionError`` if broken."""
        n = self.node_count
        assert self.indptr.shape == (n + 1,) and self.indptr[0] == 0
        assert self.indptr[-1] == self.indices.size == self.weights.size
        for i in range(n):
            nbrs, ws = self.neighbors(i)
            assert (np.diff(nbrs) > 0).all(), f"adjacency of {i} not strictly sorted"
            assert i not in nbrs, f"self-loop on {i}"
            for j, w in zip(nbrs.tolist(), ws.tolist()):
                back_n, back_w = self.neighbors(j)
                pos = np.searchsorted(back_n, i)
                assert pos < back_n.size and back_n[pos] == i, f"edge {i}-{j} one-sided"
                assert back_w[pos] == w, f"edge {i}-{j} weight differs by direction"
        assert (self.weights > 0).all()


def weighted_degree(g: SimilarityGraph, i: int) -> float:
    """Sum of the weights of edges incident on node ``i``."""
    if not 0 <= i < g.node_count:
        raise IndexError(f"invalid node id {i}")
    return float(g.weighted_degrees[i])


def build_graph(store: EmbeddingStore, k: int = DEFAULT_K,
                floor: float = DEFAULT_FLOOR) -> SimilarityGraph:
    """Similarity graph over the full vocabulary.

    ``{i, j}`` is an edge when either word is among the other's ``k`` nearest
    neighbours with similarity at least ``floor``.  When both directions are
    present the weight from the lower node id's query is used, so the stored
    weight is one number.  Weights are clipped to
    ``[MIN_WEIGHT, MAX_WEIGHT]``.
    """
    if len(store) == 0:
        raise DomainError("cannot build a graph from an empty store")
    if k < 0:
        raise ValueError("k must be non-negative")
    src, dst, sim = [], [], []
    for q, nbrs in iter_top_k(store, range(len(store)), k, floor):
        for j, s in nbrs:
            src.append(q)
            dst.append(j)
            sim.append(s)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    sim = np.asarray(sim, dtype=np.float64)
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    from_lower = src == lo
    order = np.lexsort((~from_lower, hi, lo))
    lo, hi, sim = lo[order], hi[order], sim[order]
    first = np.ones(lo.size, dtype=bool)
    first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    w = np.clip(sim[first], MIN_WEIGHT, MAX_WEIGHT)
    return SimilarityGraph._from_arrays(store.words, lo[first], hi[first], w)


def subgraph(g: SimilarityGraph, nodes) -> SimilarityGraph:
    """Induced subgraph on ``nodes`` with ids compacted in ascending order."""
    keep = np.unique(np.fromiter(nodes, dtype=np.int64))
    if keep.size and (keep[0] < 0 or keep[-1] >= g.node_count):
        raise IndexError("unknown node id in subgraph selection")
    local = np.full(g.node_count, -1, dtype=np.int64)
    local[keep] = np.arange(keep.size)
    u, v, w = g.edge_arrays()
    inside = (local[u] >= 0) & (local[v] >= 0)
    labels = [g.labels[i] for i in keep.tolist()]
    return SimilarityGraph._from_arrays(
        labels, local[u[inside]], local[v[inside]], w[inside], parent_ids=keep)


# -- edge TSV ---------------------------------------------------------------

def load_edges(stream, extra_nodes=()) -> SimilarityGraph:
    """Parse ``word_a<TAB>word_b<TAB>weight`` lines into a graph.

    Node ids follow the byte order of the words.  ``extra_nodes`` adds words
    that have no edges (isolated vocabulary words).
    """
    triples = []
    seen = {}
    lineno = 0
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8", errors="surrogateescape")
        line = raw.rstrip("\r\n")
        parts = line.split("\t")
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise ParseError("malformed", f"expected 3 tab-separated fields: {line!r}", lineno)
        a, b, text = parts
        if a == b:
            raise ParseError("self-loop", f"self-loop on {a!r}", lineno)
        try:
            w = float(text)
        except ValueError:
            raise ParseError("malformed", f"weight {text!r} is not a number", lineno)
        if not 0.0 < w < 1.0:
            raise ParseError("weight", f"weight {text} outside (0, 1)", lineno)
        key = (a, b) if word_sort_key(a) < word_sort_key(b) else (b, a)
        if key in seen:
            raise ParseError(
                "duplicate", f"edge {key[0]!r}-{key[1]!r} repeats line {seen[key]}", lineno)
        seen[key] = lineno
        triples.append((a, b, w))
    words = {a for a, _, _ in triples} | {b for _, b, _ in triples} | set(extra_nodes)
    labels = sorted(words, key=word_sort_key)
    index = {w: i for i, w in enumerate(labels)}
    return SimilarityGraph.from_edges(
        labels, ((index[a], index[b], w) for a, b, w in triples))


def read_edges(path, extra_nodes=()) -> SimilarityGraph:
    with open(path, "rb") as fh:
        return load_edges(fh, extra_nodes)


def save_edges(g: SimilarityGraph) -> str:
    """Canonical edge TSV: endpoints in byte order, lines sorted, 6 decimals."""
    rows = []
    for i, j, w in g.edges():
        a, b = g.labels[i], g.labels[j]
        if word_sort_key(b) < word_sort_key(a):
            a, b = b, a
        text = f"{w:.6f}"
        if not 0.0 < float(text) < 1.0:
            raise ValueError(f"weight {w!r} of edge {a!r}-{b!r} not representable in (0, 1)")
        rows.append((word_sort_key(a), word_sort_key(b), f"{a}\t{b}\t{text}\n"))
    rows.sort()
    return "".join(r[2] for r in rows)


def write_edges(g: SimilarityGraph, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_edges(g).encode("utf-8", errors="surrogateescape"))


# -- export formats ---------------------------------------------------------

def format_graphml(g: SimilarityGraph) -> str:
    """GraphML with a ``label`` node attribute and ``weight`` edge attribute."""
    root = ET.Element("graphml", xmlns="http://graphml.graphdrawing.org/xmlns")
    ET.SubElement(root, "key", {"id": "d0", "for": "node",
                                "attr.name": "label", "attr.type": "string"})
    ET.SubElement(root, "key", {"id": "d1", "for": "edge",
                                "attr.name": "weight", "attr.type": "double"})
    graph = ET.SubElement(root, "graph", id="G", edgedefault="undirected")
    for i, label in enumerate(g.labels):
        node = ET.SubElement(graph, "node", id=f"n{i}")
        ET.SubElement(node, "data", key="d0").text = label
    for i, j, w in g.edges():
        edge = ET.SubElement(graph, "edge", source=f"n{i}", target=f"n{j}")
        ET.SubElement(edge, "data", key="d1").text = repr(w)
    ET.indent(root)
    return ('<?xml version="1.0" encoding="UTF-8"?>\n'
            + ET.tostring(root, encoding="unicode") + "\n")


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_dot(g: SimilarityGraph) -> str:
    """Graphviz DOT with the similarity as edge label."""
    out = io.StringIO()
    out.write("graph G {\n")
    for i, label in enumerate(g.labels):
        out.write(f"  n{i} [label={_dot_quote(label)}];\n")
    for i, j, w in g.edges():
        out.write(f'  n{i} -- n{j} [label="{w:.6f}", weight={w!r}];\n')
    out.write("}\n")
    return out.getvalue()
