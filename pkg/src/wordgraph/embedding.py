"""Word vectors: parsing, similarity queries and synthetic generation.

Vectors are kept exactly as read; unit normalisation happens only inside
the similarity routines.  Neighbour queries are exact brute force so that
every result can be checked against an all-pairs oracle.
"""

from __future__ import annotations

import io
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ParseError

DEFAULT_K = 25
DEFAULT_FLOOR = 0.5

# rows of the similarity matrix materialised at once by the batched queries
_CHUNK = 1024


class SimilarNeighbor(NamedTuple):
    word_index: int
    similarity: float


def _decode(line) -> str:
    if isinstance(line, bytes):
        return line.decode("utf-8", errors="surrogateescape")
    return line


def word_sort_key(word: str) -> bytes:
    """Byte-wise ordering key for tokens (tokens compare as raw bytes)."""
    return word.encode("utf-8", errors="surrogateescape")


class EmbeddingStore:
    """Immutable vocabulary of words with one real vector each.

    Parameters
    ----------
    words : sequence of str
        Distinct tokens; the position of a token is its node id.
    vectors : array_like, shape (len(words), dim)
        Finite, non-zero rows.
    """

    def __init__(self, words, vectors):
        words = tuple(words)
        vectors = np.array(vectors, dtype=np.float64, copy=True)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d array")
        if vectors.shape[0] != len(words):
            raise ValueError(
                f"{len(words)} words but {vectors.shape[0]} vector rows")
        if vectors.shape[1] < 1:
            raise ValueError("dimension must be positive")
        index = {}
        for i, w in enumerate(words):
            if not w or any(c in w for c in " \t\r\n"):
                raise ValueError(f"invalid token {w!r}")
            if w in index:
                raise ValueError(f"duplicate token {w!r}")
            index[w] = i
        if not np.isfinite(vectors).all():
            raise ValueError("vectors contain non-finite components")
        zero = ~vectors.any(axis=1)
        if zero.any():
            raise ValueError(
                f"zero vector for token {words[int(np.argmax(zero))]!r}")
        vectors.setflags(write=False)
        self._words = words
        self._index = index
        self._vectors = vectors
        self._unit = None

    @property
    def words(self) -> tuple:
        return self._words

    @property
    def vectors(self) -> np.ndarray:
        return self._vectors

    @property
    def dim(self) -> int:
        return self._vectors.shape[1]

    def __len__(self):
        return len(self._words)

    def __contains__(self, word):
        return word in self._index

    def index_of(self, word: str) -> int:
        return self._index[word]

    def vector(self, word: str) -> np.ndarray:
        return self._vectors[self._index[word]]

    @property
    def unit_vectors(self) -> np.ndarray:
        """Row-normalised copy of the vectors, computed once."""
        if self._unit is None:
            norms = np.sqrt(np.einsum("ij,ij->i", self._vectors, self._vectors))
            unit = self._vectors / norms[:, None]
            unit.setflags(write=False)
            self._unit = unit
        return self._unit

    def __eq__(self, other):
        if not isinstance(other, EmbeddingStore):
            return NotImplemented
        return (self._words == other._words
                and np.array_equal(self._vectors, other._vectors))

    def __repr__(self):
        return f"EmbeddingStore(words={len(self)}, dim={self.dim})"


def parse_vectors(stream: Iterable) -> EmbeddingStore:
    """Read word2vec text format.

    The first line is ``"<count> <dim>"``; each following line is a token and
    ``dim`` components separated by single spaces.  Lines may be ``str`` or
    ``bytes`` (decoded as UTF-8, undecodable bytes preserved).  Trailing
    spaces and CRLF endings are tolerated.

    Raises
    ------
    ParseError
        With ``kind`` one of ``header``, ``field``, ``dimension``, ``number``,
        ``nonfinite``, ``zero``, ``duplicate`` or ``count``.
    """
    lines = iter(stream)
    try:
        header = _decode(next(lines))
    except StopIteration:
        raise ParseError("header", "empty input, expected '<count> <dim>'", 1)
    fields = header.rstrip("\r\n").rstrip(" ").split(" ")
    try:
        if len(fields) != 2:
            raise ValueError
        count, dim = int(fields[0]), int(fields[1])
    except ValueError:
        raise ParseError("header", f"malformed header {header.rstrip()!r}", 1)
    if count < 0 or dim < 1:
        raise ParseError("header", f"invalid count/dim in header {header.rstrip()!r}", 1)

    words = []
    seen = {}
    vectors = np.empty((count, dim), dtype=np.float64)
    lineno = 1
    trailing_blank = 0
    for raw in lines:
        lineno += 1
        line = _decode(raw).rstrip("\r\n").rstrip(" ")
        if not line:
            trailing_blank += 1
            continue
        if trailing_blank:
            raise ParseError("field", "blank line inside vector block", lineno - 1)
        parts = line.split(" ")
        token = parts[0]
        if not token or "" in parts or "\t" in token:
            raise ParseError("field", "empty field or non-single-space delimiter", lineno)
        if len(parts) - 1 != dim:
            raise ParseError(
                "dimension", f"row has {len(parts) - 1} of {dim} components", lineno)
        if len(words) >= count:
            raise ParseError(
                "count", f"header declares {count} rows but more are present", lineno)
        if token in seen:
            raise ParseError(
                "duplicate", f"token {token!r} already defined on line {seen[token]}", lineno)
        try:
            row = [float(x) for x in parts[1:]]
        except ValueError:
            raise ParseError("number", "component is not a decimal number", lineno)
        row = np.asarray(row)
        if not np.isfinite(row).all():
            raise ParseError("nonfinite", "non-finite component", lineno)
        if not row.any():
            raise ParseError("zero", f"zero vector for token {token!r}", lineno)
        seen[token] = lineno
        vectors[len(words)] = row
        words.append(token)
    if len(words) != count:
        raise ParseError(
            "count", f"header declares {count} rows but {len(words)} were read", lineno)
    return EmbeddingStore(words, vectors)


def load_vectors(path) -> EmbeddingStore:
    with open(path, "rb") as fh:
        return parse_vectors(fh)


def format_vectors(store: EmbeddingStore) -> str:
    """Serialise to word2vec text format with 6-decimal components."""
    out = io.StringIO()
    out.write(f"{len(store)} {store.dim}\n")
    for word, row in zip(store.words, store.vectors):
        out.write(word)
        for x in row:
            out.write(f" {x:.6f}")
        out.write("\n")
    return out.getvalue()


def save_vectors(store: EmbeddingStore, path) -> None:
    with open(path, "wb") as fh:
        fh.write(format_vectors(store).encode("utf-8", errors="surrogateescape"))


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two non-zero vectors.

    Evaluated as ``dot(a, b) / sqrt(dot(a, a) * dot(b, b))``, which is
    symmetric bit for bit and returns exactly 1.0 for ``(v, v)``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    aa = float(np.dot(a, a))
    bb = float(np.dot(b, b))
    if aa == 0.0 or bb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    value = float(np.dot(a, b)) / np.sqrt(aa * bb)
    return float(min(1.0, max(-1.0, value)))


def _check_floor(floor):
    if not 0.0 < floor < 1.0:
        raise ValueError(f"floor must lie in (0, 1), got {floor}")


def _rank_row(sims: np.ndarray, k: int, floor: float) -> list:
    """Top ``k`` entries of one similarity row; ties go to the lower id."""
    n = sims.shape[0]
    if k <= 0 or n == 0:
        return []
    if k < n:
        part = np.argpartition(-sims, k - 1)[:k]
        threshold = sims[part].min()
        cand = np.flatnonzero(sims >= max(threshold, floor))
    else:
        cand = np.flatnonzero(sims >= floor)
    cand = cand[sims[cand] > 0.0]
    if cand.size == 0:
        return []
    order = np.lexsort((cand, -sims[cand]))[:k]
    picked = cand[order]
    return [SimilarNeighbor(int(j), float(min(1.0, sims[j]))) for j in picked]


def _similarity_block(unit: np.ndarray, block: int) -> np.ndarray:
    """Similarity rows for node ids ``[block*_CHUNK, (block+1)*_CHUNK)``.

    BLAS results depend on operand shapes, so rows are always produced in
    the same fixed blocks; a query then sees identical values whether it is
    asked alone or as part of a full sweep.
    """
    start = block * _CHUNK
    stop = min(start + _CHUNK, unit.shape[0])
    sims = unit[start:stop] @ unit.T
    sims[np.arange(stop - start), np.arange(start, stop)] = -np.inf
    return sims


def iter_top_k(store: EmbeddingStore, queries, k: int, floor: float):
    """Yield ``(query, neighbours)`` for each query id in ascending order."""
    _check_floor(floor)
    queries = np.unique(np.asarray(queries, dtype=np.int64))
    n = len(store)
    if queries.size and (queries[0] < 0 or queries[-1] >= n):
        raise IndexError("query id out of range")
    unit = store.unit_vectors
    blocks = queries // _CHUNK
    for b in np.unique(blocks):
        sims = _similarity_block(unit, int(b))
        for q in queries[blocks == b]:
            yield int(q), _rank_row(sims[q - b * _CHUNK], k, floor)


def top_k_neighbors(store: EmbeddingStore, query: int, k: int,
                    floor: float = DEFAULT_FLOOR) -> list:
    """The ``k`` most similar other words with similarity >= ``floor``.

    Non-positive similarities are never returned.  Results are sorted by
    descending similarity, ties by ascending node id.
    """
    if not 0 <= query < len(store):
        raise IndexError(f"invalid node id {query}")
    (_, neighbors), = iter_top_k(store, [query], k, floor)
    return neighbors


def _cluster_centers(rng, num_clusters, dim):
    if dim >= num_clusters:
        # orthonormal centres: pairwise cosine 0
        q, _ = np.linalg.qr(rng.standard_normal((dim, num_clusters)))
        return q.T.copy()
    centers = rng.standard_normal((num_clusters, dim))
    return centers / np.linalg.norm(centers, axis=1, keepdims=True)


def generate_synthetic(num_clusters: int, words_per_cluster: int, dim: int,
                       noise: float = 0.05, rng_seed: int = 0):
    """Embeddings with planted cluster structure.

    Each word ``c<i>_w<j>`` is the unit centre of cluster ``i`` plus isotropic
    Gaussian noise with per-component standard deviation ``noise``,
    renormalised to unit length.  Centres are orthonormal when
    ``dim >= num_clusters``.

    Returns
    -------
    store : EmbeddingStore
    planted_labels : dict
        Word to cluster index.
    """
    if num_clusters < 1 or words_per_cluster < 1 or dim < 1:
        raise ValueError("num_clusters, words_per_cluster and dim must be positive")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    rng = np.random.default_rng(rng_seed)
    centers = _cluster_centers(rng, num_clusters, dim)
    labels = np.repeat(np.arange(num_clusters), words_per_cluster)
    vectors = centers[labels] + noise * rng.standard_normal((labels.size, dim))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    words = [f"c{i}_w{j}" for i in range(num_clusters) for j in range(words_per_cluster)]
    planted = {w: int(c) for w, c in zip(words, labels)}
    return EmbeddingStore(words, vectors), planted
