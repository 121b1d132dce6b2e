"""Word-similarity graphs, Louvain communities and betweenness seed words."""

from .centrality import (CentralityTable, DistanceTransform, SeedReport, betweenness,
                         distance_of, extract_seeds)
from .community import (AggregatedGraph, LouvainResult, Partition, aggregate, louvain,
                        modularity)
from .embedding import (EmbeddingStore, SimilarNeighbor, cosine_similarity,
                        generate_synthetic, parse_vectors, top_k_neighbors)
from .graph import (SimilarityGraph, build_graph, load_edges, save_edges, subgraph,
                    weighted_degree)
from .metrics import adjusted_rand_index, karate_club

__version__ = "0.1.0"

__all__ = [
    "AggregatedGraph", "CentralityTable", "DistanceTransform", "EmbeddingStore",
    "LouvainResult", "Partition", "SeedReport", "SimilarNeighbor", "SimilarityGraph",
    "adjusted_rand_index", "aggregate", "betweenness", "build_graph", "cosine_similarity",
    "distance_of", "extract_seeds", "generate_synthetic", "karate_club", "load_edges",
    "louvain", "modularity", "parse_vectors", "save_edges", "subgraph", "top_k_neighbors",
    "weighted_degree",
]
