"""Command-line front end.

Every stage reads and writes files, so stages can be rerun independently.
Progress goes to stderr.  Exit codes:

    0  success
    2  configuration or usage error
    3  input parse error
    4  I/O error
    5  domain error (e.g. modularity of an edgeless graph)
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .centrality import DistanceTransform, extract_seeds
from .community import format_partition, load_partition, louvain
from .config import PipelineConfig, load_config
from .embedding import (format_vectors, generate_synthetic, load_vectors,
                        parse_vectors, word_sort_key)
from .errors import ConfigError, DomainError, ParseError
from .graph import build_graph, format_dot, format_graphml, load_edges, save_edges

log = logging.getLogger("wordgraph")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_IO = 4
EXIT_DOMAIN = 5

SCHEMA_VERSION = 1

EDGES_FILE = "edges.tsv"
NODES_FILE = "nodes.txt"
GRAPHML_FILE = "graph.graphml"
DOT_FILE = "graph.dot"
STATS_FILE = "graph_stats.json"
PARTITION_FILE = "partition.tsv"
SUMMARY_FILE = "communities.json"
SEEDS_FILE = "seeds.json"
MEMBERS_FILE = "members.tsv"
MANIFEST_FILE = "manifest.json"


def _json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _encode(text: str) -> bytes:
    return text.encode("utf-8", errors="surrogateescape")


def _lines(text: str):
    return io.StringIO(text, newline="\n")


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write_outputs(directory, files: dict) -> None:
    """Write all artefacts only once every one of them has been produced."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, data in files.items():
        tmp = directory / f".{name}.tmp"
        tmp.write_bytes(data)
        os.replace(tmp, directory / name)


# -- stage bodies (pure: inputs in, artefact bytes out) ----------------------

def graph_stats(g, k, floor) -> dict:
    _, _, w = g.edge_arrays()
    counts, edges = np.histogram(w, bins=10, range=(0.0, 1.0))
    degree = np.diff(g.indptr)
    return {
        "schema_version": SCHEMA_VERSION,
        "nodes": g.node_count,
        "edges": g.edge_count,
        "isolated_nodes": int((degree == 0).sum()),
        "mean_degree": 2.0 * g.edge_count / g.node_count if g.node_count else 0.0,
        "k": k,
        "floor": floor,
        "weight_histogram": {"bin_edges": [round(x, 6) for x in edges.tolist()],
                             "counts": counts.tolist()},
    }


def run_build_graph(store, k, floor, dot=False) -> dict:
    log.info("building graph over %d words (k=%d, floor=%g)", len(store), k, floor)
    g = build_graph(store, k, floor)
    log.info("graph has %d nodes, %d edges", g.node_count, g.edge_count)
    files = {
        EDGES_FILE: _encode(save_edges(g)),
        NODES_FILE: _encode("".join(f"{w}\n" for w in store.words)),
        GRAPHML_FILE: _encode(format_graphml(g)),
        STATS_FILE: _encode(_json(graph_stats(g, k, floor))),
    }
    if dot:
        files[DOT_FILE] = _encode(format_dot(g))
    return files


def _graph_from(edges_text: str, nodes_text=None):
    extra = nodes_text.split("\n")[:-1] if nodes_text else ()
    return load_edges(_lines(edges_text), extra_nodes=extra)


def run_communities(edges_text, nodes_text, min_gain, rng_seed) -> dict:
    g = _graph_from(edges_text, nodes_text)
    log.info("running Louvain on %d nodes, %d edges", g.node_count, g.edge_count)
    result = louvain(g, min_gain=min_gain, rng_seed=rng_seed)
    p = result.partition
    log.info("found %d communities, Q=%.6f", p.community_count, result.modularity)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "modularity": result.modularity,
        "community_count": p.community_count,
        "min_gain": min_gain,
        "rng_seed": rng_seed,
        "levels": [{"level": lv.level, "nodes": lv.node_count, "modularity": lv.modularity}
                   for lv in result.levels],
        "community_sizes": p.sizes().tolist(),
    }
    return {PARTITION_FILE: _encode(format_partition(g, p)),
            SUMMARY_FILE: _encode(_json(summary))}


def run_seeds(edges_text, nodes_text, partition_text, transform, normalize, top_r,
              members_sample=10, full_members=False) -> dict:
    g = _graph_from(edges_text, nodes_text)
    p = load_partition(_lines(partition_text), g)
    log.info("ranking seeds in %d communities", p.community_count)
    report = extract_seeds(g, p, top_r, transform, normalize)
    files = {SEEDS_FILE: _encode(_json(report.to_dict(members_sample)))}
    if full_members:
        rows = sorted(((c.id, word_sort_key(w), w) for c in report.communities
                       for w in c.members))
        files[MEMBERS_FILE] = _encode("".join(f"{cid}\t{w}\n" for cid, _, w in rows))
    return files


# -- commands --------------------------------------------------------------

def _config(args) -> PipelineConfig:
    base = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    flags = {name: getattr(args, name, None) for name in
             ("vectors_path", "k", "floor", "min_gain", "rng_seed", "transform",
              "normalize", "top_r", "output_dir")}
    return base.override(**flags)


def cmd_gen_synthetic(args) -> int:
    store, planted = generate_synthetic(args.clusters, args.words_per_cluster, args.dim,
                                        args.noise, args.seed)
    outputs = {Path(args.output): _encode(format_vectors(store))}
    if args.labels:
        rows = "".join(f"{w}\t{planted[w]}\n" for w in store.words)
        outputs[Path(args.labels)] = _encode(rows)
    for path, data in outputs.items():
        _write_outputs(path.parent, {path.name: data})
    log.info("wrote %d words to %s", len(store), args.output)
    return EXIT_OK


def cmd_build_graph(args) -> int:
    cfg = _config(args)
    if not cfg.vectors_path:
        raise ConfigError("no vectors file given (--vectors or vectors_path)")
    store = load_vectors(cfg.vectors_path)
    _write_outputs(cfg.output_dir, run_build_graph(store, cfg.k, cfg.floor, args.dot))
    return EXIT_OK


def cmd_communities(args) -> int:
    cfg = _config(args)
    edges = _read_bytes(args.edges).decode("utf-8", errors="surrogateescape")
    nodes = (_read_bytes(args.nodes).decode("utf-8", errors="surrogateescape")
             if args.nodes else None)
    _write_outputs(cfg.output_dir, run_communities(edges, nodes, cfg.min_gain, cfg.rng_seed))
    return EXIT_OK


def cmd_seeds(args) -> int:
    cfg = _config(args)
    edges = _read_bytes(args.edges).decode("utf-8", errors="surrogateescape")
    nodes = (_read_bytes(args.nodes).decode("utf-8", errors="surrogateescape")
             if args.nodes else None)
    partition = _read_bytes(args.partition).decode("utf-8", errors="surrogateescape")
    files = run_seeds(edges, nodes, partition, cfg.transform, cfg.normalize, cfg.top_r,
                      args.members_sample, args.full_members)
    _write_outputs(cfg.output_dir, files)
    return EXIT_OK


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    if not cfg.vectors_path:
        raise ConfigError("no vectors file given (--vectors or vectors_path)")
    timings = {}
    t0 = time.perf_counter()
    raw = _read_bytes(cfg.vectors_path)
    store = parse_vectors(io.BytesIO(raw))
    timings["load_vectors"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    files = run_build_graph(store, cfg.k, cfg.floor)
    timings["build_graph"] = time.perf_counter() - t0

    # downstream stages consume the serialised artefacts, exactly as the
    # standalone commands would
    edges = files[EDGES_FILE].decode("utf-8", errors="surrogateescape")
    nodes = files[NODES_FILE].decode("utf-8", errors="surrogateescape")
    t0 = time.perf_counter()
    files.update(run_communities(edges, nodes, cfg.min_gain, cfg.rng_seed))
    timings["communities"] = time.perf_counter() - t0

    partition = files[PARTITION_FILE].decode("utf-8", errors="surrogateescape")
    t0 = time.perf_counter()
    files.update(run_seeds(edges, nodes, partition, cfg.transform, cfg.normalize,
                           cfg.top_r, args.members_sample, args.full_members))
    timings["seeds"] = time.perf_counter() - t0

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "versions": {"wordgraph": __version__, "python": platform.python_version(),
                     "numpy": np.__version__},
        "input_digest": {"vectors": _digest(raw)},
        "outputs": {name: _digest(data) for name, data in sorted(files.items())},
        "timings_seconds": timings,
    }
    files[MANIFEST_FILE] = _encode(_json(manifest))
    _write_outputs(cfg.output_dir, files)
    log.info("pipeline finished; artefacts in %s", cfg.output_dir)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------

def _add_common(p, *groups):
    p.add_argument("--config", help="YAML/JSON config file; flags override it")
    p.add_argument("--output-dir", dest="output_dir")
    if "graph" in groups:
        p.add_argument("--vectors", dest="vectors_path", help="word2vec text file")
        p.add_argument("--k", type=int, help="neighbours per word (default 25)")
        p.add_argument("--floor", type=float, help="similarity floor (default 0.5)")
    if "louvain" in groups:
        p.add_argument("--min-gain", dest="min_gain", type=float)
        p.add_argument("--seed", dest="rng_seed", type=int,
                       help="shuffle node visit order with this seed")
    if "seeds" in groups:
        p.add_argument("--transform", choices=[t.value for t in DistanceTransform])
        p.add_argument("--normalize", action="store_true", default=None)
        p.add_argument("--top-r", dest="top_r", type=int)
        p.add_argument("--members-sample", type=int, default=10)
        p.add_argument("--full-members", action="store_true",
                       help=f"also write {MEMBERS_FILE} with every member")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wordgraph", description=__doc__.split("\n")[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="no progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="write planted-cluster vectors")
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--words-per-cluster", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="vectors file to write")
    p.add_argument("--labels", help="optional word<TAB>cluster file")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("build-graph", help="vectors -> edge TSV, GraphML, stats")
    _add_common(p, "graph")
    p.add_argument("--dot", action="store_true", help=f"also write {DOT_FILE}")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("communities", help="edge TSV -> partition TSV, summary")
    _add_common(p, "louvain")
    p.add_argument("--edges", required=True)
    p.add_argument("--nodes", help=f"{NODES_FILE} listing isolated words too")
    p.set_defaults(func=cmd_communities)

    p = sub.add_parser("seeds", help="edge TSV + partition -> seed report")
    _add_common(p, "seeds")
    p.add_argument("--edges", required=True)
    p.add_argument("--nodes")
    p.add_argument("--partition", required=True)
    p.set_defaults(func=cmd_seeds)

    p = sub.add_parser("pipeline", help="all stages plus a run manifest")
    _add_common(p, "graph", "louvain", "seeds")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.WARNING if args.quiet else logging.INFO)
    log.propagate = False
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except ParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (DomainError, ValueError) as exc:
        log.error("error: %s", exc)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
