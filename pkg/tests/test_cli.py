import itertools
import json

import pytest

from wordgraph import cli
from wordgraph.community import load_partition, modularity
from wordgraph.config import PipelineConfig, load_config
from wordgraph.errors import ConfigError
from wordgraph.graph import load_edges
from wordgraph.metrics import karate_club

from oracles import dense_matrix, exhaustive_optimum


def run(*argv):
    return cli.main(["-q", *map(str, argv)])


def write_edges(path, edges, labels):
    path.write_text("".join(f"{labels[i]}\t{labels[j]}\t{w:.6f}\n" for i, j, w in edges))
    return path


@pytest.fixture
def vectors(tmp_path):
    path = tmp_path / "vec.txt"
    assert run("gen-synthetic", "--clusters", 2, "--words-per-cluster", 3, "--dim", 8,
               "--noise", 0.0, "--seed", 1, "--output", path) == 0
    return path


def read_json(path):
    return json.loads(path.read_text())


class TestBuildGraph:
    def test_zero_noise_cliques(self, tmp_path, vectors):
        out = tmp_path / "g"
        assert run("build-graph", "--vectors", vectors, "--k", 2, "--floor", 0.5,
                   "--output-dir", out) == 0
        stats = read_json(out / "graph_stats.json")
        assert stats["nodes"] == 6 and stats["edges"] == 6
        g = load_edges(open(out / "edges.tsv"))
        for i, j, _ in g.edges():
            assert g.labels[i][:2] == g.labels[j][:2]
        assert (out / "nodes.txt").read_text().split() == [f"c{c}_w{w}" for c in range(2)
                                                          for w in range(3)]

    def test_stats_match_file(self, tmp_path):
        vec = tmp_path / "v.txt"
        run("gen-synthetic", "--clusters", 3, "--words-per-cluster", 20, "--dim", 16,
            "--noise", 0.1, "--seed", 4, "--output", vec)
        out = tmp_path / "g"
        assert run("build-graph", "--vectors", vec, "--k", 5, "--floor", 0.999,
                   "--output-dir", out) == 0
        stats = read_json(out / "graph_stats.json")
        lines = (out / "edges.tsv").read_text().splitlines()
        assert stats["edges"] == len(lines)
        assert stats["nodes"] == 60
        assert sum(stats["weight_histogram"]["counts"]) == len(lines)

    def test_dot_flag(self, tmp_path, vectors):
        out = tmp_path / "g"
        assert run("build-graph", "--vectors", vectors, "--k", 2, "--output-dir", out) == 0
        assert not (out / "graph.dot").exists()
        assert run("build-graph", "--vectors", vectors, "--k", 2, "--output-dir", out,
                   "--dot") == 0
        assert (out / "graph.dot").read_text().startswith("graph G {")

    def test_missing_file(self, tmp_path):
        out = tmp_path / "g"
        assert run("build-graph", "--vectors", tmp_path / "nope.txt", "--output-dir", out) == 4
        assert not out.exists()

    def test_parse_error(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("2 3\ncat 1.0 0.0\n")
        out = tmp_path / "g"
        assert run("build-graph", "--vectors", bad, "--output-dir", out) == 3
        assert not out.exists()

    def test_no_vectors(self, tmp_path):
        assert run("build-graph", "--output-dir", tmp_path / "g") == 2


class TestCommunities:
    def test_two_cliques_optimal(self, tmp_path):
        labels = [f"w{i}" for i in range(8)]
        edges = [(i, j, 0.9) for i, j in itertools.combinations(range(4), 2)]
        edges += [(4 + i, 4 + j, 0.9) for i, j in itertools.combinations(range(4), 2)]
        edges.append((3, 4, 0.1))
        tsv = write_edges(tmp_path / "e.tsv", edges, labels)
        out = tmp_path / "c"
        assert run("communities", "--edges", tsv, "--output-dir", out) == 0
        summary = read_json(out / "communities.json")
        q_opt, _ = exhaustive_optimum(dense_matrix(8, edges))
        assert summary["modularity"] == pytest.approx(q_opt, abs=1e-12)
        assert summary["community_sizes"] == [4, 4]
        rows = dict(line.split("\t") for line in (out / "partition.tsv").read_text().splitlines())
        assert len({rows[w] for w in labels[:4]}) == 1
        assert rows["w0"] != rows["w7"]

    def test_karate(self, tmp_path):
        g = karate_club()
        tsv = write_edges(tmp_path / "k.tsv", [(i, j, 0.5) for i, j, _ in g.edges()], g.labels)
        out = tmp_path / "c"
        assert run("communities", "--edges", tsv, "--output-dir", out) == 0
        assert read_json(out / "communities.json")["modularity"] >= 0.40

    def test_edgeless(self, tmp_path):
        tsv = tmp_path / "e.tsv"
        tsv.write_text("")
        nodes = tmp_path / "n.txt"
        nodes.write_text("a\nb\n")
        out = tmp_path / "c"
        assert run("communities", "--edges", tsv, "--nodes", nodes, "--output-dir", out) == 5
        assert not out.exists()

    def test_nodes_file_keeps_isolated(self, tmp_path):
        tsv = write_edges(tmp_path / "e.tsv", [(0, 1, 0.5)], ["a", "b"])
        nodes = tmp_path / "n.txt"
        nodes.write_text("a\nb\nz\n")
        out = tmp_path / "c"
        assert run("communities", "--edges", tsv, "--nodes", nodes, "--output-dir", out) == 0
        words = [line.split("\t")[0] for line in (out / "partition.tsv").read_text().splitlines()]
        assert words == ["a", "b", "z"]

    def test_bad_weight(self, tmp_path):
        tsv = tmp_path / "e.tsv"
        tsv.write_text("a\tb\t1.5\n")
        assert run("communities", "--edges", tsv, "--output-dir", tmp_path / "c") == 3


class TestSeeds:
    def test_path_middle_first(self, tmp_path):
        tsv = write_edges(tmp_path / "e.tsv", [(0, 1, 0.6), (1, 2, 0.6)],
                          ["happy", "valentine", "birthday"])
        part = tmp_path / "p.tsv"
        part.write_text("birthday\t0\nhappy\t0\nvalentine\t0\n")
        out = tmp_path / "s"
        assert run("seeds", "--edges", tsv, "--partition", part, "--output-dir", out,
                   "--full-members") == 0
        report = read_json(out / "seeds.json")
        assert report["communities"][0]["seeds"][0] == {
            "word": "valentine", "score": 1.0, "normalized_score": 1.0}
        assert (out / "members.tsv").read_text() == "0\tbirthday\n0\thappy\n0\tvalentine\n"

    def test_partition_mismatch(self, tmp_path):
        tsv = write_edges(tmp_path / "e.tsv", [(0, 1, 0.6)], ["a", "b"])
        part = tmp_path / "p.tsv"
        part.write_text("a\t0\n")
        assert run("seeds", "--edges", tsv, "--partition", part,
                   "--output-dir", tmp_path / "s") == 3


class TestConfig:
    def test_defaults(self):
        cfg = PipelineConfig()
        assert (cfg.k, cfg.floor, cfg.min_gain, cfg.transform, cfg.top_r) == (
            25, 0.5, 1e-7, "one_minus_s", 10)

    def test_yaml_and_coercion(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("k: 5\nfloor: 0.3\nmin_gain: 1e-6\ntransform: reciprocal\n")
        cfg = load_config(path)
        assert cfg.k == 5 and cfg.min_gain == 1e-6 and cfg.transform == "reciprocal"

    @pytest.mark.parametrize("text", ["kk: 3\n", "k: 0\n", "floor: 1.5\n", "floor: abc\n",
                                      "transform: log\n", "normalize: 3\n", "- 1\n"])
    def test_invalid(self, tmp_path, text):
        path = tmp_path / "c.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_config(path)

    def test_invalid_key_exit_code(self, tmp_path, vectors):
        path = tmp_path / "c.yaml"
        path.write_text("neighbours: 3\n")
        assert run("pipeline", "--config", path, "--vectors", vectors,
                   "--output-dir", tmp_path / "o") == 2

    def test_flags_override_config(self, tmp_path, vectors):
        path = tmp_path / "c.yaml"
        path.write_text(f"k: 1\nfloor: 0.5\nvectors_path: {vectors}\n")
        out = tmp_path / "o"
        assert run("build-graph", "--config", path, "--k", 2, "--output-dir", out) == 0
        assert read_json(out / "graph_stats.json")["k"] == 2


class TestPipeline:
    def run_pipeline(self, tmp_path, vec, name):
        out = tmp_path / name
        assert run("pipeline", "--vectors", vec, "--output-dir", out, "--seed", 5) == 0
        return out

    def test_reproducible_and_round_trips(self, tmp_path):
        vec = tmp_path / "v.txt"
        run("gen-synthetic", "--clusters", 3, "--words-per-cluster", 15, "--dim", 12,
            "--noise", 0.1, "--seed", 2, "--output", vec)
        a = self.run_pipeline(tmp_path, vec, "a")
        b = self.run_pipeline(tmp_path, vec, "b")
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        assert names == ["communities.json", "edges.tsv", "graph.graphml", "graph_stats.json",
                         "manifest.json", "nodes.txt", "partition.tsv", "seeds.json"]
        for name in names:
            if name != "manifest.json":
                assert (a / name).read_bytes() == (b / name).read_bytes(), name
        ma, mb = read_json(a / "manifest.json"), read_json(b / "manifest.json")
        assert ma["outputs"] == mb["outputs"] and ma["input_digest"] == mb["input_digest"]
        assert set(ma["timings_seconds"]) == {"load_vectors", "build_graph", "communities",
                                              "seeds"}

        # standalone stages reproduce the pipeline artefacts
        c = tmp_path / "c"
        assert run("build-graph", "--vectors", vec, "--output-dir", c) == 0
        assert run("communities", "--edges", c / "edges.tsv", "--nodes", c / "nodes.txt",
                   "--seed", 5, "--output-dir", c) == 0
        assert run("seeds", "--edges", c / "edges.tsv", "--nodes", c / "nodes.txt",
                   "--partition", c / "partition.tsv", "--output-dir", c) == 0
        for name in names:
            if name != "manifest.json":
                assert (a / name).read_bytes() == (c / name).read_bytes(), name

        g = load_edges(open(a / "edges.tsv"))
        p = load_partition(open(a / "partition.tsv"), g)
        summary = read_json(a / "communities.json")
        assert modularity(g, p) == pytest.approx(summary["modularity"], abs=1e-9)
