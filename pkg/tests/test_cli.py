from __future__ import annotations

import json
import re

import numpy as np
import pytest

from termweave.cli import main


def write_mini_corpus(path, seed=5, n_topics=3, docs_per_topic=12):
    """Tiny corpus with planted word blocks for pipeline tests."""
    rng = np.random.default_rng(seed)
    vocab = {
        k: [f"block{k}word{j:02d}" for j in range(10)] for k in range(n_topics)
    }
    noise = [f"fillerword{j:02d}" for j in range(6)]
    with open(path, "w") as fh:
        for k in range(n_topics):
            for d in range(docs_per_topic):
                words = [vocab[k][i] for i in rng.integers(0, 10, size=14)]
                words += [noise[i] for i in rng.integers(0, 6, size=2)]
                rec = {
                    "id": f"doc{k}_{d}",
                    "text": " ".join(words),
                    "class": f"class{k}",
                }
                fh.write(json.dumps(rec) + "\n")


def write_vectors_for(path, corpus_path, dim=8, seed=6):
    """Vector file covering the corpus vocabulary, one cluster per block."""
    rng = np.random.default_rng(seed)
    words = set()
    with open(corpus_path) as fh:
        for line in fh:
            words.update(json.loads(line)["text"].split())
    centroids = {}
    rows = []
    for word in sorted(words):
        block = word[:6]
        if block not in centroids:
            centroids[block] = rng.normal(scale=10.0, size=dim)
        vec = centroids[block] + rng.normal(scale=0.05, size=dim)
        rows.append(word + " " + " ".join(f"{x:.5f}" for x in vec))
    path.write_text(f"{len(rows)} {dim}\n" + "\n".join(rows) + "\n")


@pytest.fixture
def mini_project(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_mini_corpus(corpus)
    vectors = tmp_path / "vectors.txt"
    write_vectors_for(vectors, corpus)
    root = tmp_path / "proj"
    return root, corpus, vectors


def run_cli(root, *argv):
    return main(["--project", str(root), *argv])


class TestPipelineCommands:
    def test_full_pipeline(self, mini_project, capsys):
        root, corpus, vectors = mini_project
        assert run_cli(root, "init") == 0
        assert run_cli(root, "ingest", str(corpus)) == 0
        assert run_cli(root, "rank") == 0
        assert run_cli(root, "graph", "--reduction", "100") == 0
        assert (
            run_cli(
                root,
                "detect",
                "--gamma", "1.0",
                "--n-rep", "8",
                "--n-con", "6",
                "--seed", "7",
            )
            == 0
        )
        out = capsys.readouterr().out
        match = re.search(r"run (\w+)", out)
        assert match, out
        run_key = match.group(1)
        assert "topics" in out and "%" in out

        assert run_cli(root, "sheets", "--run", run_key, "--vectors", str(vectors)) == 0
        assert run_cli(root, "eval", "--run", run_key) == 0
        out = capsys.readouterr().out
        assert "weighted f1" in out

        assert run_cli(root, "compare", run_key, run_key) == 0

    def test_detect_before_graph_is_data_error(self, mini_project, capsys):
        root, corpus, _ = mini_project
        run_cli(root, "init")
        run_cli(root, "ingest", str(corpus))
        assert run_cli(root, "detect", "--gamma", "1.0") == 2
        err = capsys.readouterr().err
        assert "graph" in err

    def test_uninitialized_project_is_data_error(self, tmp_path, capsys):
        assert run_cli(tmp_path / "missing", "rank") == 2

    def test_usage_error_exit_code(self, tmp_path, capsys):
        assert run_cli(tmp_path, "unknown-command") == 1
        assert main([]) == 1

    def test_detect_cache_hit(self, mini_project, capsys):
        root, corpus, _ = mini_project
        run_cli(root, "init")
        run_cli(root, "ingest", str(corpus))
        run_cli(root, "rank")
        run_cli(root, "graph", "--reduction", "100")
        args = ["detect", "--gamma", "1.2", "--n-rep", "5", "--n-con", "4", "--seed", "3"]
        assert run_cli(root, *args) == 0
        capsys.readouterr()
        assert run_cli(root, *args) == 0
        assert "(cached)" in capsys.readouterr().out

    def test_csv_outputs(self, mini_project, tmp_path, capsys):
        root, corpus, _ = mini_project
        run_cli(root, "init")
        run_cli(root, "ingest", str(corpus))
        csv_dir = tmp_path / "csv"
        assert run_cli(root, "rank", "--csv-dir", str(csv_dir)) == 0
        header = (csv_dir / "corpus-ranking.csv").read_text().splitlines()[0]
        assert header == "term,r,df,sum_q"
        header = (csv_dir / "doc-rankings.csv").read_text().splitlines()[0]
        assert header == "doc_id,term,r_d,q_d"

        run_cli(root, "graph", "--reduction", "100")
        run_cli(root, "detect", "--gamma", "1.0", "--n-rep", "5", "--n-con", "4", "--seed", "2")
        out = capsys.readouterr().out
        run_key = re.search(r"run (\w+)", out).group(1)
        assert run_cli(root, "eval", "--run", run_key, "--format", "csv") == 0
        out = capsys.readouterr().out
        assert out.startswith("class,")
        assert "weighted avg" in out
        assert run_cli(root, "compare", run_key, run_key, "--format", "csv") == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith(",0")

    def test_sweep_runs_and_compares(self, mini_project, capsys):
        root, corpus, _ = mini_project
        run_cli(root, "init")
        run_cli(root, "ingest", str(corpus))
        run_cli(root, "rank")
        run_cli(root, "graph", "--reduction", "100")
        assert (
            run_cli(
                root,
                "sweep",
                "--gamma", "0.8,1.5",
                "--n-rep", "5",
                "--n-con", "4",
                "--seed", "1",
            )
            == 0
        )
        out = capsys.readouterr().out
        assert out.count("sweep: gamma=") == 2

class TestDeterminism:
    def test_pipeline_outputs_byte_identical(self, mini_project, tmp_path):
        _, corpus, vectors = mini_project
        outputs = []
        for name in ("p1", "p2"):
            root = tmp_path / name
            run_cli(root, "init")
            run_cli(root, "ingest", str(corpus))
            run_cli(root, "rank")
            run_cli(root, "graph", "--reduction", "100")
            run_cli(
                root, "detect", "--gamma", "1.0", "--n-rep", "6", "--n-con", "5",
                "--seed", "11",
            )
            manifest = json.loads((root / "manifest.json").read_text())
            run_key = next(iter(manifest["runs"]))
            run_cli(root, "sheets", "--run", run_key, "--vectors", str(vectors))
            topics = (root / "runs" / run_key / "topics.json").read_bytes()
            record = json.loads((root / "manifest.json").read_text())["runs"][run_key]
            sheets = b"".join(
                (root / json.loads((root / "manifest.json").read_text())["artifacts"][s]["path"]).read_bytes()
                for s in record["sheets"]
            )
            outputs.append((run_key, topics, sheets))
        assert outputs[0] == outputs[1]
