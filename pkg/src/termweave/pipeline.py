"""Pipeline stages wired through the project store.

Each stage loads its prerequisites from the store, computes, and saves
its outputs as content-addressed artifacts, so repeated invocations with
unchanged inputs are cheap and sweeps over the resolution parameter
reuse the corpus, ranking, and graph artifacts.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import analytics, graph as graph_mod, presentation, ranking as ranking_mod
from .community import DetectParams, TopicSet, detect_topics
from .errors import DataError, MissingPrerequisiteError
from .ingest import (
    AnnotatedDocument,
    AnnotationConfig,
    Vocabulary,
    annotate_corpus,
    build_vocabulary,
    ingest_preannotated,
    load_corpus,
)
from .ranking import CorpusRanking, DocRanking, RankParams
from .store import Project, params_hash


def _dump_docs(docs: Sequence[AnnotatedDocument]) -> bytes:
    return ("\n".join(doc.to_json() for doc in docs) + "\n").encode()


def _load_docs(data: bytes) -> list[AnnotatedDocument]:
    return [
        AnnotatedDocument.from_json(line)
        for line in data.decode().splitlines()
        if line.strip()
    ]


def ingest_stage(
    project: Project,
    source: str | Path,
    corpus_format: str | None = None,
    preannotated: bool = False,
) -> dict[str, Any]:
    cfg = project.config().get("annotation", {})
    config = AnnotationConfig.load(
        stopwords_path=cfg.get("stopwords"),
        lexicon_path=cfg.get("lexicon"),
        gazetteer_path=cfg.get("gazetteer"),
    )
    if preannotated:
        docs = ingest_preannotated(source, config)
    else:
        docs = annotate_corpus(load_corpus(source, corpus_format), config)
    vocabulary = build_vocabulary(docs)
    corpus_art = project.save_artifact(
        "corpus", _dump_docs(docs), "annotated.jsonl", {"source": str(source)}
    )
    vocab_art = project.save_artifact(
        "vocabulary",
        vocabulary.to_json().encode(),
        "vocabulary.json",
        {"corpus": corpus_art},
    )
    refs = {
        "corpus": corpus_art,
        "vocabulary": vocab_art,
        "n_documents": len(docs),
        "n_terms": len(vocabulary),
    }
    project.set_stage("ingest", refs)
    return refs


def _require_stage(project: Project, stage: str, needed_by: str) -> dict[str, Any]:
    refs = project.stage(stage)
    if refs is None:
        raise MissingPrerequisiteError(
            f"'{needed_by}' needs the '{stage}' stage to run first"
        )
    return refs


def load_corpus_artifacts(project: Project) -> tuple[list[AnnotatedDocument], Vocabulary]:
    refs = _require_stage(project, "ingest", "rank")
    docs = _load_docs(project.load_artifact(refs["corpus"]))
    vocabulary = Vocabulary.from_json(project.load_artifact(refs["vocabulary"]).decode())
    return docs, vocabulary


def _rank_params(project: Project, **overrides: Any) -> tuple[RankParams, int, int]:
    cfg = dict(project.config().get("ranking", {}))
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    params = RankParams(
        alpha=cfg.get("alpha", 0.85),
        beta=cfg.get("beta", -0.9),
        window=int(cfg.get("window", 5)),
        idf_floor=cfg.get("idf_floor", 1e-6),
        tol=cfg.get("tol", 1e-10),
        max_iter=int(cfg.get("max_iter", 500)),
    )
    return params, int(cfg.get("parts", 20)), int(cfg.get("cutoff", 3))


def _dump_rankings(rankings: Sequence[DocRanking]) -> bytes:
    records = [
        {
            "doc": r.doc_id,
            "order": r.order,
            "r": [r.r[t] for t in r.order],
            "q": [r.q[t] for t in r.order],
            "parts": r.parts,
            "cutoff": r.cutoff,
        }
        for r in rankings
    ]
    return json.dumps(records).encode()


def _load_rankings(data: bytes) -> list[DocRanking]:
    out = []
    for rec in json.loads(data.decode()):
        order = [int(t) for t in rec["order"]]
        out.append(
            DocRanking(
                doc_id=rec["doc"],
                order=order,
                r=dict(zip(order, rec["r"])),
                q=dict(zip(order, (int(q) for q in rec["q"]))),
                parts=rec["parts"],
                cutoff=rec["cutoff"],
            )
        )
    return out


def rank_stage(project: Project, **overrides: Any) -> dict[str, Any]:
    docs, vocabulary = load_corpus_artifacts(project)
    params, parts, cutoff = _rank_params(project, **overrides)
    rankings = ranking_mod.rank_corpus(docs, vocabulary, params, parts, cutoff)
    corpus_ranking = ranking_mod.corpus_rank(rankings, vocabulary, parts, cutoff)
    rank_art = project.save_artifact(
        "rankings", _dump_rankings(rankings), "doc-rankings.json", {}
    )
    corpus_rank_data = json.dumps(
        {
            "r": [corpus_ranking.r[t] for t in range(len(vocabulary))],
            "sum_q": {str(k): v for k, v in sorted(corpus_ranking.sum_q.items())},
            "prior_strength": corpus_ranking.prior_strength,
            "prior_mean": corpus_ranking.prior_mean,
        }
    ).encode()
    corpus_art = project.save_artifact(
        "corpus-ranking", corpus_rank_data, "corpus-ranking.json", {}
    )
    refs = {"rankings": rank_art, "corpus_ranking": corpus_art}
    project.set_stage("rank", refs)
    return refs


def export_ranking_csvs(project: Project, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, vocabulary = load_corpus_artifacts(project)
    rankings, corpus_ranking = load_rank_artifacts(project)
    ranking_mod.write_corpus_ranking_csv(out / "corpus-ranking.csv", corpus_ranking, vocabulary)
    ranking_mod.write_doc_rankings_csv(out / "doc-rankings.csv", rankings, vocabulary)


def load_rank_artifacts(project: Project) -> tuple[list[DocRanking], CorpusRanking]:
    refs = _require_stage(project, "rank", "graph")
    rankings = _load_rankings(project.load_artifact(refs["rankings"]))
    rec = json.loads(project.load_artifact(refs["corpus_ranking"]).decode())
    corpus_ranking = CorpusRanking(
        r={i: v for i, v in enumerate(rec["r"])},
        prior_strength=rec["prior_strength"],
        prior_mean=rec["prior_mean"],
        sum_q={int(k): v for k, v in rec["sum_q"].items()},
    )
    return rankings, corpus_ranking


def graph_stage(project: Project, reduction: float | None = None) -> dict[str, Any]:
    docs, vocabulary = load_corpus_artifacts(project)
    rankings, _ = load_rank_artifacts(project)
    if reduction is None:
        reduction = float(project.config().get("graph", {}).get("reduction", 50.0))
    term_graph = graph_mod.build_corpus_graph(rankings, reduction, corpus_id="corpus")

    buf = io.BytesIO()
    graph_mod.save_npz(term_graph, buf)
    graph_art = project.save_artifact(
        "graph",
        buf.getvalue(),
        "graph.npz",
        {"reduction": reduction, "n_vertices": term_graph.n_vertices, "n_edges": term_graph.n_edges},
    )

    by_id = {doc.doc_id: doc for doc in docs}
    reduced = {
        r.doc_id: graph_mod.reduce_document(by_id[r.doc_id], r, reduction, vocabulary)
        for r in rankings
    }
    reduced_art = project.save_artifact(
        "reduced",
        json.dumps(reduced).encode(),
        "reduced-sequences.json",
        {"reduction": reduction},
    )
    refs = {
        "graph": graph_art,
        "reduced": reduced_art,
        "reduction": reduction,
        "n_vertices": term_graph.n_vertices,
        "n_edges": term_graph.n_edges,
    }
    project.set_stage(f"graph@{reduction:g}", refs)
    project.set_stage("graph", refs)
    return refs


def load_graph_artifacts(
    project: Project, reduction: float | None = None
) -> tuple[graph_mod.TermGraph, dict[str, list[int]]]:
    stage = "graph" if reduction is None else f"graph@{reduction:g}"
    refs = _require_stage(project, stage, "detect")
    term_graph = graph_mod.load_npz(io.BytesIO(project.load_artifact(refs["graph"])))
    reduced = {
        doc: [int(t) for t in seq]
        for doc, seq in json.loads(project.load_artifact(refs["reduced"]).decode()).items()
    }
    return term_graph, reduced


def detect_params_from_config(project: Project, **overrides: Any) -> DetectParams:
    cfg = dict(project.config().get("detect", {}))
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return DetectParams(
        gamma=float(cfg.get("gamma", 1.0)),
        n_rep=int(cfg.get("n_rep", 20)),
        n_con=int(cfg.get("n_con", 15)),
        min_size_fraction=float(cfg.get("min_size_fraction", 0.10)),
        seed=int(cfg.get("seed", 0)),
    )


def run_key_for(params: DetectParams, reduction: float) -> str:
    payload = params.to_dict()
    payload["reduction"] = reduction
    return params_hash(payload)


def detect_stage(
    project: Project,
    params: DetectParams,
    reduction: float | None = None,
    build_graph: bool = False,
) -> dict[str, Any]:
    if build_graph and reduction is not None and project.stage(f"graph@{reduction:g}") is None:
        graph_stage(project, reduction)
    term_graph, _ = load_graph_artifacts(project, reduction)
    run_key = run_key_for(params, term_graph.reduction)
    existing = project.run(run_key)
    if existing is not None:
        return {**existing, "run": run_key, "cached": True}

    topics = detect_topics(term_graph, params)
    _, vocabulary = load_corpus_artifacts(project)
    data = topics.to_json(vocabulary).encode()
    record = {
        "params": {**params.to_dict(), "reduction": term_graph.reduction},
        "n_topics": topics.n_topics,
        "coverage": topics.coverage,
        "topic_sizes": [len(t) for t in topics.topics],
        "n_unassigned": len(topics.unassigned),
    }
    project.save_run_topics(run_key, data, record)
    return {**record, "run": run_key, "cached": False}


def load_topics(project: Project, run_key: str) -> TopicSet:
    record = project.run(run_key)
    if record is None:
        raise MissingPrerequisiteError(f"unknown run: {run_key}")
    _, vocabulary = load_corpus_artifacts(project)
    data = project.load_artifact(record["topics_artifact"])
    return TopicSet.from_json(data.decode(), vocabulary)


def sheets_stage(
    project: Project,
    run_key: str,
    vectors_path: str | Path | None = None,
    delta: float | None = None,
    tau: float | None = None,
) -> dict[str, Any]:
    cfg = project.config().get("presentation", {})
    vectors_path = vectors_path or cfg.get("vectors")
    if not vectors_path:
        raise MissingPrerequisiteError(
            "sheets need a word-vector file (config presentation.vectors or --vectors)"
        )
    delta = delta if delta is not None else float(cfg.get("delta", 1.0))
    tau = tau if tau is not None else float(cfg.get("tau", 0.25))

    topics = load_topics(project, run_key)
    _, vocabulary = load_corpus_artifacts(project)
    _, corpus_ranking = load_rank_artifacts(project)
    table = presentation.load_vectors(vectors_path)

    sheet_ids = []
    coherence_rows = []
    for i, terms in enumerate(topics.topics):
        sheet = presentation.stratify(
            i, terms, table, corpus_ranking, vocabulary, threshold=delta
        )
        art = project.save_artifact(
            "sheet",
            sheet.to_json(vocabulary).encode(),
            f"sheet-{run_key}-{i}.json",
            {"run": run_key, "topic": i},
        )
        project.save_artifact(
            "sheet",
            sheet.to_csv(vocabulary).encode(),
            f"sheet-{run_key}-{i}.csv",
            {"run": run_key, "topic": i, "format": "csv"},
        )
        sheet_ids.append(art)
        report = presentation.coherence(
            i, terms, corpus_ranking, table, vocabulary, threshold=tau
        )
        coherence_rows.append(json.loads(report.to_json()))
    coherence_art = project.save_artifact(
        "coherence",
        json.dumps(coherence_rows).encode(),
        f"coherence-{run_key}.json",
        {"run": run_key},
    )
    record = dict(project.run(run_key) or {})
    record["sheets"] = sheet_ids
    record["coherence"] = coherence_art
    record["presentation"] = {"delta": delta, "tau": tau}
    project.register_run(run_key, record)
    return {"run": run_key, "sheets": sheet_ids, "coherence": coherence_art}


def shares_for_run(
    project: Project, run_key: str, mode: str = "tokens"
) -> dict[str, analytics.TopicShares]:
    record = project.run(run_key)
    if record is None:
        raise MissingPrerequisiteError(f"unknown run: {run_key}")
    reduction = record["params"]["reduction"]
    _, reduced = load_graph_artifacts(project, reduction)
    topics = load_topics(project, run_key)
    return {
        doc_id: analytics.topic_shares(doc_id, seq, topics, mode)
        for doc_id, seq in reduced.items()
    }


def eval_stage(project: Project, run_key: str, mode: str = "tokens") -> dict[str, Any]:
    docs, _ = load_corpus_artifacts(project)
    class_labels = {d.doc_id: d.class_label for d in docs if d.class_label}
    if not class_labels:
        raise DataError("corpus has no class labels to evaluate against")
    shares = shares_for_run(project, run_key, mode)
    dominants = {
        doc_id: s.dominant for doc_id, s in shares.items() if doc_id in class_labels
    }
    topics = load_topics(project, run_key)
    table = analytics.crosstable(class_labels, dominants, topics.n_topics)
    stats = analytics.classification_stats(table)
    table_art = project.save_artifact(
        "eval", table.to_csv().encode(), f"crosstable-{run_key}.csv", {"run": run_key}
    )
    stats_art = project.save_artifact(
        "eval", stats.to_csv().encode(), f"stats-{run_key}.csv", {"run": run_key}
    )
    return {
        "run": run_key,
        "crosstable": table_art,
        "stats": stats_art,
        "weighted_f1": stats.weighted_f1,
        "classes": table.classes,
        "matching": stats.matching,
        "unclassified": table.unclassified,
    }


def compare_stage(project: Project, run_a: str, run_b: str) -> dict[str, Any]:
    a = load_topics(project, run_a)
    b = load_topics(project, run_b)
    flow = analytics.compare_topic_sets(a, b)
    art = project.save_artifact(
        "compare",
        flow.to_json().encode(),
        f"compare-{run_a}-{run_b}.json",
        {"a": run_a, "b": run_b},
    )
    return {"a": run_a, "b": run_b, "artifact": art, "matrix": json.loads(flow.to_json())}


def sweep_stage(
    project: Project,
    gammas: Sequence[float],
    reduction: float | None = None,
    **param_overrides: Any,
) -> list[dict[str, Any]]:
    """One detection per gamma plus flow matrices between consecutive runs."""
    results = []
    previous_key = None
    for gamma in gammas:
        params = detect_params_from_config(project, gamma=gamma, **param_overrides)
        result = detect_stage(project, params, reduction)
        if previous_key is not None:
            result["compared_to"] = compare_stage(project, previous_key, result["run"])[
                "artifact"
            ]
        previous_key = result["run"]
        results.append(result)
    return results
