"""Stratified topic presentation and interpretability diagnostics.

Topic terms get a two-dimensional order: agglomerative clustering in a
pretrained word-embedding space groups semantically related terms into
strata, and the corpus term ranking orders terms within a stratum and
the strata against each other.  A coherence report summarizes a topic by
its number of highly informative terms and their mean pairwise embedding
cosine similarity.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .errors import DataError
from .ingest import Vocabulary
from .ranking import CorpusRanking


class EmbeddingTable:
    """Term string -> dense vector map loaded from a word-vector file."""

    def __init__(self, dimension: int, vectors: dict[str, np.ndarray], skipped: int = 0):
        self.dimension = dimension
        self.vectors = vectors
        self.skipped = skipped

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, term: str) -> bool:
        return term in self.vectors


def load_vectors(path: str | Path) -> EmbeddingTable:
    """Read text word-vector format: header "count dim", then one
    "word v1 ... vdim" per line.  Malformed lines are skipped and counted."""
    path = Path(path)
    with open(path, encoding="utf-8", errors="replace") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: expected 'count dim' header")
        try:
            _, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise DataError(f"{path}: malformed header: {header}") from exc
        if dim < 1:
            raise DataError(f"{path}: vector dimension must be positive")
        vectors: dict[str, np.ndarray] = {}
        skipped = 0
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                skipped += 1
                continue
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                skipped += 1
                continue
            vectors[parts[0]] = vec
    if not vectors:
        raise DataError(f"{path}: no usable vectors")
    return EmbeddingTable(dimension=dim, vectors=vectors, skipped=skipped)


def embed(term: str, table: EmbeddingTable) -> np.ndarray | None:
    """Exact lookup; underscore-joined compounds fall back to the mean
    of their component-word vectors, None when nothing is found."""
    vec = table.vectors.get(term)
    if vec is not None:
        return vec
    if "_" in term:
        found = [table.vectors[p] for p in term.split("_") if p in table.vectors]
        if not found:
            lowered = [
                table.vectors[p.lower()]
                for p in term.split("_")
                if p.lower() in table.vectors
            ]
            found = lowered
        if found:
            return np.mean(found, axis=0)
    return table.vectors.get(term.lower())


@dataclass
class TopicSheet:
    """Strata of one topic, each an ordered term-id list, highest rank first."""

    topic_id: int
    strata: list[list[int]]
    residual: list[int]
    ranks: dict[int, float] = field(default_factory=dict)

    @property
    def terms(self) -> set[int]:
        out = {t for stratum in self.strata for t in stratum}
        out.update(self.residual)
        return out

    def to_json(self, vocabulary: Vocabulary) -> str:
        return json.dumps(
            {
                "topic": self.topic_id,
                "strata": [
                    [
                        {"term": vocabulary.term(t), "r": self.ranks.get(t)}
                        for t in stratum
                    ]
                    for stratum in self.strata
                ],
                "residual": [
                    {"term": vocabulary.term(t), "r": self.ranks.get(t)}
                    for t in self.residual
                ],
            },
            ensure_ascii=False,
        )

    def to_csv(self, vocabulary: Vocabulary) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        for stratum in self.strata:
            writer.writerow([vocabulary.term(t) for t in stratum])
        if self.residual:
            writer.writerow([])
            writer.writerow([vocabulary.term(t) for t in self.residual])
        return out.getvalue()


def stratify(
    topic_id: int,
    terms: Sequence[int],
    table: EmbeddingTable,
    ranking: CorpusRanking,
    vocabulary: Vocabulary,
    threshold: float = 1.0,
    method: str = "ward",
) -> TopicSheet:
    """Cluster embeddable topic terms and order everything by rank.

    Agglomerative clustering (Ward linkage on Euclidean distances by
    default) is cut at merge distance ``threshold``; terms within a
    stratum are sorted by descending corpus rank, strata by the rank of
    their top term.  Terms without any embedding form the residual.
    """
    if not terms:
        raise DataError("cannot stratify an empty topic")
    if threshold <= 0:
        raise DataError(f"distance threshold must be positive, got {threshold}")
    ranks = {t: ranking.value(t) for t in terms}

    embeddable: list[int] = []
    vectors: list[np.ndarray] = []
    residual: list[int] = []
    for t in sorted(terms):
        vec = embed(vocabulary.term(t), table)
        if vec is None:
            residual.append(t)
        else:
            embeddable.append(t)
            vectors.append(vec)

    if not embeddable:
        strata: list[list[int]] = []
    elif len(embeddable) == 1:
        strata = [[embeddable[0]]]
    else:
        Z = linkage(np.vstack(vectors), method=method)
        labels = fcluster(Z, t=threshold, criterion="distance")
        by_cluster: dict[int, list[int]] = {}
        for term, lab in zip(embeddable, labels):
            by_cluster.setdefault(int(lab), []).append(term)
        strata = [
            sorted(members, key=lambda t: (-ranks[t], t))
            for members in by_cluster.values()
        ]
        strata.sort(key=lambda s: (-ranks[s[0]], s[0]))

    residual.sort(key=lambda t: (-ranks[t], t))
    return TopicSheet(topic_id=topic_id, strata=strata, residual=residual, ranks=ranks)


@dataclass
class CoherenceReport:
    """Size and mean pairwise cosine similarity of a topic's highly
    informative terms H = {t : r(t) > threshold}."""

    topic_id: int
    n_informative: int
    coherence: float | None
    n_embedded: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "topic": self.topic_id,
                "M_H": self.n_informative,
                "c_emb": self.coherence,
                "embedded": self.n_embedded,
            }
        )


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0:
        return 0.0
    return float(np.dot(a, b) / denom)


def coherence(
    topic_id: int,
    terms: Iterable[int],
    ranking: CorpusRanking,
    table: EmbeddingTable,
    vocabulary: Vocabulary,
    threshold: float = 0.25,
) -> CoherenceReport:
    """Mean cosine similarity over all distinct pairs of informative terms.

    Undefined (None) when fewer than two informative terms have an
    embedding; the informative count M_H is reported regardless.
    """
    if threshold <= 0:
        raise DataError(f"rank threshold must be positive, got {threshold}")
    informative = sorted(t for t in terms if ranking.value(t) > threshold)
    vectors = []
    for t in informative:
        vec = embed(vocabulary.term(t), table)
        if vec is not None:
            vectors.append(vec)
    if len(vectors) < 2:
        return CoherenceReport(topic_id, len(informative), None, len(vectors))
    X = np.vstack(vectors)
    norms = np.linalg.norm(X, axis=1)
    X = np.divide(X, norms[:, np.newaxis], out=np.zeros_like(X), where=norms[:, np.newaxis] > 0)
    gram = X @ X.T
    m = len(vectors)
    mean_sim = (float(gram.sum()) - float(np.trace(gram))) / (m * (m - 1))
    return CoherenceReport(topic_id, len(informative), mean_sim, m)
