"""Document-topic shares, classification against gold classes, and
cross-resolution topic comparison."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DataError
from .community import TopicSet


@dataclass
class TopicShares:
    """Per-document topic mixture.

    ``counts[i]`` is the number of retained token occurrences whose term
    belongs to topic i (or the number of distinct such terms in unique
    mode); shares normalize the counts, and the dominant topic is the
    argmax with ties broken toward the lowest topic id.
    """

    doc_id: str
    counts: np.ndarray
    shares: np.ndarray | None
    dominant: int | None


def topic_shares(
    doc_id: str,
    retained_sequence: Sequence[int],
    topics: TopicSet,
    mode: str = "tokens",
) -> TopicShares:
    if mode not in ("tokens", "unique"):
        raise DataError(f"unknown share counting mode: {mode!r}")
    membership = topics.term_topic()
    counts = np.zeros(topics.n_topics, dtype=np.int64)
    terms = set(retained_sequence) if mode == "unique" else retained_sequence
    for tid in terms:
        topic = membership.get(tid)
        if topic is not None:
            counts[topic] += 1
    total = int(counts.sum())
    if total == 0:
        return TopicShares(doc_id, counts, None, None)
    return TopicShares(doc_id, counts, counts / total, int(np.argmax(counts)))


@dataclass
class CrossTable:
    """Gold classes (rows) against dominant topics (columns)."""

    classes: list[str]
    topic_labels: list[str]
    counts: np.ndarray
    unclassified: int = 0

    @property
    def n_documents(self) -> int:
        return int(self.counts.sum())

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["class"] + self.topic_labels)
        for name, row in zip(self.classes, self.counts):
            writer.writerow([name] + [int(x) for x in row])
        return out.getvalue()


def crosstable(
    class_labels: Mapping[str, str],
    dominants: Mapping[str, int | None],
    n_topics: int,
    topic_labels: Sequence[str] | None = None,
) -> CrossTable:
    """Count (gold class, dominant topic) pairs over the corpus.

    Documents without a dominant topic are tallied separately in
    ``unclassified``; documents without a class label are an error.
    """
    if not class_labels:
        raise DataError("crosstable needs a non-empty labeled corpus")
    missing = [doc for doc in dominants if class_labels.get(doc) is None]
    if missing:
        raise DataError(f"documents without class label: {missing[:5]}")
    classes = sorted(set(class_labels[doc] for doc in dominants))
    class_index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), n_topics), dtype=np.int64)
    unclassified = 0
    for doc, topic in dominants.items():
        if topic is None:
            unclassified += 1
            continue
        counts[class_index[class_labels[doc]], topic] += 1
    labels = list(topic_labels) if topic_labels else [str(i) for i in range(n_topics)]
    return CrossTable(classes=classes, topic_labels=labels, counts=counts, unclassified=unclassified)


@dataclass
class ClassStats:
    classes: list[str]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    weights: np.ndarray
    matching: dict[str, int]

    @property
    def weighted_precision(self) -> float:
        return float(np.average(self.precision, weights=self.weights))

    @property
    def weighted_recall(self) -> float:
        return float(np.average(self.recall, weights=self.weights))

    @property
    def weighted_f1(self) -> float:
        return float(np.average(self.f1, weights=self.weights))

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["class", "precision", "recall", "f1"])
        for i, name in enumerate(self.classes):
            writer.writerow(
                [name, f"{self.precision[i]:.3f}", f"{self.recall[i]:.3f}", f"{self.f1[i]:.3f}"]
            )
        writer.writerow(
            [
                "weighted avg",
                f"{self.weighted_precision:.3f}",
                f"{self.weighted_recall:.3f}",
                f"{self.weighted_f1:.3f}",
            ]
        )
        return out.getvalue()


def match_classes_to_topics(table: CrossTable) -> dict[str, int]:
    """Maximum-weight bipartite assignment of classes to topic columns."""
    if table.counts.shape[1] < table.counts.shape[0]:
        raise DataError("fewer topics than classes; no injective matching exists")
    rows, cols = linear_sum_assignment(-table.counts)
    return {table.classes[r]: int(c) for r, c in zip(rows, cols)}


def classification_stats(
    table: CrossTable, matching: Mapping[str, int] | None = None
) -> ClassStats:
    """Per-class precision/recall/f1 of predicting the class by the
    matched dominant topic, plus class-size weighted averages.

    A topic predicted for zero documents yields precision 0 rather than
    a division error.
    """
    if matching is None:
        matching = match_classes_to_topics(table)
    matched = list(matching.values())
    if len(set(matched)) != len(matched):
        raise DataError("matching must map classes to distinct topics")
    n = len(table.classes)
    precision = np.zeros(n)
    recall = np.zeros(n)
    f1 = np.zeros(n)
    weights = table.counts.sum(axis=1).astype(np.float64)
    for i, name in enumerate(table.classes):
        col = matching[name]
        tp = float(table.counts[i, col])
        predicted = float(table.counts[:, col].sum())
        actual = float(weights[i])
        precision[i] = tp / predicted if predicted else 0.0
        recall[i] = tp / actual if actual else 0.0
        denom = precision[i] + recall[i]
        f1[i] = 2 * precision[i] * recall[i] / denom if denom else 0.0
    return ClassStats(
        classes=list(table.classes),
        precision=precision,
        recall=recall,
        f1=f1,
        weights=weights,
        matching=dict(matching),
    )


@dataclass
class TopicFlowMatrix:
    """Shared-term counts: rows are topics of b, columns topics of a."""

    rows: list[int]
    cols: list[int]
    counts: np.ndarray

    @property
    def total_shared(self) -> int:
        return int(self.counts.sum())

    def to_json(self) -> str:
        return json.dumps(
            {"rows": self.rows, "cols": self.cols, "counts": self.counts.tolist()}
        )


def compare_topic_sets(a: TopicSet, b: TopicSet) -> TopicFlowMatrix:
    """How the terms of a's topics distribute over b's topics.

    Entry (i, j) counts terms assigned both to topic i of b and topic j
    of a; terms unassigned in either set do not contribute.
    """
    counts = np.zeros((b.n_topics, a.n_topics), dtype=np.int64)
    a_membership = a.term_topic()
    for i, terms in enumerate(b.topics):
        for t in terms:
            j = a_membership.get(t)
            if j is not None:
                counts[i, j] += 1
    return TopicFlowMatrix(
        rows=list(range(b.n_topics)), cols=list(range(a.n_topics)), counts=counts
    )
