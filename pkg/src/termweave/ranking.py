"""Term ranking: per-document random-walk ranking and corpus-level aggregation.

The document ranking is the stationary distribution of a Markov chain on
the document's unique terms.  From term ``s`` the walk moves with
probability ``alpha`` to a term ``t`` co-occurring within a window of
``w`` tokens, weighted by inverse document frequency, and with
probability ``1 - alpha`` teleports to any term, preferring terms that
appear early in the document::

    P[s, t] = alpha * idf(t) * f[s, t] / sum_u idf(u) * f[s, u]
            + (1 - alpha) * (1 + pos(t))**beta * idf(t) / Z

Rows with no co-occurrence mass put their full weight on the teleport
distribution, keeping the chain stochastic.

Corpus-level ranking discretizes each document's ranking into ratings
0..K (top slices of the sorted term list) and combines them with a
Bayesian average whose prior strength is the mean document frequency.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConvergenceError, DataError
from .ingest import AnnotatedDocument, Vocabulary


@dataclass(frozen=True)
class RankParams:
    alpha: float = 0.85
    beta: float = -0.9
    window: int = 5
    idf_floor: float = 1e-6
    tol: float = 1e-10
    max_iter: int = 500

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise DataError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.beta >= 0:
            raise DataError(f"beta must be negative, got {self.beta}")
        if self.window < 2:
            raise DataError(f"window must be >= 2, got {self.window}")
        if self.idf_floor <= 0:
            raise DataError(f"idf_floor must be positive, got {self.idf_floor}")


def idf(term: str | int, vocabulary: Vocabulary, n_docs: int, floor: float = 1e-6) -> float:
    """Inverse document frequency log(N / (1 + Df)), clamped below by ``floor``.

    The clamp keeps the value strictly positive when Df + 1 >= N, which
    the random-walk transition matrix needs to stay stochastic.
    """
    df = vocabulary.doc_frequency(term)
    return max(math.log(n_docs / (1.0 + df)), floor)


class DocTermGraph:
    """Windowed co-occurrence counts of one document's unique terms.

    Vertices are term ids sorted ascending; ``counts[i, j]`` is the
    number of token index pairs (i < j, distinct terms) at distance
    <= window - 1.  First-occurrence positions refer to the cleaned
    token sequence.
    """

    def __init__(
        self,
        doc_id: str,
        term_ids: np.ndarray,
        counts: np.ndarray,
        first_pos: np.ndarray,
        window: int,
    ):
        self.doc_id = doc_id
        self.term_ids = term_ids
        self.counts = counts
        self.first_pos = first_pos
        self.window = window

    @property
    def n_terms(self) -> int:
        return len(self.term_ids)


def build_doc_term_graph(
    doc: AnnotatedDocument, vocabulary: Vocabulary, window: int = 5
) -> DocTermGraph:
    if not doc.tokens:
        raise DataError(f"{doc.doc_id}: cannot build a term graph without tokens")
    sequence = np.array([vocabulary.id(t) for t in doc.term_sequence], dtype=np.int64)
    term_ids = np.unique(sequence)
    index = {tid: i for i, tid in enumerate(term_ids.tolist())}
    n = len(term_ids)

    counts = np.zeros((n, n), dtype=np.float64)
    m = len(sequence)
    for i in range(m):
        a = index[int(sequence[i])]
        for j in range(i + 1, min(i + window, m)):
            b = index[int(sequence[j])]
            if a != b:
                counts[a, b] += 1.0
                counts[b, a] += 1.0

    first_pos = np.empty(n, dtype=np.float64)
    positions = doc.first_positions
    for tid, i in index.items():
        first_pos[i] = positions[vocabulary.term(tid)]
    return DocTermGraph(doc.doc_id, term_ids, counts, first_pos, window)


def transition_matrix(
    graph: DocTermGraph, idf_values: np.ndarray, params: RankParams
) -> np.ndarray:
    """Dense row-stochastic transition matrix of the ranking walk."""
    n = graph.n_terms
    teleport = (1.0 + graph.first_pos) ** params.beta * idf_values
    teleport /= teleport.sum()

    weighted = graph.counts * idf_values[np.newaxis, :]
    row_sums = weighted.sum(axis=1)
    P = np.tile(teleport, (n, 1))
    linked = row_sums > 0
    P[linked] = (
        params.alpha * weighted[linked] / row_sums[linked, np.newaxis]
        + (1.0 - params.alpha) * teleport[np.newaxis, :]
    )
    return P


def stationary_distribution(P: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual < tol:
            return pi
    raise ConvergenceError(
        f"power iteration did not converge after {max_iter} iterations "
        f"(last L1 residual {residual:.3e})",
        residual=residual,
    )


def pos_idf_rank(
    graph: DocTermGraph, idf_values: np.ndarray, params: RankParams
) -> dict[int, float]:
    """Stationary distribution of the ranking walk, keyed by term id."""
    if graph.n_terms == 0:
        raise DataError(f"{graph.doc_id}: empty term graph")
    if graph.n_terms == 1:
        return {int(graph.term_ids[0]): 1.0}
    if np.any(idf_values <= 0):
        raise DataError("idf values must be positive (apply the idf floor)")
    P = transition_matrix(graph, idf_values, params)
    pi = stationary_distribution(P, params.tol, params.max_iter)
    return {int(t): float(p) for t, p in zip(graph.term_ids, pi)}


@dataclass
class DocRanking:
    """Per-document ranking r_d plus its discretized ratings q_d.

    ``order`` lists term ids by descending r_d, ties broken by ascending
    term id so the rating boundaries are deterministic.
    """

    doc_id: str
    order: list[int]
    r: dict[int, float]
    q: dict[int, int]
    parts: int = 20
    cutoff: int = 3

    @property
    def n_terms(self) -> int:
        return len(self.order)


def discretize(r: Mapping[int, float], parts: int = 20, cutoff: int = 3) -> dict[int, int]:
    """Split the sorted term list into ``parts`` slices of length floor(m/parts).

    The top slice gets rating ``cutoff``, the next ``cutoff - 1``, down
    to 1; everything after the first ``cutoff`` slices (and every term
    when the slice length is 0) gets 0.
    """
    if cutoff < 1 or parts < cutoff:
        raise DataError(f"need parts >= cutoff >= 1, got parts={parts} cutoff={cutoff}")
    order = sorted(r, key=lambda t: (-r[t], t))
    size = len(order) // parts
    q: dict[int, int] = {}
    for i, term in enumerate(order):
        slice_idx = i // size if size else parts
        q[term] = cutoff - slice_idx if slice_idx < cutoff else 0
    return q


def rank_document(
    doc: AnnotatedDocument,
    vocabulary: Vocabulary,
    n_docs: int,
    params: RankParams | None = None,
    parts: int = 20,
    cutoff: int = 3,
) -> DocRanking:
    params = params or RankParams()
    graph = build_doc_term_graph(doc, vocabulary, params.window)
    idf_values = np.array(
        [idf(int(t), vocabulary, n_docs, params.idf_floor) for t in graph.term_ids]
    )
    r = pos_idf_rank(graph, idf_values, params)
    q = discretize(r, parts, cutoff)
    order = sorted(r, key=lambda t: (-r[t], t))
    return DocRanking(doc.doc_id, order, r, q, parts, cutoff)


def rank_corpus(
    docs: Sequence[AnnotatedDocument],
    vocabulary: Vocabulary,
    params: RankParams | None = None,
    parts: int = 20,
    cutoff: int = 3,
) -> list[DocRanking]:
    n_docs = len(docs)
    return [
        rank_document(doc, vocabulary, n_docs, params, parts, cutoff)
        for doc in docs
        if doc.tokens
    ]


@dataclass
class CorpusRanking:
    """Bayesian-average specificity score r(t) over all interned terms.

    r(t) = (C * L + sum_d q_d(t)) / (C + Df(t)) with prior strength C =
    mean document frequency and prior mean L = K(K+1) / (2A).
    """

    r: dict[int, float]
    prior_strength: float
    prior_mean: float
    sum_q: dict[int, int] = field(default_factory=dict)

    def value(self, term_id: int) -> float:
        return self.r[term_id]

    def top_terms(self, vocabulary: Vocabulary, n: int = 10) -> list[str]:
        order = sorted(self.r, key=lambda t: (-self.r[t], t))
        return [vocabulary.term(t) for t in order[:n]]


def bayesian_average(
    sum_q: float, df: float, prior_strength: float, prior_mean: float
) -> float:
    return (prior_strength * prior_mean + sum_q) / (prior_strength + df)


def corpus_rank(
    rankings: Iterable[DocRanking],
    vocabulary: Vocabulary,
    parts: int = 20,
    cutoff: int = 3,
) -> CorpusRanking:
    if len(vocabulary) == 0:
        raise DataError("empty vocabulary")
    df = vocabulary.doc_frequencies
    prior_strength = sum(df) / len(df)
    prior_mean = cutoff * (cutoff + 1) / (2.0 * parts)
    sum_q: dict[int, int] = {}
    for ranking in rankings:
        for term, q in ranking.q.items():
            if q:
                sum_q[term] = sum_q.get(term, 0) + q
    r = {
        tid: bayesian_average(sum_q.get(tid, 0), df[tid], prior_strength, prior_mean)
        for tid in range(len(df))
    }
    return CorpusRanking(r=r, prior_strength=prior_strength, prior_mean=prior_mean, sum_q=sum_q)


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def write_corpus_ranking_csv(
    path: str | Path, ranking: CorpusRanking, vocabulary: Vocabulary
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["term", "r", "df", "sum_q"])
        for tid in sorted(ranking.r, key=lambda t: (-ranking.r[t], t)):
            writer.writerow(
                [
                    vocabulary.term(tid),
                    f"{ranking.r[tid]:.10g}",
                    vocabulary.doc_frequency(tid),
                    ranking.sum_q.get(tid, 0),
                ]
            )


def write_doc_rankings_csv(
    path: str | Path, rankings: Iterable[DocRanking], vocabulary: Vocabulary
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "term", "r_d", "q_d"])
        for ranking in rankings:
            for tid in ranking.order:
                writer.writerow(
                    [
                        ranking.doc_id,
                        vocabulary.term(tid),
                        f"{ranking.r[tid]:.10g}",
                        ranking.q[tid],
                    ]
                )
