"""Rank-reduced corpus term co-occurrence graph.

Each document keeps only the top share of its unique terms by document
ranking; the graph's vertices are the union of the retained sets and an
edge weight counts in how many documents both endpoints were retained.
Pair generation is per document, aggregation is a single sparse merge,
which keeps million-edge corpora tractable.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .ingest import AnnotatedDocument, Vocabulary
from .ranking import DocRanking


@dataclass
class TermGraph:
    """Weighted undirected term graph in CSR form.

    ``term_ids[i]`` is the vocabulary id of vertex ``i``; vertices are
    sorted by ascending term id.  ``indptr``/``indices``/``weights``
    hold both directions of every edge; there are no self-loops.
    """

    term_ids: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    reduction: float
    corpus_id: str = ""
    retained: dict[str, list[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._vertex_of = {int(t): i for i, t in enumerate(self.term_ids)}

    @property
    def n_vertices(self) -> int:
        return len(self.term_ids)

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum()) / 2.0

    def vertex(self, term_id: int) -> int:
        return self._vertex_of[term_id]

    def has_term(self, term_id: int) -> bool:
        return term_id in self._vertex_of

    def degree_weights(self) -> np.ndarray:
        out = np.zeros(self.n_vertices)
        np.add.at(out, self.row_indices(), self.weights)
        return out

    def row_indices(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_vertices), np.diff(self.indptr))

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def edge_weight(self, term_a: int, term_b: int) -> float:
        va = self._vertex_of.get(term_a)
        vb = self._vertex_of.get(term_b)
        if va is None or vb is None:
            return 0.0
        nbrs, wts = self.neighbors(va)
        hit = np.nonzero(nbrs == vb)[0]
        return float(wts[hit[0]]) if len(hit) else 0.0

    def max_weight_edge(self) -> tuple[int, int, float]:
        if len(self.weights) == 0:
            raise DataError("graph has no edges")
        k = int(np.argmax(self.weights))
        rows = self.row_indices()
        return int(self.term_ids[rows[k]]), int(self.term_ids[self.indices[k]]), float(self.weights[k])


def retained_terms(ranking: DocRanking, reduction: float) -> list[int]:
    """Top floor(p * l_d / 100) term ids of one document, rank order."""
    if not 0 < reduction <= 100:
        raise DataError(f"reduction percentage must be in (0, 100], got {reduction}")
    keep = int(ranking.n_terms * reduction // 100)
    return ranking.order[:keep]


def reduce_document(
    doc: AnnotatedDocument,
    ranking: DocRanking,
    reduction: float,
    vocabulary: Vocabulary,
) -> list[int]:
    """The document's token sequence filtered to its retained terms."""
    kept = set(retained_terms(ranking, reduction))
    return [tid for tid in (vocabulary.id(t) for t in doc.term_sequence) if tid in kept]


def build_corpus_graph(
    rankings: Sequence[DocRanking],
    reduction: float,
    corpus_id: str = "",
) -> TermGraph:
    retained: dict[str, list[int]] = {}
    chunks: list[np.ndarray] = []
    vertex_ids: set[int] = set()
    for ranking in rankings:
        kept = retained_terms(ranking, reduction)
        retained[ranking.doc_id] = kept
        vertex_ids.update(kept)
        k = len(kept)
        if k < 2:
            continue
        terms = np.sort(np.asarray(kept, dtype=np.int64))
        iu, ju = np.triu_indices(k, 1)
        # encode each (a, b) pair, a < b, into one int64 key for the merge
        chunks.append(terms[iu] << 32 | terms[ju])

    term_ids = np.array(sorted(vertex_ids), dtype=np.int64)
    if term_ids.size and int(term_ids[-1]) >= 1 << 31:
        raise DataError("term id space exceeds pair encoding range")

    if chunks:
        keys, counts = np.unique(np.concatenate(chunks), return_counts=True)
        src = keys >> 32
        dst = keys & 0xFFFFFFFF
    else:
        src = dst = counts = np.array([], dtype=np.int64)

    return _from_edges(term_ids, src, dst, counts.astype(np.float64), reduction, corpus_id, retained)


def _from_edges(
    term_ids: np.ndarray,
    src: np.ndarray,
    dst: np.ndarray,
    weights: np.ndarray,
    reduction: float,
    corpus_id: str,
    retained: dict[str, list[int]] | None = None,
) -> TermGraph:
    n = len(term_ids)
    lookup = {int(t): i for i, t in enumerate(term_ids)}
    a = np.array([lookup[int(t)] for t in src], dtype=np.int64)
    b = np.array([lookup[int(t)] for t in dst], dtype=np.int64)

    rows = np.concatenate([a, b])
    cols = np.concatenate([b, a])
    wts = np.concatenate([weights, weights])
    order = np.lexsort((cols, rows))
    rows, cols, wts = rows[order], cols[order], wts[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return TermGraph(
        term_ids=term_ids,
        indptr=indptr,
        indices=cols,
        weights=wts,
        reduction=reduction,
        corpus_id=corpus_id,
        retained=retained or {},
    )


def from_weighted_edges(
    edges: Iterable[tuple[int, int, float]],
    n_vertices: int | None = None,
    reduction: float = 100.0,
) -> TermGraph:
    """Build a graph from explicit undirected (a, b, weight) triples.

    Convenience constructor for tests and synthetic graphs; vertex ids
    double as term ids.
    """
    src, dst, wts = [], [], []
    seen = set()
    top = -1
    for a, b, w in edges:
        if a == b:
            raise DataError("self-loops are not allowed")
        key = (min(a, b), max(a, b))
        if key in seen:
            raise DataError(f"duplicate edge {key}")
        seen.add(key)
        src.append(key[0])
        dst.append(key[1])
        wts.append(float(w))
        top = max(top, key[1])
    n = n_vertices if n_vertices is not None else top + 1
    term_ids = np.arange(n, dtype=np.int64)
    return _from_edges(
        term_ids,
        np.array(src, dtype=np.int64),
        np.array(dst, dtype=np.int64),
        np.array(wts, dtype=np.float64),
        reduction,
        corpus_id="",
    )


# ---------------------------------------------------------------------------
# Serialization: text edge list with a vertex header, and a binary cache
# ---------------------------------------------------------------------------

def write_edge_list(graph: TermGraph, vocabulary: Vocabulary) -> str:
    out = io.StringIO()
    out.write(f"%vertices\t{graph.n_vertices}\n")
    for tid in graph.term_ids:
        out.write(vocabulary.term(int(tid)) + "\n")
    rows = graph.row_indices()
    mask = rows < graph.indices
    out.write(f"%edges\t{int(mask.sum())}\n")
    for r, c, w in zip(rows[mask], graph.indices[mask], graph.weights[mask]):
        a = vocabulary.term(int(graph.term_ids[r]))
        b = vocabulary.term(int(graph.term_ids[c]))
        out.write(f"{a}\t{b}\t{w:g}\n")
    return out.getvalue()


def read_edge_list(text: str, vocabulary: Vocabulary, reduction: float = 100.0) -> TermGraph:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("%vertices\t"):
        raise DataError("edge list must start with a %vertices header")
    n = int(lines[0].split("\t")[1])
    terms = lines[1 : 1 + n]
    if len(terms) != n:
        raise DataError("vertex header truncated")
    term_ids = np.array(sorted(vocabulary.id(t) for t in terms), dtype=np.int64)
    edge_header = lines[1 + n]
    if not edge_header.startswith("%edges\t"):
        raise DataError("missing %edges header")
    m = int(edge_header.split("\t")[1])
    src, dst, wts = [], [], []
    for line in lines[2 + n : 2 + n + m]:
        a, b, w = line.split("\t")
        src.append(vocabulary.id(a))
        dst.append(vocabulary.id(b))
        wts.append(float(w))
    return _from_edges(
        term_ids,
        np.array(src, dtype=np.int64),
        np.array(dst, dtype=np.int64),
        np.array(wts, dtype=np.float64),
        reduction,
        corpus_id="",
    )


def save_npz(graph: TermGraph, path: str | Path) -> None:
    np.savez(
        path,
        term_ids=graph.term_ids,
        indptr=graph.indptr,
        indices=graph.indices,
        weights=graph.weights,
        reduction=np.array([graph.reduction]),
    )


def load_npz(path: str | Path, corpus_id: str = "") -> TermGraph:
    with np.load(path) as data:
        return TermGraph(
            term_ids=data["term_ids"],
            indptr=data["indptr"],
            indices=data["indices"],
            weights=data["weights"],
            reduction=float(data["reduction"][0]),
            corpus_id=corpus_id,
        )
