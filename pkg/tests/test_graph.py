from __future__ import annotations

import io

import numpy as np
import pytest

from termweave.errors import DataError
from termweave.graph import (
    build_corpus_graph,
    from_weighted_edges,
    load_npz,
    read_edge_list,
    reduce_document,
    retained_terms,
    save_npz,
    write_edge_list,
)
from termweave.ranking import DocRanking, rank_corpus
from tests.conftest import make_corpus
from tests.oracles import cooccurrence_reference


def ranking_from_order(doc_id: str, order: list[int]) -> DocRanking:
    n = len(order)
    r = {t: (n - i) / n for i, t in enumerate(order)}
    return DocRanking(doc_id=doc_id, order=order, r=r, q={t: 0 for t in order})


class TestRetention:
    def test_half_of_ten(self):
        ranking = ranking_from_order("d", list(range(10)))
        assert retained_terms(ranking, 50) == [0, 1, 2, 3, 4]

    def test_floor_to_zero(self):
        ranking = ranking_from_order("d", [7, 8, 9])
        assert retained_terms(ranking, 10) == []

    def test_full_retention(self):
        ranking = ranking_from_order("d", [3, 1, 2])
        assert retained_terms(ranking, 100) == [3, 1, 2]

    def test_reduce_document_keeps_token_order(self):
        docs, vocab = make_corpus({"d": ["aaa", "bbb", "aaa", "ccc", "ddd"]})
        ids = {t: vocab.id(t) for t in ("aaa", "bbb", "ccc", "ddd")}
        order = [ids["aaa"], ids["ccc"], ids["bbb"], ids["ddd"]]
        ranking = ranking_from_order("d", order)
        seq = reduce_document(docs[0], ranking, 50, vocab)
        assert seq == [ids["aaa"], ids["aaa"], ids["ccc"]]

    def test_cutoff_tie_breaks_by_term_id(self):
        # equal r for all terms: order must fall back to ascending id
        r = {t: 0.25 for t in (9, 4, 7, 2)}
        order = sorted(r, key=lambda t: (-r[t], t))
        ranking = DocRanking("d", order, r, {t: 0 for t in order})
        assert retained_terms(ranking, 50) == [2, 4]


class TestBuildCorpusGraph:
    def test_two_document_counting(self):
        rankings = [
            ranking_from_order("d1", [0, 1, 2]),
            ranking_from_order("d2", [0, 1]),
        ]
        g = build_corpus_graph(rankings, 100)
        assert g.n_vertices == 3
        assert g.edge_weight(0, 1) == 2
        assert g.edge_weight(0, 2) == 1
        assert g.edge_weight(1, 2) == 1

    def test_single_document_identity(self):
        g = build_corpus_graph([ranking_from_order("d", [0, 1])], 100)
        assert g.n_vertices == 2
        assert g.n_edges == 1
        assert g.edge_weight(0, 1) == 1

    def test_no_self_loops_and_symmetry(self):
        rng = np.random.default_rng(5)
        rankings = [
            ranking_from_order(f"d{i}", list(rng.permutation(rng.integers(2, 12)).astype(int)))
            for i in range(30)
        ]
        g = build_corpus_graph(rankings, 80)
        rows = g.row_indices()
        assert not np.any(rows == g.indices)
        # symmetry: weight(a,b) == weight(b,a) via lookup
        for r, c in zip(rows[:50], g.indices[:50]):
            ta, tb = int(g.term_ids[r]), int(g.term_ids[c])
            assert g.edge_weight(ta, tb) == g.edge_weight(tb, ta)
        assert np.all(g.weights == np.round(g.weights))

    def test_recount_against_brute_force(self):
        rng = np.random.default_rng(13)
        rankings = []
        for i in range(60):
            terms = list(rng.choice(40, size=rng.integers(1, 15), replace=False).astype(int))
            rankings.append(ranking_from_order(f"d{i}", terms))
        g = build_corpus_graph(rankings, 60)
        expected = cooccurrence_reference(
            {r.doc_id: set(retained_terms(r, 60)) for r in rankings}
        )
        got = {}
        rows = g.row_indices()
        for r, c, w in zip(rows, g.indices, g.weights):
            a, b = int(g.term_ids[r]), int(g.term_ids[c])
            if a < b:
                got[(a, b)] = int(w)
        assert got == expected

    def test_monotone_in_reduction(self):
        rng = np.random.default_rng(23)
        rankings = [
            ranking_from_order(f"d{i}", list(rng.permutation(20).astype(int)[: rng.integers(4, 20)]))
            for i in range(25)
        ]
        g_small = build_corpus_graph(rankings, 40)
        g_big = build_corpus_graph(rankings, 90)
        assert set(g_small.term_ids).issubset(set(g_big.term_ids))
        rows = g_small.row_indices()
        for r, c, w in zip(rows, g_small.indices, g_small.weights):
            a, b = int(g_small.term_ids[r]), int(g_small.term_ids[c])
            assert g_big.edge_weight(a, b) >= w

    def test_weight_bounded_by_retained_df(self):
        rankings = [
            ranking_from_order("d1", [0, 1, 2, 3]),
            ranking_from_order("d2", [1, 0]),
            ranking_from_order("d3", [0, 1, 4, 5]),
        ]
        g = build_corpus_graph(rankings, 100)
        df = {t: sum(1 for r in rankings if t in r.order) for t in range(6)}
        rows = g.row_indices()
        for r, c, w in zip(rows, g.indices, g.weights):
            a, b = int(g.term_ids[r]), int(g.term_ids[c])
            assert w <= min(df[a], df[b])

    def test_integration_with_real_rankings(self, abc_corpus):
        docs, vocab = abc_corpus
        rankings = rank_corpus(docs, vocab)
        g = build_corpus_graph(rankings, 100, corpus_id="abc")
        # p=100 retains everything: weights count documents sharing both terms
        expected = cooccurrence_reference(
            {d.doc_id: {vocab.id(t) for t in d.unique_terms} for d in docs}
        )
        total = sum(expected.values())
        assert g.total_weight == total


class TestEmptyRetention:
    def test_document_with_empty_retained_set_contributes_nothing(self):
        rankings = [
            ranking_from_order("d1", [0, 1]),
            ranking_from_order("d2", [2, 3, 4]),  # floor(3*10/100) = 0
        ]
        g = build_corpus_graph(rankings, 10)
        assert g.n_vertices == 0
        assert g.n_edges == 0

    def test_bad_reduction(self):
        with pytest.raises(DataError):
            retained_terms(ranking_from_order("d", [0]), 0)
        with pytest.raises(DataError):
            retained_terms(ranking_from_order("d", [0]), 101)


class TestSerialization:
    def test_edge_list_roundtrip(self, abc_corpus):
        docs, vocab = abc_corpus
        rankings = rank_corpus(docs, vocab)
        g = build_corpus_graph(rankings, 100)
        text = write_edge_list(g, vocab)
        clone = read_edge_list(text, vocab)
        assert np.array_equal(clone.term_ids, g.term_ids)
        assert np.array_equal(clone.indptr, g.indptr)
        assert np.array_equal(clone.indices, g.indices)
        assert np.allclose(clone.weights, g.weights)

    def test_npz_roundtrip(self, abc_corpus):
        docs, vocab = abc_corpus
        g = build_corpus_graph(rank_corpus(docs, vocab), 100)
        buf = io.BytesIO()
        save_npz(g, buf)
        clone = load_npz(io.BytesIO(buf.getvalue()))
        assert np.array_equal(clone.term_ids, g.term_ids)
        assert np.allclose(clone.weights, g.weights)
        assert clone.reduction == g.reduction

    def test_from_weighted_edges_rejects_self_loop(self):
        with pytest.raises(DataError):
            from_weighted_edges([(1, 1, 2.0)])
