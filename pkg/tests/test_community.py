from __future__ import annotations

import numpy as np
import pytest

from termweave.community import (
    DetectParams,
    TopicSet,
    _consensus_groups,
    detect_topics,
    leiden,
    modularity,
)
from termweave.errors import DataError
from termweave.graph import from_weighted_edges
from termweave.ingest import build_vocabulary
from tests.conftest import make_doc
from tests.oracles import (
    best_partition_brute_force,
    modularity_reference,
    random_weighted_graph,
)


def two_triangles(bridge: bool = False):
    edges = [
        (0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0),
        (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0),
    ]
    if bridge:
        edges.append((2, 3, 1.0))
    return from_weighted_edges(edges, n_vertices=6)


class TestModularity:
    def test_single_community_is_zero_at_gamma_one(self):
        g = two_triangles(bridge=True)
        assert modularity(g, np.zeros(6, dtype=int), gamma=1.0) == pytest.approx(0.0, abs=1e-12)

    def test_two_triangles_hand_value(self):
        g = two_triangles(bridge=False)
        labels = np.array([0, 0, 0, 1, 1, 1])
        assert modularity(g, labels, gamma=1.0) == pytest.approx(0.5, abs=1e-12)

    def test_gamma_zero_collapses_to_intra_fraction(self):
        g = two_triangles(bridge=False)
        labels = np.array([0, 0, 0, 1, 1, 1])
        assert modularity(g, labels, gamma=0.0) == pytest.approx(1.0, abs=1e-12)

    def test_singletons_negative(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            g = random_weighted_graph(rng, int(rng.integers(2, 9)))
            labels = np.arange(g.n_vertices)
            assert modularity(g, labels, gamma=1.0) < 0

    def test_matches_reference_definition(self):
        rng = np.random.default_rng(3)
        for _ in range(15):
            g = random_weighted_graph(rng, int(rng.integers(2, 9)))
            labels = rng.integers(0, 3, size=g.n_vertices)
            for gamma in (0.5, 1.0, 2.0):
                assert modularity(g, labels, gamma) == pytest.approx(
                    modularity_reference(g, labels, gamma), abs=1e-12
                )

    def test_edgeless_graph_errors(self):
        g = from_weighted_edges([], n_vertices=3)
        with pytest.raises(DataError):
            modularity(g, np.zeros(3, dtype=int), 1.0)


class TestLeiden:
    def test_two_triangles_with_bridge(self):
        g = two_triangles(bridge=True)
        part = leiden(g, gamma=1.0, seed=0)
        labels = part.labels
        assert labels[0] == labels[1] == labels[2]
        assert labels[3] == labels[4] == labels[5]
        assert labels[0] != labels[3]
        # exhaustive search agrees that the triangles are optimal
        best_q, best_labels = best_partition_brute_force(g, 1.0)
        assert modularity(g, labels, 1.0) == pytest.approx(best_q, abs=1e-12)

    def test_gamma_zero_single_community_on_connected_graph(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            g = random_weighted_graph(rng, int(rng.integers(3, 9)))
            part = leiden(g, gamma=1e-9, seed=1)
            assert part.n_communities == 1

    def test_huge_gamma_all_singletons(self):
        g = two_triangles(bridge=True)
        two_m = float(g.weights.sum())
        gamma = 10 * two_m**2 / float(g.weights.min())
        part = leiden(g, gamma=gamma, seed=3)
        assert part.n_communities == 6

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(29)
        g = random_weighted_graph(rng, 8)
        a = leiden(g, gamma=1.0, seed=42)
        b = leiden(g, gamma=1.0, seed=42)
        assert np.array_equal(a.labels, b.labels)
        assert a.quality_trace == b.quality_trace

    def test_quality_trace_monotone(self):
        rng = np.random.default_rng(31)
        for trial in range(10):
            g = random_weighted_graph(rng, int(rng.integers(4, 9)))
            for gamma in (0.5, 1.0, 2.0):
                part = leiden(g, gamma=gamma, seed=trial)
                trace = np.array(part.quality_trace)
                assert np.all(np.diff(trace) >= -1e-12)

    def test_node_move_local_optimality(self):
        rng = np.random.default_rng(37)
        for trial in range(10):
            g = random_weighted_graph(rng, int(rng.integers(4, 9)))
            part = leiden(g, gamma=1.0, seed=trial)
            labels = part.labels
            q0 = modularity(g, labels, 1.0)
            for v in range(g.n_vertices):
                nbrs, _ = g.neighbors(v)
                targets = set(int(labels[u]) for u in nbrs) | {int(labels.max()) + 1}
                for c in targets:
                    if c == labels[v]:
                        continue
                    trial_labels = labels.copy()
                    trial_labels[v] = c
                    assert modularity(g, trial_labels, 1.0) <= q0 + 1e-9

    def test_communities_internally_connected(self):
        rng = np.random.default_rng(41)
        for trial in range(10):
            g = random_weighted_graph(rng, 8)
            part = leiden(g, gamma=2.0, seed=trial)
            for members in part.communities():
                member_set = set(int(x) for x in members)
                # BFS within the community
                seen = {int(members[0])}
                frontier = [int(members[0])]
                while frontier:
                    v = frontier.pop()
                    nbrs, _ = g.neighbors(v)
                    for u in nbrs:
                        u = int(u)
                        if u in member_set and u not in seen:
                            seen.add(u)
                            frontier.append(u)
                assert seen == member_set

    def test_brute_force_oracle_small_sample(self):
        # smaller sibling of the acceptance criterion for quick feedback
        from tests.oracles import oracle_graph_suite

        hits = total = 0
        for g, optima in oracle_graph_suite(seed=97, count=6):
            for gamma, best_q in optima.items():
                got = max(
                    modularity(g, leiden(g, gamma, seed=s).labels, gamma)
                    for s in range(5)
                )
                assert got >= 0.95 * best_q - 1e-12
                total += 1
                if got >= best_q - 1e-9:
                    hits += 1
        assert hits >= total - 2


class TestDetectTopics:
    def test_two_cliques_exactly_recovered(self):
        edges = []
        for base in (0, 5):
            for i in range(5):
                for j in range(i + 1, 5):
                    edges.append((base + i, base + j, 1.0))
        g = from_weighted_edges(edges, n_vertices=10)
        params = DetectParams(gamma=1.0, n_rep=8, n_con=6, min_size_fraction=0.1, seed=0)
        topics = detect_topics(g, params)
        assert topics.n_topics == 2
        assert sorted(map(tuple, topics.topics)) == [tuple(range(5)), tuple(range(5, 10))]
        assert topics.unassigned == []

    def test_consensus_invariant_to_run_relabeling(self):
        rng = np.random.default_rng(51)
        memberships = rng.integers(0, 4, size=(10, 30))
        groups = _consensus_groups(memberships, n_con=7)
        permuted = memberships.copy()
        for i in range(len(permuted)):
            perm = rng.permutation(4)
            permuted[i] = perm[permuted[i]]
        assert _consensus_groups(permuted, n_con=7) == groups

    def test_min_size_filters_small_groups(self):
        # two cliques of very different size; tiny one below the threshold
        edges = []
        for i in range(8):
            for j in range(i + 1, 8):
                edges.append((i, j, 1.0))
        edges.append((8, 9, 1.0))
        g = from_weighted_edges(edges, n_vertices=10)
        params = DetectParams(gamma=1.0, n_rep=5, n_con=4, min_size_fraction=0.9, seed=0)
        topics = detect_topics(g, params)
        # s_min = 0.9 * 10 / 2 = 4.5: the pair {8,9} is dropped
        assert any(len(t) == 8 for t in topics.topics)
        assert 8 in topics.unassigned and 9 in topics.unassigned

    def test_provenance_recorded(self):
        g = two_triangles(bridge=True)
        params = DetectParams(gamma=1.0, n_rep=4, n_con=3, seed=9)
        topics = detect_topics(g, params)
        assert topics.params["gamma"] == 1.0
        assert topics.params["n_rep"] == 4
        assert topics.params["seed"] == 9
        assert "s_min" in topics.params and "median_k" in topics.params

    def test_topics_partition_the_vertex_set(self):
        rng = np.random.default_rng(61)
        g = random_weighted_graph(rng, 8)
        params = DetectParams(gamma=1.0, n_rep=6, n_con=4, min_size_fraction=0.2, seed=2)
        topics = detect_topics(g, params)
        all_terms = sorted(t for topic in topics.topics for t in topic) + list(
            topics.unassigned
        )
        assert sorted(all_terms) == [int(t) for t in g.term_ids]

    def test_json_roundtrip(self):
        docs = [make_doc("d", [f"term{i:02d}" for i in range(6)])]
        vocab = build_vocabulary(docs)
        g = two_triangles(bridge=True)
        params = DetectParams(gamma=1.0, n_rep=3, n_con=2, seed=0)
        topics = detect_topics(g, params)
        clone = TopicSet.from_json(topics.to_json(vocab), vocab)
        assert clone.topics == topics.topics
        assert clone.unassigned == topics.unassigned

    def test_params_validation(self):
        with pytest.raises(DataError):
            DetectParams(gamma=0.0)
        with pytest.raises(DataError):
            DetectParams(gamma=1.0, n_rep=5, n_con=6)
        with pytest.raises(DataError):
            DetectParams(gamma=1.0, min_size_fraction=0.0)
