"""Community detection on the term graph.

Partition quality is the resolution-parametrized modularity

    Q_gamma = I - gamma * J

where I is the fraction of edge weight falling inside communities and J
is the expectation of that fraction under a random graph with the same
weighted degrees.  gamma tunes granularity: gamma = 0 is maximized by
one community, gamma -> infinity by all singletons.

Optimization uses the Leiden scheme: queue-based greedy node moves,
a refinement phase that rebuilds each community from singletons through
merges restricted to well-connected sub-communities (chosen uniformly at
random among strictly improving candidates, seeded RNG), and aggregation
of the refined partition.  The move/refine/aggregate cycle restarts from
the flat vertex-level partition until it reaches a fixpoint, so the
returned partition admits no improving single-vertex move.

Topics are stabilized over repeated runs: terms that land in a common
community in at least ``n_con`` of ``n_rep`` runs are grouped, and
groups below the minimum size are discarded as unassigned.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .graph import TermGraph
from .ingest import Vocabulary

_GAIN_EPS = 1e-12


@dataclass(frozen=True)
class DetectParams:
    gamma: float
    n_rep: int = 20
    n_con: int = 15
    min_size_fraction: float = 0.10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise DataError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.n_con <= self.n_rep:
            raise DataError(f"need 0 < n_con <= n_rep, got {self.n_con}/{self.n_rep}")
        if not 0 < self.min_size_fraction <= 1:
            raise DataError(
                f"min_size_fraction must be in (0, 1], got {self.min_size_fraction}"
            )

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "n_rep": self.n_rep,
            "n_con": self.n_con,
            "min_size_fraction": self.min_size_fraction,
            "seed": self.seed,
        }


@dataclass
class Partition:
    """Dense community labels over the vertices of one graph."""

    graph: TermGraph
    labels: np.ndarray
    quality_trace: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.labels) != self.graph.n_vertices:
            raise DataError("partition does not cover the graph")
        self.n_communities = int(self.labels.max()) + 1 if len(self.labels) else 0

    def communities(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        return [
            order[lo:hi]
            for lo, hi in zip(*_group_bounds(self.labels[order]))
        ]


def _group_bounds(sorted_labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(sorted_labels) == 0:
        return np.array([], dtype=int), np.array([], dtype=int)
    change = np.nonzero(np.diff(sorted_labels))[0] + 1
    starts = np.concatenate([[0], change])
    stops = np.concatenate([change, [len(sorted_labels)]])
    return starts, stops


def modularity(graph: TermGraph, labels: np.ndarray | Partition, gamma: float = 1.0) -> float:
    """Q_gamma of a partition: intra-weight fraction minus gamma times
    its degree-preserving null-model expectation."""
    if isinstance(labels, Partition):
        labels = labels.labels
    labels = np.asarray(labels)
    if len(labels) != graph.n_vertices:
        raise DataError("partition does not cover the graph")
    two_m = float(graph.weights.sum())
    if two_m == 0:
        raise DataError("modularity is undefined on an edgeless graph")
    rows = graph.row_indices()
    intra = float(graph.weights[labels[rows] == labels[graph.indices]].sum())
    strength = graph.degree_weights()
    per_comm = np.bincount(labels, weights=strength)
    return intra / two_m - gamma * float((per_comm**2).sum()) / two_m**2


# ---------------------------------------------------------------------------
# Leiden optimization
# ---------------------------------------------------------------------------

class _LevelGraph:
    """CSR working graph for one aggregation level.

    Aggregated nodes carry the collapsed internal weight as
    ``self_weight`` (ordered-pair sum) so that quality on any level
    equals quality of the expanded partition on the original graph.
    """

    def __init__(self, indptr, indices, weights, self_weight):
        self.indptr = indptr
        self.indices = indices
        self.weights = weights
        self.self_weight = self_weight
        self.n = len(indptr) - 1
        rows = np.repeat(np.arange(self.n), np.diff(indptr))
        self.strength = self_weight + np.bincount(rows, weights=weights, minlength=self.n)
        self.two_m = float(self.strength.sum())

    @classmethod
    def from_term_graph(cls, graph: TermGraph) -> "_LevelGraph":
        return cls(
            graph.indptr.copy(),
            graph.indices.copy(),
            graph.weights.astype(np.float64),
            np.zeros(graph.n_vertices),
        )

    def quality(self, labels: np.ndarray, gamma: float) -> float:
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        intra = float(self.weights[labels[rows] == labels[self.indices]].sum())
        intra += float(self.self_weight.sum())
        per_comm = np.bincount(labels, weights=self.strength)
        return intra / self.two_m - gamma * float((per_comm**2).sum()) / self.two_m**2


def _local_move(level: _LevelGraph, labels: np.ndarray, gamma: float,
                rng: np.random.Generator) -> bool:
    """Greedy queue-based node moves; returns whether anything moved.

    A node moves to the neighboring (or a fresh empty) community with
    the largest strictly positive quality gain, ties broken toward the
    lowest community label; its neighbors outside the new community are
    re-queued.
    """
    n = level.n
    two_m = level.two_m
    strength = level.strength
    comm_strength = np.bincount(labels, weights=strength, minlength=n).astype(np.float64)
    comm_size = np.bincount(labels, minlength=n)
    free_labels = [c for c in range(n) if comm_size[c] == 0]
    dense_degree = max(64, n >> 2)  # bincount beats the dict path on dense rows

    queue = deque(int(v) for v in rng.permutation(n))
    in_queue = np.ones(n, dtype=bool)
    moved_any = False

    while queue:
        v = queue.popleft()
        in_queue[v] = False
        a = int(labels[v])
        k_v = strength[v]
        lo, hi = level.indptr[v], level.indptr[v + 1]
        nbrs = level.indices[lo:hi]
        wts = level.weights[lo:hi]

        # score(c) = E(v, c) - gamma * k_v * K_c / 2M, with v excluded from c;
        # best candidate maximizes (score, -label) so selection is
        # independent of neighbor iteration order
        e_va = 0.0
        best_c, best_score = a, -np.inf
        if hi - lo > dense_degree:
            sums = np.bincount(labels[nbrs], weights=wts, minlength=n)
            e_va = float(sums[a])
            for c in np.nonzero(sums)[0].tolist():
                if c == a:
                    continue
                score = float(sums[c]) - gamma * k_v * comm_strength[c] / two_m
                if score > best_score:
                    best_c, best_score = c, score
        else:
            link: dict[int, float] = {}
            for u, w in zip(nbrs.tolist(), wts.tolist()):
                c = int(labels[u])
                link[c] = link.get(c, 0.0) + w
            e_va = link.pop(a, 0.0)
            for c in sorted(link):
                score = link[c] - gamma * k_v * comm_strength[c] / two_m
                if score > best_score:
                    best_c, best_score = c, score
        if comm_size[a] > 1 and free_labels and best_score < 0.0:
            best_c, best_score = free_labels[-1], 0.0

        stay_score = e_va - gamma * k_v * (comm_strength[a] - k_v) / two_m
        if best_c == a or best_score <= stay_score + _GAIN_EPS:
            continue
        labels[v] = best_c
        comm_strength[a] -= k_v
        comm_strength[best_c] += k_v
        comm_size[a] -= 1
        comm_size[best_c] += 1
        if comm_size[a] == 0:
            free_labels.append(a)
        if free_labels and free_labels[-1] == best_c:
            free_labels.pop()
        moved_any = True
        for u in nbrs.tolist():
            if labels[u] != best_c and not in_queue[u]:
                queue.append(int(u))
                in_queue[u] = True
    return moved_any


def _refine(level: _LevelGraph, labels: np.ndarray, gamma: float,
            rng: np.random.Generator) -> np.ndarray:
    """Rebuild each community from singletons by well-connected merges.

    Only nodes still in a singleton sub-community may merge, the target
    must be well-connected within the parent community, and the merge
    must strictly increase quality; among such candidates one is picked
    uniformly at random.
    """
    n = level.n
    two_m = level.two_m
    strength = level.strength
    refined = np.arange(n)
    sub_strength = strength.copy()
    sub_size = np.ones(n, dtype=np.int64)

    rows = np.repeat(np.arange(n), np.diff(level.indptr))
    same = labels[rows] == labels[level.indices]
    # E(v, community(v) minus v) for every node in one pass
    within = np.bincount(rows[same], weights=level.weights[same], minlength=n)
    sub_ext = within.copy()  # E(sub-community, parent community minus it)
    comm_strength = np.bincount(labels, weights=strength, minlength=n)
    dense_degree = max(64, n >> 2)

    order = np.argsort(labels, kind="stable")
    starts, stops = _group_bounds(labels[order])
    for lo_g, hi_g in zip(starts, stops):
        members = order[lo_g:hi_g]
        if len(members) < 2:
            continue
        member_comm = int(labels[members[0]])
        k_total = float(comm_strength[member_comm])

        for v in rng.permutation(members).tolist():
            if sub_size[refined[v]] != 1:
                continue
            k_v = strength[v]
            if within[v] + _GAIN_EPS < gamma * k_v * (k_total - k_v) / two_m:
                continue
            lo, hi = level.indptr[v], level.indptr[v + 1]
            nbrs = level.indices[lo:hi]
            wts = level.weights[lo:hi]
            if hi - lo > dense_degree:
                mask = labels[nbrs] == member_comm
                sums = np.bincount(refined[nbrs[mask]], weights=wts[mask], minlength=n)
                sums[v] = 0.0
                link = {d: float(sums[d]) for d in np.nonzero(sums)[0].tolist()}
            else:
                link = {}
                for u, w in zip(nbrs.tolist(), wts.tolist()):
                    if labels[u] == member_comm:
                        d = int(refined[u])
                        if d != v:
                            link[d] = link.get(d, 0.0) + w
            candidates = []
            for d in sorted(link):
                k_d = sub_strength[d]
                if sub_ext[d] + _GAIN_EPS < gamma * k_d * (k_total - k_d) / two_m:
                    continue
                if link[d] - gamma * k_v * k_d / two_m > _GAIN_EPS:
                    candidates.append(d)
            if not candidates:
                continue
            d = candidates[int(rng.integers(len(candidates)))]
            refined[v] = d
            sub_strength[d] += k_v
            sub_size[d] += 1
            sub_ext[d] += within[v] - 2.0 * link[d]
    return refined


def _aggregate(
    level: _LevelGraph, refined: np.ndarray, labels: np.ndarray
) -> tuple[_LevelGraph, np.ndarray, np.ndarray]:
    """Collapse refined sub-communities into single nodes.

    Returns the new level graph, the induced community labels of its
    nodes, and the map from old node to new node.
    """
    compact, node_map = np.unique(refined, return_inverse=True)
    n_new = len(compact)

    rows = np.repeat(np.arange(level.n), np.diff(level.indptr))
    r = node_map[rows]
    c = node_map[level.indices]
    self_weight = np.bincount(node_map, weights=level.self_weight, minlength=n_new)
    diag = r == c
    self_weight += np.bincount(r[diag], weights=level.weights[diag], minlength=n_new)

    off = ~diag
    keys = r[off].astype(np.int64) * n_new + c[off]
    uniq, inv = np.unique(keys, return_inverse=True)
    wts = np.bincount(inv, weights=level.weights[off])
    new_rows = (uniq // n_new).astype(np.int64)
    new_cols = (uniq % n_new).astype(np.int64)
    indptr = np.zeros(n_new + 1, dtype=np.int64)
    np.add.at(indptr, new_rows + 1, 1)
    indptr = np.cumsum(indptr)

    new_labels = np.empty(n_new, dtype=np.int64)
    new_labels[node_map] = labels  # refinement never crosses communities
    _, new_labels = np.unique(new_labels, return_inverse=True)
    return _LevelGraph(indptr, new_cols, wts, self_weight), new_labels, node_map


def _canonical(labels: np.ndarray) -> np.ndarray:
    """Relabel communities densely in order of first vertex appearance."""
    seen: dict[int, int] = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels.tolist()):
        if lab not in seen:
            seen[lab] = len(seen)
        out[i] = seen[lab]
    return out


def leiden(
    graph: TermGraph, gamma: float, seed: int = 0, max_rounds: int = 100
) -> Partition:
    """Greedy Q_gamma maximization, deterministic given ``seed``.

    The returned partition is node-move optimal: no single vertex can be
    moved to an adjacent (or empty) community with a quality gain.
    ``quality_trace`` records Q_gamma after every local-moving phase.
    """
    if graph.n_vertices == 0:
        raise DataError("cannot partition an empty graph")
    if float(graph.weights.sum()) == 0:
        raise DataError("cannot partition an edgeless graph")
    base = _LevelGraph.from_term_graph(graph)
    rng = np.random.default_rng(seed)
    vertex_labels = np.arange(base.n, dtype=np.int64)
    trace: list[float] = []

    for _ in range(max_rounds):
        level = base
        labels = vertex_labels.copy()
        node_map = np.arange(base.n)
        while True:
            _local_move(level, labels, gamma, rng)
            trace.append(level.quality(labels, gamma))
            k = len(np.unique(labels))
            if k == level.n:
                break
            refined = _refine(level, labels, gamma, rng)
            if len(np.unique(refined)) == level.n:
                break
            level, labels, level_map = _aggregate(level, refined, labels)
            node_map = level_map[node_map]
        flat = _canonical(labels[node_map])
        if np.array_equal(flat, vertex_labels):
            break
        vertex_labels = flat
    return Partition(graph=graph, labels=vertex_labels, quality_trace=tuple(trace))


# ---------------------------------------------------------------------------
# Consensus topics
# ---------------------------------------------------------------------------

@dataclass
class TopicSet:
    """Stabilized topics as disjoint term-id sets plus the leftovers."""

    topics: list[list[int]]
    unassigned: list[int]
    params: dict = field(default_factory=dict)

    @property
    def n_topics(self) -> int:
        return len(self.topics)

    @property
    def n_terms(self) -> int:
        return sum(len(t) for t in self.topics) + len(self.unassigned)

    @property
    def coverage(self) -> float:
        total = self.n_terms
        return sum(len(t) for t in self.topics) / total if total else 0.0

    def term_topic(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for i, terms in enumerate(self.topics):
            for t in terms:
                out[t] = i
        return out

    def to_json(self, vocabulary: Vocabulary) -> str:
        payload = {
            "params": self.params,
            "topics": [
                {"id": i, "terms": [vocabulary.term(t) for t in terms]}
                for i, terms in enumerate(self.topics)
            ],
            "unassigned": [vocabulary.term(t) for t in self.unassigned],
        }
        return json.dumps(payload, indent=1, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str, vocabulary: Vocabulary) -> "TopicSet":
        rec = json.loads(text)
        topics = [
            [vocabulary.id(t) for t in topic["terms"]]
            for topic in sorted(rec["topics"], key=lambda x: x["id"])
        ]
        return cls(
            topics=topics,
            unassigned=[vocabulary.id(t) for t in rec["unassigned"]],
            params=rec.get("params", {}),
        )


def detect_topics(graph: TermGraph, params: DetectParams) -> TopicSet:
    """Repeated Leiden runs followed by greedy co-membership grouping.

    Terms are scanned in ascending term id; each seed collects every
    remaining term that shares its community in at least ``n_con`` runs.
    Groups smaller than min_size_fraction * |V| / median(k) are dropped
    and their terms reported unassigned.
    """
    runs = [
        leiden(graph, params.gamma, seed=params.seed + i) for i in range(params.n_rep)
    ]
    memberships = np.stack([run.labels for run in runs])
    median_k = float(np.median([run.n_communities for run in runs]))
    s_min = params.min_size_fraction * graph.n_vertices / median_k

    groups = _consensus_groups(memberships, params.n_con)

    topics: list[list[int]] = []
    unassigned: list[int] = []
    for group in groups:
        term_ids = sorted(int(graph.term_ids[v]) for v in group)
        if len(term_ids) >= s_min:
            topics.append(term_ids)
        else:
            unassigned.extend(term_ids)
    meta = params.to_dict()
    meta.update(
        {
            "reduction": graph.reduction,
            "s_min": s_min,
            "median_k": median_k,
            "run_community_counts": [run.n_communities for run in runs],
        }
    )
    return TopicSet(topics=topics, unassigned=sorted(unassigned), params=meta)


def _consensus_groups(memberships: np.ndarray, n_con: int) -> list[list[int]]:
    """Greedy grouping by co-membership counts, ascending vertex order.

    Vertices with identical membership rows across all runs behave
    identically, so the scan runs over unique membership profiles and
    expands back to vertices at the end.
    """
    n_rep, n = memberships.shape
    profiles, first_idx, profile_of = np.unique(
        memberships.T, axis=0, return_index=True, return_inverse=True
    )
    profile_of = profile_of.reshape(-1)
    # restore ascending-vertex order of profile classes
    class_order = np.argsort(first_idx, kind="stable")

    members_of_class: dict[int, list[int]] = {}
    for v, p in enumerate(profile_of.tolist()):
        members_of_class.setdefault(p, []).append(v)

    remaining = [int(c) for c in class_order]
    groups: list[list[int]] = []
    while remaining:
        seed_class = remaining.pop(0)
        group_classes = [seed_class]
        seed_profile = profiles[seed_class]
        if remaining:
            rest = np.array(remaining)
            co = (profiles[rest] == seed_profile[np.newaxis, :]).sum(axis=1)
            joined = rest[co >= n_con]
            if len(joined):
                joined_set = set(int(c) for c in joined)
                group_classes.extend(int(c) for c in joined)
                remaining = [c for c in remaining if c not in joined_set]
        group = []
        for c in group_classes:
            group.extend(members_of_class[int(c)])
        groups.append(sorted(group))
    return groups
