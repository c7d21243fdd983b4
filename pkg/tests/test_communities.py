"""Louvain detection, modularity values, subgraph derivation, unseen nodes."""

import itertools

import numpy as np
import pytest

from ctwalks.communities import (
    CommunityPartition, assign_unseen_community, bridging_nodes, derive_subgraphs, extend_partition,
    load_partition, louvain, modularity, save_partition,
)
from ctwalks.events import EventStream, build_weighted_graph


def stream_of(pairs):
    """One unit-weight event per listed pair, timestamps 0, 1, 2, ..."""
    u, v = zip(*pairs)
    t = np.arange(len(pairs), dtype=np.float64)
    return EventStream(np.asarray(u), np.asarray(v), t)


def graph_of(pairs):
    return build_weighted_graph(stream_of(pairs))


def clique(nodes):
    return list(itertools.combinations(nodes, 2))


def brute_force_best(graph, n):
    """Exhaustive search over all partitions of n nodes (n <= 8)."""
    best_q = -np.inf
    best = None
    def partitions(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for smaller in partitions(rest):
            for i, block in enumerate(smaller):
                yield smaller[:i] + [block + [first]] + smaller[i + 1:]
            yield [[first]] + smaller
    for blocks in partitions(list(range(n))):
        assignment = np.empty(n, dtype=np.int64)
        for label, block in enumerate(blocks):
            assignment[block] = label
        q = modularity(graph, assignment)
        if q > best_q:
            best_q, best = q, assignment
    return best_q, best


# --------------------------------------------------------------- modularity

def test_modularity_single_community_is_zero():
    g = graph_of(clique([0, 1, 2, 3]))
    assert modularity(g, np.zeros(4, dtype=np.int64)) == pytest.approx(0.0)


def test_modularity_singletons():
    g = graph_of([(0, 1), (1, 2), (2, 3)])
    q = modularity(g, np.arange(4))
    two_m = 2.0 * g.total_weight
    expected = -sum((g.degree(u) / two_m) ** 2 for u in range(4))
    assert q == pytest.approx(expected)


def test_modularity_two_disjoint_triangles():
    g = graph_of(clique([0, 1, 2]) + clique([3, 4, 5]))
    assignment = np.array([0, 0, 0, 1, 1, 1])
    assert modularity(g, assignment) == pytest.approx(0.5)


def test_modularity_rejects_edgeless():
    g = build_weighted_graph(EventStream(np.empty(0, np.int64),
                                         np.empty(0, np.int64),
                                         np.empty(0)))
    with pytest.raises(ValueError):
        modularity(g, np.empty(0, np.int64))


# ------------------------------------------------------------------ louvain

def test_louvain_two_cliques_with_bridge():
    pairs = clique([0, 1, 2, 3]) + clique([4, 5, 6, 7]) + [(3, 4)]
    g = graph_of(pairs)
    part = louvain(g, seed=0)
    assert part.k == 2
    assert len(set(part.assignment[:4])) == 1
    assert len(set(part.assignment[4:])) == 1
    best_q, _ = brute_force_best(g, 8)
    assert part.modularity == pytest.approx(best_q)


def test_louvain_single_edge():
    g = graph_of([(0, 1)])
    part = louvain(g, seed=0)
    q_together = modularity(g, np.array([0, 0]))
    q_apart = modularity(g, np.array([0, 1]))
    assert part.modularity == pytest.approx(max(q_together, q_apart))


def test_louvain_rejects_edgeless():
    g = build_weighted_graph(EventStream(np.empty(0, np.int64),
                                         np.empty(0, np.int64),
                                         np.empty(0)))
    with pytest.raises(ValueError):
        louvain(g)


def test_louvain_matches_exhaustive_optimum_on_small_graphs():
    rng = np.random.Generator(np.random.PCG64(77))
    for trial in range(25):
        n = int(rng.integers(4, 8))
        pairs = set()
        while len(pairs) < n:
            a, b = (int(x) for x in rng.integers(0, n, size=2))
            if a != b:
                pairs.add((min(a, b), max(a, b)))
        g = graph_of(sorted(pairs))
        part = louvain(g, seed=int(rng.integers(1 << 30)))
        best_q, _ = brute_force_best(g, n)
        assert part.modularity <= best_q + 1e-12
        assert part.modularity == pytest.approx(best_q, abs=1e-9), (trial, pairs)


def test_louvain_deterministic_per_seed():
    rng = np.random.Generator(np.random.PCG64(5))
    pairs = set()
    while len(pairs) < 40:
        a, b = (int(x) for x in rng.integers(0, 20, size=2))
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    g = graph_of(sorted(pairs))
    a = louvain(g, seed=3)
    b = louvain(g, seed=3)
    assert np.array_equal(a.assignment, b.assignment)
    assert a.modularity == b.modularity


# ------------------------------------------------------------- subgraphs

def five_node_fixture():
    """Two communities {0,1,2} and {3,4}; 1 and 3 carry the only cross edge."""
    pairs = [(0, 1), (1, 2), (0, 2), (3, 4), (1, 3), (1, 2)]
    stream = stream_of(pairs)
    assignment = np.array([0, 0, 0, 1, 1])
    return stream, assignment


def test_cross_community_event_goes_to_inter_only():
    stream, assignment = five_node_fixture()
    part = CommunityPartition(assignment=assignment, k=2, modularity=0.0)
    graphs = derive_subgraphs(stream, part)
    assert graphs.bridging[1] and graphs.bridging[3]
    nbrs, _, _ = graphs.inter.candidates(1, 100.0)
    assert 3 in nbrs.tolist()
    for c in (0, 1):
        nbrs, _, _ = graphs.intra[c].candidates(1, 100.0)
        assert 3 not in nbrs.tolist()


def test_intra_event_between_plain_nodes_stays_intra():
    stream, assignment = five_node_fixture()
    part = CommunityPartition(assignment=assignment, k=2, modularity=0.0)
    graphs = derive_subgraphs(stream, part)
    assert not graphs.bridging[0] and not graphs.bridging[2]
    nbrs, _, _ = graphs.intra[0].candidates(0, 100.0)
    assert sorted(set(nbrs.tolist())) == [1, 2]
    nbrs, _, _ = graphs.inter.candidates(0, 100.0)
    assert len(nbrs) == 0


def test_intra_event_between_bridging_pair_is_in_both():
    # both endpoints of a same-community event are bridging
    pairs = [(0, 1), (0, 3), (1, 4), (3, 4), (2, 0)]
    stream = stream_of(pairs)
    part = CommunityPartition(assignment=np.array([0, 0, 0, 1, 1]), k=2,
                              modularity=0.0)
    graphs = derive_subgraphs(stream, part)
    assert graphs.bridging[0] and graphs.bridging[1]
    intra_nbrs, _, _ = graphs.intra[0].candidates(0, 100.0)
    inter_nbrs, _, _ = graphs.inter.candidates(0, 100.0)
    assert 1 in intra_nbrs.tolist()
    assert 1 in inter_nbrs.tolist()


def test_bridging_nodes_mask():
    stream, assignment = five_node_fixture()
    g = build_weighted_graph(stream)
    mask = bridging_nodes(g, assignment)
    assert mask.tolist() == [False, True, False, True, False]


# ------------------------------------------------------------ unseen nodes

def test_unseen_single_community_is_certain():
    g = graph_of([(0, 1), (0, 2), (1, 2), (3, 0)])
    assignment = np.array([5, 5, 5, -1])
    rng = np.random.Generator(np.random.PCG64(0))
    for _ in range(10):
        assert assign_unseen_community(3, g, assignment, rng, fresh_label=9) == 5


def test_unseen_weight_ratio_three_to_one():
    # node 4 has weight 3 into community 0 and weight 1 into community 1
    pairs = [(4, 0), (4, 0), (4, 0), (4, 1), (0, 2), (1, 3)]
    g = graph_of(pairs)
    assignment = np.array([0, 1, 0, 1, -1])
    rng = np.random.Generator(np.random.PCG64(42))
    draws = np.array([assign_unseen_community(4, g, assignment, rng, fresh_label=2)
                      for _ in range(100_000)])
    p0 = np.mean(draws == 0)
    assert abs(p0 - 0.75) < 0.01


def test_unseen_no_neighbors_gets_fresh_label():
    g = graph_of([(0, 1)])
    assignment = np.array([0, 0, -1])
    rng = np.random.Generator(np.random.PCG64(1))
    assert assign_unseen_community(2, g, assignment, rng, fresh_label=7) == 7


def test_extend_partition_covers_everything():
    rng = np.random.Generator(np.random.PCG64(8))
    train_pairs = [(int(a), int(b)) for a, b in rng.integers(0, 10, size=(40, 2))
                   if a != b]
    extra_pairs = [(int(a), int(b)) for a, b in rng.integers(0, 16, size=(30, 2))
                   if a != b]
    train_graph = graph_of(train_pairs)
    part = louvain(train_graph, seed=0)
    full_graph = graph_of(train_pairs + extra_pairs)
    ext = extend_partition(full_graph, part, n_nodes=16, seed=0)
    assert len(ext.assignment) == 16
    assert np.all(ext.assignment >= 0)
    assert np.all(ext.assignment <= part.k)   # fresh label k allowed
    assert np.array_equal(ext.assignment[:len(part.assignment)][part.assignment >= 0],
                          part.assignment[part.assignment >= 0])


# -------------------------------------------------------------- persistence

def test_partition_roundtrip(tmp_path):
    pairs = clique([0, 1, 2]) + clique([3, 4, 5]) + [(2, 3)]
    g = graph_of(pairs)
    part = louvain(g, seed=11)
    save_partition(part, g, tmp_path / "p.json")
    back = load_partition(tmp_path / "p.json")
    assert np.array_equal(back.assignment, part.assignment)
    assert back.k == part.k
    assert back.modularity == pytest.approx(part.modularity)
