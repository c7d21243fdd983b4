"""First-visit DP, the confinement bound, and the shifted-PMI target."""

import numpy as np
import pytest

from ctwalks.theory import (
    StaticGraph, bridging_mask, build_matrices, check_lemma1, first_passage,
    pmi_target,
)

# two triangles {0,1,2} and {3,4,5} joined by the single bridge 2-3
BARBELL_EDGES = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)]
BARBELL_LABELS = np.array([0, 0, 0, 1, 1, 1])

SQUARE_EDGES = [(0, 1), (1, 2), (2, 3), (3, 0)]


# ------------------------------------------------------------ first passage

def test_path_graph_hand_dp():
    g = StaticGraph(3, [(0, 1), (1, 2)])
    r = first_passage(g, target=2, t_max=2)
    assert r[1, 1] == 0.5
    assert r[2, 0] == 0.5
    assert r[1, 0] == 0.0


def test_first_step_to_self_is_zero():
    g = StaticGraph(3, [(0, 1), (1, 2)])
    r = first_passage(g, target=1, t_max=3)
    assert r[1, 1] == 0.0


def test_unreachable_target_all_zero():
    g = StaticGraph(4, [(0, 1), (2, 3)])
    r = first_passage(g, target=3, t_max=5)
    assert np.all(r[:, [0, 1]] == 0.0)


def test_barbell_confined_walk_is_faster():
    g = StaticGraph(6, BARBELL_EDGES)
    trad = first_passage(g, target=3, t_max=1)
    comm = first_passage(g, target=3, t_max=1, policy="community",
                         assignment=BARBELL_LABELS)
    assert trad[1, 2] == pytest.approx(1.0 / 3.0)
    assert comm[1, 2] == 1.0
    assert comm[1, 2] > trad[1, 2]


def test_first_passage_rejects_bad_policy():
    g = StaticGraph(3, [(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        first_passage(g, 0, 2, policy="lazy")
    with pytest.raises(ValueError):
        first_passage(g, 0, 2, policy="community")


def test_dp_mass_approaches_one():
    g = StaticGraph(4, [(0, 1), (1, 2), (2, 3)])
    r = first_passage(g, target=3, t_max=500)
    assert r[1:, 0].sum() >= 0.99


def test_dp_matches_monte_carlo():
    g = StaticGraph(6, BARBELL_EDGES)
    target, start, t_max = 3, 0, 5
    r = first_passage(g, target=target, t_max=t_max)
    deg = np.array([g.degree(u) for u in range(g.n)])
    table = np.zeros((g.n, deg.max()), dtype=np.int64)
    for u in range(g.n):
        table[u, : deg[u]] = g.adj[u]
    rng = np.random.Generator(np.random.PCG64(12))
    n_walks = 100_000
    pos = np.full(n_walks, start)
    alive = np.ones(n_walks, dtype=bool)
    hits = np.zeros(t_max + 1)
    for t in range(1, t_max + 1):
        draw = (rng.random(n_walks) * deg[pos]).astype(np.int64)
        pos = table[pos, draw]
        newly = alive & (pos == target)
        hits[t] = newly.sum()
        alive &= ~newly
    freq = hits / n_walks
    for t in range(1, t_max + 1):
        assert abs(freq[t] - r[t, start]) < 0.01


# ------------------------------------------------------------------ lemma 1

def test_lemma1_barbell_strict_at_first_step():
    g = StaticGraph(6, BARBELL_EDGES)
    report = check_lemma1(g, BARBELL_LABELS, u=2, v=3, t_max=4)
    assert report.holds_all
    assert not report.all_neighbors_bridging
    first = report.rows[0]
    assert first.r_community == 1.0
    assert first.r_traditional == pytest.approx(1.0 / 3.0)
    assert first.r_community > first.r_traditional


def test_lemma1_equality_when_all_neighbors_bridge():
    g = StaticGraph(4, SQUARE_EDGES)
    labels = np.array([0, 1, 0, 1])
    report = check_lemma1(g, labels, u=0, v=1, t_max=5)
    assert report.holds_all
    assert report.all_neighbors_bridging
    for row in report.rows:
        assert row.r_community == pytest.approx(row.r_traditional, abs=1e-12)


def test_lemma1_precondition_errors():
    g = StaticGraph(6, BARBELL_EDGES)
    with pytest.raises(ValueError):
        check_lemma1(g, BARBELL_LABELS, u=0, v=1, t_max=2)   # same community
    with pytest.raises(ValueError):
        check_lemma1(g, BARBELL_LABELS, u=0, v=3, t_max=2)   # u not bridging
    with pytest.raises(ValueError):
        check_lemma1(g, BARBELL_LABELS, u=2, v=2, t_max=2)


def random_partitioned_graph(rng, n):
    while True:
        p = float(rng.uniform(0.25, 0.6))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)
                 if rng.random() < p]
        labels = rng.integers(0, 2, n)
        if not edges or len(np.unique(labels)) < 2:
            continue
        g = StaticGraph(n, edges)
        bridge = bridging_mask(g, labels)
        pairs = [(u, v) for u in range(n) for v in range(n)
                 if u != v and bridge[u] and bridge[v] and labels[u] != labels[v]]
        if pairs:
            return g, labels, pairs[int(rng.integers(0, len(pairs)))]


def test_lemma1_random_sweep():
    rng = np.random.Generator(np.random.PCG64(77))
    for trial in range(50):
        n = int(rng.integers(5, 13))
        g, labels, (u, v) = random_partitioned_graph(rng, n)
        report = check_lemma1(g, labels, u, v, t_max=6)
        assert report.holds_all, (trial, u, v)


# ----------------------------------------------------------------- matrices

def test_disjoint_cliques_matrices():
    edges = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]
    g = StaticGraph(6, edges)
    labels = np.array([0, 0, 0, 1, 1, 1])
    mats = build_matrices(g, labels)
    assert np.all(mats.m_inter == 0.0)
    assert np.allclose(mats.m_intra.sum(axis=1), 1.0)
    assert np.all(mats.m_intra[:3, 3:] == 0.0)
    assert np.all(mats.m_intra[3:, :3] == 0.0)
    assert mats.zero_intra_rows == ()
    assert not mats.bridging.any()
    assert mats.vol == 12.0


def test_single_cross_edge_inter_rows():
    g = StaticGraph(6, BARBELL_EDGES)
    mats = build_matrices(g, BARBELL_LABELS)
    nonzero_rows = np.flatnonzero(mats.m_inter.sum(axis=1) > 0)
    assert nonzero_rows.tolist() == [2, 3]
    assert mats.m_inter[2].sum() == 1.0
    assert mats.m_inter[3].sum() == 1.0
    assert mats.m_inter[2, 3] == 1.0 and mats.m_inter[3, 2] == 1.0


def test_intra_block_structure_random():
    rng = np.random.Generator(np.random.PCG64(3))
    for trial in range(10):
        n = int(rng.integers(6, 12))
        g, labels, _ = random_partitioned_graph(rng, n)
        mats = build_matrices(g, labels)
        rows = mats.m_intra.sum(axis=1)
        for u in range(n):
            if u in mats.zero_intra_rows:
                assert rows[u] == 0.0
            else:
                assert rows[u] == pytest.approx(1.0)
        diff = labels[:, None] != labels[None, :]
        assert np.all(mats.m_intra[diff] == 0.0)


def test_matrix_powers_degree_similarity():
    """D^(1/2) M^r D^(-1/2) is symmetric for each component's own degrees."""
    rng = np.random.Generator(np.random.PCG64(41))
    for trial in range(5):
        g, labels, _ = random_partitioned_graph(rng, 10)
        mats = build_matrices(g, labels)
        d_intra = np.array([
            sum(1 for w in g.adj[u] if labels[w] == labels[u]) for u in range(g.n)
        ], dtype=np.float64)
        d_inter = np.array([
            sum(1 for w in g.adj[u] if mats.bridging[w]) if mats.bridging[u] else 0
            for u in range(g.n)
        ], dtype=np.float64)
        for mat, deg in ((mats.m_intra, d_intra), (mats.m_inter, d_inter)):
            idx = np.flatnonzero(deg > 0)
            if len(idx) == 0:
                continue
            power = np.eye(g.n)
            for _ in range(3):
                power = power @ mat
                sub = power[np.ix_(idx, idx)]
                sym = np.sqrt(deg[idx])[:, None] * sub / np.sqrt(deg[idx])[None, :]
                assert np.abs(sym - sym.T).max() < 1e-10


# ---------------------------------------------------------------- pmi target

def test_square_single_community_pmi():
    g = StaticGraph(4, SQUARE_EDGES)
    labels = np.zeros(4, dtype=np.int64)
    mats = build_matrices(g, labels)
    for k in (1, 3):
        target = pmi_target(mats, walk_window=1, k_negatives=k)
        adj = mats.m_intra > 0
        assert np.array_equal(target.mask, adj)
        expect = np.log(2.0) - np.log(k)
        assert np.allclose(target.values[adj], expect)


def test_doubling_negatives_shifts_by_log2():
    rng = np.random.Generator(np.random.PCG64(55))
    for trial in range(5):
        while True:
            g, labels, _ = random_partitioned_graph(rng, 9)
            if all(g.degree(u) > 0 for u in range(g.n)):
                break
        mats = build_matrices(g, labels)
        for k in (1, 2, 5):
            t1 = pmi_target(mats, walk_window=3, k_negatives=k)
            t2 = pmi_target(mats, walk_window=3, k_negatives=2 * k)
            assert np.array_equal(t1.mask, t2.mask)
            m = t1.mask
            assert np.allclose(t2.values[m], t1.values[m] - np.log(2.0),
                               atol=1e-12)


def test_pmi_reduces_to_intra_when_no_bridges():
    edges = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]
    g = StaticGraph(6, edges)
    mats = build_matrices(g, np.array([0, 0, 0, 1, 1, 1]))
    T, k = 2, 4
    target = pmi_target(mats, walk_window=T, k_negatives=k)
    s = np.zeros((6, 6))
    p = np.eye(6)
    for _ in range(T):
        p = p @ mats.m_intra
        s += p
    s /= T
    ref = mats.vol * s / mats.degrees[None, :]
    assert np.array_equal(target.mask, ref > 0)
    assert np.allclose(target.values[target.mask],
                       np.log(ref[ref > 0]) - np.log(k))
    assert np.all(np.isnan(target.values[~target.mask]))


def test_pmi_validation_errors():
    g = StaticGraph(4, SQUARE_EDGES)
    mats = build_matrices(g, np.zeros(4, dtype=np.int64))
    with pytest.raises(ValueError):
        pmi_target(mats, walk_window=0, k_negatives=1)
    with pytest.raises(ValueError):
        pmi_target(mats, walk_window=1, k_negatives=0)
    lonely = StaticGraph(3, [(0, 1)])
    mats2 = build_matrices(lonely, np.zeros(3, dtype=np.int64))
    with pytest.raises(ValueError):
        pmi_target(mats2, walk_window=1, k_negatives=1)


def test_self_loop_rejected():
    with pytest.raises(ValueError):
        StaticGraph(2, [(0, 0)])
