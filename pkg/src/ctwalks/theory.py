"""Executable checks of the walk-confinement theory on static graphs.

Two facts about community-confined walks are made checkable: a first-visit
bound (confined walks reach a cross-community bridging target at least as
fast, step for step, as a uniform mixture over all neighbors would) and the
shifted-PMI matrix-factorization target implied by walk co-occurrence
statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class StaticGraph:
    """Simple undirected graph as sorted neighbor tuples."""

    def __init__(self, n: int, edges):
        adj: list[set[int]] = [set() for _ in range(n)]
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop ({a},{a}) not allowed")
            adj[a].add(b)
            adj[b].add(a)
        self.n = n
        self.adj = tuple(tuple(sorted(s)) for s in adj)

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    @property
    def n_edges(self) -> int:
        return sum(self.degree(u) for u in range(self.n)) // 2


def bridging_mask(graph: StaticGraph, assignment: np.ndarray) -> np.ndarray:
    out = np.zeros(graph.n, dtype=bool)
    for u in range(graph.n):
        out[u] = any(assignment[w] != assignment[u] for w in graph.adj[u])
    return out


def _dp(candidates: list[tuple[int, ...]], target: int, t_max: int) -> np.ndarray:
    """First-visit probabilities under uniform steps over per-node candidates.

    r[t, u] = P(walk from u first reaches target at step t).  The target row
    is pinned to zero, which removes exactly the trajectories that would have
    passed through the target earlier, so the all-candidates average is the
    true first-visit probability.
    """
    n = len(candidates)
    r = np.zeros((t_max + 1, n))
    prev = np.zeros(n)
    prev[target] = 1.0
    for t in range(1, t_max + 1):
        cur = np.zeros(n)
        for u in range(n):
            cand = candidates[u]
            if u != target and cand:
                cur[u] = sum(prev[j] for j in cand) / len(cand)
        r[t] = cur
        prev = cur.copy()
        prev[target] = 0.0
    return r


def first_passage(
    graph: StaticGraph,
    target: int,
    t_max: int,
    policy: str = "traditional",
    assignment: np.ndarray | None = None,
) -> np.ndarray:
    """First-visit probability table r[t, u] for t = 1..t_max.

    ``traditional`` walks step uniformly over all neighbors.  ``community``
    walks are confined by their root: bridging roots walk the
    bridging-induced subgraph, other roots walk their community's induced
    subgraph and can never leave it.
    """
    if policy == "traditional":
        return _dp(list(graph.adj), target, t_max)
    if policy != "community":
        raise ValueError(f"unknown policy {policy!r}")
    if assignment is None:
        raise ValueError("community policy needs an assignment")
    assignment = np.asarray(assignment)
    bridge = bridging_mask(graph, assignment)

    inter_cand = [
        tuple(w for w in graph.adj[u] if bridge[w]) if bridge[u] else ()
        for u in range(graph.n)
    ]
    r_inter = _dp(inter_cand, target, t_max) if bridge[target] else np.zeros((t_max + 1, graph.n))

    intra_cand = [
        tuple(w for w in graph.adj[u] if assignment[w] == assignment[u])
        for u in range(graph.n)
    ]
    r_intra = _dp(intra_cand, target, t_max)

    out = np.zeros((t_max + 1, graph.n))
    for u in range(graph.n):
        if bridge[u]:
            out[:, u] = r_inter[:, u]
        elif assignment[u] == assignment[target]:
            out[:, u] = r_intra[:, u]
    return out


@dataclass(frozen=True)
class Lemma1Row:
    t: int
    r_community: float
    r_traditional: float
    holds: bool


@dataclass(frozen=True)
class Lemma1Report:
    u: int
    v: int
    rows: tuple[Lemma1Row, ...]
    holds_all: bool
    all_neighbors_bridging: bool

    def to_dict(self) -> dict:
        return {
            "u": self.u, "v": self.v, "holds_all": self.holds_all,
            "all_neighbors_bridging": self.all_neighbors_bridging,
            "rows": [
                {"t": r.t, "r_community": r.r_community,
                 "r_traditional": r.r_traditional, "holds": r.holds}
                for r in self.rows
            ],
        }


def check_lemma1(
    graph: StaticGraph,
    assignment: np.ndarray,
    u: int,
    v: int,
    t_max: int,
    slack: float = 1e-12,
) -> Lemma1Report:
    """First-visit bound for a confined walk from u toward cross-community v.

    Compares r^t(u -> v) of the community walk against the uniform
    all-neighbor mixture of the same process one step earlier,
    (1/d(u)) * sum_{j in N(u)} r^{t-1}(j -> v); with r^0 the indicator of v
    this reduces at t = 1 to the traditional one-step probability.  Equality
    holds exactly when every neighbor of u is bridging.
    """
    assignment = np.asarray(assignment)
    bridge = bridging_mask(graph, assignment)
    if u == v:
        raise ValueError("u and v must differ")
    if assignment[u] == assignment[v]:
        raise ValueError("u and v must lie in different communities")
    if not (bridge[u] and bridge[v]):
        raise ValueError("u and v must both be bridging")
    r_comm = first_passage(graph, v, t_max, policy="community", assignment=assignment)
    rows = []
    holds_all = True
    for t in range(1, t_max + 1):
        if t == 1:
            mix = (1.0 if v in graph.adj[u] else 0.0) / graph.degree(u)
        else:
            prev = r_comm[t - 1]
            mix = float(sum(prev[j] for j in graph.adj[u])) / graph.degree(u)
        lhs = float(r_comm[t, u])
        ok = bool(lhs >= mix - slack)
        holds_all = holds_all and ok
        rows.append(Lemma1Row(t=t, r_community=lhs, r_traditional=float(mix), holds=ok))
    return Lemma1Report(
        u=u, v=v, rows=tuple(rows), holds_all=holds_all,
        all_neighbors_bridging=bool(all(bridge[w] for w in graph.adj[u])),
    )


@dataclass(frozen=True)
class TransitionMatrices:
    m_intra: np.ndarray          # block-diagonal D_i^{-1} A_i in global order
    m_inter: np.ndarray          # row-normalized bridging adjacency
    degrees: np.ndarray          # full-graph degree vector
    vol: float                   # sum of all adjacency entries = 2|E|
    zero_intra_rows: tuple       # nodes with no intra neighbor
    bridging: np.ndarray


def build_matrices(graph: StaticGraph, assignment: np.ndarray) -> TransitionMatrices:
    """Intra and inter walk transition matrices of a partitioned static graph."""
    assignment = np.asarray(assignment)
    n = graph.n
    bridge = bridging_mask(graph, assignment)
    m_i = np.zeros((n, n))
    m_c = np.zeros((n, n))
    zero_rows = []
    for u in range(n):
        intra = [w for w in graph.adj[u] if assignment[w] == assignment[u]]
        if intra:
            m_i[u, intra] = 1.0 / len(intra)
        else:
            zero_rows.append(u)
        if bridge[u]:
            inter = [w for w in graph.adj[u] if bridge[w]]
            if inter:
                m_c[u, inter] = 1.0 / len(inter)
    degrees = np.asarray([graph.degree(u) for u in range(n)], dtype=np.float64)
    return TransitionMatrices(
        m_intra=m_i, m_inter=m_c, degrees=degrees,
        vol=float(degrees.sum()), zero_intra_rows=tuple(zero_rows), bridging=bridge,
    )


@dataclass(frozen=True)
class PmiTarget:
    values: np.ndarray           # log(vol * S * D^-1) - log(k) where defined
    mask: np.ndarray             # True where the co-occurrence mass is positive
    shift: float                 # the log(k) that was subtracted


def pmi_target(mats: TransitionMatrices, walk_window: int, k_negatives: int) -> PmiTarget:
    """Shifted-PMI factorization target over a window of walk lengths.

    S averages (M_C^r + M_I^r) for r = 1..window; the target is
    log(vol * S * D^-1) - log(k) on entries with positive mass, with zero
    entries masked out rather than clamped.
    """
    if walk_window < 1:
        raise ValueError("walk window must be >= 1")
    if k_negatives < 1:
        raise ValueError("negative count must be >= 1")
    n = mats.m_intra.shape[0]
    s = np.zeros((n, n))
    p_i = np.eye(n)
    p_c = np.eye(n)
    for _ in range(walk_window):
        p_i = p_i @ mats.m_intra
        p_c = p_c @ mats.m_inter
        s += p_c + p_i
    s /= walk_window
    if np.any(mats.degrees <= 0):
        raise ValueError("every node needs positive degree for the D^-1 scaling")
    m = mats.vol * s / mats.degrees[None, :]
    mask = m > 0
    values = np.full((n, n), np.nan)
    shift = float(np.log(k_negatives))
    values[mask] = np.log(m[mask]) - shift
    return PmiTarget(values=values, mask=mask, shift=shift)
