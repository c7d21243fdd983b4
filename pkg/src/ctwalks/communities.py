"""Community structure over the weighted interaction graph.

Louvain partitions drive walk confinement: every node gets a community
label, nodes with at least one weighted edge leaving their community are
"bridging", and the event stream is routed into per-community intra
subgraphs plus one inter subgraph spanned by bridging nodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .events import EventStream, TemporalAdjacency, WeightedTemporalGraph, build_weighted_graph


@dataclass(frozen=True)
class CommunityPartition:
    """Dense community labels 0..k-1 plus the modularity achieved."""

    assignment: np.ndarray          # int64, index = dense node id, -1 = unassigned
    k: int
    modularity: float
    seed: int | None = None
    history: tuple = ()             # modularity after each aggregation level

    def label(self, node: int) -> int:
        return int(self.assignment[node])

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == c)


def modularity(graph: WeightedTemporalGraph, assignment: np.ndarray) -> float:
    """Newman modularity Q of the given labeling on the weighted graph."""
    m = graph.total_weight
    if m == 0:
        raise ValueError("modularity undefined on a graph with no edges")
    sigma_in: dict[int, float] = {}
    sigma_tot: dict[int, float] = {}
    for u, nbrs in graph.adj.items():
        cu = int(assignment[u])
        sigma_tot[cu] = sigma_tot.get(cu, 0.0) + graph.degrees[u]
        for v, w in nbrs.items():
            if int(assignment[v]) == cu:
                sigma_in[cu] = sigma_in.get(cu, 0.0) + w  # each intra edge counted twice
    two_m = 2.0 * m
    q = 0.0
    for c, tot in sigma_tot.items():
        q += sigma_in.get(c, 0.0) / two_m - (tot / two_m) ** 2
    return q


def _local_phase(adj, degrees, labels, two_m, rng):
    """Greedy node moves until no single move improves modularity."""
    nodes = list(adj.keys())
    sigma_tot = {}
    for u in nodes:
        sigma_tot[labels[u]] = sigma_tot.get(labels[u], 0.0) + degrees[u]
    improved_any = False
    while True:
        moved = 0
        order = [nodes[i] for i in rng.permutation(len(nodes))]
        for u in order:
            cu = labels[u]
            ku = degrees[u]
            # weight from u into each adjacent community (self-loops excluded)
            w_comm: dict[int, float] = {}
            for v, w in adj[u].items():
                if v != u:
                    w_comm[labels[v]] = w_comm.get(labels[v], 0.0) + w
            sigma_tot[cu] -= ku
            base = w_comm.get(cu, 0.0) - sigma_tot[cu] * ku / two_m
            best_c, best_delta = cu, 0.0
            for c, w_in in w_comm.items():
                if c == cu:
                    continue
                delta = (w_in - sigma_tot.get(c, 0.0) * ku / two_m) - base
                if delta > best_delta + 1e-12 or (
                    best_c != cu and abs(delta - best_delta) <= 1e-12 and c < best_c
                ):
                    best_c, best_delta = c, delta
            labels[u] = best_c
            sigma_tot[best_c] = sigma_tot.get(best_c, 0.0) + ku
            if best_c != cu:
                moved += 1
        if moved == 0:
            break
        improved_any = True
    return improved_any


def _aggregate(adj, labels):
    """Collapse communities into supernodes; intra weight becomes a self-loop."""
    comm_ids = sorted(set(labels.values()))
    remap = {c: i for i, c in enumerate(comm_ids)}
    new_adj: dict[int, dict[int, float]] = {remap[c]: {} for c in comm_ids}
    for u, nbrs in adj.items():
        cu = remap[labels[u]]
        row = new_adj[cu]
        for v, w in nbrs.items():
            cv = remap[labels[v]]
            row[cv] = row.get(cv, 0.0) + w
    return new_adj, remap


def _q_of(adj, labels, two_m):
    # aggregated self-loops hold twice the collapsed intra weight, so a plain
    # row sum already equals the sum of member degrees
    sigma_in: dict[int, float] = {}
    sigma_tot: dict[int, float] = {}
    for u, nbrs in adj.items():
        cu = labels[u]
        sigma_tot[cu] = sigma_tot.get(cu, 0.0) + sum(nbrs.values())
        for v, w in nbrs.items():
            if labels[v] == cu:
                sigma_in[cu] = sigma_in.get(cu, 0.0) + w
    return sum(
        sigma_in.get(c, 0.0) / two_m - (t / two_m) ** 2 for c, t in sigma_tot.items()
    )


def louvain(
    graph: WeightedTemporalGraph, seed: int = 0, min_gain: float = 1e-7
) -> CommunityPartition:
    """Seeded Louvain: local moves plus aggregation until gain < ``min_gain``.

    Node visit order is shuffled with the seed; gain ties break toward the
    lower community id, so results are reproducible.  Labels are relabeled
    densely 0..k-1 ordered by first member node id.
    """
    if graph.total_weight == 0:
        raise ValueError("cannot partition a graph with no edges")
    two_m = 2.0 * graph.total_weight
    rng = np.random.Generator(np.random.PCG64(seed))

    adj: dict[int, dict[int, float]] = {
        u: {v: float(w) for v, w in nbrs.items()} for u, nbrs in graph.adj.items()
    }
    degrees = {u: float(sum(nbrs.values())) for u, nbrs in adj.items()}
    # flat[n] = community of original node n, tracked through aggregation levels
    flat = {u: u for u in adj}
    labels = {u: u for u in adj}
    history = []
    q_prev = _q_of(adj, labels, two_m)

    while True:
        _local_phase(adj, degrees, labels, two_m, rng)
        q_now = _q_of(adj, labels, two_m)
        history.append(q_now)
        if q_now - q_prev < min_gain:
            flat = {n: labels[c] for n, c in flat.items()}
            break
        q_prev = q_now
        flat = {n: labels[c] for n, c in flat.items()}
        adj, remap = _aggregate(adj, labels)
        flat = {n: remap[c] for n, c in flat.items()}
        labels = {u: u for u in adj}
        degrees = {u: float(sum(nbrs.values())) for u, nbrs in adj.items()}

    n_total = max(flat.keys()) + 1 if flat else 0
    assignment = np.full(n_total, -1, dtype=np.int64)
    dense: dict[int, int] = {}
    for node in sorted(flat.keys()):
        c = flat[node]
        if c not in dense:
            dense[c] = len(dense)
        assignment[node] = dense[c]
    q_final = modularity(graph, assignment)
    return CommunityPartition(
        assignment=assignment, k=len(dense), modularity=q_final,
        seed=seed, history=tuple(history),
    )


@dataclass
class CommunityGraphs:
    """Event routing induced by a partition: intra per community, inter for bridges."""

    intra: dict[int, TemporalAdjacency]
    inter: TemporalAdjacency
    bridging: np.ndarray            # bool, index = dense node id
    intra_index: dict[int, np.ndarray] = field(default_factory=dict)
    inter_index: np.ndarray | None = None

    def governing(self, node: int, label: int) -> TemporalAdjacency:
        """Subgraph a walk rooted at ``node`` is confined to."""
        if self.bridging[node]:
            return self.inter
        return self.intra[label]


def bridging_nodes(graph: WeightedTemporalGraph, assignment: np.ndarray) -> np.ndarray:
    """Boolean mask of nodes with at least one weighted edge leaving their community."""
    n = len(assignment)
    out = np.zeros(n, dtype=bool)
    for u, nbrs in graph.adj.items():
        cu = assignment[u]
        for v in nbrs:
            if assignment[v] != cu:
                out[u] = True
                break
    return out


def derive_subgraphs(stream: EventStream, partition: CommunityPartition) -> CommunityGraphs:
    """Split the stream into per-community intra subgraphs and one inter subgraph.

    An event is intra for community c when both endpoints carry label c; it is
    inter when both endpoints are bridging (same-community bridging pairs are
    therefore members of both subgraphs).
    """
    graph = build_weighted_graph(stream)
    labels = partition.assignment
    bridge = bridging_nodes(graph, labels)
    lu = labels[stream.u]
    lv = labels[stream.v]
    if np.any(lu < 0) or np.any(lv < 0):
        bad = int(stream.u[np.argmax(lu < 0)] if np.any(lu < 0) else stream.v[np.argmax(lv < 0)])
        raise ValueError(f"stream touches node {bad} outside the partition")
    intra: dict[int, TemporalAdjacency] = {}
    intra_index: dict[int, np.ndarray] = {}
    same = lu == lv
    for c in range(int(labels.max()) + 1):
        rows = np.flatnonzero(same & (lu == c))
        intra_index[c] = rows
        intra[c] = TemporalAdjacency.from_stream(stream, rows)
    inter_rows = np.flatnonzero(bridge[stream.u] & bridge[stream.v])
    inter = TemporalAdjacency.from_stream(stream, inter_rows)
    return CommunityGraphs(
        intra=intra, inter=inter, bridging=bridge,
        intra_index=intra_index, inter_index=inter_rows,
    )


def assign_unseen_community(
    node: int,
    graph: WeightedTemporalGraph,
    assignment: np.ndarray,
    rng: np.random.Generator,
    fresh_label: int,
) -> int:
    """Community for a node outside the partition.

    Draws community c with probability proportional to the node's total edge
    weight into assigned members of c; a node with no assigned neighbors gets
    ``fresh_label``.
    """
    weights: dict[int, float] = {}
    for v, w in graph.neighbors(node):
        c = int(assignment[v]) if v < len(assignment) else -1
        if c >= 0:
            weights[c] = weights.get(c, 0.0) + w
    if not weights:
        return fresh_label
    comms = sorted(weights)
    probs = np.asarray([weights[c] for c in comms], dtype=np.float64)
    probs /= probs.sum()
    return int(comms[int(rng.choice(len(comms), p=probs))])


def extend_partition(
    full_graph: WeightedTemporalGraph,
    partition: CommunityPartition,
    n_nodes: int,
    seed: int = 0,
) -> CommunityPartition:
    """Cover every node of the full graph with a label, keeping train labels fixed.

    Unassigned nodes are labeled by repeated application of the neighbor-weight
    rule until a fixed point; nodes whose whole neighborhood stays unassigned
    fall back to the reserved fresh label k.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    assignment = np.full(n_nodes, -1, dtype=np.int64)
    assignment[: len(partition.assignment)] = partition.assignment
    fresh = partition.k
    pending = [n for n in range(n_nodes) if assignment[n] < 0]
    while pending:
        progressed = False
        still = []
        for node in sorted(pending):
            label = assign_unseen_community(node, full_graph, assignment, rng, -1)
            if label >= 0:
                assignment[node] = label
                progressed = True
            else:
                still.append(node)
        if not progressed:
            for node in still:
                assignment[node] = fresh
            still = []
        pending = still
    k = int(assignment.max()) + 1
    return CommunityPartition(
        assignment=assignment, k=k, modularity=partition.modularity,
        seed=partition.seed, history=partition.history,
    )


def save_partition(
    partition: CommunityPartition, graph: WeightedTemporalGraph, path: str | Path,
    node_ids: np.ndarray | None = None,
) -> None:
    """Partition JSON: seed, k, modularity, per-node assignment, bridging list."""
    bridge = bridging_nodes(graph, partition.assignment)
    labels = node_ids if node_ids is not None else np.arange(len(partition.assignment))
    doc = {
        "seed": partition.seed,
        "k": partition.k,
        "modularity": partition.modularity,
        "assignment": {
            str(int(labels[n])): int(c)
            for n, c in enumerate(partition.assignment) if c >= 0
        },
        "bridging": [int(labels[n]) for n in np.flatnonzero(bridge)],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_partition(path: str | Path, node_ids: np.ndarray | None = None) -> CommunityPartition:
    doc = json.loads(Path(path).read_text())
    if node_ids is not None:
        label_to_dense = {int(lab): i for i, lab in enumerate(node_ids)}
        n = len(node_ids)
    else:
        label_to_dense = None
        n = max(int(x) for x in doc["assignment"]) + 1
    assignment = np.full(n, -1, dtype=np.int64)
    for lab, c in doc["assignment"].items():
        idx = label_to_dense[int(lab)] if label_to_dense else int(lab)
        assignment[idx] = c
    return CommunityPartition(
        assignment=assignment, k=int(doc["k"]),
        modularity=float(doc["modularity"]), seed=doc["seed"],
    )
