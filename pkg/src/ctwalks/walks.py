"""Community-confined temporal walk sampling.

Walks start at an interaction endpoint and move strictly backward in time:
from (v, t) the candidates are the events (u, t') incident to v with t' < t,
weighted by exp(-(t - t') / time_scale).  The subgraph a walk may use is
fixed when it starts: bridging roots walk the inter subgraph, other roots
walk their community's intra subgraph.  Walks that run out of candidates end
early; a bare root is a valid walk of length one.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .communities import CommunityGraphs, CommunityPartition
from .events import TemporalAdjacency
from .rng import CounterStream, stream_key, stream_uniform


@dataclass(frozen=True)
class TemporalWalk:
    nodes: np.ndarray   # int64, first entry is the root
    times: np.ndarray   # float64, strictly decreasing
    eids: np.ndarray    # event behind each step, -1 for the root

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def realized_length(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> tuple[int, float]:
        return int(self.nodes[0]), float(self.times[0])


def transition_distribution(
    node: int, t: float, adjacency: TemporalAdjacency, time_scale: float = 1.0
):
    """Candidate events from (node, t) with their sampling probabilities.

    Every event (neighbor, t') with t' < t is a separate candidate; its
    probability is softmax over -(t - t') / time_scale, computed after
    subtracting the max exponent so large gaps cannot overflow.  Empty
    support returns empty arrays.
    """
    nbrs, ts, eids = adjacency.candidates(node, t)
    if len(nbrs) == 0:
        return nbrs, ts, eids, np.empty(0, dtype=np.float64)
    logits = (ts - t) / time_scale
    w = np.exp(logits - logits.max())
    return nbrs, ts, eids, w / w.sum()


def _pick(cdf: np.ndarray, u: float) -> int:
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(i, len(cdf) - 1)


def sample_walk(
    root: int,
    t0: float,
    length: int,
    adjacency: TemporalAdjacency,
    rng,
    time_scale: float = 1.0,
) -> TemporalWalk:
    """One temporal walk of up to ``length`` steps confined to ``adjacency``.

    ``rng`` needs only a ``random()`` method; one uniform is drawn per step.
    """
    nodes = [root]
    times = [t0]
    eids = [-1]
    node, t = root, t0
    for _ in range(length - 1):
        nbrs, ts, evs, probs = transition_distribution(node, t, adjacency, time_scale)
        if len(nbrs) == 0:
            break
        idx = _pick(np.cumsum(probs), rng.random())
        node, t = int(nbrs[idx]), float(ts[idx])
        nodes.append(node)
        times.append(t)
        eids.append(int(evs[idx]))
    return TemporalWalk(
        nodes=np.asarray(nodes, dtype=np.int64),
        times=np.asarray(times, dtype=np.float64),
        eids=np.asarray(eids, dtype=np.int64),
    )


def sample_walk_sets(
    u: int,
    v: int,
    t: float,
    n_walks: int,
    length: int,
    graphs: CommunityGraphs,
    partition: CommunityPartition,
    master_seed: int,
    time_scale: float = 1.0,
) -> tuple[list[TemporalWalk], list[TemporalWalk]]:
    """R walks rooted at each endpoint of the interaction (u, v, t).

    Walk w of root r draws from the counter stream keyed by
    (master_seed, r, w), so the result is independent of scheduling and
    reproducible from the seed alone.
    """
    out: list[list[TemporalWalk]] = []
    for root in (u, v):
        adj = graphs.governing(root, partition.label(root))
        walks = [
            sample_walk(root, t, length, adj, CounterStream(master_seed, root, w), time_scale)
            for w in range(n_walks)
        ]
        out.append(walks)
    return out[0], out[1]


def sample_walk_matrix(
    root: int,
    t0: float,
    n_walks: int,
    length: int,
    adjacency: TemporalAdjacency,
    master_seed: int,
    time_scale: float = 1.0,
):
    """All R walks of one root as arrays: nodes (R, l), times (R, l), eids, lengths.

    Draw-for-draw identical to ``sample_walk`` over ``CounterStream`` keys
    (master_seed, root, w); the first step shares one distribution across
    walks so the softmax is computed once.  Unused tail slots repeat the last
    real node and timestamp (padding proper happens at anonymization).
    """
    nodes = np.full((n_walks, length), root, dtype=np.int64)
    times = np.full((n_walks, length), t0, dtype=np.float64)
    eids = np.full((n_walks, length), -1, dtype=np.int64)
    lengths = np.ones(n_walks, dtype=np.int64)
    if length == 1:
        return nodes, times, eids, lengths

    keys = stream_key(master_seed, root, np.arange(n_walks))
    nbrs, ts, evs, probs = transition_distribution(root, t0, adjacency, time_scale)
    if len(nbrs) == 0:
        return nodes, times, eids, lengths
    cdf = np.cumsum(probs)
    draws = stream_uniform(keys, 0)
    idx = np.minimum(np.searchsorted(cdf, draws * cdf[-1], side="right"), len(cdf) - 1)
    nodes[:, 1] = nbrs[idx]
    times[:, 1] = ts[idx]
    eids[:, 1] = evs[idx]
    lengths[:] = 2

    alive = np.arange(n_walks)
    for step in range(2, length):
        still = []
        for w in alive.tolist():
            nb, tt, ee, pp = transition_distribution(
                int(nodes[w, step - 1]), float(times[w, step - 1]), adjacency, time_scale)
            if len(nb) == 0:
                nodes[w, step:] = nodes[w, step - 1]
                times[w, step:] = times[w, step - 1]
                continue
            i = _pick(np.cumsum(pp), float(stream_uniform(keys[w], step - 1)))
            nodes[w, step] = nb[i]
            times[w, step] = tt[i]
            eids[w, step] = ee[i]
            lengths[w] = step + 1
            still.append(w)
        alive = np.asarray(still, dtype=np.int64)
        if len(alive) == 0:
            break
    # freeze pads of walks that died before the last step
    for w in range(n_walks):
        L = lengths[w]
        nodes[w, L:] = nodes[w, L - 1]
        times[w, L:] = times[w, L - 1]
    return nodes, times, eids, lengths


def dump_walks(walks: list[tuple[str, TemporalWalk]], path: str | Path) -> None:
    """Debug dump: one walk per line, ``role node:t node:t ...``."""
    lines = []
    for role, walk in walks:
        steps = " ".join(f"{int(n)}:{float(t):g}" for n, t in zip(walk.nodes, walk.times))
        lines.append(f"{role} {steps}")
    Path(path).write_text("\n".join(lines) + "\n")
