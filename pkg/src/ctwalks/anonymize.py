"""Anonymized walk encoding.

Node identities are replaced by position-count vectors: for a walk set S,
A(w; S)[i] counts how many walks of S hold node w at position i.  A node's
rep for an interaction (u, v) is [A(w; S_u) | C_u | A(w; S_v) | C_v] where
C_u, C_v are the roots' community labels.  Identity is discarded, structure
and community context are kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .walks import TemporalWalk


@dataclass(frozen=True)
class AnonymizedNodeRep:
    source_counts: np.ndarray    # (l,) appearance counts in the source walk set
    source_community: int
    target_counts: np.ndarray    # (l,) appearance counts in the target walk set
    target_community: int

    @property
    def width(self) -> int:
        return 2 * len(self.source_counts) + 2


@dataclass(frozen=True)
class AnonymizedWalk:
    """One walk with identities replaced by reps, padded to full length."""

    reps: tuple[AnonymizedNodeRep, ...]
    times: np.ndarray            # (l,) pad slots repeat the last real timestamp
    realized_length: int


def position_vector(node: int, walk: TemporalWalk, length: int) -> np.ndarray:
    """Indicator of where ``node`` sits in the walk, over ``length`` positions."""
    out = np.zeros(length, dtype=np.int64)
    hits = np.flatnonzero(walk.nodes == node)
    out[hits] = 1
    return out


def aggregate_positions(node: int, walks: list[TemporalWalk], length: int) -> np.ndarray:
    """Elementwise sum of position vectors over a walk set."""
    out = np.zeros(length, dtype=np.int64)
    for w in walks:
        out[np.flatnonzero(w.nodes == node)] += 1
    return out


def _walks_to_matrix(walks: list[TemporalWalk], length: int):
    n = len(walks)
    nodes = np.zeros((n, length), dtype=np.int64)
    times = np.zeros((n, length), dtype=np.float64)
    lengths = np.zeros(n, dtype=np.int64)
    for i, w in enumerate(walks):
        k = len(w)
        nodes[i, :k] = w.nodes
        times[i, :k] = w.times
        nodes[i, k:] = w.nodes[-1]
        times[i, k:] = w.times[-1]
        lengths[i] = k
    return nodes, times, lengths


def _count_table(nodes: np.ndarray, lengths: np.ndarray, uniq: np.ndarray, length: int):
    """counts[j, i] = appearances of uniq[j] at position i across real steps."""
    counts = np.zeros((len(uniq), length), dtype=np.float64)
    mask = np.arange(length)[None, :] < lengths[:, None]
    idx = np.searchsorted(uniq, nodes)
    rows = idx[mask]
    cols = np.broadcast_to(np.arange(length), nodes.shape)[mask]
    np.add.at(counts, (rows, cols), 1.0)
    return counts


def interaction_feature_arrays(
    nodes_u: np.ndarray, times_u: np.ndarray, len_u: np.ndarray,
    nodes_v: np.ndarray, times_v: np.ndarray, len_v: np.ndarray,
    c_u: int, c_v: int, pad_token: int,
):
    """Array form of the anonymized features for one interaction.

    Inputs are the two walk matrices (R, l).  Returns, over the stacked
    2R walks: source counts (2R, l, l), target counts (2R, l, l), community
    tokens (2R, l) for each root, elapsed intervals (2R, l-1), and the
    realized lengths.  Pad steps carry zero counts, the pad token, and zero
    elapsed time.
    """
    length = nodes_u.shape[1]
    nodes = np.vstack([nodes_u, nodes_v])
    times = np.vstack([times_u, times_v])
    lengths = np.concatenate([len_u, len_v])
    uniq = np.unique(nodes)
    src_table = _count_table(nodes_u, len_u, uniq, length)
    tgt_table = _count_table(nodes_v, len_v, uniq, length)

    idx = np.searchsorted(uniq, nodes)           # (2R, l)
    cs = src_table[idx]                          # (2R, l, l)
    ct = tgt_table[idx]
    real = np.arange(length)[None, :] < lengths[:, None]
    cs[~real] = 0.0
    ct[~real] = 0.0
    tok_u = np.where(real, c_u, pad_token).astype(np.int64)
    tok_v = np.where(real, c_v, pad_token).astype(np.int64)
    dt = np.abs(times[:, :-1] - times[:, 1:])    # pads repeat the last time -> 0
    return cs, ct, tok_u, tok_v, dt, lengths


def anonymize_interaction(
    walks_u: list[TemporalWalk], walks_v: list[TemporalWalk],
    c_u: int, c_v: int, length: int,
) -> dict[int, AnonymizedNodeRep]:
    """Rep of every node appearing in either walk set of the interaction."""
    reps: dict[int, AnonymizedNodeRep] = {}
    seen = set()
    for w in walks_u + walks_v:
        seen.update(int(x) for x in w.nodes)
    for node in sorted(seen):
        reps[node] = AnonymizedNodeRep(
            source_counts=aggregate_positions(node, walks_u, length),
            source_community=c_u,
            target_counts=aggregate_positions(node, walks_v, length),
            target_community=c_v,
        )
    return reps


def anonymize_walks(
    walks_u: list[TemporalWalk], walks_v: list[TemporalWalk],
    c_u: int, c_v: int, length: int, pad_token: int,
) -> list[AnonymizedWalk]:
    """The 2R padded anonymized walks of one interaction (source set first)."""
    nu, tu, lu = _walks_to_matrix(walks_u, length)
    nv, tv, lv = _walks_to_matrix(walks_v, length)
    cs, ct, tok_u, tok_v, _, lengths = interaction_feature_arrays(
        nu, tu, lu, nv, tv, lv, c_u, c_v, pad_token)
    times = np.vstack([tu, tv])
    out = []
    for w in range(cs.shape[0]):
        reps = []
        for i in range(length):
            reps.append(AnonymizedNodeRep(
                source_counts=cs[w, i].astype(np.int64),
                source_community=int(tok_u[w, i]),
                target_counts=ct[w, i].astype(np.int64),
                target_community=int(tok_v[w, i]),
            ))
        out.append(AnonymizedWalk(
            reps=tuple(reps), times=times[w].copy(),
            realized_length=int(lengths[w]),
        ))
    return out
