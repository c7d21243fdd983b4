"""Synthetic planted-community interaction streams for experiments and tests."""

from __future__ import annotations

import numpy as np

from .events import EventStream


def planted_stream(
    n_communities: int = 4,
    nodes_per_community: int = 50,
    n_events: int = 20_000,
    intra_multiplier: float = 10.0,
    t_span: float = 1_000_000.0,
    popularity_sigma: float = 1.0,
    seed: int = 0,
) -> EventStream:
    """Community-structured stream with heterogeneous node popularity.

    Each event is intra-community with probability m/(m+1) where m is the
    intra rate multiplier, and endpoints are drawn with probability
    proportional to lognormal popularity weights (within the chosen
    community for intra events, across communities for inter events).
    Timestamps are iid uniform over the span, then sorted; there is no
    self-excitation.  Popularity heterogeneity gives recently active nodes
    genuinely shorter waiting times, so elapsed-time structure is
    informative and not an artifact of burstiness.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    n = n_communities * nodes_per_community
    comm = np.repeat(np.arange(n_communities), nodes_per_community)
    pop = rng.lognormal(mean=0.0, sigma=popularity_sigma, size=n)
    p_intra = intra_multiplier / (intra_multiplier + 1.0)

    prob_all = pop / pop.sum()
    prob_comm = []
    for c in range(n_communities):
        w = np.where(comm == c, pop, 0.0)
        prob_comm.append(w / w.sum())

    us = np.empty(n_events, dtype=np.int64)
    vs = np.empty(n_events, dtype=np.int64)
    for i in range(n_events):
        if rng.random() < p_intra:
            c = int(rng.integers(n_communities))
            p = prob_comm[c]
            u = int(rng.choice(n, p=p))
            while True:
                v = int(rng.choice(n, p=p))
                if v != u:
                    break
        else:
            u = int(rng.choice(n, p=prob_all))
            while True:
                v = int(rng.choice(n, p=prob_all))
                if v != u and comm[v] != comm[u]:
                    break
        us[i], vs[i] = u, v
    t = np.sort(rng.uniform(0.0, t_span, size=n_events))
    return EventStream(us, vs, t, node_ids=np.arange(n, dtype=np.int64))


def gateway_stream(
    n_communities: int = 4,
    nodes_per_community: int = 50,
    gateways_per_community: int = 3,
    n_events: int = 10_000,
    intra_multiplier: float = 10.0,
    t_span: float = 1_000_000.0,
    seed: int = 0,
) -> EventStream:
    """Planted stream whose inter-community events touch only gateway nodes.

    The first ``gateways_per_community`` nodes of each community carry all
    cross-community traffic, so the bridging set stays small and walk
    confinement is observable on both subgraph kinds.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    n = n_communities * nodes_per_community
    comm = np.repeat(np.arange(n_communities), nodes_per_community)
    gateways = np.concatenate([
        np.arange(c * nodes_per_community, c * nodes_per_community + gateways_per_community)
        for c in range(n_communities)
    ])
    p_intra = intra_multiplier / (intra_multiplier + 1.0)
    us = np.empty(n_events, dtype=np.int64)
    vs = np.empty(n_events, dtype=np.int64)
    for i in range(n_events):
        if rng.random() < p_intra:
            c = int(rng.integers(n_communities))
            lo = c * nodes_per_community
            u, v = rng.choice(nodes_per_community, size=2, replace=False) + lo
        else:
            while True:
                u, v = rng.choice(gateways, size=2, replace=False)
                if comm[u] != comm[v]:
                    break
        us[i], vs[i] = int(u), int(v)
    t = np.sort(rng.uniform(0.0, t_span, size=n_events))
    return EventStream(us, vs, t, node_ids=np.arange(n, dtype=np.int64))
