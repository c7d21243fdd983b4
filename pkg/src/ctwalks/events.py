"""Event streams: ingest, statistics, weighted graphs, splits, negatives.

A continuous-time dynamic graph is kept as a chronologically sorted list of
undirected interactions (u, v, t) with optional edge attributes.  Node ids
are remapped to dense integers in order of first appearance after sorting;
the original labels are retained for round-tripping files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np


class IngestError(ValueError):
    """Malformed event input; message carries the 1-based line number."""


class SplitError(ValueError):
    """Split request that cannot be satisfied."""


class Event(NamedTuple):
    u: int
    v: int
    t: float
    attrs: np.ndarray


@dataclass(frozen=True)
class GraphStats:
    nodes: int
    events: int
    duration: float
    intensity: float

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "events": self.events,
            "duration": self.duration,
            "intensity": self.intensity,
        }


class EventStream:
    """Column-oriented store of time-sorted undirected interactions."""

    __slots__ = ("u", "v", "t", "attrs", "node_ids", "self_loops_dropped")

    def __init__(
        self,
        u: np.ndarray,
        v: np.ndarray,
        t: np.ndarray,
        attrs: np.ndarray | None = None,
        node_ids: np.ndarray | None = None,
        self_loops_dropped: int = 0,
    ):
        self.u = np.asarray(u, dtype=np.int64)
        self.v = np.asarray(v, dtype=np.int64)
        self.t = np.asarray(t, dtype=np.float64)
        n = len(self.t)
        if attrs is None:
            attrs = np.zeros((n, 0), dtype=np.float64)
        attrs = np.asarray(attrs, dtype=np.float64)
        if attrs.ndim == 1:
            attrs = attrs.reshape(n, -1) if attrs.size else attrs.reshape(n, 0)
        self.attrs = attrs
        if node_ids is None:
            top = int(max(self.u.max(), self.v.max())) + 1 if n else 0
            node_ids = np.arange(top, dtype=np.int64)
        self.node_ids = np.asarray(node_ids, dtype=np.int64)
        self.self_loops_dropped = self_loops_dropped
        if not (len(self.u) == len(self.v) == n):
            raise ValueError("column length mismatch")
        if n and np.any(np.diff(self.t) < 0):
            raise ValueError("timestamps must be non-decreasing")
        if n and np.any(self.u == self.v):
            raise ValueError("self-loops are not allowed in a built stream")

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def attr_width(self) -> int:
        return self.attrs.shape[1]

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.u[i]), int(self.v[i]), float(self.t[i]), self.attrs[i])

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self[i]

    def subset(self, index: np.ndarray | slice) -> "EventStream":
        """New stream over the selected events; the node table is shared."""
        return EventStream(
            self.u[index], self.v[index], self.t[index], self.attrs[index],
            node_ids=self.node_ids,
        )

    def active_nodes(self) -> np.ndarray:
        """Dense ids of nodes that appear in at least one event of this stream."""
        return np.unique(np.concatenate([self.u, self.v])) if len(self) else np.empty(0, np.int64)


def _parse_delimited(text: str):
    """Yield (line_number, tokens) for non-empty lines; detects comma vs whitespace."""
    lines = text.splitlines()
    delim = None
    for ln, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if delim is None:
            delim = "," if "," in line else None
        tokens = [tok.strip() for tok in line.split(delim)] if delim else line.split()
        yield ln, tokens


def _is_header(tokens: Sequence[str]) -> bool:
    for tok in tokens[:3]:
        try:
            float(tok)
        except ValueError:
            return True
    return False


def ingest_events(source: str | Path | Iterable[str]) -> EventStream:
    """Parse a delimited event file into a time-sorted stream.

    Accepts three-column ``u,v,t`` rows or the wider interaction format
    ``u,v,t,state[,f1,f2,...]`` whose state column is ignored and whose
    trailing columns become edge attributes.  A non-numeric first row is
    treated as a header.  Comma and whitespace delimiters are both accepted.
    Self-loop rows are dropped and counted; any other irregularity raises
    :class:`IngestError` with the offending line number.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise IngestError(f"event file not found: {path}")
        text = path.read_text()
    else:
        text = "\n".join(source)

    us: list[int] = []
    vs: list[int] = []
    ts: list[float] = []
    attr_rows: list[list[float]] = []
    attr_width: int | None = None
    loops = 0
    header_allowed = True

    for ln, tokens in _parse_delimited(text):
        if header_allowed and _is_header(tokens):
            header_allowed = False
            continue
        header_allowed = False
        if len(tokens) < 3:
            raise IngestError(f"line {ln}: expected at least 3 columns, got {len(tokens)}")
        try:
            fu, fv, ft = float(tokens[0]), float(tokens[1]), float(tokens[2])
            extra = [float(x) for x in tokens[3:]]
        except ValueError as exc:
            raise IngestError(f"line {ln}: non-numeric field ({exc})") from None
        if fu != int(fu) or fv != int(fv):
            raise IngestError(f"line {ln}: node ids must be integers")
        if ft < 0:
            raise IngestError(f"line {ln}: negative timestamp {ft}")
        row_attrs = extra[1:] if len(tokens) > 3 else []  # column 4 is state, ignored
        if attr_width is None:
            attr_width = len(row_attrs)
        elif len(row_attrs) != attr_width:
            raise IngestError(
                f"line {ln}: attribute width {len(row_attrs)} != {attr_width} seen earlier"
            )
        if int(fu) == int(fv):
            loops += 1
            continue
        us.append(int(fu))
        vs.append(int(fv))
        ts.append(ft)
        attr_rows.append(row_attrs)

    if not us:
        return EventStream(
            np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64),
            np.empty((0, attr_width or 0)), node_ids=np.empty(0, np.int64),
            self_loops_dropped=loops,
        )

    raw_u = np.asarray(us, dtype=np.int64)
    raw_v = np.asarray(vs, dtype=np.int64)
    t = np.asarray(ts, dtype=np.float64)
    attrs = np.asarray(attr_rows, dtype=np.float64).reshape(len(t), -1)

    order = np.argsort(t, kind="stable")
    raw_u, raw_v, t, attrs = raw_u[order], raw_v[order], t[order], attrs[order]

    # dense relabel by first appearance in time order
    interleaved = np.empty(2 * len(t), dtype=np.int64)
    interleaved[0::2] = raw_u
    interleaved[1::2] = raw_v
    node_ids, inverse = np.unique(interleaved, return_inverse=True)
    first_pos = np.full(len(node_ids), len(interleaved), dtype=np.int64)
    np.minimum.at(first_pos, inverse, np.arange(len(interleaved)))
    rank = np.argsort(np.argsort(first_pos, kind="stable"), kind="stable")
    dense = rank[inverse]
    return EventStream(
        dense[0::2], dense[1::2], t, attrs,
        node_ids=node_ids[np.argsort(rank, kind="stable")],
        self_loops_dropped=loops,
    )


def write_events(stream: EventStream, path: str | Path) -> None:
    """Write a stream back to a comma-delimited file using original labels.

    Streams with attributes are written in the wide interaction format with a
    zero state column, so re-ingesting reproduces the attribute columns.
    """
    path = Path(path)
    wide = stream.attr_width > 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["u", "v", "t"]
        if wide:
            header += ["state"] + [f"f{i}" for i in range(stream.attr_width)]
        writer.writerow(header)
        labels = stream.node_ids
        for i in range(len(stream)):
            row = [int(labels[stream.u[i]]), int(labels[stream.v[i]]), repr(float(stream.t[i]))]
            if wide:
                row += ["0"] + [repr(float(x)) for x in stream.attrs[i]]
            writer.writerow(row)


def compute_stats(stream: EventStream, duration: float | None = None) -> GraphStats:
    """Node/event counts, observed duration, and interaction intensity.

    Intensity is 2|E| / (|V| * T) with T the observed time span; pass
    ``duration`` to use a known span instead of the observed one.  A zero
    span has no meaningful rate and is rejected.
    """
    if len(stream) == 0:
        raise ValueError("cannot compute stats of an empty stream")
    if duration is None:
        duration = float(stream.t[-1] - stream.t[0])
    if duration <= 0:
        raise ValueError("stream duration is zero; intensity undefined")
    n = len(stream.active_nodes())
    e = len(stream)
    return GraphStats(nodes=n, events=e, duration=duration, intensity=2.0 * e / (n * duration))


class WeightedTemporalGraph:
    """Static weighted projection: w_uv = number of interactions between u and v."""

    def __init__(self, adj: dict[int, dict[int, int]]):
        self.adj = adj
        self.degrees = {u: sum(nbrs.values()) for u, nbrs in adj.items()}
        self.total_weight = sum(self.degrees.values()) // 2

    @property
    def nodes(self) -> list[int]:
        return sorted(self.adj.keys())

    def weight(self, u: int, v: int) -> int:
        return self.adj.get(u, {}).get(v, 0)

    def degree(self, u: int) -> int:
        return self.degrees.get(u, 0)

    def neighbors(self, u: int):
        return self.adj.get(u, {}).items()


def build_weighted_graph(stream: EventStream) -> WeightedTemporalGraph:
    if len(stream) == 0:
        return WeightedTemporalGraph({})
    lo = np.minimum(stream.u, stream.v)
    hi = np.maximum(stream.u, stream.v)
    keys = lo * np.int64(stream.n_nodes) + hi
    uniq, counts = np.unique(keys, return_counts=True)
    adj: dict[int, dict[int, int]] = {}
    n = stream.n_nodes
    for key, c in zip(uniq.tolist(), counts.tolist()):
        a, b = divmod(key, n)
        adj.setdefault(a, {})[b] = c
        adj.setdefault(b, {})[a] = c
    return WeightedTemporalGraph(adj)


class TemporalAdjacency:
    """Per-node event lists sorted by time, for strict-past candidate queries."""

    __slots__ = ("nbr", "ts", "eid")

    def __init__(self, n_nodes: int):
        self.nbr: list[np.ndarray | None] = [None] * n_nodes
        self.ts: list[np.ndarray | None] = [None] * n_nodes
        self.eid: list[np.ndarray | None] = [None] * n_nodes

    @classmethod
    def from_stream(
        cls, stream: EventStream, event_index: np.ndarray | None = None
    ) -> "TemporalAdjacency":
        """Build from a stream, optionally restricted to the given event rows."""
        out = cls(stream.n_nodes)
        if event_index is None:
            eu, ev, et = stream.u, stream.v, stream.t
            eids = np.arange(len(stream), dtype=np.int64)
        else:
            event_index = np.asarray(event_index, dtype=np.int64)
            eu, ev, et = stream.u[event_index], stream.v[event_index], stream.t[event_index]
            eids = event_index
        src = np.concatenate([eu, ev])
        dst = np.concatenate([ev, eu])
        tt = np.concatenate([et, et])
        ee = np.concatenate([eids, eids])
        order = np.lexsort((tt, src))
        src, dst, tt, ee = src[order], dst[order], tt[order], ee[order]
        bounds = np.searchsorted(src, np.arange(stream.n_nodes + 1))
        for node in np.unique(src).tolist():
            a, b = bounds[node], bounds[node + 1]
            out.nbr[node] = dst[a:b]
            out.ts[node] = tt[a:b]
            out.eid[node] = ee[a:b]
        return out

    def candidates(self, node: int, t: float):
        """Events incident to ``node`` strictly before ``t``: (neighbors, times, event ids)."""
        ts = self.ts[node]
        if ts is None:
            return _EMPTY_I64, _EMPTY_F64, _EMPTY_I64
        k = int(np.searchsorted(ts, t, side="left"))
        return self.nbr[node][:k], ts[:k], self.eid[node][:k]

    def has_node(self, node: int) -> bool:
        return self.ts[node] is not None


_EMPTY_I64 = np.empty(0, dtype=np.int64)
_EMPTY_F64 = np.empty(0, dtype=np.float64)


@dataclass
class NegativeSet:
    """Corrupted target endpoints aligned with a split's positive events."""

    v: np.ndarray
    fallback_count: int = 0
    fallback_edge_count: int = 0


@dataclass
class DatasetSplits:
    train: EventStream
    val: EventStream
    test: EventStream
    ratios: tuple[float, float, float]
    t_train_end: float
    t_val_end: float
    masked_nodes: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    val_kind: np.ndarray | None = None   # "new-new" / "new-old" per val event
    test_kind: np.ndarray | None = None
    negatives: dict[str, NegativeSet] = field(default_factory=dict)
    seed: int | None = None

    def split(self, name: str) -> EventStream:
        return {"train": self.train, "val": self.val, "test": self.test}[name]


def _split_sizes(n: int, ratios: tuple[float, float, float]) -> tuple[int, int, int]:
    if n < 3:
        raise SplitError(f"need at least 3 events to split, got {n}")
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise SplitError(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"ratios must sum to 1, got {sum(ratios)}")
    n_train = min(max(math.ceil(ratios[0] * n), 1), n - 2)
    n_val = min(max(math.ceil(ratios[1] * n), 1), n - n_train - 1)
    return n_train, n_val, n - n_train - n_val


def chronological_split(
    stream: EventStream, ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
) -> DatasetSplits:
    """Cut the time-sorted stream into train/val/test prefixes by event count."""
    n_train, n_val, _ = _split_sizes(len(stream), ratios)
    train = stream.subset(slice(0, n_train))
    val = stream.subset(slice(n_train, n_train + n_val))
    test = stream.subset(slice(n_train + n_val, len(stream)))
    return DatasetSplits(
        train=train, val=val, test=test, ratios=tuple(ratios),
        t_train_end=float(train.t[-1]), t_val_end=float(val.t[-1]),
    )


def mask_inductive_nodes(
    stream: EventStream,
    fraction: float = 0.1,
    seed: int = 0,
    ratios: tuple[float, float, float] = (0.7, 0.15, 0.15),
) -> DatasetSplits:
    """Chronological split followed by node masking for inductive evaluation.

    A seeded sample of nodes is masked: train keeps only events touching no
    masked node, while val and test keep only events touching at least one,
    labeled "new-new" (both endpoints masked) or "new-old".
    """
    if not 0 < fraction < 1:
        raise SplitError(f"masking fraction must lie in (0, 1), got {fraction}")
    base = chronological_split(stream, ratios)
    rng = np.random.Generator(np.random.PCG64(seed))
    nodes = stream.active_nodes()
    n_masked = max(1, int(round(fraction * len(nodes))))
    masked = np.sort(rng.choice(nodes, size=n_masked, replace=False))
    masked_set = np.zeros(stream.n_nodes, dtype=bool)
    masked_set[masked] = True

    tr = base.train
    keep_train = ~(masked_set[tr.u] | masked_set[tr.v])
    if not keep_train.any():
        raise SplitError("all train events touch masked nodes; lower the masking fraction")
    train = tr.subset(np.flatnonzero(keep_train))

    def _restrict(part: EventStream):
        touch = masked_set[part.u] | masked_set[part.v]
        kept = part.subset(np.flatnonzero(touch))
        both = masked_set[kept.u] & masked_set[kept.v]
        kind = np.where(both, "new-new", "new-old")
        return kept, kind

    val, val_kind = _restrict(base.val)
    test, test_kind = _restrict(base.test)
    return DatasetSplits(
        train=train, val=val, test=test, ratios=tuple(ratios),
        t_train_end=base.t_train_end, t_val_end=base.t_val_end,
        masked_nodes=masked, val_kind=val_kind, test_kind=test_kind, seed=seed,
    )


def full_edge_set(stream: EventStream) -> set[int]:
    """Unordered node pairs that interact anywhere in the stream, as packed keys."""
    lo = np.minimum(stream.u, stream.v)
    hi = np.maximum(stream.u, stream.v)
    n = stream.n_nodes
    return set((lo * np.int64(n) + hi).tolist())


def sample_negatives(
    split: EventStream,
    edge_set: set[int],
    universe: np.ndarray,
    seed: int,
    n_nodes: int,
    max_tries: int = 100,
) -> NegativeSet:
    """One corrupted interaction per positive: keep (u, t), replace the target.

    Candidates are drawn uniformly from ``universe`` until (u, v') is a
    non-edge of the full stream; after ``max_tries`` failures any v' not in
    {u, v} is accepted (counted, along with how many of those are edges).
    """
    universe = np.asarray(universe, dtype=np.int64)
    if len(universe) < 3:
        raise ValueError("need at least 3 candidate nodes for negative sampling")
    rng = np.random.Generator(np.random.PCG64(seed))
    out = np.empty(len(split), dtype=np.int64)
    fallback = 0
    fallback_edges = 0
    n = np.int64(n_nodes)
    for i in range(len(split)):
        u = int(split.u[i])
        v = int(split.v[i])
        hit = -1
        for _ in range(max_tries):
            cand = int(universe[rng.integers(0, len(universe))])
            if cand == u:
                continue
            key = int(min(u, cand) * n + max(u, cand))
            if key not in edge_set:
                hit = cand
                break
        if hit < 0:
            fallback += 1
            while True:
                cand = int(universe[rng.integers(0, len(universe))])
                if cand != u and cand != v:
                    hit = cand
                    break
            key = int(min(u, hit) * n + max(u, hit))
            if key in edge_set:
                fallback_edges += 1
        out[i] = hit
    return NegativeSet(v=out, fallback_count=fallback, fallback_edge_count=fallback_edges)


def attach_negatives(splits: DatasetSplits, stream: EventStream, seed: int) -> None:
    """Sample and store one negative set per split, fixed for the run.

    Train negatives come from train-active nodes so every training endpoint
    has a community; val/test negatives come from all stream nodes.
    """
    edges = full_edge_set(stream)
    train_universe = splits.train.active_nodes()
    all_universe = stream.active_nodes()
    n = stream.n_nodes
    splits.negatives["train"] = sample_negatives(
        splits.train, edges, train_universe, seed, n)
    splits.negatives["val"] = sample_negatives(
        splits.val, edges, all_universe, seed + 1, n)
    splits.negatives["test"] = sample_negatives(
        splits.test, edges, all_universe, seed + 2, n)


def save_splits(splits: DatasetSplits, out_dir: str | Path, stream: EventStream) -> None:
    """Persist the three event files plus a JSON manifest (labels, not dense ids)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = stream.node_ids
    for name in ("train", "val", "test"):
        write_events(splits.split(name), out / f"{name}.csv")
    manifest = {
        "ratios": list(splits.ratios),
        "seed": splits.seed,
        "boundaries": {"t_train_end": splits.t_train_end, "t_val_end": splits.t_val_end},
        "masked_nodes": [int(labels[m]) for m in splits.masked_nodes],
        "node_ids": [int(x) for x in labels],
        "negatives": {
            name: [int(labels[x]) for x in ns.v]
            for name, ns in splits.negatives.items()
        },
        "kinds": {
            "val": list(splits.val_kind) if splits.val_kind is not None else None,
            "test": list(splits.test_kind) if splits.test_kind is not None else None,
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))


def load_splits(in_dir: str | Path) -> tuple[DatasetSplits, EventStream]:
    """Rebuild splits written by :func:`save_splits`; returns (splits, full stream)."""
    src = Path(in_dir)
    manifest = json.loads((src / "manifest.json").read_text())
    node_ids = np.asarray(manifest["node_ids"], dtype=np.int64)
    label_to_dense = {int(lab): i for i, lab in enumerate(node_ids)}

    def _reload(name: str) -> EventStream:
        part = ingest_events(src / f"{name}.csv")
        u = np.asarray([label_to_dense[int(part.node_ids[x])] for x in part.u], np.int64)
        v = np.asarray([label_to_dense[int(part.node_ids[x])] for x in part.v], np.int64)
        return EventStream(u, v, part.t, part.attrs, node_ids=node_ids)

    train, val, test = _reload("train"), _reload("val"), _reload("test")
    order_all = np.argsort(np.concatenate([train.t, val.t, test.t]), kind="stable")
    full = EventStream(
        np.concatenate([train.u, val.u, test.u])[order_all],
        np.concatenate([train.v, val.v, test.v])[order_all],
        np.concatenate([train.t, val.t, test.t])[order_all],
        np.concatenate([train.attrs, val.attrs, test.attrs])[order_all],
        node_ids=node_ids,
    )
    splits = DatasetSplits(
        train=train, val=val, test=test, ratios=tuple(manifest["ratios"]),
        t_train_end=manifest["boundaries"]["t_train_end"],
        t_val_end=manifest["boundaries"]["t_val_end"],
        masked_nodes=np.asarray(
            sorted(label_to_dense[m] for m in manifest["masked_nodes"]), dtype=np.int64),
        seed=manifest["seed"],
    )
    for name, neg in manifest.get("negatives", {}).items():
        splits.negatives[name] = NegativeSet(
            v=np.asarray([label_to_dense[x] for x in neg], dtype=np.int64))
    kinds = manifest.get("kinds", {})
    if kinds.get("val") is not None:
        splits.val_kind = np.asarray(kinds["val"])
        splits.test_kind = np.asarray(kinds["test"])
    return splits, full
