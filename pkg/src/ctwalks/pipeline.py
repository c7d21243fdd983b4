"""Link-prediction training and evaluation on top of confined temporal walks.

One interaction is scored by sampling R walks from each endpoint, encoding
the anonymized walks, mean-pooling the 2R encodings, and passing the pooled
vector through a small MLP with a sigmoid head.  Training pairs every
positive event with one fixed negative and minimizes binary cross-entropy
with Adam; early stopping watches validation AUC.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

import numpy as np

from . import encoder as enc
from .anonymize import interaction_feature_arrays
from .communities import (
    CommunityGraphs, CommunityPartition, derive_subgraphs, extend_partition, louvain,
)
from .events import (
    DatasetSplits, EventStream, TemporalAdjacency, attach_negatives,
    build_weighted_graph, chronological_split, compute_stats, mask_inductive_nodes,
)
from .metrics import average_precision, roc_auc
from .rng import stream_key
from .walks import sample_walk_matrix


class ConfigError(ValueError):
    """Run configuration that cannot be used, with the offending key named."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; reported with epoch and batch index."""


ENV_SEED = "CTWALKS_SEED"

_SALT = {
    "model": 11, "walks": 12, "eval": 13, "split": 14,
    "community": 15, "negatives": 16, "extend": 17, "shuffle": 18,
}


def _derive_seed(seed: int, purpose: str, extra: int = 0) -> int:
    return int(stream_key(seed, _SALT[purpose], extra))


@dataclass
class RunConfig:
    """Everything a run needs; JSON round-trips field for field."""

    events_path: str | None = None
    workdir: str | None = None
    seed: int = 0

    ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
    inductive: bool = False
    inductive_fraction: float = 0.1

    community_min_gain: float = 1e-7

    walk_length: int = 3
    n_walks: int = 16
    time_scale: float | str = "auto"

    d_h: int = 32
    d_c: int = 8
    step_size: float = 0.125
    log_time: bool = True

    learning_rate: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 3

    use_edge_attrs: bool = True
    node_attr_path: str | None = None

    no_intra: bool = False
    no_inter: bool = False
    no_community_walk: bool = False
    no_community_label: bool = False
    no_continuous: bool = False
    shuffle_labels: bool = False

    def __post_init__(self):
        if os.environ.get(ENV_SEED):
            try:
                self.seed = int(os.environ[ENV_SEED])
            except ValueError:
                raise ConfigError(f"{ENV_SEED} must be an integer, got "
                                  f"{os.environ[ENV_SEED]!r}") from None
        self.ratios = tuple(self.ratios)
        _validate(self)

    def to_dict(self) -> dict:
        out = {}
        for f in dc_fields(self):
            val = getattr(self, f.name)
            out[f.name] = list(val) if isinstance(val, tuple) else val
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in dc_fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {p} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {p} must hold a JSON object")
        return cls.from_dict(doc)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _validate(cfg: RunConfig) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(cfg.walk_length >= 1, f"walk_length must be >= 1, got {cfg.walk_length}")
    need(cfg.n_walks >= 1, f"n_walks must be >= 1, got {cfg.n_walks}")
    need(cfg.d_h >= 1, f"d_h must be >= 1, got {cfg.d_h}")
    need(cfg.d_c >= 1, f"d_c must be >= 1, got {cfg.d_c}")
    need(0 < cfg.step_size <= 1, f"step_size must lie in (0, 1], got {cfg.step_size}")
    need(cfg.learning_rate > 0, f"learning_rate must be positive, got {cfg.learning_rate}")
    need(cfg.batch_size >= 1, f"batch_size must be >= 1, got {cfg.batch_size}")
    need(cfg.max_epochs >= 1, f"max_epochs must be >= 1, got {cfg.max_epochs}")
    need(cfg.patience >= 1, f"patience must be >= 1, got {cfg.patience}")
    if isinstance(cfg.time_scale, str):
        need(cfg.time_scale == "auto",
             f"time_scale must be a positive number or 'auto', got {cfg.time_scale!r}")
    else:
        need(cfg.time_scale > 0,
             f"time_scale must be a positive number or 'auto', got {cfg.time_scale}")
    need(len(cfg.ratios) == 3, f"ratios must have 3 entries, got {cfg.ratios}")


@dataclass
class Workspace:
    """Prepared data artifacts shared by training and evaluation."""

    stream: EventStream
    splits: DatasetSplits
    partition: CommunityPartition          # train labels
    ext_partition: CommunityPartition      # labels covering all stream nodes
    train_graphs: CommunityGraphs
    eval_graphs: CommunityGraphs
    train_full: TemporalAdjacency
    eval_full: TemporalAdjacency
    time_scale: float
    pad_token: int
    node_attrs: np.ndarray | None = None

    @property
    def attr_width(self) -> int:
        return self.stream.attr_width

    @property
    def node_attr_width(self) -> int:
        return 0 if self.node_attrs is None else self.node_attrs.shape[1]


def build_splits(config: RunConfig, stream: EventStream) -> DatasetSplits:
    """Chronological (or inductive-masked) splits with paired negatives."""
    if config.inductive:
        splits = mask_inductive_nodes(
            stream, fraction=config.inductive_fraction,
            seed=_derive_seed(config.seed, "split"), ratios=config.ratios)
    else:
        splits = chronological_split(stream, ratios=config.ratios)
    attach_negatives(splits, stream, _derive_seed(config.seed, "negatives"))
    return splits


def build_partition(config: RunConfig, train_stream: EventStream) -> CommunityPartition:
    """Louvain partition of the aggregated train-split graph."""
    return louvain(
        build_weighted_graph(train_stream),
        seed=_derive_seed(config.seed, "community"),
        min_gain=config.community_min_gain)


def prepare(config: RunConfig, stream: EventStream) -> Workspace:
    """Split, partition, and index the stream according to the config."""
    splits = build_splits(config, stream)
    partition = build_partition(config, splits.train)
    train_graphs = derive_subgraphs(splits.train, partition)

    full_graph = build_weighted_graph(stream)
    ext = extend_partition(
        full_graph, partition, stream.n_nodes, seed=_derive_seed(config.seed, "extend"))
    eval_graphs = derive_subgraphs(stream, ext)

    if config.time_scale == "auto":
        time_scale = 1.0 / compute_stats(splits.train).intensity
    else:
        time_scale = float(config.time_scale)

    node_attrs = None
    if config.node_attr_path:
        node_attrs = np.loadtxt(config.node_attr_path, delimiter=",", ndmin=2)
        if node_attrs.shape[0] != stream.n_nodes:
            raise ConfigError(
                f"node attribute table has {node_attrs.shape[0]} rows, "
                f"stream has {stream.n_nodes} nodes")

    return Workspace(
        stream=stream, splits=splits, partition=partition, ext_partition=ext,
        train_graphs=train_graphs, eval_graphs=eval_graphs,
        train_full=TemporalAdjacency.from_stream(splits.train),
        eval_full=TemporalAdjacency.from_stream(stream),
        time_scale=time_scale, pad_token=partition.k, node_attrs=node_attrs,
    )


def _governing(config: RunConfig, graphs: CommunityGraphs, full: TemporalAdjacency,
               label: int, node: int) -> TemporalAdjacency:
    """Subgraph for a walk root, honoring the confinement ablations."""
    if config.no_community_walk:
        return full
    if graphs.bridging[node]:
        return full if config.no_inter else graphs.inter
    return full if config.no_intra else graphs.intra[label]


class InteractionScorer:
    """Batched walk sampling, feature assembly, and encoder forward/backward."""

    def __init__(self, config: RunConfig, ws: Workspace, training_graphs: bool):
        self.config = config
        self.ws = ws
        if training_graphs:
            self.graphs = ws.train_graphs
            self.full = ws.train_full
            self.labels = ws.partition.assignment
        else:
            self.graphs = ws.eval_graphs
            self.full = ws.eval_full
            self.labels = ws.ext_partition.assignment
        self.use_labels = not config.no_community_label
        self.extra_width = (
            (ws.attr_width if config.use_edge_attrs else 0) + ws.node_attr_width)

    def _walk_arrays(self, root: int, t: float, master: int):
        label = int(self.labels[root])
        adj = _governing(self.config, self.graphs, self.full, label, root)
        return sample_walk_matrix(
            root, t, self.config.n_walks, self.config.walk_length,
            adj, master, self.ws.time_scale), label

    def _extra(self, nodes: np.ndarray, eids: np.ndarray) -> np.ndarray | None:
        if self.extra_width == 0:
            return None
        parts = []
        if self.config.use_edge_attrs and self.ws.attr_width:
            ea = self.ws.stream.attrs[np.maximum(eids, 0)]
            ea[eids < 0] = 0.0       # the root step has no incoming event
            parts.append(ea)
        if self.ws.node_attrs is not None:
            parts.append(self.ws.node_attrs[nodes])
        return np.concatenate(parts, axis=-1)

    def assemble(self, us, vs, ts, masters):
        """Feature arrays for a list of interactions, 2R walks each."""
        cs_l, ct_l, tu_l, tv_l, dt_l, ex_l = [], [], [], [], [], []
        pad = self.ws.pad_token
        for u, v, t, master in zip(us, vs, ts, masters):
            (nu, tiu, eu, lu), cu = self._walk_arrays(int(u), float(t), master)
            (nv, tiv, ev, lv), cv = self._walk_arrays(int(v), float(t), master)
            cs, ct, tok_u, tok_v, dt, _ = interaction_feature_arrays(
                nu, tiu, lu, nv, tiv, lv, cu, cv, pad)
            cs_l.append(cs)
            ct_l.append(ct)
            tu_l.append(tok_u)
            tv_l.append(tok_v)
            dt_l.append(dt)
            if self.extra_width:
                ex_l.append(self._extra(np.vstack([nu, nv]), np.vstack([eu, ev])))
        out = (
            np.concatenate(cs_l), np.concatenate(ct_l),
            np.concatenate(tu_l), np.concatenate(tv_l),
            np.concatenate(dt_l),
            np.concatenate(ex_l) if ex_l else None,
        )
        return out

    def forward(self, params, solver, us, vs, ts, masters, keep_cache=False):
        cs, ct, tok_u, tok_v, dts, extra = self.assemble(us, vs, ts, masters)
        feats = enc.build_features(cs, ct, tok_u, tok_v, params,
                                   extra=extra, use_labels=self.use_labels)
        hidden, cache = enc.forward_walks(
            params, solver, feats, dts,
            no_continuous=self.config.no_continuous, keep_cache=keep_cache)
        probs, pool_cache = enc.pool_and_score(hidden, params,
                                               group_size=2 * self.config.n_walks)
        return probs, (cache, pool_cache, tok_u, tok_v)

    def backward(self, params, solver, ctx, dlogit, grads):
        cache, pool_cache, tok_u, tok_v = ctx
        denc = enc.score_backward(pool_cache, dlogit, params, grads)
        dfeats = enc.backward_walks(params, solver, cache, denc, grads)
        if self.use_labels:
            enc.scatter_label_grads(
                dfeats, tok_u, tok_v, self.config.walk_length, params.d_c, grads)


class Adam:
    """Adam over the parameter tensor list."""

    def __init__(self, params: enc.EncoderParams, lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {n: np.zeros_like(a) for n, a in params.tensors()}
        self.v = {n: np.zeros_like(a) for n, a in params.tensors()}

    def step(self, params: enc.EncoderParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for name, arr in params.tensors():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            arr -= self.lr * (self.m[name] / b1c) / (np.sqrt(self.v[name] / b2c) + self.eps)


@dataclass(frozen=True)
class MetricsReport:
    task: str
    auc: float
    ap: float
    epochs_run: int
    best_epoch: int
    seed: int
    config_digest: str

    def to_json(self) -> str:
        return json.dumps({
            "task": self.task, "auc": self.auc, "ap": self.ap,
            "epochs_run": self.epochs_run, "best_epoch": self.best_epoch,
            "seed": self.seed, "config_digest": self.config_digest,
        }, sort_keys=True)


@dataclass
class TrainingHistory:
    loss_trace: list[float] = field(default_factory=list)
    val_auc_trace: list[float] = field(default_factory=list)
    epochs_run: int = 0
    best_epoch: int = 0
    wall_clock_seconds: float = 0.0

    def to_json(self) -> str:
        return json.dumps({
            "loss_trace": self.loss_trace, "val_auc_trace": self.val_auc_trace,
            "epochs_run": self.epochs_run, "best_epoch": self.best_epoch,
            "wall_clock_seconds": self.wall_clock_seconds,
        })


def _bce_from_logits(logits: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, logits) - y * logits))


def _split_items(ws: Workspace, name: str):
    """Positives and paired negatives of a split as flat interaction arrays."""
    part = ws.splits.split(name)
    neg = ws.splits.negatives[name].v
    return part.u, part.v, neg, part.t


def make_params(config: RunConfig, ws: Workspace) -> enc.EncoderParams:
    extra = (ws.attr_width if config.use_edge_attrs else 0) + ws.node_attr_width
    d_in = enc.feature_width(config.walk_length, config.d_c, extra,
                             use_labels=not config.no_community_label)
    n_tokens = ws.partition.k + 1      # one reserved row shared by pad and fresh
    return enc.init_params(config.d_h, d_in, n_tokens, config.d_c,
                           seed=_derive_seed(config.seed, "model"))


def make_solver(config: RunConfig) -> enc.SolverConfig:
    return enc.SolverConfig(step_size=config.step_size, log_time=config.log_time)


def _shuffled_labels(n_pos: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Permuted balanced labels for the signal-destroying control."""
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.concatenate([np.ones(n_pos), np.zeros(n_pos)])
    rng.shuffle(labels)
    return labels[:n_pos], labels[n_pos:]


def evaluate_scores(
    config: RunConfig, ws: Workspace, params, solver, name: str,
    mode: str | None = None, chunk: int = 256,
) -> tuple[np.ndarray, np.ndarray]:
    """Scores and labels over a split's positives and paired negatives.

    Walk sets are sampled fresh with the eval seed; masters depend only on
    the split and event index, so repeated evaluation is reproducible.
    """
    scorer = InteractionScorer(config, ws, training_graphs=False)
    u, v, vneg, t = _split_items(ws, name)
    idx = np.arange(len(u))
    if mode is not None:
        kinds = {"val": ws.splits.val_kind, "test": ws.splits.test_kind}[name]
        if kinds is None:
            raise ConfigError(f"{name} split has no inductive labels; "
                              "run with inductive=true to use modes")
        idx = idx[kinds == mode]
    eval_seed = _derive_seed(config.seed, "eval")
    salt = {"train": 0, "val": 1, "test": 2}[name]
    scores = []
    labels = []
    for a in range(0, len(idx), chunk):
        sel = idx[a: a + chunk]
        masters_p = [int(stream_key(eval_seed, salt, int(i) * 2)) for i in sel]
        masters_n = [int(stream_key(eval_seed, salt, int(i) * 2 + 1)) for i in sel]
        pp, _ = scorer.forward(params, solver, u[sel], v[sel], t[sel], masters_p)
        pn, _ = scorer.forward(params, solver, u[sel], vneg[sel], t[sel], masters_n)
        scores.append(pp)
        scores.append(pn)
        labels.append(np.ones(len(sel)))
        labels.append(np.zeros(len(sel)))
    score_arr = np.concatenate(scores)
    label_arr = np.concatenate(labels)
    if config.shuffle_labels:
        # the control lives in a fully permuted-label world: association
        # between scores and labels must vanish at evaluation time too
        rng = np.random.Generator(
            np.random.PCG64(_derive_seed(config.seed, "shuffle", salt + 1)))
        rng.shuffle(label_arr)
    return score_arr, label_arr


def evaluate(
    config: RunConfig, ws: Workspace, params, solver, name: str = "test",
    mode: str | None = None, epochs_run: int = 0, best_epoch: int = 0,
) -> MetricsReport:
    scores, labels = evaluate_scores(config, ws, params, solver, name, mode=mode)
    task = mode if mode is not None else ("inductive" if config.inductive else "transductive")
    return MetricsReport(
        task=task, auc=roc_auc(scores, labels), ap=average_precision(scores, labels),
        epochs_run=epochs_run, best_epoch=best_epoch,
        seed=config.seed, config_digest=config.digest(),
    )


def train(
    config: RunConfig, ws: Workspace,
) -> tuple[enc.EncoderParams, TrainingHistory]:
    """Adam training with one negative per positive and val-AUC early stopping.

    Epochs pass chronologically over train positives.  Walk masters mix the
    epoch and interaction index, so each epoch resamples walks
    deterministically.  The best-validation parameters are returned.
    """
    t_start = time.perf_counter()
    params = make_params(config, ws)
    solver = make_solver(config)
    scorer = InteractionScorer(config, ws, training_graphs=True)
    optimizer = Adam(params, lr=config.learning_rate)
    walk_seed = _derive_seed(config.seed, "walks")

    u, v, vneg, t = _split_items(ws, "train")
    n = len(u)
    y_pos = np.ones(n)
    y_neg = np.zeros(n)
    if config.shuffle_labels:
        y_pos, y_neg = _shuffled_labels(n, _derive_seed(config.seed, "shuffle"))

    history = TrainingHistory()
    best_auc = -np.inf
    best_params = params.copy()
    since_best = 0

    for epoch in range(1, config.max_epochs + 1):
        losses = []
        for a in range(0, n, config.batch_size):
            b = min(a + config.batch_size, n)
            sel = np.arange(a, b)
            uu = np.concatenate([u[sel], u[sel]])
            vv = np.concatenate([v[sel], vneg[sel]])
            tt = np.concatenate([t[sel], t[sel]])
            yy = np.concatenate([y_pos[sel], y_neg[sel]])
            masters = (
                [int(stream_key(walk_seed, epoch, int(i) * 2)) for i in sel]
                + [int(stream_key(walk_seed, epoch, int(i) * 2 + 1)) for i in sel]
            )
            probs, ctx = scorer.forward(params, solver, uu, vv, tt, masters,
                                        keep_cache=True)
            logits = ctx[1][3]
            loss = _bce_from_logits(logits, yy)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch starting at event {a}")
            losses.append(loss)
            grads = params.zero_grads()
            dlogit = (probs - yy) / len(yy)
            scorer.backward(params, solver, ctx, dlogit, grads)
            optimizer.step(params, grads)
        history.loss_trace.append(float(np.mean(losses)))

        val_scores, val_labels = evaluate_scores(config, ws, params, solver, "val")
        val_auc = roc_auc(val_scores, val_labels)
        history.val_auc_trace.append(float(val_auc))
        history.epochs_run = epoch
        if val_auc > best_auc:
            best_auc = val_auc
            best_params = params.copy()
            history.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break

    history.wall_clock_seconds = time.perf_counter() - t_start
    return best_params, history
