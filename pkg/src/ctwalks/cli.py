"""Command-line front end.

Subcommands: ``stats``, ``split``, ``communities``, ``train``, ``eval``,
``oracle``.  Every command prints a JSON report to stdout and returns exit
code 0; validation problems (bad flags, unreadable or malformed inputs,
missing artifacts) return 1, runtime failures (divergence, unexpected
errors) return 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import encoder as enc
from . import pipeline as pl
from .communities import bridging_nodes, save_partition
from .events import (
    IngestError, SplitError, build_weighted_graph, compute_stats, ingest_events,
    save_splits,
)
from .theory import (
    StaticGraph, bridging_mask, build_matrices, check_lemma1, pmi_target,
)


class _CliArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliArgError(message)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _load_config(args) -> pl.RunConfig:
    if not args.config:
        raise pl.ConfigError("this command needs --config <file>")
    cfg = pl.RunConfig.from_json(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "events", None):
        cfg.events_path = args.events
    if getattr(args, "workdir", None):
        cfg.workdir = args.workdir
    return cfg


def _load_stream(cfg: pl.RunConfig):
    if not cfg.events_path:
        raise pl.ConfigError(
            "no events file: set events_path in the config or pass --events")
    return ingest_events(cfg.events_path)


def _workdir(cfg: pl.RunConfig) -> Path:
    out = Path(cfg.workdir or "runs")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_stats(args) -> int:
    stream = ingest_events(args.events)
    _emit(compute_stats(stream).to_dict(), args.json_out)
    return 0


def _cmd_split(args) -> int:
    cfg = _load_config(args)
    stream = _load_stream(cfg)
    splits = pl.build_splits(cfg, stream)
    out = _workdir(cfg) / "splits"
    save_splits(splits, out, stream)
    doc = {
        "out_dir": str(out),
        "train_events": len(splits.train.t),
        "val_events": len(splits.val.t),
        "test_events": len(splits.test.t),
        "inductive": cfg.inductive,
    }
    _emit(doc, args.json_out)
    return 0


def _cmd_communities(args) -> int:
    cfg = _load_config(args)
    stream = _load_stream(cfg)
    splits = pl.build_splits(cfg, stream)
    partition = pl.build_partition(cfg, splits.train)
    graph = build_weighted_graph(splits.train)
    out = _workdir(cfg) / "partition.json"
    save_partition(partition, graph, out, node_ids=stream.node_ids)
    sizes = np.bincount(partition.assignment[partition.assignment >= 0],
                        minlength=partition.k)
    doc = {
        "out_file": str(out),
        "k": partition.k,
        "modularity": partition.modularity,
        "sizes": sizes.tolist(),
        "n_bridging": int(bridging_nodes(graph, partition.assignment).sum()),
        "levels": len(partition.history),
    }
    _emit(doc, args.json_out)
    return 0


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    stream = _load_stream(cfg)
    ws = pl.prepare(cfg, stream)
    params, history = pl.train(cfg, ws)
    out = _workdir(cfg)
    ckpt = out / "checkpoint.bin"
    enc.save_checkpoint(params, pl.make_solver(cfg), ckpt, meta={
        "config_digest": cfg.digest(),
        "seed": cfg.seed,
        "k": ws.partition.k,
        "epochs_run": history.epochs_run,
        "best_epoch": history.best_epoch,
    })
    (out / "history.json").write_text(history.to_json() + "\n")
    report = pl.evaluate(cfg, ws, params, pl.make_solver(cfg), "val",
                         epochs_run=history.epochs_run,
                         best_epoch=history.best_epoch)
    (out / "val_report.json").write_text(report.to_json() + "\n")
    doc = json.loads(report.to_json())
    doc["checkpoint"] = str(ckpt)
    _emit(doc, args.json_out)
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_config(args)
    ckpt = _workdir(cfg) / "checkpoint.bin"
    if not ckpt.exists():
        raise pl.ConfigError(
            f"missing checkpoint {ckpt}: run the train subcommand first")
    params, solver, meta = enc.load_checkpoint(ckpt)
    if meta.get("config_digest") not in (None, cfg.digest()):
        raise pl.ConfigError(
            f"checkpoint {ckpt} was trained under a different config "
            f"(digest {meta['config_digest'][:12]}... vs {cfg.digest()[:12]}...)")
    stream = _load_stream(cfg)
    ws = pl.prepare(cfg, stream)
    mode = None if args.mode == "transductive" else args.mode
    report = pl.evaluate(cfg, ws, params, solver, args.split, mode=mode,
                         epochs_run=int(meta.get("epochs_run", 0)),
                         best_epoch=int(meta.get("best_epoch", 0)))
    out_file = _workdir(cfg) / f"eval_{args.split}_{args.mode}.json"
    out_file.write_text(report.to_json() + "\n")
    _emit(json.loads(report.to_json()), args.json_out)
    return 0


def _random_two_community_graph(rng: np.random.Generator):
    """Connected-ish random graph with two planted sides and a bridging pair."""
    for _ in range(50):
        n = int(rng.integers(6, 12))
        assignment = np.zeros(n, dtype=np.int64)
        assignment[n // 2:] = 1
        edges = set()
        for _ in range(int(rng.integers(n, 3 * n))):
            a, b = (int(x) for x in rng.integers(0, n, size=2))
            if a != b:
                edges.add((min(a, b), max(a, b)))
        graph = StaticGraph(n, sorted(edges))
        if any(len(graph.adj[u]) == 0 for u in range(n)):
            continue
        bridge = bridging_mask(graph, assignment)
        pairs = [(u, v) for u in range(n) for v in range(n)
                 if u != v and bridge[u] and bridge[v]
                 and assignment[u] != assignment[v]]
        if pairs:
            return graph, assignment, pairs
    raise RuntimeError("failed to draw a graph with a bridging pair")


def _oracle_lemma1(args) -> dict:
    rng = np.random.Generator(np.random.PCG64(args.seed or 0))
    pairs_checked = 0
    holds_all = True
    worst = None
    for _ in range(args.n_graphs):
        graph, assignment, pairs = _random_two_community_graph(rng)
        take = [pairs[int(i)] for i in
                rng.choice(len(pairs), size=min(3, len(pairs)), replace=False)]
        for u, v in take:
            report = check_lemma1(graph, assignment, u, v, t_max=args.t_max)
            pairs_checked += 1
            if not report.holds_all:
                holds_all = False
                worst = report.to_dict()

    # two triangles joined by one edge: confinement forces the crossing
    barbell = StaticGraph(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)])
    bb = check_lemma1(barbell, np.array([0, 0, 0, 1, 1, 1]), 2, 3, t_max=args.t_max)

    # every neighbor bridging: the mixture bound is met with equality at t=1
    square = StaticGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    eq = check_lemma1(square, np.array([0, 0, 1, 1]), 0, 3, t_max=1)
    eq_row = eq.rows[0]
    equality_exact = (eq.all_neighbors_bridging
                      and eq_row.r_community == eq_row.r_traditional)

    return {
        "check": "lemma1",
        "graphs": args.n_graphs,
        "pairs_checked": pairs_checked,
        "t_max": args.t_max,
        "holds_all": holds_all,
        "violation": worst,
        "barbell_first_step": {
            "r_community": bb.rows[0].r_community,
            "r_traditional": bb.rows[0].r_traditional,
            "holds_all": bb.holds_all,
        },
        "equality_case_exact": bool(equality_exact),
    }


def _oracle_matrices(args) -> dict:
    rng = np.random.Generator(np.random.PCG64(args.seed or 0))
    rows_ok = True
    shift_ok = True
    checked = 0
    for _ in range(args.n_partitions):
        graph, assignment, _ = _random_two_community_graph(rng)
        mats = build_matrices(graph, assignment)
        bridge = bridging_mask(graph, assignment)
        sums_i = mats.m_intra.sum(axis=1)
        for u in range(graph.n):
            expect = 0.0 if u in mats.zero_intra_rows else 1.0
            if abs(sums_i[u] - expect) > 1e-12:
                rows_ok = False
        sums_c = mats.m_inter.sum(axis=1)
        for u in range(graph.n):
            expect = 1.0 if bridge[u] else 0.0
            if abs(sums_c[u] - expect) > 1e-12:
                rows_ok = False
        t1 = pmi_target(mats, walk_window=2, k_negatives=1)
        t2 = pmi_target(mats, walk_window=2, k_negatives=2)
        # with k=1 the shift term is exactly zero, so doubling k must land
        # bitwise on t1 - log 2
        expect = t1.values - np.log(2.0)
        finite = np.isfinite(expect)
        if not np.array_equal(t2.values[finite], expect[finite]):
            shift_ok = False
        if not np.array_equal(t1.mask, t2.mask):
            shift_ok = False
        checked += 1
    return {
        "check": "matrices",
        "partitions": checked,
        "rows_stochastic": rows_ok,
        "pmi_shift_exact": shift_ok,
    }


def _cmd_oracle(args) -> int:
    if args.which == "lemma1":
        doc = _oracle_lemma1(args)
    else:
        doc = _oracle_matrices(args)
    _emit(doc, args.json_out)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="ctwalks", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--json-out", default=None,
                       help="also write the report to this file")
        if config:
            p.add_argument("--config", required=False,
                           help="run configuration JSON file")
            p.add_argument("--events", default=None,
                           help="events file (overrides events_path)")
            p.add_argument("--workdir", default=None,
                           help="artifact directory (overrides workdir)")

    p = sub.add_parser("stats", help="ingest an event file and report stats")
    p.add_argument("events", help="event file (csv or whitespace columns)")
    common(p, config=False)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("split", help="write chronological splits + negatives")
    common(p)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("communities", help="detect and save train communities")
    common(p)
    p.set_defaults(func=_cmd_communities)

    p = sub.add_parser("train", help="train a model and save a checkpoint")
    common(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved checkpoint")
    common(p)
    p.add_argument("--split", choices=("val", "test"), default="test")
    p.add_argument("--mode", choices=("transductive", "new-new", "new-old"),
                   default="transductive")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("oracle", help="run an executable theory check")
    p.add_argument("which", choices=("lemma1", "matrices"))
    p.add_argument("--n-graphs", type=int, default=50)
    p.add_argument("--n-partitions", type=int, default=20)
    p.add_argument("--t-max", type=int, default=6)
    common(p, config=False)
    p.set_defaults(func=_cmd_oracle)

    return parser


_VALIDATION_ERRORS = (
    _CliArgError, pl.ConfigError, IngestError, SplitError, ValueError,
    FileNotFoundError, PermissionError,
)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:        # argparse --help
        return int(exc.code or 0)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (enc.IntegrationDiverged, pl.TrainingDiverged) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:         # anything unforeseen is a runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
