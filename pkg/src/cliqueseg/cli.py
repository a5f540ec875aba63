"""Command-line pipeline: synth, stats, featgen, train, infer, eval.

Every subcommand writes a manifest next to its outputs carrying the full
configuration, seed and format versions.  Exit codes: 0 success, 1 usage,
2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dataio, evaluation, kernels
from .corpus import build_stats, enumerate_constraints, sanskrit_like_schema
from .energy import energy_matrix, load_model, save_model
from .features import FeatureComputer, select_features
from .graph import GraphConfig, UncoverableInputError, build_graph, prune_edges
from .inference import greedy_inference, lattice_decode, steiner_tree_inference
from .synthlang import SynthConfig, make_benchmark, synth_schema
from .training import TrainConfig, featurize, make_lattice_instances, train

log = logging.getLogger("cliqueseg")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

VERSION = "0.1.0"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def default_workers() -> int:
    env = os.environ.get("CLIQUESEG_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _schema_by_name(name: str):
    if name == "synth":
        return synth_schema()
    if name == "sanskrit":
        return sanskrit_like_schema()
    raise dataio.DataError(f"unknown schema {name!r}; expected synth or sanskrit")


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_lemmas=args.lemmas,
        n_train=args.n_train,
        n_dev=args.n_dev,
        n_test=args.n_test,
        syncretism_rate=args.syncretism,
        homonymy_rate=args.homonymy,
        min_words=args.min_words,
        max_words=args.max_words,
    )
    out = Path(args.out)
    bench = make_benchmark(cfg, args.seed)
    written = []
    try:
        for split, corpus, spaces in (
            ("train", bench.train_corpus, bench.train_spaces),
            ("dev", bench.dev_corpus, bench.dev_spaces),
            ("test", bench.test_corpus, bench.test_spaces),
        ):
            cpath = out / f"{split}.corpus.jsonl"
            spath = out / f"{split}.candidates.jsonl"
            dataio.write_corpus(corpus, cpath)
            dataio.write_candidates(spaces, spath)
            written += [cpath, spath]
        dataio.write_manifest(
            out / "manifest.json",
            command="synth",
            seed=args.seed,
            version=VERSION,
            config={
                "n_lemmas": cfg.n_lemmas,
                "n_train": cfg.n_train,
                "n_dev": cfg.n_dev,
                "n_test": cfg.n_test,
                "syncretism_rate": cfg.syncretism_rate,
                "homonymy_rate": cfg.homonymy_rate,
                "min_words": cfg.min_words,
                "max_words": cfg.max_words,
            },
        )
    except Exception:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    log.info("wrote benchmark under %s", out)
    return EXIT_OK


def cmd_stats(args) -> int:
    corpus = dataio.read_corpus(args.corpus)
    schema = _schema_by_name(args.schema)
    stats = build_stats(corpus)
    dataio.write_stats(stats, schema, args.out)
    dataio.write_manifest(
        Path(args.out).with_suffix(".manifest.json"),
        command="stats",
        corpus=str(args.corpus),
        schema=args.schema,
        version=VERSION,
        n_sentences=stats.n_sentences,
    )
    log.info("stats over %d sentences -> %s", stats.n_sentences, args.out)
    return EXIT_OK


def cmd_featgen(args) -> int:
    stats, schema = dataio.read_stats(args.stats)
    corpus = dataio.read_corpus(args.corpus)
    constraints = enumerate_constraints(schema)
    computer = FeatureComputer(stats, constraints)
    rng = np.random.default_rng(args.seed)
    segments = [
        seg for sent in corpus.sentences for seg in sent.segments
    ]
    by_sentence = [s.segments for s in corpus.sentences]
    n_pairs = min(args.pairs, len(segments) * (len(segments) - 1)) if segments else 0
    pairs = []
    while len(pairs) < n_pairs:
        if rng.random() < 0.5:
            sent = by_sentence[int(rng.integers(len(by_sentence)))]
            if len(sent) < 2:
                continue
            i, j = rng.choice(len(sent), size=2, replace=False)
            pairs.append((sent[int(i)], sent[int(j)]))
        else:
            u = segments[int(rng.integers(len(segments)))]
            v = segments[int(rng.integers(len(segments)))]
            if u is v:
                continue
            pairs.append((u, v))
    k = args.k
    if k is None:
        k = 1500 if args.schema_hint == "sanskrit" else 64
    spec = select_features(pairs, computer, k=k, min_samples=args.min_samples)
    dataio.write_feature_spec(spec, args.out)
    dataio.write_manifest(
        Path(args.out).with_suffix(".manifest.json"),
        command="featgen",
        seed=args.seed,
        version=VERSION,
        k=k,
        pairs=len(pairs),
        constraint_count=len(constraints),
        template_space=3 * len(constraints) * 3,
        fingerprint=spec.fingerprint(),
    )
    log.info("selected %d of %d templates -> %s", spec.dimension, 3 * len(constraints) * 3, args.out)
    return EXIT_OK


def _load_pipeline(stats_path, spec_path):
    stats, schema = dataio.read_stats(stats_path)
    spec = dataio.read_feature_spec(spec_path)
    constraints = enumerate_constraints(schema)
    if spec.constraint_fingerprint != constraints.fingerprint():
        raise dataio.DataError(
            "feature spec was built against a different constraint set "
            f"({spec.constraint_fingerprint} != {constraints.fingerprint()})"
        )
    return FeatureComputer(stats, constraints), spec


def _build_graphs(spaces, cfg: GraphConfig):
    graphs = []
    for cs in spaces:
        try:
            graphs.append(build_graph(cs, cfg))
        except UncoverableInputError as exc:
            log.warning("skipping %s: %s", cs.sentence_id, exc)
    return graphs


def cmd_train(args) -> int:
    computer, spec = _load_pipeline(args.stats, args.featspec)
    spaces = dataio.read_candidates(args.train)
    graphs = _build_graphs(spaces, GraphConfig())
    cfg = TrainConfig(
        variant=args.variant,
        learning_rate=args.lr,
        epochs=args.epochs,
        hidden_size=args.hidden,
        beam=args.beam,
        seed=args.seed,
        patience=args.patience,
    )
    lattice_mode = cfg.variant in ("lattice", "lattice_beam")
    if lattice_mode:
        instances = make_lattice_instances(graphs, computer, spec)
    else:
        instances = [featurize(g, computer, spec) for g in graphs]
    dev_instances = None
    if args.dev:
        dev_graphs = _build_graphs(dataio.read_candidates(args.dev), GraphConfig())
        if lattice_mode:
            dev_instances = make_lattice_instances(dev_graphs, computer, spec)
        else:
            dev_instances = [featurize(g, computer, spec) for g in dev_graphs]
    result = train(instances, cfg, dev_instances, feature_fingerprint=spec.fingerprint())
    save_model(result.model, args.out)
    if args.log:
        rows = [
            dataio._dump(
                {
                    "epoch": r.epoch,
                    "mean_loss": r.mean_loss,
                    "n_updates": r.n_updates,
                    "dev_wpt_f": r.dev_wpt_f,
                    "dev_wp3t_f": r.dev_wp3t_f,
                }
            )
            for r in result.history
        ]
        dataio._atomic_write(Path(args.log), "\n".join(rows) + "\n")
    dataio.write_manifest(
        Path(args.out).with_suffix(".manifest.json"),
        command="train",
        variant=cfg.variant,
        seed=cfg.seed,
        version=VERSION,
        epochs_run=len(result.history),
        skipped=result.skipped,
        config={
            "learning_rate": cfg.learning_rate,
            "epochs": cfg.epochs,
            "hidden_size": cfg.hidden_size,
            "beam": cfg.beam,
            "patience": cfg.patience,
        },
        feature_fingerprint=spec.fingerprint(),
    )
    log.info("trained %s model -> %s", cfg.variant, args.out)
    return EXIT_OK


def cmd_infer(args) -> int:
    computer, spec = _load_pipeline(args.stats, args.featspec)
    model = load_model(args.model, expect_fingerprint=spec.fingerprint())
    spaces = dataio.read_candidates(args.candidates)
    gcfg = GraphConfig()
    prune_k = float(args.prune_k) if args.prune_k is not None else np.inf
    lattice_mode = args.variant in ("lattice", "lattice_beam")
    edges_before = 0
    edges_after = 0

    def decode_one(cs):
        nonlocal edges_before, edges_after
        g = build_graph(cs, gcfg)
        edges_before += g.edge_count()
        if np.isfinite(prune_k):
            g = prune_edges(g, prune_k)
        edges_after += g.edge_count()
        if lattice_mode:
            inst = make_lattice_instances([g], computer, spec)[0]
            e = energy_matrix(model, inst.src, inst.dst, inst.graph.adjacency)
            pred = lattice_decode(inst.graph, e)
            nodes = [inst.graph.nodes[i] for i in pred.node_ids]
        else:
            inst = featurize(g, computer, spec)
            e = energy_matrix(model, inst.src, inst.dst, g.adjacency)
            if args.variant == "tree":
                pred, _ = steiner_tree_inference(g, e)
            else:
                pred, _ = greedy_inference(g, e)
            nodes = [g.nodes[i] for i in pred.node_ids]
        return (cs.sentence_id, pred, nodes)

    rows = []
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(decode_one, spaces))
    else:
        rows = [decode_one(cs) for cs in spaces]
    for sid, pred, _ in rows:
        if not np.isfinite(pred.energy):
            raise FloatingPointError(f"non-finite prediction energy on {sid}")
    dataio.write_predictions(rows, args.out)
    dataio.write_manifest(
        Path(args.out).with_suffix(".manifest.json"),
        command="infer",
        variant=args.variant,
        version=VERSION,
        prune_k=None if not np.isfinite(prune_k) else prune_k,
        edges_before_prune=edges_before,
        edges_after_prune=edges_after,
        workers=args.workers,
        kernel=kernels.IMPLEMENTATION,
    )
    log.info(
        "decoded %d sentences (%d edges before prune, %d after) -> %s",
        len(rows), edges_before, edges_after, args.out,
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    preds = dataio.read_predictions(args.pred)
    corpus = dataio.read_corpus(args.gold)
    golds = {s.sentence_id: s.segments for s in corpus.sentences}
    report = evaluation.score(preds, golds, args.task)
    print(report.summary())
    payload = {
        "task": report.task,
        "macro_p": report.macro_p,
        "macro_r": report.macro_r,
        "macro_f": report.macro_f,
        "pm": report.pm,
        "n_sentences": len(report.per_sentence),
    }
    if args.group:
        rows = evaluation.grouped_report(preds, golds, args.group, args.task)
        print(evaluation.format_grouped(rows, args.group))
        payload["grouped"] = {"grouping": args.group, "rows": rows}
    if args.out:
        dataio._atomic_write(Path(args.out), json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="cliqueseg", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate the synthetic benchmark")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--lemmas", type=int, default=200)
    sp.add_argument("--n-train", type=int, default=500)
    sp.add_argument("--n-dev", type=int, default=100)
    sp.add_argument("--n-test", type=int, default=100)
    sp.add_argument("--syncretism", type=float, default=0.2)
    sp.add_argument("--homonymy", type=float, default=0.1)
    sp.add_argument("--min-words", type=int, default=3)
    sp.add_argument("--max-words", type=int, default=12)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("stats", help="build co-occurrence statistics")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--schema", default="synth", choices=["synth", "sanskrit"])
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("featgen", help="select and write the feature spec")
    sp.add_argument("--stats", required=True)
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--pairs", type=int, default=10_000)
    sp.add_argument("--min-samples", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--schema-hint", default="synth")
    sp.set_defaults(func=cmd_featgen)

    sp = sub.add_parser("train", help="train an energy model")
    sp.add_argument("--variant", default="clique",
                    choices=["clique", "tree", "lattice", "lattice_beam"])
    sp.add_argument("--stats", required=True)
    sp.add_argument("--featspec", required=True)
    sp.add_argument("--train", required=True)
    sp.add_argument("--dev")
    sp.add_argument("--out", required=True)
    sp.add_argument("--log")
    sp.add_argument("--epochs", type=int, default=30)
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--hidden", type=int, default=50)
    sp.add_argument("--beam", type=int, default=128)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--patience", type=int, default=5)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("infer", help="decode a candidate-space file")
    sp.add_argument("--variant", default="clique",
                    choices=["clique", "tree", "lattice"])
    sp.add_argument("--model", required=True)
    sp.add_argument("--stats", required=True)
    sp.add_argument("--featspec", required=True)
    sp.add_argument("--candidates", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--prune-k", type=float, default=None)
    sp.add_argument("--workers", type=int, default=default_workers())
    sp.set_defaults(func=cmd_infer)

    sp = sub.add_parser("eval", help="score predictions against gold")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--gold", required=True, help="gold corpus jsonl")
    sp.add_argument("--task", default="wpt", choices=["wpt", "wp3t"])
    sp.add_argument("--group", choices=["gold_word_count", "coarse_pos"])
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (dataio.DataError, FileNotFoundError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except (FloatingPointError, ArithmeticError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
