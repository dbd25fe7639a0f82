"""Command-line interface.

Exit codes: 0 success, 1 validation failure (bad inputs or config),
2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from evlink.cluster import (adjacency_from_decisions, connected_components,
                            gold_clustering, read_clusterings,
                            write_clusterings)
from evlink.corpus import load_corpus
from evlink.embeddings import coverage_gaps, read_embeddings, write_embeddings
from evlink.errors import EvlinkError, InputError
from evlink.metrics import aggregate_corpus, score_document
from evlink.pairs import PairStrategy, labeled_pairs
from evlink.pipeline import (LoadedModels, Method, PipelineConfig,
                             config_from_file, predict_pairs,
                             run_pipeline, tune_threshold)
from evlink.scorers import (CosineThresholdModel, CosineTransformModel,
                            LogisticRegressorModel, compute_diagnostics,
                            load_checkpoint, save_checkpoint,
                            train_cosine_transform, train_logistic_regressor)
from evlink.synth import SynthConfig, generate


def _load_config(args) -> PipelineConfig:
    cfg = config_from_file(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "mode", None) is not None:
        cfg.mode = args.mode
    if getattr(args, "out", None) is not None:
        cfg.out = args.out
    return cfg


def cmd_validate(args) -> int:
    corpus = load_corpus(args.corpus)
    n_docs = len(corpus)
    n_mentions = corpus.n_mentions()
    missing_lemma = sum(1 for d in corpus for m in d.mentions
                        if not m.head_lemma)
    missing_type = sum(1 for d in corpus for m in d.mentions
                       if not m.event_type)
    print(f"corpus: {n_docs} documents, {n_mentions} mentions")
    print(f"mentions without head_lemma: {missing_lemma}")
    print(f"mentions without event_type: {missing_type}")
    if args.embeddings:
        table = read_embeddings(args.embeddings, args.expected_dim)
        print(f"embeddings: {len(table)} vectors, dim {table.dim}")
        missing = coverage_gaps(corpus, table)
        if missing:
            shown = ", ".join(missing[:10])
            print(f"COVERAGE FAILURE: {len(missing)} mentions lack vectors: "
                  f"{shown}")
            return 1
        print("coverage: complete")
    return 0


def cmd_pairs(args) -> int:
    corpus = load_corpus(args.corpus)
    strategy = PairStrategy(args.strategy)
    with open(args.out, "w", encoding="utf-8") as fh:
        for doc in corpus:
            for pair in labeled_pairs(doc, gold_clustering(doc), strategy):
                fh.write(json.dumps(
                    {"first": pair.first, "second": pair.second,
                     "label": pair.label}) + "\n")
    print(f"wrote pairs for {len(corpus)} documents to {args.out}")
    return 0


def cmd_train_cosine(args) -> int:
    cfg = _load_config(args)
    if not cfg.train_corpus or not cfg.train_embeddings:
        print("config needs train_corpus and train_embeddings",
              file=sys.stderr)
        return 1
    corpus = load_corpus(cfg.train_corpus, split_name="train")
    table = read_embeddings(cfg.train_embeddings, cfg.expected_dim)
    pairs = []
    for doc in corpus:
        pairs.extend(labeled_pairs(doc, gold_clustering(doc),
                                   PairStrategy.ALL_PRECEDING))
    model, trace = train_cosine_transform(pairs, table, cfg.train_config())
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "cosine_transform.json")
    save_checkpoint(model, path)
    first, last = trace[0].diagnostics, trace[-1].diagnostics
    print(f"trained transform on {len(pairs)} pairs, {cfg.epochs} epochs")
    print(f"cos_delta: {first.cos_delta:.4f} -> {last.cos_delta:.4f}")
    print(f"checkpoint: {path}")
    return 0


def cmd_train_regressor(args) -> int:
    cfg = _load_config(args)
    for key in ("train_corpus", "train_embeddings", "dev_corpus",
                "dev_embeddings"):
        if getattr(cfg, key) is None:
            print(f"config needs {key}", file=sys.stderr)
            return 1
    strategy = cfg.strategy()
    train_corpus = load_corpus(cfg.train_corpus, split_name="train")
    train_table = read_embeddings(cfg.train_embeddings, cfg.expected_dim)
    dev_corpus = load_corpus(cfg.dev_corpus, split_name="dev")
    dev_table = read_embeddings(cfg.dev_embeddings, cfg.expected_dim)
    frozen = None
    if cfg.transform_checkpoint:
        loaded = load_checkpoint(cfg.transform_checkpoint)
        if isinstance(loaded, CosineThresholdModel):
            loaded = loaded.transform
        frozen = loaded
    pairs = []
    for doc in train_corpus:
        pairs.extend(labeled_pairs(doc, gold_clustering(doc), strategy))
    model, history = train_logistic_regressor(
        pairs, train_table, dev_corpus, dev_table, cfg.train_config(),
        strategy=strategy, frozen_transform=frozen, mode=cfg.mode)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "regressor.json")
    save_checkpoint(model, path)
    best = history.best
    print(f"trained regressor on {len(pairs)} pairs, {cfg.epochs} epochs")
    print(f"best epoch {best.epoch}: dev B3 {best.dev_b3_f1:.4f}, "
          f"MUC {best.dev_muc_f1:.4f}, avg {best.dev_avg_f1:.4f}")
    print(f"checkpoint: {path}")
    return 0


def cmd_tune_threshold(args) -> int:
    cfg = _load_config(args)
    if not cfg.dev_corpus or not cfg.dev_embeddings:
        print("config needs dev_corpus and dev_embeddings", file=sys.stderr)
        return 1
    dev_corpus = load_corpus(cfg.dev_corpus, split_name="dev")
    dev_table = read_embeddings(cfg.dev_embeddings, cfg.expected_dim)
    transform = None
    if args.transform:
        loaded = load_checkpoint(args.transform)
        if isinstance(loaded, CosineThresholdModel):
            loaded = loaded.transform
        transform = loaded
    best, trace = tune_threshold(transform, dev_corpus, dev_table,
                                 cfg.threshold_grid, mode=cfg.mode)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "cosine_model.json")
    save_checkpoint(CosineThresholdModel(best, transform), path)
    print(f"best threshold: {best:.2f}")
    print(f"checkpoint: {path}")
    return 0


def cmd_predict(args) -> int:
    corpus = load_corpus(args.corpus)
    table = read_embeddings(args.embeddings)
    method = Method(args.method)
    models = LoadedModels()
    if args.checkpoint:
        loaded = load_checkpoint(args.checkpoint)
        if isinstance(loaded, CosineThresholdModel):
            models.cosine = loaded
        elif isinstance(loaded, LogisticRegressorModel):
            models.regressor = loaded
        elif isinstance(loaded, CosineTransformModel):
            print("checkpoint holds a bare transform; tune a threshold first",
                  file=sys.stderr)
            return 1
    from evlink.pipeline import METHOD_STRATEGY
    strategy = METHOD_STRATEGY.get(method, PairStrategy.ALL_PRECEDING)
    with open(args.out, "w", encoding="utf-8") as fh:
        for doc in corpus:
            decisions = predict_pairs(method, models, doc, table, strategy)
            for (first, second), flag in sorted(decisions.items()):
                fh.write(json.dumps(
                    {"doc_id": doc.doc_id, "first": first, "second": second,
                     "decision": bool(flag)}, sort_keys=True) + "\n")
    print(f"wrote decisions to {args.out}")
    return 0


def cmd_cluster(args) -> int:
    corpus = load_corpus(args.corpus)
    by_doc: dict[str, dict] = {}
    with open(args.decisions, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            by_doc.setdefault(rec["doc_id"], {})[
                (rec["first"], rec["second"])] = bool(rec["decision"])
    clusterings = []
    for doc in corpus:
        adj = adjacency_from_decisions(doc, by_doc.get(doc.doc_id, {}))
        clusterings.append(connected_components(adj))
    write_clusterings(clusterings, corpus, args.out)
    print(f"wrote clusters for {len(corpus)} documents to {args.out}")
    return 0


def cmd_score(args) -> int:
    corpus = load_corpus(args.gold)
    system = {c.doc_id: c for c in read_clusterings(args.system)}
    per_doc = []
    for doc in corpus:
        if doc.doc_id not in system:
            print(f"system output missing document '{doc.doc_id}'",
                  file=sys.stderr)
            return 1
        per_doc.append(score_document(gold_clustering(doc),
                                      system[doc.doc_id]))
    report = aggregate_corpus(per_doc, mode=args.mode)
    print(report.format_table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")
        print(f"report: {args.out}")
    return 0


def cmd_report(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        raw = json.load(fh)
    rows = [("B3", raw["b3"]), ("MUC", raw["muc"]),
            ("CEAF-E", raw["ceaf_e"]), ("BLANC", raw["blanc"])]
    print(f"{'metric':<8} {'P':>8} {'R':>8} {'F1':>8}")
    for name, cell in rows:
        print(f"{name:<8} {100 * cell['p']:8.2f} {100 * cell['r']:8.2f} "
              f"{100 * cell['f']:8.2f}")
    print(f"{'CoNLL':<8} {'':>8} {'':>8} {100 * raw['conll_f1']:8.2f}")
    print(f"aggregation: {raw['mode']} over {len(raw['per_doc'])} documents")
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    result = run_pipeline(cfg)
    print(result.report.format_table())
    if result.tuned_threshold is not None:
        print(f"tuned threshold: {result.tuned_threshold:.2f}")
    if result.best_epoch is not None:
        print(f"best epoch: {result.best_epoch}")
    print(f"artifacts in {result.out_dir}")
    return 0


def cmd_synth(args) -> int:
    cfg = SynthConfig(n_docs=args.docs, dim=args.dim, seed=args.seed,
                      sep_ratio=args.sep_ratio)
    data = generate(cfg)
    os.makedirs(args.out, exist_ok=True)
    from evlink.corpus import save_corpus
    for split, (corpus, table) in data.items():
        cpath = os.path.join(args.out, f"{split}.corpus.json")
        epath = os.path.join(args.out, f"{split}.emb.jsonl")
        save_corpus(corpus, cpath)
        write_embeddings(table, epath)
        print(f"{split}: {len(corpus)} documents, {corpus.n_mentions()} "
              f"mentions -> {cpath}, {epath}")
    return 0


def cmd_diagnostics(args) -> int:
    corpus = load_corpus(args.corpus)
    table = read_embeddings(args.embeddings)
    transform = None
    if args.transform:
        loaded = load_checkpoint(args.transform)
        if isinstance(loaded, CosineThresholdModel):
            loaded = loaded.transform
        transform = loaded
    pairs = []
    for doc in corpus:
        pairs.extend(labeled_pairs(doc, gold_clustering(doc),
                                   PairStrategy(args.strategy)))
    diag = compute_diagnostics(pairs, table, transform)
    payload = diag.to_json_dict()
    payload["encoder"] = table.encoder
    print(json.dumps(payload, sort_keys=True, indent=1))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
    return 0


def cmd_bench(args) -> int:
    from evlink.bench import run_benchmark
    run_benchmark(repeats=args.repeats)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evlink",
        description="Within-document event coreference pipeline")
    parser.add_argument("--verbose", action="store_true",
                        help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a corpus and its embedding "
                                        "coverage")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--expected-dim", type=int, dest="expected_dim")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("pairs", help="dump labeled mention pairs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strategy", default="all_preceding",
                   choices=[s.value for s in PairStrategy])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pairs)

    for name, fn in (("train-cosine", cmd_train_cosine),
                     ("train-regressor", cmd_train_regressor),
                     ("run", cmd_run)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--mode", choices=["micro", "macro"])
        p.add_argument("--out")
        p.set_defaults(func=fn)

    p = sub.add_parser("tune-threshold", help="grid-search the cosine "
                                              "threshold on dev")
    p.add_argument("--config", required=True)
    p.add_argument("--transform", help="cosine transform checkpoint")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=["micro", "macro"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_tune_threshold)

    p = sub.add_parser("predict", help="pair decisions for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--method", required=True,
                   choices=[m.value for m in Method])
    p.add_argument("--checkpoint")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cluster", help="connected components from decisions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--decisions", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("score", help="score system clusters against gold")
    p.add_argument("--gold", required=True, help="gold corpus file")
    p.add_argument("--system", required=True, help="system clusters file")
    p.add_argument("--mode", default="micro", choices=["micro", "macro"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="render a report JSON as a table")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--docs", type=int, default=200)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--sep-ratio", type=float, default=5.0, dest="sep_ratio")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("diagnostics", help="cos+/cos-/cos-delta of an "
                                           "embedding file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--transform")
    p.add_argument("--strategy", default="all_preceding",
                   choices=[s.value for s in PairStrategy])
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnostics)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EvlinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
