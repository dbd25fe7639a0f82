"""End-to-end orchestration: train, tune, predict, cluster, score.

A run is fully determined by its config and seed; artifacts (reports,
checkpoints, cluster files) are written with canonical ordering so two
identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from evlink.cluster import (adjacency_from_decisions, baseline_adjacency,
                            connected_components, gold_clustering,
                            write_clusterings)
from evlink.corpus import Corpus, Document, lemma_match, load_corpus
from evlink.embeddings import EmbeddingTable, read_embeddings, require_coverage
from evlink.errors import ConfigError, PipelineError
from evlink.metrics import (MetricReport, aggregate_corpus, error_analysis,
                            score_document)
from evlink.nn import TrainConfig, derive_rng
from evlink.pairs import (MentionPair, PairStrategy, downsample_negatives,
                          generate_pairs, labeled_pairs)
from evlink.scorers import (CosineThresholdModel, CosineTransformModel,
                            LogisticRegressorModel, cosine_scores,
                            load_checkpoint, regressor_decide_batch,
                            save_checkpoint, train_cosine_transform,
                            train_logistic_regressor)

log = logging.getLogger(__name__)


class Method(str, Enum):
    COSINE = "cosine"
    REGRESSOR = "regressor"
    REGRESSOR_TYPE = "regressor_type"
    REGRESSOR_LEMMA = "regressor_lemma"
    REGRESSOR_COSINE = "regressor_cosine"
    BASELINE_SINGLETONS = "baseline_singletons"
    BASELINE_TYPE = "baseline_type"
    BASELINE_LEMMA = "baseline_lemma"
    BASELINE_LEMMA_TYPE = "baseline_lemma_type"


METHOD_STRATEGY = {
    Method.COSINE: PairStrategy.ALL_PRECEDING,
    Method.REGRESSOR: PairStrategy.ALL_PRECEDING,
    Method.REGRESSOR_TYPE: PairStrategy.SAME_TYPE,
    Method.REGRESSOR_LEMMA: PairStrategy.LEMMA_MATCH,
    Method.REGRESSOR_COSINE: PairStrategy.ALL_PRECEDING,
}

BASELINE_METHOD_RULES = {
    Method.BASELINE_SINGLETONS: "singletons",
    Method.BASELINE_TYPE: "type",
    Method.BASELINE_LEMMA: "lemma",
    Method.BASELINE_LEMMA_TYPE: "lemma_and_type",
}


def default_threshold_grid() -> list[float]:
    """0.00 to 1.00 in steps of 0.01."""
    return [round(0.01 * i, 2) for i in range(101)]


@dataclass
class PipelineConfig:
    method: Method = Method.COSINE
    train_corpus: str | None = None
    dev_corpus: str | None = None
    test_corpus: str | None = None
    train_embeddings: str | None = None
    dev_embeddings: str | None = None
    test_embeddings: str | None = None
    transform_checkpoint: str | None = None
    epochs: int = 50
    lr: float = 5e-6
    batch_size: int | None = None
    weight_decay: float = 0.01
    shuffle: bool = True
    seed: int = 0
    threshold_grid: list[float] = field(default_factory=default_threshold_grid)
    mode: str = "micro"
    out: str = "run_out"
    expected_dim: int | None = None
    negative_downsample: float | None = None

    def strategy(self) -> PairStrategy:
        return METHOD_STRATEGY.get(self.method, PairStrategy.ALL_PRECEDING)

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, lr=self.lr, seed=self.seed,
                           shuffle=self.shuffle, batch_size=self.batch_size,
                           weight_decay=self.weight_decay)

    def validate(self) -> None:
        if self.mode not in ("micro", "macro"):
            raise ConfigError(f"mode must be micro or macro, not '{self.mode}'")
        if not self.test_corpus or not self.test_embeddings:
            if self.method not in BASELINE_METHOD_RULES or not self.test_corpus:
                raise ConfigError("test_corpus is required"
                                  + ("" if self.method in BASELINE_METHOD_RULES
                                     else " along with test_embeddings"))
        if self.method is Method.COSINE:
            if not self.dev_corpus or not self.dev_embeddings:
                raise ConfigError("cosine method needs dev_corpus and "
                                  "dev_embeddings for threshold tuning")
            if not self.threshold_grid:
                raise ConfigError("threshold grid is empty")
            if any(not 0.0 <= t <= 1.0 for t in self.threshold_grid):
                raise ConfigError("threshold grid values must lie in [0, 1]")
        if self.method in (Method.REGRESSOR, Method.REGRESSOR_TYPE,
                           Method.REGRESSOR_LEMMA, Method.REGRESSOR_COSINE):
            missing = [k for k in ("train_corpus", "train_embeddings",
                                   "dev_corpus", "dev_embeddings")
                       if getattr(self, k) is None]
            if missing:
                raise ConfigError(
                    f"{self.method.value} needs {', '.join(missing)}")
        if self.method is Method.REGRESSOR_COSINE and \
                not self.transform_checkpoint:
            raise ConfigError("regressor_cosine needs transform_checkpoint")
        for key in ("train_corpus", "dev_corpus", "test_corpus",
                    "train_embeddings", "dev_embeddings", "test_embeddings",
                    "transform_checkpoint"):
            path = getattr(self, key)
            if path is not None and not os.path.exists(path):
                raise ConfigError(f"{key}: no such file '{path}'")


_BOOL_VALUES = {"true": True, "1": True, "yes": True,
                "false": False, "0": False, "no": False}


def parse_config_text(text: str) -> dict[str, str]:
    """Flat 'key = value' lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_grid(spec: str) -> list[float]:
    """Either 'start:stop:step' or a comma-separated list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad threshold_grid '{spec}'")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("threshold_grid step must be positive")
        n = int(round((stop - start) / step))
        # round away accumulated float error so grid values print cleanly
        return [round(start + i * step, 10) for i in range(n + 1)]
    return [float(p) for p in spec.split(",") if p.strip()]


def config_from_file(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        raw = parse_config_text(fh.read())
    return config_from_dict(raw)


def config_from_dict(raw: dict[str, str]) -> PipelineConfig:
    cfg = PipelineConfig()
    for key, value in raw.items():
        if key == "method":
            try:
                cfg.method = Method(value)
            except ValueError:
                raise ConfigError(f"unknown method '{value}'") from None
        elif key in ("train_corpus", "dev_corpus", "test_corpus",
                     "train_embeddings", "dev_embeddings", "test_embeddings",
                     "transform_checkpoint", "out", "mode"):
            setattr(cfg, key, value)
        elif key == "epochs":
            cfg.epochs = int(value)
        elif key == "seed":
            cfg.seed = int(value)
        elif key == "expected_dim":
            cfg.expected_dim = int(value)
        elif key == "batch_size":
            cfg.batch_size = int(value)
        elif key == "lr":
            cfg.lr = float(value)
        elif key == "weight_decay":
            cfg.weight_decay = float(value)
        elif key == "negative_downsample":
            cfg.negative_downsample = float(value)
        elif key == "shuffle":
            if value.lower() not in _BOOL_VALUES:
                raise ConfigError(f"shuffle: bad boolean '{value}'")
            cfg.shuffle = _BOOL_VALUES[value.lower()]
        elif key == "threshold_grid":
            cfg.threshold_grid = _parse_grid(value)
        else:
            raise ConfigError(f"unknown config key '{key}'")
    return cfg


def pick_best_threshold(trace: list[tuple[float, float]]) -> float:
    """Argmax of (threshold, score) pairs; ties go to the smallest threshold."""
    if not trace:
        raise ConfigError("empty threshold trace")
    best_t, best_s = trace[0]
    for t, s in trace[1:]:
        if s > best_s or (s == best_s and t < best_t):
            best_t, best_s = t, s
    return best_t


def tune_threshold(transform: CosineTransformModel | None,
                   dev_corpus: Corpus, dev_table: EmbeddingTable,
                   grid: list[float], mode: str = "micro"
                   ) -> tuple[float, list[tuple[float, float]]]:
    """Pick the threshold maximizing the dev average of B3 and MUC F1.

    Pair cosines are computed once; every grid value then re-clusters and
    re-scores. The trace holds every (threshold, average F1) visited.
    """
    doc_scores = []
    for doc in dev_corpus:
        pairs = generate_pairs(doc, PairStrategy.ALL_PRECEDING)
        if pairs:
            scorer = CosineThresholdModel(0.0, transform)
            cos, valid = cosine_scores(
                scorer,
                dev_table.matrix([p.first for p in pairs]),
                dev_table.matrix([p.second for p in pairs]))
        else:
            cos = np.zeros(0)
            valid = np.zeros(0, dtype=bool)
        doc_scores.append((doc, pairs, cos, valid))

    trace: list[tuple[float, float]] = []
    for threshold in grid:
        per_doc = []
        for doc, pairs, cos, valid in doc_scores:
            decisions = {p.key: bool(c > threshold) and bool(ok)
                         for p, c, ok in zip(pairs, cos, valid)}
            sys_clusters = connected_components(
                adjacency_from_decisions(doc, decisions))
            per_doc.append(score_document(gold_clustering(doc), sys_clusters))
        report = aggregate_corpus(per_doc, mode=mode)
        trace.append((threshold, 0.5 * (report.b3.f1 + report.muc.f1)))
    return pick_best_threshold(trace), trace


@dataclass
class LoadedModels:
    cosine: CosineThresholdModel | None = None
    regressor: LogisticRegressorModel | None = None


def predict_pairs(method: Method, models: LoadedModels, doc: Document,
                  table: EmbeddingTable,
                  strategy: PairStrategy) -> dict[tuple[str, str], bool]:
    """Boolean decision for every pair the strategy generates.

    Pairs the strategy filters out are absent from the map and default to
    non-coreferent downstream.
    """
    expected = METHOD_STRATEGY.get(method)
    if expected is not None and strategy is not expected:
        raise ConfigError(
            f"method {method.value} pairs with strategy {expected.value}, "
            f"not {strategy.value}")
    pairs = generate_pairs(doc, strategy)
    if not pairs:
        return {}
    if method in BASELINE_METHOD_RULES:
        rule = BASELINE_METHOD_RULES[method]
        adj = baseline_adjacency(doc, rule)
        index = {m: i for i, m in enumerate(adj.mention_ids)}
        return {p.key: bool(adj.matrix[index[p.first], index[p.second]])
                for p in pairs}
    e1 = table.matrix([p.first for p in pairs])
    e2 = table.matrix([p.second for p in pairs])
    if method is Method.COSINE:
        if models.cosine is None:
            raise ConfigError("cosine method requires a cosine model")
        cos, valid = cosine_scores(models.cosine, e1, e2)
        decisions = (cos > models.cosine.threshold) & valid
        return {p.key: bool(d) for p, d in zip(pairs, decisions)}
    if models.regressor is None:
        raise ConfigError(f"{method.value} requires a trained regressor")
    feats = models.regressor.features(e1, e2)
    _, decisions = regressor_decide_batch(models.regressor, feats)
    return {p.key: bool(d) for p, d in zip(pairs, decisions)}


@dataclass
class RunResult:
    report: MetricReport
    out_dir: str
    files: dict[str, str]
    tuned_threshold: float | None = None
    best_epoch: int | None = None


def _json_dump(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _collect_training_pairs(corpus: Corpus, strategy: PairStrategy,
                            config: PipelineConfig) -> list[MentionPair]:
    pairs: list[MentionPair] = []
    for doc in corpus:
        pairs.extend(labeled_pairs(doc, gold_clustering(doc), strategy))
    if config.negative_downsample is not None:
        pairs = downsample_negatives(pairs, config.negative_downsample,
                                     derive_rng(config.seed, "downsample"))
    return pairs


def run_pipeline(config: PipelineConfig) -> RunResult:
    """Execute the configured method end to end and write all artifacts."""
    config.validate()
    os.makedirs(config.out, exist_ok=True)
    files: dict[str, str] = {}

    def stage(name):
        def wrap(exc):
            return PipelineError(f"stage '{name}' failed: {exc}")
        return wrap

    # -- load and validate coverage before any training -----------------
    try:
        test_corpus = load_corpus(config.test_corpus, split_name="test")
        corpora = {"test": test_corpus}
        tables: dict[str, EmbeddingTable] = {}
        needs_vectors = config.method not in BASELINE_METHOD_RULES
        if needs_vectors:
            tables["test"] = read_embeddings(config.test_embeddings,
                                             config.expected_dim)
        for split in ("train", "dev"):
            cpath = getattr(config, f"{split}_corpus")
            epath = getattr(config, f"{split}_embeddings")
            if cpath:
                corpora[split] = load_corpus(cpath, split_name=split)
            if epath and needs_vectors:
                tables[split] = read_embeddings(epath, config.expected_dim)
        for split, corpus in corpora.items():
            if split in tables:
                require_coverage(corpus, tables[split], what=f"{split} split")
    except Exception as exc:
        raise stage("validate")(exc) from exc

    strategy = config.strategy()
    models = LoadedModels()
    tuned_threshold = None
    best_epoch = None

    # -- train / tune ----------------------------------------------------
    if config.method is Method.COSINE:
        transform = None
        if config.train_corpus and config.train_embeddings:
            try:
                train_pairs = _collect_training_pairs(
                    corpora["train"], PairStrategy.ALL_PRECEDING, config)
                transform, trace = train_cosine_transform(
                    train_pairs, tables["train"], config.train_config())
                files["transform_trace"] = os.path.join(
                    config.out, "transform_trace.json")
                _json_dump([{"epoch": t.epoch, "loss": t.loss,
                             **t.diagnostics.to_json_dict()} for t in trace],
                           files["transform_trace"])
            except Exception as exc:
                raise stage("train-cosine")(exc) from exc
        try:
            tuned_threshold, tune_trace = tune_threshold(
                transform, corpora["dev"], tables["dev"],
                config.threshold_grid, mode=config.mode)
            models.cosine = CosineThresholdModel(tuned_threshold, transform)
            files["threshold_trace"] = os.path.join(config.out,
                                                    "threshold_trace.json")
            _json_dump({"best_threshold": tuned_threshold,
                        "trace": [{"threshold": t, "avg_f1": s}
                                  for t, s in tune_trace]},
                       files["threshold_trace"])
        except Exception as exc:
            raise stage("tune-threshold")(exc) from exc
    elif config.method in (Method.REGRESSOR, Method.REGRESSOR_TYPE,
                           Method.REGRESSOR_LEMMA, Method.REGRESSOR_COSINE):
        frozen = None
        if config.method is Method.REGRESSOR_COSINE:
            try:
                loaded = load_checkpoint(config.transform_checkpoint)
            except Exception as exc:
                raise stage("load-transform")(exc) from exc
            if isinstance(loaded, CosineThresholdModel):
                loaded = loaded.transform
            if not isinstance(loaded, CosineTransformModel):
                raise stage("load-transform")(
                    "checkpoint does not hold a cosine transform")
            frozen = loaded
        try:
            train_pairs = _collect_training_pairs(corpora["train"], strategy,
                                                  config)
            models.regressor, history = train_logistic_regressor(
                train_pairs, tables["train"], corpora["dev"], tables["dev"],
                config.train_config(), strategy=strategy,
                frozen_transform=frozen, mode=config.mode)
            best_epoch = history.best_epoch
            files["training_history"] = os.path.join(config.out,
                                                     "training_history.json")
            _json_dump({"best_epoch": history.best_epoch,
                        "epochs": [{"epoch": e.epoch,
                                    "train_loss": e.train_loss,
                                    "dev_b3_f1": e.dev_b3_f1,
                                    "dev_muc_f1": e.dev_muc_f1,
                                    "dev_avg_f1": e.dev_avg_f1}
                                   for e in history.epochs]},
                       files["training_history"])
        except Exception as exc:
            raise stage("train-regressor")(exc) from exc

    # -- predict + cluster on test ----------------------------------------
    try:
        clusterings = []
        decisions_dump = []
        for doc in test_corpus:
            if config.method in BASELINE_METHOD_RULES:
                adj = baseline_adjacency(doc,
                                         BASELINE_METHOD_RULES[config.method])
            else:
                decisions = predict_pairs(config.method, models, doc,
                                          tables["test"], strategy)
                for (first, second), flag in sorted(decisions.items()):
                    decisions_dump.append({"doc_id": doc.doc_id,
                                           "first": first, "second": second,
                                           "decision": bool(flag)})
                adj = adjacency_from_decisions(doc, decisions)
            clusterings.append(connected_components(adj))
    except Exception as exc:
        raise stage("predict")(exc) from exc

    # -- score -------------------------------------------------------------
    try:
        per_doc = [score_document(gold_clustering(doc), sys)
                   for doc, sys in zip(test_corpus, clusterings)]
        report = aggregate_corpus(per_doc, mode=config.mode)
    except Exception as exc:
        raise stage("score")(exc) from exc

    # -- artifacts -----------------------------------------------------------
    try:
        files["system_clusters"] = os.path.join(config.out,
                                                "system_clusters.jsonl")
        write_clusterings(clusterings, test_corpus, files["system_clusters"])
        if config.method not in BASELINE_METHOD_RULES:
            files["decisions"] = os.path.join(config.out, "decisions.jsonl")
            with open(files["decisions"], "w", encoding="utf-8") as fh:
                for rec in decisions_dump:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
        model_to_save = models.cosine or models.regressor
        if model_to_save is not None:
            files["checkpoint"] = os.path.join(config.out, "checkpoint.json")
            save_checkpoint(model_to_save, files["checkpoint"])
        files["report_json"] = os.path.join(config.out, "report.json")
        _json_dump(report.to_json_dict(), files["report_json"])
        files["report_txt"] = os.path.join(config.out, "report.txt")
        with open(files["report_txt"], "w", encoding="utf-8") as fh:
            fh.write(report.format_table() + "\n")
    except Exception as exc:
        raise stage("write-artifacts")(exc) from exc

    return RunResult(report=report, out_dir=config.out, files=files,
                     tuned_threshold=tuned_threshold, best_epoch=best_epoch)


def pair_error_analysis(corpus: Corpus, decisions_by_doc, strategy):
    """Bundle (label, prediction, same-lemma) triples for the error table."""
    lemma_of = {m.mention_id: m.head_lemma
                for doc in corpus for m in doc.mentions}
    items = []
    for doc in corpus:
        decisions = decisions_by_doc.get(doc.doc_id, {})
        for pair in labeled_pairs(doc, gold_clustering(doc), strategy):
            predicted = decisions.get(pair.key, False)
            same = lemma_match(lemma_of[pair.first], lemma_of[pair.second])
            items.append((pair.label, predicted, same))
    return error_analysis(items)
