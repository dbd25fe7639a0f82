"""Pairwise coreference scorers and their training loops.

Three scorers share the embedding inputs:

* a cosine threshold on the raw vectors,
* the same threshold after a learned linear transform of the vectors
  (trained so coreferent cosines approach +1 and others -1),
* a two-layer pair regressor over the joint representation
  [e1, e2, e1*e2], optionally reading through a frozen transform.

Checkpoints are JSON with exact float32 round-trip.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from evlink import kernels
from evlink.cluster import adjacency_from_decisions, connected_components, \
    gold_clustering
from evlink.corpus import Corpus
from evlink.embeddings import EmbeddingTable
from evlink.errors import (CheckpointError, EmptyDiagnosticsError,
                           TrainingError, ValidationError)
from evlink.metrics import aggregate_corpus, score_document
from evlink.nn import (Activation, AdamWOptimizer, DenseLayer, TrainConfig,
                       backward, cosine_rows, derive_rng, forward,
                       mse_cosine_batch, nll_loss_batch)
from evlink.pairs import MentionPair, PairStrategy, joint_matrix, labeled_pairs

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "evlink-ckpt"
CHECKPOINT_VERSION = 1


class CosineTransformModel:
    """A shared square linear map applied to both members of a pair.

    Initialized to the exact identity, so an untrained model is a no-op on
    every score and decision.
    """

    def __init__(self, layer: DenseLayer):
        if layer.in_dim != layer.out_dim:
            raise ValidationError("transform matrix must be square")
        if layer.activation is not Activation.IDENTITY:
            raise ValidationError("transform layer must be linear")
        self.layer = layer

    @classmethod
    def identity(cls, dim: int) -> "CosineTransformModel":
        return cls(DenseLayer.identity(dim))

    @property
    def dim(self) -> int:
        return self.layer.in_dim

    def transform(self, vectors: np.ndarray) -> np.ndarray:
        batch = np.ascontiguousarray(np.atleast_2d(vectors), dtype=np.float32)
        out = kernels.affine_fwd(batch, self.layer.weights, self.layer.bias)
        return out[0] if np.asarray(vectors).ndim == 1 else out

    def parameters(self) -> list[np.ndarray]:
        return [self.layer.weights, self.layer.bias]

    def checksum(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.layer.weights.tobytes())
        digest.update(self.layer.bias.tobytes())
        return digest.hexdigest()

    def copy(self) -> "CosineTransformModel":
        return CosineTransformModel(self.layer.copy())


class CosineThresholdModel:
    """Decide coreference by cosine similarity strictly above a threshold."""

    def __init__(self, threshold: float,
                 transform: CosineTransformModel | None = None):
        if not 0.0 <= threshold <= 1.0:
            raise ValidationError(
                f"threshold must be in [0, 1], got {threshold}")
        self.threshold = float(threshold)
        self.transform = transform


def cosine_scores(model: CosineThresholdModel, e1: np.ndarray,
                  e2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batch scores for pair rows; invalid (zero-vector) rows get NaN."""
    e1 = np.ascontiguousarray(np.atleast_2d(e1), dtype=np.float32)
    e2 = np.ascontiguousarray(np.atleast_2d(e2), dtype=np.float32)
    if model.transform is not None:
        e1 = model.transform.transform(e1)
        e2 = model.transform.transform(e2)
    cos, valid = cosine_rows(e1, e2, on_zero="nan")
    if not valid.all():
        log.warning("%d pair(s) with a zero vector treated as non-coreferent",
                    int((~valid).sum()))
    return cos, valid


def cosine_decide(model: CosineThresholdModel, e1, e2) -> tuple[float, bool]:
    """Score one pair and apply the strict threshold.

    A zero vector yields (nan, False): undefined similarity is treated as
    non-coreferent and logged.
    """
    cos, valid = cosine_scores(model, np.atleast_2d(e1), np.atleast_2d(e2))
    score = float(cos[0])
    if not valid[0]:
        return score, False
    return score, score > model.threshold


@dataclass(frozen=True)
class CosineDiagnostics:
    """Mean cosine of coreferent and of non-coreferent pairs."""

    cos_plus: float | None
    cos_minus: float | None
    n_positive: int
    n_negative: int

    @property
    def cos_delta(self) -> float | None:
        if self.cos_plus is None or self.cos_minus is None:
            return None
        return self.cos_plus - self.cos_minus

    def to_json_dict(self) -> dict:
        return {"cos_plus": self.cos_plus, "cos_minus": self.cos_minus,
                "cos_delta": self.cos_delta,
                "n_positive": self.n_positive, "n_negative": self.n_negative}


def compute_diagnostics(pairs: list[MentionPair], table: EmbeddingTable,
                        transform: CosineTransformModel | None = None
                        ) -> CosineDiagnostics:
    """Average cosine over labeled-coreferent and non-coreferent pairs.

    An identity transform leaves the values identical to no transform at
    all. Zero-vector pairs are skipped and logged.
    """
    if not pairs:
        raise EmptyDiagnosticsError("no pairs to diagnose")
    if any(p.label is None for p in pairs):
        raise ValidationError("diagnostics require labeled pairs")
    e1 = table.matrix([p.first for p in pairs])
    e2 = table.matrix([p.second for p in pairs])
    if transform is not None:
        e1 = transform.transform(e1)
        e2 = transform.transform(e2)
    cos, valid = cosine_rows(e1, e2, on_zero="nan")
    if not valid.all():
        log.warning("diagnostics skipped %d zero-vector pair(s)",
                    int((~valid).sum()))
    labels = np.array([bool(p.label) for p in pairs])
    pos = cos[labels & valid]
    neg = cos[~labels & valid]
    return CosineDiagnostics(
        cos_plus=float(pos.mean()) if pos.size else None,
        cos_minus=float(neg.mean()) if neg.size else None,
        n_positive=int(pos.size), n_negative=int(neg.size))


@dataclass
class TransformEpochStats:
    epoch: int
    loss: float
    diagnostics: CosineDiagnostics


def train_cosine_transform(pairs: list[MentionPair], table: EmbeddingTable,
                           config: TrainConfig
                           ) -> tuple[CosineTransformModel,
                                      list[TransformEpochStats]]:
    """Fit the shared linear map by squared error on pair cosines.

    Targets are +1 for coreferent pairs and -1 otherwise; weights start at
    the identity. One AdamW step per batch; the default batch is the whole
    pair set. Returns the final-epoch model and a per-epoch trace.
    """
    if not pairs:
        raise ValidationError("cannot train on an empty pair list")
    if any(p.label is None for p in pairs):
        raise ValidationError("training requires labeled pairs")
    e1_all = table.matrix([p.first for p in pairs])
    e2_all = table.matrix([p.second for p in pairs])
    target_all = np.array([1.0 if p.label else -1.0 for p in pairs])

    model = CosineTransformModel.identity(table.dim)
    weights, bias = model.layer.weights, model.layer.bias
    opt = AdamWOptimizer([weights, bias], lr=config.lr,
                         weight_decay=config.weight_decay)
    rng = derive_rng(config.seed, "shuffle")
    n = len(pairs)
    batch = config.batch_size or n
    trace: list[TransformEpochStats] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n) if (config.shuffle and batch < n) \
            else np.arange(n)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            t1 = kernels.affine_fwd(
                np.ascontiguousarray(e1_all[idx]), weights, bias)
            t2 = kernels.affine_fwd(
                np.ascontiguousarray(e2_all[idx]), weights, bias)
            loss, g1, g2 = mse_cosine_batch(t1, t2, target_all[idx])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch start {start}")
            _, dw1, db1 = kernels.affine_bwd(
                np.ascontiguousarray(e1_all[idx]), weights, g1)
            _, dw2, db2 = kernels.affine_bwd(
                np.ascontiguousarray(e2_all[idx]), weights, g2)
            opt.step([dw1 + dw2, db1 + db2])
            epoch_loss += loss * len(idx)
        trace.append(TransformEpochStats(
            epoch=epoch, loss=epoch_loss / n,
            diagnostics=compute_diagnostics(pairs, table, model)))
    return model, trace


class LogisticRegressorModel:
    """Two dense layers over the joint pair representation.

    First layer squares its pre-activations; the second produces two
    log-softmax classes (index 1 = coreferent). An attached frozen
    transform is applied to the embeddings before the joint representation
    and never receives gradient updates.
    """

    def __init__(self, layer1: DenseLayer, layer2: DenseLayer,
                 frozen_transform: CosineTransformModel | None = None):
        if layer1.out_dim != layer2.in_dim:
            raise ValidationError("hidden widths disagree")
        if layer2.out_dim != 2:
            raise ValidationError("output layer must have 2 classes")
        if layer1.activation is not Activation.SQUARE:
            raise ValidationError("first layer uses the square activation")
        if layer2.activation is not Activation.LOG_SOFTMAX:
            raise ValidationError("output layer uses log-softmax")
        self.layer1 = layer1
        self.layer2 = layer2
        self.frozen_transform = frozen_transform
        if frozen_transform is not None and \
                3 * frozen_transform.dim != layer1.in_dim:
            raise ValidationError(
                "frozen transform dim does not match regressor input")

    @classmethod
    def create(cls, dim: int, hidden: int = 512,
               rng: np.random.Generator | None = None,
               frozen_transform: CosineTransformModel | None = None
               ) -> "LogisticRegressorModel":
        rng = rng if rng is not None else np.random.default_rng(0)
        return cls(DenseLayer.random(3 * dim, hidden, Activation.SQUARE, rng),
                   DenseLayer.random(hidden, 2, Activation.LOG_SOFTMAX, rng),
                   frozen_transform)

    @property
    def layers(self) -> list[DenseLayer]:
        return [self.layer1, self.layer2]

    @property
    def input_dim(self) -> int:
        return self.layer1.in_dim

    def parameters(self) -> list[np.ndarray]:
        return [self.layer1.weights, self.layer1.bias,
                self.layer2.weights, self.layer2.bias]

    def copy(self) -> "LogisticRegressorModel":
        return LogisticRegressorModel(self.layer1.copy(), self.layer2.copy(),
                                      self.frozen_transform)

    def features(self, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
        """Joint representation, through the frozen transform when present."""
        if self.frozen_transform is not None:
            e1 = self.frozen_transform.transform(np.atleast_2d(e1))
            e2 = self.frozen_transform.transform(np.atleast_2d(e2))
        return joint_matrix(np.atleast_2d(e1), np.atleast_2d(e2))


def regressor_decide_batch(model: LogisticRegressorModel,
                           features: np.ndarray
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Log-probabilities and decisions for feature rows.

    Decision is true only when the coreferent class strictly wins; an
    exact tie is non-coreferent.
    """
    if features.shape[1] != model.input_dim:
        raise ValidationError(
            f"feature dim {features.shape[1]} != model input "
            f"{model.input_dim}")
    log_probs, _ = forward(model.layers, features)
    decisions = log_probs[:, 1] > log_probs[:, 0]
    return log_probs, decisions


def regressor_decide(model: LogisticRegressorModel,
                     feature: np.ndarray) -> tuple[tuple[float, float], bool]:
    log_probs, decisions = regressor_decide_batch(
        model, np.ascontiguousarray(np.atleast_2d(feature), dtype=np.float32))
    return (float(log_probs[0, 0]), float(log_probs[0, 1])), bool(decisions[0])


@dataclass
class RegressorEpochStats:
    epoch: int
    train_loss: float
    dev_b3_f1: float
    dev_muc_f1: float

    @property
    def dev_avg_f1(self) -> float:
        return 0.5 * (self.dev_b3_f1 + self.dev_muc_f1)


@dataclass
class RegressorHistory:
    epochs: list[RegressorEpochStats] = field(default_factory=list)
    best_epoch: int = -1

    @property
    def best(self) -> RegressorEpochStats:
        return self.epochs[self.best_epoch]


def evaluate_on_dev(model: LogisticRegressorModel, dev_corpus: Corpus,
                    dev_table: EmbeddingTable, strategy: PairStrategy,
                    mode: str = "micro"):
    """Full dev pipeline: predict pairs, cluster, score against gold."""
    per_doc = []
    for doc in dev_corpus:
        pairs = labeled_pairs(doc, gold_clustering(doc), strategy)
        decisions = {}
        if pairs:
            feats = model.features(
                dev_table.matrix([p.first for p in pairs]),
                dev_table.matrix([p.second for p in pairs]))
            _, dec = regressor_decide_batch(model, feats)
            decisions = {p.key: bool(d) for p, d in zip(pairs, dec)}
        sys_clusters = connected_components(
            adjacency_from_decisions(doc, decisions))
        per_doc.append(score_document(gold_clustering(doc), sys_clusters))
    return aggregate_corpus(per_doc, mode=mode)


def train_logistic_regressor(train_pairs: list[MentionPair],
                             train_table: EmbeddingTable,
                             dev_corpus: Corpus,
                             dev_table: EmbeddingTable,
                             config: TrainConfig,
                             strategy: PairStrategy = PairStrategy.ALL_PRECEDING,
                             frozen_transform: CosineTransformModel | None = None,
                             hidden: int = 512,
                             mode: str = "micro"
                             ) -> tuple[LogisticRegressorModel,
                                        RegressorHistory]:
    """Train the pair regressor, keeping the epoch that scores best on dev.

    After every epoch the whole dev pipeline runs (predict, cluster, score)
    and the average of the B3 and MUC F1s decides the best epoch; ties keep
    the earliest. The frozen transform, when given, shapes the features but
    is never updated.
    """
    if not train_pairs:
        raise ValidationError("cannot train on an empty pair list")
    if any(p.label is None for p in train_pairs):
        raise ValidationError("training requires labeled pairs")

    model = LogisticRegressorModel.create(
        train_table.dim, hidden=hidden, rng=derive_rng(config.seed, "init"),
        frozen_transform=frozen_transform)
    features = model.features(
        train_table.matrix([p.first for p in train_pairs]),
        train_table.matrix([p.second for p in train_pairs]))
    targets = np.array([1 if p.label else 0 for p in train_pairs],
                       dtype=np.int64)

    opt = AdamWOptimizer(model.parameters(), lr=config.lr,
                         weight_decay=config.weight_decay)
    rng = derive_rng(config.seed, "shuffle")
    n = len(train_pairs)
    batch = config.batch_size if config.batch_size is not None else 32

    history = RegressorHistory()
    best_avg = -1.0
    best_model: LogisticRegressorModel | None = None
    for epoch in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            x = np.ascontiguousarray(features[idx])
            log_probs, caches = forward(model.layers, x)
            loss, d_lp = nll_loss_batch(log_probs, targets[idx])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch start {start}")
            grads, _ = backward(model.layers, caches, d_lp)
            opt.step([g for pair in grads for g in pair])
            epoch_loss += loss * len(idx)
        try:
            dev_report = evaluate_on_dev(model, dev_corpus, dev_table,
                                         strategy, mode=mode)
        except Exception as exc:
            raise TrainingError(
                f"dev evaluation failed at epoch {epoch}: {exc}") from exc
        stats = RegressorEpochStats(
            epoch=epoch, train_loss=epoch_loss / n,
            dev_b3_f1=dev_report.b3.f1, dev_muc_f1=dev_report.muc.f1)
        history.epochs.append(stats)
        if stats.dev_avg_f1 > best_avg:
            best_avg = stats.dev_avg_f1
            best_model = model.copy()
            history.best_epoch = epoch
    assert best_model is not None
    return best_model, history


# --- checkpoint persistence -------------------------------------------------

def _layer_to_dict(layer: DenseLayer) -> dict:
    return {"rows": layer.out_dim, "cols": layer.in_dim,
            "weights": [float(x) for x in layer.weights.reshape(-1)],
            "bias": [float(x) for x in layer.bias],
            "activation": layer.activation.value}


def _layer_from_dict(raw: dict) -> DenseLayer:
    try:
        rows, cols = int(raw["rows"]), int(raw["cols"])
        weights = np.array(raw["weights"], dtype=np.float32)
        bias = np.array(raw["bias"], dtype=np.float32)
        activation = Activation(raw["activation"])
    except (KeyError, ValueError, TypeError) as exc:
        raise CheckpointError(f"bad layer record: {exc}") from exc
    if weights.size != rows * cols or bias.size != rows:
        raise CheckpointError(
            f"layer shape mismatch: {rows}x{cols} vs {weights.size} weights, "
            f"{bias.size} biases")
    return DenseLayer(weights.reshape(rows, cols), bias, activation)


def _model_to_dict(model) -> dict:
    base = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION}
    if isinstance(model, CosineThresholdModel):
        base["kind"] = "cosine"
        base["threshold"] = model.threshold
        base["dim"] = model.transform.dim if model.transform else None
        base["layers"] = ([_layer_to_dict(model.transform.layer)]
                          if model.transform else [])
        return base
    if isinstance(model, CosineTransformModel):
        base["kind"] = "cosine_transform"
        base["dim"] = model.dim
        base["layers"] = [_layer_to_dict(model.layer)]
        return base
    if isinstance(model, LogisticRegressorModel):
        base["kind"] = "regressor"
        base["dim"] = model.input_dim // 3
        base["layers"] = [_layer_to_dict(model.layer1),
                          _layer_to_dict(model.layer2)]
        if model.frozen_transform is not None:
            base["frozen_transform"] = _model_to_dict(model.frozen_transform)
        return base
    raise ValidationError(f"cannot checkpoint {type(model).__name__}")


def _model_from_dict(raw: dict):
    if raw.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"not a checkpoint: format={raw.get('format')}")
    if raw.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported version {raw.get('version')}")
    kind = raw.get("kind")
    layers = [_layer_from_dict(l) for l in raw.get("layers", [])]
    if kind == "cosine":
        transform = CosineTransformModel(layers[0]) if layers else None
        return CosineThresholdModel(float(raw["threshold"]), transform)
    if kind == "cosine_transform":
        if len(layers) != 1:
            raise CheckpointError("cosine_transform expects one layer")
        return CosineTransformModel(layers[0])
    if kind == "regressor":
        if len(layers) != 2:
            raise CheckpointError("regressor expects two layers")
        frozen = None
        if "frozen_transform" in raw:
            frozen = _model_from_dict(raw["frozen_transform"])
            if not isinstance(frozen, CosineTransformModel):
                raise CheckpointError("frozen_transform of the wrong kind")
        return LogisticRegressorModel(layers[0], layers[1], frozen)
    raise CheckpointError(f"unknown checkpoint kind '{kind}'")


def save_checkpoint(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    """Load a model; a truncated or inconsistent file raises CheckpointError
    and leaves no partial state behind."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"{path}: truncated or corrupt: "
                                  f"{exc.msg}") from exc
    return _model_from_dict(raw)
