"""Minimal dense-network engine: layers, losses, AdamW, gradient checking.

Parameters and activations are stored as float32; every reduction (matrix
products, moment updates, log-sum-exp) accumulates in float64 through the
kernel backend. Training is single-threaded with a fixed update order, so a
fixed seed reproduces runs bit for bit on one platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from evlink import kernels
from evlink.errors import TrainingError, UndefinedSimilarityError, ValidationError


class Activation(str, Enum):
    IDENTITY = "identity"
    SQUARE = "square"
    LOG_SOFTMAX = "log_softmax"


class DenseLayer:
    """A fully connected layer: activation(x @ weights.T + bias)."""

    def __init__(self, weights, bias, activation: Activation = Activation.IDENTITY):
        self.weights = np.ascontiguousarray(weights, dtype=np.float32)
        self.bias = np.ascontiguousarray(bias, dtype=np.float32)
        self.activation = Activation(activation)
        if self.weights.ndim != 2:
            raise ValidationError("weights must be a matrix")
        if self.bias.shape != (self.weights.shape[0],):
            raise ValidationError(
                f"bias shape {self.bias.shape} does not match "
                f"{self.weights.shape[0]} output units")

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def identity(cls, dim: int) -> "DenseLayer":
        """Square layer initialized to the exact identity map."""
        return cls(np.eye(dim, dtype=np.float32),
                   np.zeros(dim, dtype=np.float32), Activation.IDENTITY)

    @classmethod
    def random(cls, in_dim: int, out_dim: int, activation: Activation,
               rng: np.random.Generator) -> "DenseLayer":
        """Weights uniform in +-1/sqrt(in_dim), zero bias."""
        bound = 1.0 / np.sqrt(in_dim)
        w = rng.uniform(-bound, bound, size=(out_dim, in_dim))
        return cls(w.astype(np.float32), np.zeros(out_dim, dtype=np.float32),
                   activation)

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.bias.copy(),
                          self.activation)

    def __repr__(self):
        return (f"DenseLayer({self.in_dim}->{self.out_dim}, "
                f"{self.activation.value})")


@dataclass
class LayerCache:
    x: np.ndarray   # layer input
    z: np.ndarray   # pre-activation
    a: np.ndarray   # activation output


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z64 = z.astype(np.float64)
    m = z64.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(z64 - m).sum(axis=1, keepdims=True))
    return (z64 - lse).astype(np.float32)


def _softmax64(z: np.ndarray) -> np.ndarray:
    z64 = z.astype(np.float64)
    z64 -= z64.max(axis=1, keepdims=True)
    e = np.exp(z64)
    return e / e.sum(axis=1, keepdims=True)


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.IDENTITY:
        return z
    if activation is Activation.SQUARE:
        return z * z
    return _log_softmax(z)


def _activation_bwd(cache: LayerCache, da: np.ndarray,
                    activation: Activation) -> np.ndarray:
    if activation is Activation.IDENTITY:
        return da
    if activation is Activation.SQUARE:
        return (2.0 * cache.z.astype(np.float64)
                * da.astype(np.float64)).astype(np.float32)
    # d log_softmax: dz_k = da_k - softmax_k * sum_j da_j
    s = _softmax64(cache.z)
    total = da.astype(np.float64).sum(axis=1, keepdims=True)
    return (da.astype(np.float64) - s * total).astype(np.float32)


def _as_batch(x) -> tuple[np.ndarray, bool]:
    arr = np.ascontiguousarray(x, dtype=np.float32)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


def forward(layers: list[DenseLayer], x):
    """Run the layer stack; returns (output, caches for backward).

    Accepts a single vector or an (n, dim) batch; the output matches.
    """
    batch, squeeze = _as_batch(x)
    caches: list[LayerCache] = []
    for layer in layers:
        if batch.shape[1] != layer.in_dim:
            raise ValidationError(
                f"layer expects {layer.in_dim} inputs, got {batch.shape[1]}")
        z = kernels.affine_fwd(batch, layer.weights, layer.bias)
        a = _activate(z, layer.activation)
        caches.append(LayerCache(batch, z, a))
        batch = a
    out = batch[0] if squeeze else batch
    return out, caches


def backward(layers: list[DenseLayer], caches: list[LayerCache], d_out):
    """Backpropagate d(loss)/d(output); returns ([(dW, db), ...], dx)."""
    da, _ = _as_batch(d_out)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(layers)
    for idx in range(len(layers) - 1, -1, -1):
        layer = layers[idx]
        cache = caches[idx]
        dz = _activation_bwd(cache, da, layer.activation)
        dx, dw, db = kernels.affine_bwd(cache.x, layer.weights, dz)
        grads[idx] = (dw, db)
        da = dx
    return grads, da


def nll_loss(log_probs, target: int):
    """Negative log likelihood for one sample.

    Returns (loss, gradient w.r.t. the log-probabilities). Composed with the
    log-softmax layer backward this yields softmax(logits) - one_hot(target).
    """
    lp = np.asarray(log_probs)
    n_classes = lp.shape[-1]
    if not 0 <= int(target) < n_classes:
        raise ValidationError(f"target {target} out of range for "
                              f"{n_classes} classes")
    loss = -float(lp[int(target)])
    grad = np.zeros(n_classes, dtype=np.float32)
    grad[int(target)] = -1.0
    return loss, grad


def nll_loss_batch(log_probs: np.ndarray, targets: np.ndarray):
    """Mean NLL over a batch; gradient already carries the 1/n factor."""
    n, n_classes = log_probs.shape
    targets = np.asarray(targets, dtype=np.int64)
    if targets.min(initial=0) < 0 or targets.max(initial=0) >= n_classes:
        raise ValidationError("target class out of range")
    picked = log_probs.astype(np.float64)[np.arange(n), targets]
    loss = float(-picked.sum() / n)
    grad = np.zeros((n, n_classes), dtype=np.float32)
    grad[np.arange(n), targets] = -1.0 / n
    return loss, grad


def cosine_rows(a: np.ndarray, b: np.ndarray, on_zero: str = "raise"):
    """Row-wise cosine similarity in float64.

    on_zero: 'raise' -> UndefinedSimilarityError on any zero-norm row;
    'nan' -> that row's cosine is NaN and the returned mask is False there.
    """
    a = np.ascontiguousarray(np.atleast_2d(a), dtype=np.float32)
    b = np.ascontiguousarray(np.atleast_2d(b), dtype=np.float32)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch {a.shape} vs {b.shape}")
    dot, na, nb = kernels.rowwise_dot_norms(a, b)
    valid = (na > 0.0) & (nb > 0.0)
    if not valid.all():
        if on_zero == "raise":
            raise UndefinedSimilarityError(
                "cosine similarity undefined for zero vector")
        cos = np.full(a.shape[0], np.nan)
        cos[valid] = dot[valid] / np.sqrt(na[valid] * nb[valid])
        return np.clip(cos, -1.0, 1.0, out=cos), valid
    cos = dot / np.sqrt(na * nb)
    return np.clip(cos, -1.0, 1.0, out=cos), valid


def cosine_similarity(u, v) -> float:
    """Cosine of two vectors; raises UndefinedSimilarityError on zero input."""
    cos, _ = cosine_rows(np.asarray(u, dtype=np.float32),
                         np.asarray(v, dtype=np.float32))
    return float(cos[0])


def mse_cosine_batch(t1: np.ndarray, t2: np.ndarray, target: np.ndarray):
    """Mean squared error between row cosines and +-1 targets.

    target holds +1.0 for coreferent rows and -1.0 otherwise. Returns
    (loss, d/dt1, d/dt2) with gradients carrying the 1/n factor, float32.
    """
    t1 = np.ascontiguousarray(t1, dtype=np.float32)
    t2 = np.ascontiguousarray(t2, dtype=np.float32)
    dot, na, nb = kernels.rowwise_dot_norms(t1, t2)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise UndefinedSimilarityError(
            "zero vector reached the cosine loss")
    y = np.asarray(target, dtype=np.float64)
    n = t1.shape[0]
    denom = np.sqrt(na * nb)
    cos = dot / denom
    resid = cos - y
    loss = float((resid * resid).sum() / n)
    dcos = (2.0 / n) * resid
    t1_64 = t1.astype(np.float64)
    t2_64 = t2.astype(np.float64)
    # d cos / d t1 = t2 / (|t1||t2|) - cos * t1 / |t1|^2, row-wise
    g1 = dcos[:, None] * (t2_64 / denom[:, None] - (cos / na)[:, None] * t1_64)
    g2 = dcos[:, None] * (t1_64 / denom[:, None] - (cos / nb)[:, None] * t2_64)
    return loss, g1.astype(np.float32), g2.astype(np.float32)


def mse_cosine_loss(t1, t2, coreferent: bool):
    """Single-pair form of mse_cosine_batch (target +1 or -1)."""
    y = np.array([1.0 if coreferent else -1.0])
    loss, g1, g2 = mse_cosine_batch(np.atleast_2d(t1), np.atleast_2d(t2), y)
    return loss, g1[0], g2[0]


@dataclass
class TrainConfig:
    """Knobs shared by both trainers.

    batch_size of None means each trainer's default: full batch for the
    cosine transform, 32 for the pair regressor.
    """

    epochs: int = 50
    lr: float = 5e-6
    seed: int = 0
    shuffle: bool = True
    batch_size: int | None = None
    weight_decay: float = 0.01

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr > 0:
            raise ValidationError(f"lr must be positive, got {self.lr}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1 when set")


class AdamWOptimizer:
    """Decoupled weight decay Adam over a fixed list of parameter arrays.

    Defaults: beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.01. Moments
    are stored float32 like the parameters; arithmetic runs in float64.
    """

    def __init__(self, params: list[np.ndarray], lr: float = 5e-6,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.01):
        self.params = params
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValidationError("gradient list does not match parameters")
        for idx, g in enumerate(grads):
            if not np.all(np.isfinite(g)):
                raise TrainingError(
                    f"non-finite gradient in parameter {idx} at step "
                    f"{self.t + 1}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            kernels.adamw_update(
                p.reshape(-1), np.ascontiguousarray(g, dtype=np.float32).reshape(-1),
                m.reshape(-1), v.reshape(-1),
                self.lr, self.beta1, self.beta2, self.eps, self.weight_decay,
                bc1, bc2)


def _forward64(layers: list[DenseLayer], x64: np.ndarray) -> np.ndarray:
    """Plain float64 forward pass, independent of the kernel backend."""
    h = x64
    for layer in layers:
        z = h @ layer.weights.astype(np.float64).T + layer.bias.astype(np.float64)
        if layer.activation is Activation.IDENTITY:
            h = z
        elif layer.activation is Activation.SQUARE:
            h = z * z
        else:
            m = z.max(axis=1, keepdims=True)
            h = z - (m + np.log(np.exp(z - m).sum(axis=1, keepdims=True)))
    return h


@dataclass
class GradientCheckReport:
    max_rel_error: float
    tol: float
    n_params: int

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol


def finite_difference_check(layers: list[DenseLayer], loss_fn, x,
                            tol: float = 1e-3, h: float = 1e-3,
                            grads=None) -> GradientCheckReport:
    """Compare backprop parameter gradients against central differences.

    loss_fn maps the network output (float64 2-D array) to
    (loss, d loss / d output). The finite-difference side evaluates the
    network in float64, independent of the production kernels. Pass
    precomputed grads to check an external gradient (e.g. a corrupted one).
    """
    batch, _ = _as_batch(x)
    if grads is None:
        out, caches = forward(layers, batch)
        _, d_out = loss_fn(out.astype(np.float64))
        grads, _ = backward(layers, caches, d_out.astype(np.float32))

    x64 = batch.astype(np.float64)
    max_rel = 0.0
    n_params = 0
    for layer, (dw, db) in zip(layers, grads):
        for arr, grad in ((layer.weights, dw), (layer.bias, db)):
            flat = arr.reshape(-1)
            gflat = np.asarray(grad, dtype=np.float64).reshape(-1)
            for i in range(flat.shape[0]):
                orig = flat[i]
                flat[i] = np.float32(orig + h)
                hi = float(flat[i])
                up, _ = loss_fn(_forward64(layers, x64))
                flat[i] = np.float32(orig - h)
                lo = float(flat[i])
                down, _ = loss_fn(_forward64(layers, x64))
                flat[i] = orig
                # divide by the realized float32 step, not the nominal one
                fd = (up - down) / (hi - lo)
                rel = abs(gflat[i] - fd) / max(abs(gflat[i]), abs(fd), 1e-8)
                max_rel = max(max_rel, rel)
                n_params += 1
    return GradientCheckReport(max_rel_error=max_rel, tol=tol,
                               n_params=n_params)


def derive_rng(seed: int, purpose: str) -> np.random.Generator:
    """Named PCG64 stream derived from the single run seed.

    Every random draw in the package (weight init, epoch shuffling,
    synthetic data) flows through one of these streams.
    """
    tags = {"init": 1, "shuffle": 2, "synth": 3, "downsample": 4, "test": 5}
    if purpose not in tags:
        raise ValidationError(f"unknown rng purpose '{purpose}'")
    return np.random.default_rng([tags[purpose], int(seed) & (2**64 - 1)])
