"""Numpy implementation of the hot kernels.

Contract shared with the compiled backend: float32 storage, float64
accumulation inside every reduction, results rounded back to float32 where
they are stored. Elementwise operations here and in the compiled backend
perform the identical float64 arithmetic; reductions may differ by
last-ulp float64 noise (below float32 resolution).
"""

import numpy as np


def affine_fwd(x, w, b):
    """y = x @ w.T + b for a batch.

    x: (n, d_in) float32, w: (d_out, d_in) float32, b: (d_out,) float32
    returns (n, d_out) float32.
    """
    y = x.astype(np.float64) @ w.astype(np.float64).T
    y += b.astype(np.float64)
    return y.astype(np.float32)


def affine_bwd(x, w, dy):
    """Gradients of y = x @ w.T + b given upstream dy.

    Returns (dx, dw, db) as float32.
    """
    x64 = x.astype(np.float64)
    w64 = w.astype(np.float64)
    dy64 = dy.astype(np.float64)
    dx = (dy64 @ w64).astype(np.float32)
    dw = (dy64.T @ x64).astype(np.float32)
    db = dy64.sum(axis=0).astype(np.float32)
    return dx, dw, db


def adamw_update(p, g, m, v, lr, beta1, beta2, eps, weight_decay, bc1, bc2):
    """One decoupled-weight-decay Adam step, in place on flat float32 arrays.

    bc1, bc2 are the precomputed bias corrections 1 - beta1**t and
    1 - beta2**t for the current step t.
    """
    g64 = g.astype(np.float64)
    m64 = beta1 * m.astype(np.float64) + (1.0 - beta1) * g64
    v64 = beta2 * v.astype(np.float64) + (1.0 - beta2) * (g64 * g64)
    m[:] = m64.astype(np.float32)
    v[:] = v64.astype(np.float32)
    # Moments are stored float32; the update reads the stored values back so
    # both backends consume identical inputs.
    mhat = m.astype(np.float64) / bc1
    vhat = v.astype(np.float64) / bc2
    p64 = p.astype(np.float64)
    p64 -= lr * (mhat / (np.sqrt(vhat) + eps) + weight_decay * p64)
    p[:] = p64.astype(np.float32)


def rowwise_dot_norms(a, b):
    """Per-row dot products and squared norms, accumulated in float64.

    a, b: (n, d) float32. Returns (dot, norm_sq_a, norm_sq_b) float64.
    """
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    dot = np.einsum("ij,ij->i", a64, b64)
    na = np.einsum("ij,ij->i", a64, a64)
    nb = np.einsum("ij,ij->i", b64, b64)
    return dot, na, nb
