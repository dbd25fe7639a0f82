import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from evlink.errors import TrainingError, UndefinedSimilarityError, \
    ValidationError
from evlink.nn import (Activation, AdamWOptimizer, DenseLayer, TrainConfig,
                       backward, cosine_similarity, derive_rng,
                       finite_difference_check, forward, mse_cosine_loss,
                       nll_loss)
from oracles import adam_reference

LN2 = math.log(2.0)


def identity_layer(dim):
    return DenseLayer.identity(dim)


def test_forward_identity():
    out, _ = forward([identity_layer(2)], np.array([1.0, 2.0]))
    assert out.tolist() == [1.0, 2.0]


def test_forward_square_activation():
    layer = DenseLayer(np.eye(2), np.zeros(2), Activation.SQUARE)
    out, _ = forward([layer], np.array([2.0, -3.0]))
    assert out.tolist() == [4.0, 9.0]


def test_forward_log_softmax_symmetry():
    layer = DenseLayer(np.eye(2), np.zeros(2), Activation.LOG_SOFTMAX)
    out, _ = forward([layer], np.array([0.0, 0.0]))
    np.testing.assert_allclose(out, [-LN2, -LN2], rtol=1e-6)


@given(st.lists(st.floats(min_value=-30, max_value=30), min_size=2,
                max_size=6))
def test_log_softmax_exponentiates_to_one(logits):
    layer = DenseLayer(np.eye(len(logits)), np.zeros(len(logits)),
                       Activation.LOG_SOFTMAX)
    out, _ = forward([layer], np.array(logits, dtype=np.float32))
    assert abs(np.exp(out.astype(np.float64)).sum() - 1.0) < 1e-6


def test_forward_shape_mismatch():
    with pytest.raises(ValidationError):
        forward([identity_layer(3)], np.array([1.0, 2.0]))


def test_nll_loss_values():
    loss, _ = nll_loss(np.array([-LN2, -LN2]), 0)
    assert abs(loss - LN2) < 1e-7
    loss, _ = nll_loss(np.array([-1e-9, -20.0]), 0)
    assert loss < 1e-8


def test_nll_loss_target_out_of_range():
    with pytest.raises(ValidationError):
        nll_loss(np.array([-LN2, -LN2]), 2)


def test_nll_gradient_through_log_softmax_is_softmax_minus_onehot():
    # hand value: softmax(0,0) - onehot(0) = (-0.5, 0.5)
    layer = DenseLayer(np.eye(2), np.zeros(2), Activation.LOG_SOFTMAX)
    out, caches = forward([layer], np.array([0.0, 0.0]))
    _, d_lp = nll_loss(out, 0)
    grads, dx = backward([layer], caches, d_lp)
    np.testing.assert_allclose(dx[0], [-0.5, 0.5], atol=1e-7)


def test_cosine_similarity_examples():
    assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert cosine_similarity([2.0, 1.0], [2.0, 1.0]) == pytest.approx(1.0)
    # hand computation: cos((1,1),(1,0)) = 1/sqrt(2)
    assert cosine_similarity([1.0, 1.0], [1.0, 0.0]) == pytest.approx(
        1.0 / math.sqrt(2.0), abs=1e-7)


def test_cosine_zero_vector_raises():
    with pytest.raises(UndefinedSimilarityError):
        cosine_similarity([0.0, 0.0], [1.0, 0.0])


def test_mse_cosine_loss_boundaries():
    t = np.array([1.0, 2.0], dtype=np.float32)
    loss, _, _ = mse_cosine_loss(t, t, True)
    assert loss == pytest.approx(0.0, abs=1e-12)
    loss, _, _ = mse_cosine_loss(np.array([1.0, 0.0]), np.array([0.0, 1.0]),
                                 False)
    assert loss == pytest.approx(1.0, abs=1e-12)


def _cosine_loss64(a, b, label):
    """Independent float64 oracle for the cosine MSE loss."""
    cos = float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
    y = 1.0 if label else -1.0
    return (cos - y) ** 2


def test_mse_cosine_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    h = 1e-5
    for trial in range(25):
        t1 = rng.standard_normal(8).astype(np.float32)
        t2 = rng.standard_normal(8).astype(np.float32)
        label = bool(trial % 2)
        _, g1, g2 = mse_cosine_loss(t1, t2, label)
        a64, b64 = t1.astype(np.float64), t2.astype(np.float64)
        for vec64, other64, grad, first in ((a64, b64, g1, True),
                                            (b64, a64, g2, False)):
            for i in range(8):
                up, down = vec64.copy(), vec64.copy()
                up[i] += h
                down[i] -= h
                if first:
                    fd = (_cosine_loss64(up, other64, label)
                          - _cosine_loss64(down, other64, label)) / (2 * h)
                else:
                    fd = (_cosine_loss64(other64, up, label)
                          - _cosine_loss64(other64, down, label)) / (2 * h)
                assert abs(grad[i] - fd) / max(abs(fd), abs(grad[i]), 1e-4) \
                    < 1e-3


def test_adamw_single_step_hand_value():
    # w=1, g=1, lr=5e-6, defaults: m_hat=1, v_hat=1 (from stored moments),
    # update = lr * (1/(1+eps) + 0.01) ~= 5.05e-6
    p = np.array([1.0], dtype=np.float32)
    opt = AdamWOptimizer([p], lr=5e-6)
    opt.step([np.array([1.0], dtype=np.float32)])
    assert p[0] == pytest.approx(0.99999495, abs=1e-8)


def test_adamw_two_steps_constant_gradient_mhat_stays_one():
    p = np.array([1.0], dtype=np.float32)
    opt = AdamWOptimizer([p], lr=5e-6)
    g = np.array([1.0], dtype=np.float32)
    opt.step([g])
    mhat1 = opt.m[0][0] / (1 - 0.9 ** 1)
    opt.step([g])
    mhat2 = opt.m[0][0] / (1 - 0.9 ** 2)
    assert opt.t == 2
    assert mhat1 == pytest.approx(1.0, rel=1e-6)
    assert mhat2 == pytest.approx(1.0, rel=1e-6)


def test_adamw_without_decay_equals_adam_three_steps():
    grads = [0.3, -0.7, 1.1]
    p = np.array([2.0], dtype=np.float32)
    opt = AdamWOptimizer([p], lr=1e-2, weight_decay=0.0)
    for g in grads:
        opt.step([np.array([g], dtype=np.float32)])
    expected = adam_reference(2.0, grads, lr=1e-2)
    assert p[0] == pytest.approx(expected, rel=1e-5)


def test_adamw_non_finite_gradient_aborts():
    p = np.array([1.0], dtype=np.float32)
    opt = AdamWOptimizer([p])
    with pytest.raises(TrainingError, match="step 1"):
        opt.step([np.array([np.nan], dtype=np.float32)])


def test_train_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(epochs=0)
    with pytest.raises(ValidationError):
        TrainConfig(lr=0.0)


def quadratic_loss(out64):
    return 0.5 * float((out64 ** 2).sum()), out64


def test_fd_check_identity_network():
    report = finite_difference_check([identity_layer(3)], quadratic_loss,
                                     np.array([0.3, -0.2, 0.8]), tol=1e-6,
                                     h=1e-3)
    assert report.max_rel_error < 1e-6


def test_fd_check_two_layer_square_network():
    rng = derive_rng(0, "test")
    layers = [DenseLayer.random(5, 4, Activation.SQUARE, rng),
              DenseLayer.random(4, 2, Activation.IDENTITY, rng)]
    x = rng.standard_normal(5).astype(np.float32)
    report = finite_difference_check(layers, quadratic_loss, x, tol=1e-3)
    assert report.max_rel_error < 1e-3


def test_fd_check_flags_corrupted_gradient():
    layers = [identity_layer(2)]
    x = np.array([0.4, 0.7], dtype=np.float32)
    out, caches = forward(layers, x)
    _, d_out = quadratic_loss(out.astype(np.float64))
    grads, _ = backward(layers, caches, d_out.astype(np.float32))
    corrupted = [(grads[0][0] + 1.0, grads[0][1])]
    report = finite_difference_check(layers, quadratic_loss, x, tol=1e-3,
                                     grads=corrupted)
    assert not report.passed
    assert report.max_rel_error > 0.1


def test_backprop_vs_fd_many_random_instances():
    rng = derive_rng(12, "test")
    worst = 0.0
    for _ in range(30):
        dims = [int(rng.integers(2, 6)) for _ in range(3)]
        layers = [
            DenseLayer.random(dims[0], dims[1], Activation.SQUARE, rng),
            DenseLayer.random(dims[1], dims[2], Activation.LOG_SOFTMAX, rng),
        ]
        x = rng.standard_normal(dims[0]).astype(np.float32)
        target = int(rng.integers(dims[2]))

        def loss_fn(out64):
            flat = out64[0] if out64.ndim == 2 else out64
            grad = np.zeros_like(out64)
            if out64.ndim == 2:
                grad[0, target] = -1.0
            else:
                grad[target] = -1.0
            return -float(flat[target]), grad

        report = finite_difference_check(layers, loss_fn, x, tol=1e-3)
        worst = max(worst, report.max_rel_error)
    assert worst < 1e-3


def test_training_reproducible_same_seed():
    from evlink.scorers import train_cosine_transform
    from evlink.embeddings import EmbeddingTable
    from evlink.pairs import MentionPair

    def run():
        rng = np.random.default_rng(5)
        table = EmbeddingTable(6)
        for i in range(8):
            table.add(f"m{i}", rng.standard_normal(6).astype(np.float32))
        pairs = [MentionPair(f"m{i}", f"m{i + 1}", i % 2 == 0)
                 for i in range(7)]
        model, _ = train_cosine_transform(
            pairs, table, TrainConfig(epochs=5, lr=1e-3, seed=3,
                                      batch_size=2))
        return model.layer.weights.tobytes(), model.layer.bias.tobytes()

    assert run() == run()
