"""Timing comparison of the kernel backends on training-shaped workloads."""

from __future__ import annotations

import time

import numpy as np

from evlink.kernels import available_backends

CASES = [
    # (name, batch, d_in, d_out)
    ("transform 32-dim", 64, 32, 32),
    ("regressor hidden, synth dims", 32, 96, 512),
    ("regressor hidden, 1024-dim encoder", 32, 3072, 512),
    ("regressor output", 32, 512, 2),
]


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def run_benchmark(repeats: int = 5) -> None:
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    rng = np.random.default_rng(0)
    header = f"{'case':<38} {'op':<12}" + "".join(
        f"{name:>12}" for name in backends)
    print(header)
    print("-" * len(header))
    for name, batch, d_in, d_out in CASES:
        x = rng.standard_normal((batch, d_in)).astype(np.float32)
        w = rng.standard_normal((d_out, d_in)).astype(np.float32)
        b = rng.standard_normal(d_out).astype(np.float32)
        dy = rng.standard_normal((batch, d_out)).astype(np.float32)
        for op, make in (
                ("affine_fwd", lambda impl: lambda: impl.affine_fwd(x, w, b)),
                ("affine_bwd", lambda impl: lambda: impl.affine_bwd(x, w, dy)),
        ):
            times = [_time(make(impl), repeats) for impl in backends.values()]
            row = f"{name:<38} {op:<12}" + "".join(
                f"{1e6 * t:>10.1f}us" for t in times)
            print(row)
    # AdamW and the cosine reduction on a flat parameter the size of the
    # biggest layer.
    p = rng.standard_normal(3072 * 512).astype(np.float32)
    g = rng.standard_normal(p.shape[0]).astype(np.float32)
    a = rng.standard_normal((2048, 1024)).astype(np.float32)
    c = rng.standard_normal((2048, 1024)).astype(np.float32)
    for op, make in (
            ("adamw 1.6M", lambda impl: lambda: impl.adamw_update(
                p.copy(), g, np.zeros_like(p), np.zeros_like(p),
                5e-6, 0.9, 0.999, 1e-8, 0.01, 0.1, 0.001)),
            ("cosine 2048x1024", lambda impl: lambda: impl.rowwise_dot_norms(
                a, c)),
    ):
        times = [_time(make(impl), repeats) for impl in backends.values()]
        row = f"{'parameter-scale ops':<38} {op:<12}" + "".join(
            f"{1e6 * t:>10.1f}us" for t in times)
        print(row)


if __name__ == "__main__":
    run_benchmark()
