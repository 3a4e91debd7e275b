#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure NumPy fallback.

Times each kernel on desk-scale shapes plus one end-to-end training run,
then prints a table with the speedup of the native backend.  Usage::

    python benchmarks/bench_kernels.py [--repeats 7] [--scale 1.0]
"""

import argparse
import time

import numpy as np

from zsaction import kernels
from zsaction.sentences import TrainConfig, train


def best_of(repeats, fn):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def build_cases(scale):
    rng = np.random.default_rng(0)
    s = lambda v: max(1, int(v * scale))
    videos, objects, actions, dim = s(400), s(50), s(20), s(32)
    logits = rng.standard_normal((videos, objects))
    captions = rng.standard_normal((s(1200), dim))
    weights = rng.standard_normal((dim, actions))
    bias = rng.standard_normal(actions)
    batch_x = rng.standard_normal((32, dim))
    batch_y = rng.integers(0, actions, 32).astype(np.int64)
    train_x = rng.standard_normal((s(200), dim))
    train_y = rng.integers(0, actions, s(200))

    cases = {
        f"gelu {captions.shape}": lambda: kernels.gelu(captions),
        f"softmax_rows {logits.shape}": lambda: kernels.softmax_rows(logits),
        f"top_k_rows {logits.shape} k={s(10)}":
            lambda: kernels.keep_top_k_rows(logits, s(10)),
        f"forward_probs {captions.shape}->{actions}":
            lambda: kernels.forward_probs(captions, weights, bias),
        f"ce_grads batch=32 d={dim} n={actions}":
            lambda: kernels.ce_grads(batch_x, batch_y, weights, bias),
        f"train {train_x.shape} n={actions} 50 epochs":
            lambda: train(train_x, train_y, actions,
                          TrainConfig(epochs=50, seed=0)),
    }
    return cases


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7,
                        help="timing repetitions, best is kept (default: 7)")
    parser.add_argument("--scale", type=float, default=1.0,
                        help="problem-size multiplier (default: 1.0)")
    args = parser.parse_args()

    backends = kernels.available_backends()
    if "native" not in backends:
        print("note: compiled kernels unavailable; timing pure backend only")
    cases = build_cases(args.scale)

    timings = {}
    for backend in backends:
        kernels.set_backend(backend)
        for name, fn in cases.items():
            fn()  # warm up
            timings[(backend, name)] = best_of(args.repeats, fn)

    width = max(len(name) for name in cases)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name in cases:
        row = f"{name:<{width}}  "
        for backend in backends:
            row += f"{timings[(backend, name)] * 1e3:>10.3f}ms"
        if len(backends) == 2:
            ratio = timings[("python", name)] / timings[("native", name)]
            row += f"{ratio:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
