"""Time the compiled and numpy SGD kernels on the same batches.

    python3 benchmarks/bench_kernels.py [--batches 200] [--hash-bits 18]

Also reports a full 5-fold synthetic training run per backend.
"""
import argparse
import importlib
import time

import numpy as np

from histent.synthetic import separable_corpus
from histent.tagger import TrainConfig, build_batch, featurize

model_mod = importlib.import_module("histent.tagger.model")
train_mod = importlib.import_module("histent.tagger.train")


def load(name):
    try:
        return importlib.import_module(f"histent.tagger.{name}")
    except ImportError:
        return None


def make_batches(n_batches, hash_bits, seed=0):
    docs = separable_corpus(60, seed)
    feats = [(featurize(d, hash_bits=hash_bits), d) for d in docs]
    units = [(f, s) for f, d in feats for s in d.sentences()]
    rng = np.random.default_rng(seed)
    batches = []
    for _ in range(n_batches):
        pick = rng.choice(len(units), size=8, replace=False)
        blocks = [units[i] for i in pick]
        indptr, indices, values = build_batch(blocks, rng, 0.1)
        labels = rng.integers(0, 25, size=len(indptr) - 1)
        batches.append((indptr, indices, values, labels))
    return batches


def time_steps(kernel, batches, width):
    W = np.zeros((width, 25))
    b = np.zeros(25)
    t0 = time.perf_counter()
    for indptr, indices, values, labels in batches:
        kernel.sgd_step(W, b, indptr, indices, values, labels, 0.1)
    return time.perf_counter() - t0, W


def time_training(kernel, hash_bits):
    docs = separable_corpus(40, 0)
    saved = (model_mod.kernel, train_mod.kernel)
    model_mod.kernel = train_mod.kernel = kernel
    try:
        t0 = time.perf_counter()
        train_mod.train(docs, "basic", seed=0, config=TrainConfig(hash_bits=hash_bits))
        return time.perf_counter() - t0
    finally:
        model_mod.kernel, train_mod.kernel = saved


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batches", type=int, default=200)
    ap.add_argument("--hash-bits", type=int, default=18)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    batches = make_batches(args.batches, args.hash_bits)
    width = 1 << args.hash_bits
    kernels = [k for k in (load("_kernel"), load("_kernel_py")) if k is not None]
    results = {}
    for k in kernels:
        best = min(time_steps(k, batches, width)[0] for _ in range(args.repeat))
        results[k.NAME] = (best, time_training(k, args.hash_bits))
    print(f"{'backend':<8} {'sgd_step (us/batch)':>20} {'5-fold train (s)':>18}")
    for name, (steps, run) in results.items():
        print(f"{name:<8} {steps / len(batches) * 1e6:>20.1f} {run:>18.2f}")
    if len(kernels) == 2:
        _, w1 = time_steps(kernels[0], batches, width)
        _, w2 = time_steps(kernels[1], batches, width)
        print(f"max |W_cython - W_python| = {np.abs(w1 - w2).max():.3e}")
        print(f"speedup (sgd_step): {results['python'][0] / results['cython'][0]:.1f}x")
    else:
        print("compiled kernel not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
