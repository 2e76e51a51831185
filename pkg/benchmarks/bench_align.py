"""Benchmark the trellis kernels: compiled extension vs pure-numpy fallback.

Generates one random alignment problem, checks both kernels return the
identical path and total, then times each over repeated runs.

Usage: python3 benchmarks/bench_align.py [--frames 2000] [--vocab 40]
            [--targets 60] [--repeats 5] [--seed 0]
"""

import argparse
import time

import numpy as np

from logitgop.align import _trellis_py
from logitgop.align.core import _expand_targets, log_softmax

try:
    from logitgop.align import _trellis

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def make_problem(rng, frames, vocab, n_targets, blank=0):
    logits = rng.normal(0.0, 2.0, size=(frames, vocab))
    targets = rng.integers(1, vocab, size=n_targets).tolist()
    symbols, skip_ok = _expand_targets(targets, blank)
    # feasibility: the state chain must fit in the frame budget
    assert frames >= len(symbols)
    return log_softmax(logits), symbols, skip_ok


def time_kernel(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=2000)
    ap.add_argument("--vocab", type=int, default=40)
    ap.add_argument("--targets", type=int, default=60)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    problem = make_problem(rng, args.frames, args.vocab, args.targets)
    states = len(problem[1])
    print(f"problem: T={args.frames} V={args.vocab} "
          f"targets={args.targets} states={states}")

    pure_path, pure_total = _trellis_py.best_path(*problem)
    t_pure = time_kernel(_trellis_py.best_path, problem, args.repeats)
    print(f"pure     : {t_pure * 1e3:9.2f} ms  (total logprob {pure_total:.4f})")

    if not HAVE_COMPILED:
        print("compiled : extension not built; skipping comparison")
        return

    comp_path, comp_total = _trellis.best_path(*problem)
    assert np.array_equal(np.asarray(pure_path), np.asarray(comp_path)), \
        "kernels disagree on the optimal path"
    assert abs(pure_total - comp_total) <= 1e-9, \
        f"kernels disagree on the total: {pure_total} vs {comp_total}"
    t_comp = time_kernel(_trellis.best_path, problem, args.repeats)
    print(f"compiled : {t_comp * 1e3:9.2f} ms  (total logprob {comp_total:.4f})")
    print(f"speedup  : {t_pure / t_comp:9.2f}x  (identical paths and totals)")


if __name__ == "__main__":
    main()
