"""Timing comparison of the compiled kernels against the NumPy fallback."""

from __future__ import annotations

import importlib
import time

import numpy as np

from . import _pykernels


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(seed=0):
    rng = np.random.default_rng(seed)
    w100 = np.exp(rng.uniform(0, 0.05, size=100))
    return [
        ("draw 99 of 100, x200", "sequential_draw", (w100, rng.random((200, 99)))),
        ("draw 1 of 100, x2000", "sequential_draw", (w100, rng.random((2000, 1)))),
        ("draw 5 of 15, x2000", "sequential_draw", (np.repeat([1.0, 2.0, 4.0], 5), rng.random((2000, 5)))),
        ("wallenius root, c=100", "wallenius_log_root", (np.ones(100), w100, 37.0)),
    ]


def main(dataset=None, repeat=3):
    try:
        ck = importlib.import_module("ppns._ckernels")
    except ImportError:
        ck = None
        print("compiled extension not built; timing the Python fallback only")
    print(f"{'case':28s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for name, fn_name, args in kernel_cases():
        tp = _best(lambda: getattr(_pykernels, fn_name)(*args), repeat)
        if ck is None:
            print(f"{name:28s} {tp * 1e3:10.2f}ms")
            continue
        tc = _best(lambda: getattr(ck, fn_name)(*args), repeat)
        same = np.array_equal(np.asarray(getattr(_pykernels, fn_name)(*args)), np.asarray(getattr(ck, fn_name)(*args)))
        print(f"{name:28s} {tp * 1e3:10.2f}ms {tc * 1e3:10.2f}ms {tp / tc:7.1f}x{'' if same else '  MISMATCH'}")
    if dataset:
        _end_to_end(dataset, ck is not None)


def _end_to_end(dataset, have_ext):
    from . import _backend
    from .predict import evaluate_mae, sample_targets
    from .ratings import ingest_movielens
    from .selection import SelectionPolicy

    matrix = ingest_movielens(dataset)
    targets = sample_targets(matrix, 20, 0)
    policy = SelectionPolicy("ppns", 100, 1.0, 2)
    saved = (_backend.sequential_draw, _backend.wallenius_log_root)
    timings = {}
    try:
        for label, mod in [("python", _pykernels)] + ([("cython", importlib.import_module("ppns._ckernels"))] if have_ext else []):
            _backend.sequential_draw, _backend.wallenius_log_root = mod.sequential_draw, mod.wallenius_log_root
            t0 = time.perf_counter()
            rep = evaluate_mae(matrix, policy, targets, seed=0)
            timings[label] = (time.perf_counter() - t0, rep.mae)
    finally:
        _backend.sequential_draw, _backend.wallenius_log_root = saved
    for label, (t, mae) in timings.items():
        print(f"PPNS k=100 beta=2, 20 targets LOO ({label}): {t:.2f}s  MAE={mae:.6f}")
