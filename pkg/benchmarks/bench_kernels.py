"""Compare the numba kernels against the pure-numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 7] [--fit]

Kernel timings call both implementations directly in one process. With
``--fit`` an Iris fit is also timed end to end in two subprocesses, one per
value of ``PROXDEEP_NUMBA``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from proxdeep import kernels

FIT_SNIPPET = """
import time
from proxdeep.cli import prepare_data
from proxdeep.config import parse_config
from proxdeep.admm import AdmmConfig, fit
from proxdeep import kernels
cfg = parse_config({"admm": {"max_outer": 300}})
_, train, _, _ = prepare_data(cfg)
arch = cfg.arch.build(4)
fit(train.targets(), train.x, arch, cfg.penalty.build(), AdmmConfig(max_outer=2))  # warm-up / compile
t = time.perf_counter()
fit(train.targets(), train.x, arch, cfg.penalty.build(), cfg.admm.build(0))
print(kernels.BACKEND, time.perf_counter() - t)
"""


def cases(rng):
    k, n = 3, 105
    y = np.zeros((k, n))
    y[rng.integers(0, k, size=n), np.arange(n)] = 1.0
    eta = rng.normal(scale=2.0, size=(k, n))
    lam = np.ones((k, n))
    f = rng.normal(size=(11, n))
    gram = f @ f.T
    b = rng.normal(size=(3, 11))
    w0 = np.zeros((3, 11))
    mask = np.ones((3, 11), dtype=bool)
    step = 1.0 / np.linalg.eigvalsh(gram).max()
    z = rng.normal(size=(10, n))
    return {
        "sigmoid (10x105)": lambda m: m.sigmoid(z),
        "softmax_cols (3x105)": lambda m: m.softmax_cols(eta),
        "prox_multinomial_fb (3x105, 50 it)":
            lambda m: m.prox_multinomial_fb(y, eta, lam, 0.5, eta, 50, 1e-8),
        "ista_gram (3x11, 25 it)":
            lambda m: m.ista_gram(w0, gram, b, 0.01 * step, mask, step, 25),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--fit", action="store_true", help="also time a 300-iteration Iris fit")
    args = ap.parse_args()
    if kernels.numba_impl is None:
        sys.exit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s}")
    for name, call in cases(rng).items():
        call(kernels.numba_impl)       # compile outside the timing
        res = {}
        for label, impl in (("numpy", kernels.numpy_impl), ("numba", kernels.numba_impl)):
            t = timeit.Timer(lambda: call(impl))
            loops, _ = t.autorange()
            res[label] = min(t.repeat(args.repeat, loops)) / loops * 1e6
        print(f"{name:40s} {res['numpy']:10.1f} {res['numba']:10.1f} "
              f"{res['numpy'] / res['numba']:8.2f}")
    if args.fit:
        for flag in ("0", "1"):
            env = dict(os.environ, PROXDEEP_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", FIT_SNIPPET], env=env, check=True,
                                 capture_output=True, text=True).stdout.split()
            print(f"iris fit, 300 outer iterations, {out[0]:5s}: {float(out[1]):.2f} s")


if __name__ == "__main__":
    main()
