"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--size small|full]

Each kernel runs on identical inputs in every available backend; the
script checks that the results agree and prints the best wall time.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from fatoubasin import analysis, kernels
from fatoubasin.fatou import default_machine


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases(size: str):
    m = default_machine()
    fwd = m.fmap._fwd
    n = 64 if size == "small" else 128
    z, w = analysis.DEFAULT_SLICE.points(n, n)
    z, w = z.ravel(), w.ravel()
    args = m.kernel_args()
    rng = np.random.default_rng(0)
    pz = -0.01 * rng.uniform(0.1, 1, 2000) + 0j
    pw = -0.02 * rng.uniform(0.5, 1, 2000) + 0j
    steps = 200 if size == "small" else 1000
    return {
        "chain_apply x10^4": lambda k: [k.chain_apply(-0.01 + 0.001j, -0.02 + 0j, *fwd)
                                      for _ in range(10_000)][-1],
        f"orbit 1 point x {10 * steps}": lambda k: k.orbit(-0.01 + 0j, -0.02 + 0j, 10 * steps, *fwd)[0],
        f"iterate_many 2000 pts x {steps}": lambda k: k.iterate_many(pz, pw, steps, *fwd)[0],
        f"classify_many {n}x{n} budget 1000": lambda k: k.classify_many(z, w, 1000, *fwd, *args)[0],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", choices=("small", "full"), default="small")
    a = ap.parse_args()
    backends = kernels.backends()
    print(f"backends: {', '.join(backends)}  (selected: {kernels.BACKEND})")
    print(f"{'kernel':38s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup  agree")
    for name, fn in cases(a.size).items():
        res = {}
        for b, mod in backends.items():
            res[b] = _best(lambda: fn(mod), a.repeat)
        outs = [np.asarray(r[1]) for r in res.values()]
        agree = all(np.allclose(o, outs[0], rtol=1e-12, atol=1e-300, equal_nan=True) for o in outs)
        times = "".join(f"{res[b][0]:12.4f}" for b in backends)
        speed = res["python"][0] / res["cython"][0] if "cython" in res else float("nan")
        print(f"{name:38s}{times}  {speed:9.1f}x  {agree}")


if __name__ == "__main__":
    main()
