"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--events 3000] [--json out.json]

Per-kernel timings use inputs sized like an N=100 simulation step (9,900
dyads, 9 effect columns). The end-to-end rows time one dyadic simulation
and one likelihood fit with each backend and check the results agree.
"""

import argparse
import json
import sys
import time
import timeit

import numpy as np

from remsim import kernels
from remsim.core import DyadicModel, EffectSpec, RiskSet, SimConfig
from remsim.dyadic import simulate_dyadic
from remsim.estimate import mle

KINDS = ["inertia", "reciprocity", "indegreeSender", "indegreeReceiver",
         "outdegreeSender", "outdegreeReceiver", "otp", "itp"]


def kernel_cases(rng, n=100, p=9):
    d = n * (n - 1)
    X = rng.normal(size=(d, p))
    eta = rng.normal(size=d)
    w = rng.exponential(size=d)
    W = rng.exponential(size=(n, n))
    np.fill_diagonal(W, 0.0)
    otp, osp, isp = (rng.random((n, n)) for _ in range(3))

    def standardize():
        kernels.standardize_columns(X.copy(), list(range(1, p)))

    def sample():
        kernels.sample_logits(eta, 0.37)

    def soft():
        kernels.softmax(eta)

    def twopath():
        kernels.twopath_update(W, otp, osp, isp, 3, 7, 1.0, 1.5)

    def gram():
        kernels.weighted_gram(X, w)

    return {"standardize_columns": standardize, "sample_logits": sample, "softmax": soft,
            "twopath_update": twopath, "weighted_gram": gram}


def time_kernels(repeat):
    rows = {}
    for backend in kernels.available():
        kernels.set_backend(backend)
        cases = kernel_cases(np.random.default_rng(0))
        for name, fn in cases.items():
            number = 50
            best = min(timeit.repeat(fn, number=number, repeat=repeat)) / number
            rows.setdefault(name, {})[backend] = best
    return rows


def end_to_end(events):
    eff = [EffectSpec("baseline")] + [EffectSpec(k, scaling="std") for k in KINDS]
    model = DyadicModel(eff, [-6.0, 0.3, 0.2, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05])
    rows, hist, fits = {}, {}, {}
    for backend in kernels.available():
        kernels.set_backend(backend)
        t0 = time.perf_counter()
        hist[backend] = simulate_dyadic(model, SimConfig(100, max_events=events, seed=1))
        rows.setdefault("simulate_dyadic", {})[backend] = time.perf_counter() - t0
        t0 = time.perf_counter()
        fits[backend] = mle(eff, hist[backend], RiskSet.full(100), max_iter=3)
        rows.setdefault("mle (3 Newton steps)", {})[backend] = time.perf_counter() - t0
    if len(hist) == 2:
        a, b = hist.values()
        fa, fb = fits.values()
        agree = a == b and np.allclose(fa.beta_hat, fb.beta_hat, rtol=1e-9, atol=1e-12)
    else:
        agree = None
    return rows, agree


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--events", type=int, default=3000, help="events in the end-to-end simulation")
    ap.add_argument("--json", help="also write the timings here")
    args = ap.parse_args(argv)

    original = kernels.BACKEND
    try:
        rows = time_kernels(args.repeat)
        e2e, agree = end_to_end(args.events)
    finally:
        kernels.set_backend(original)
    rows.update(e2e)

    backends = kernels.available()
    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, t in rows.items():
        line = f"{name:<24}" + "".join(f"{t[b] * 1e3:>10.3f}ms" for b in backends)
        if len(backends) == 2:
            line += f"{t['python'] / t['cython']:>11.1f}x"
            compiled = getattr(kernels._ckernels, name, None)
            if compiled is not None and compiled is getattr(kernels._pykernels, name):
                line += "  (numpy in both)"
        print(line)
    if agree is not None:
        print(f"backends agree end to end: {agree}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"seconds": rows, "backends": list(backends), "agree": agree}, fh, indent=2)
    return 0 if agree in (None, True) else 1


if __name__ == "__main__":
    sys.exit(main())
