"""Compare the compiled and pure-Python angular kernels.

Run ``python benchmarks/bench_kernels.py``.  Times the n = 4 offset
quadrature, a dense log-average matrix and a full kernel build, once per
backend, and reports the largest difference relative to the largest entry.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qcurv import kernel as kmod
from qcurv import make_grid, make_params


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def _with_backend(backend, fn):
    saved = kmod._backend
    kmod._backend = backend
    try:
        return fn()
    finally:
        kmod._backend = saved


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--m", type=int, default=1024, help="grid size for the kernel build")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    try:
        from qcurv import _ckernels
    except ImportError:
        print("compiled backend not built; only the Python backend is available")
        _ckernels = None
    backends = [("python", kmod._pykernels)]
    if _ckernels is not None:
        backends.insert(0, ("compiled", _ckernels))

    t = np.random.default_rng(0).uniform(0.0, 0.999, 200_000)
    r = np.geomspace(1e-3, 1e3, 400)
    params = make_params(4, 0.0)
    grid = make_grid(args.m, 1e-6, 1e4, 0.0, 4)
    cases = [
        ("log_offsets n=4, 2e5 points", lambda: kmod.log_offsets(4, t)),
        ("log_average_matrix n=4, 400x400", lambda: kmod.log_average_matrix(4, r, r)),
        (f"build_kernel n=4, m={args.m}", lambda: kmod.build_kernel(params, grid).entries),
    ]
    print(f"{'case':<36}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'rel diff':>12}")
    for label, fn in cases:
        times, outs = [], []
        for _, backend in backends:
            sec, out = _with_backend(backend, lambda: _time(fn, args.repeat))
            times.append(sec)
            outs.append(np.asarray(out))
        scale = float(np.max(np.abs(outs[0]))) or 1.0
        diff = max(float(np.max(np.abs(o - outs[0]))) for o in outs) / scale
        print(f"{label:<36}" + "".join(f"{s:>11.3f}s" for s in times) + f"{diff:>12.2e}")


if __name__ == "__main__":
    main()
