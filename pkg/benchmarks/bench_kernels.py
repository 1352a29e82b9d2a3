"""Compiled vs numpy kernels on the demo example map.

    python3 benchmarks/bench_kernels.py [--n 100000] [--repeat 3]

Reports the best wall time per kernel and the max absolute difference
between the two backends' outputs.
"""

import argparse
import time

import numpy as np

from dasplit import kernels
from dasplit.surgery import build_example_map, stratified_points


def best_time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000, help="points per kernel call")
    ap.add_argument("--n-bundle", type=int, default=5_000, help="points for the bundle kernel")
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()

    f = build_example_map()
    T = f.table
    rng = np.random.default_rng(0)
    per = a.n // 5
    X = stratified_points(f, a.n - 4 * per, per, per, rng)
    Xb = X[:: max(1, len(X) // a.n_bundle)][: a.n_bundle]
    Y = kernels.python_backend.step(T, X)

    cases = [
        ("step", lambda k: k.step(T, X)),
        ("step_inverse", lambda k: k.step_inverse(T, Y)),
        ("jacobian", lambda k: k.jacobian(T, X)),
        ("bundle_E", lambda k: k.bundle(T, Xb, 0, 200, 1e-10)[0]),
        ("bundle_F", lambda k: k.bundle(T, Xb, 1, 200, 1e-10)[0]),
    ]
    compiled = kernels.backend if kernels.backend_name() == "compiled" else None
    print(f"example map, {len(X)} points ({len(Xb)} for bundles), best of {a.repeat}")
    print(f"{'kernel':14s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases:
        tp, op = best_time(lambda: fn(kernels.python_backend), a.repeat)
        if compiled is None:
            print(f"{name:14s} {tp:10.4f} {'n/a':>11s}")
            continue
        tc, oc = best_time(lambda: fn(compiled), a.repeat)
        if name.startswith("bundle"):
            # directions are defined up to sign
            diff = np.abs(np.abs((op * oc).sum(axis=1)) - 1).max()
        else:
            diff = np.abs(op - oc).max()
        print(f"{name:14s} {tp:10.4f} {tc:11.4f} {tp / tc:8.1f} {diff:10.2e}")
    if compiled is None:
        print("compiled kernels not available; only the numpy backend was timed")


if __name__ == "__main__":
    main()
