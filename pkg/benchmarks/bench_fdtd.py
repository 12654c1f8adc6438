"""Benchmark the compiled FDTD kernel against the numpy fallback.

Runs the same simulation step on both backends, reports wall-clock
throughput and the speedup, and asserts the results are bit-identical.

Usage: python benchmarks/bench_fdtd.py [grid_size] [steps]
"""

import sys
import time

import numpy as np

from soundfield.kernels import fallback

try:
    from soundfield.kernels import _fdtd as compiled
except ImportError:
    compiled = None


def make_state(n, seed=0):
    g = np.random.default_rng(seed)
    px = g.normal(size=(n, n)) * 1e-3
    py = g.normal(size=(n, n)) * 1e-3
    vx = np.zeros((n - 1, n))
    vy = np.zeros((n, n - 1))
    p = np.empty((n, n))
    ones = np.ones_like
    coeffs = dict(
        vax=ones(vx), vbx=ones(vx) * 2.9e-3, vay=ones(vy), vby=ones(vy) * 2.9e-3,
        pax=ones(px), pbx=ones(px) * 1.7, pay=ones(py), pby=ones(py) * 1.7,
    )
    return (px, py, vx, vy, p), coeffs


def run(impl, n, steps, seed=0):
    state, coeffs = make_state(n, seed)
    t0 = time.perf_counter()
    for _ in range(steps):
        impl.fdtd_step(*state, **coeffs)
    elapsed = time.perf_counter() - t0
    return state, elapsed


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 256
    steps = int(sys.argv[2]) if len(sys.argv) > 2 else 500
    cell_steps = n * n * steps

    state_np, t_np = run(fallback, n, steps)
    print(f"numpy    : {t_np:8.3f} s  ({cell_steps / t_np / 1e6:8.1f} Mcell-steps/s)")

    if compiled is None:
        print("compiled extension not built; skipping comparison")
        return
    state_cy, t_cy = run(compiled, n, steps)
    print(f"cython   : {t_cy:8.3f} s  ({cell_steps / t_cy / 1e6:8.1f} Mcell-steps/s)")
    print(f"speedup  : {t_np / t_cy:8.2f}x")

    for a, b, name in zip(state_np, state_cy, ("px", "py", "vx", "vy", "p")):
        if not np.array_equal(a, b):
            raise SystemExit(f"backend mismatch in {name}: max |diff| = "
                             f"{np.max(np.abs(a - b)):.3e}")
    print("backends bit-identical: yes")


if __name__ == "__main__":
    main()
