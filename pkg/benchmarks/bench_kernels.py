#!/usr/bin/env python3
"""Time the numba kernels against their numpy twins.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from peakcap import _kernels
from peakcap.channel import EllipseConstraint
from peakcap.inputs import orbit_shares
from peakcap.quadrature import gauss_hermite_rule, tensor_nodes


def _problem(n_atoms, order):
    c = EllipseConstraint(1.2, 0.8)
    theta = np.linspace(0.0, 0.5 * np.pi, n_atoms)
    x1 = np.sort(c.r_p * np.cos(theta))
    mu, share, owner = orbit_shares(x1, c)
    reps = np.column_stack([x1, c.r_m * np.sqrt(np.clip(1 - (x1 / c.r_p) ** 2, 0, None))])
    z, omega = tensor_nodes(gauss_hermite_rule(order))
    w = np.full(n_atoms, 1.0 / n_atoms)
    logw = np.log(share * w[owner])
    return reps, z, omega, mu, logw, owner, share, w


def _time(fn, repeat):
    fn()  # warm-up (and JIT compile)
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    cases = [(12, 96), (48, 24), (48, 96)]
    print(f"{'kernel':<22}{'atoms':>6}{'order':>6}{'numba ms':>11}{'numpy ms':>11}{'speedup':>9}")
    for n_atoms, order in cases:
        reps, z, omega, mu, logw, owner, share, w = _problem(n_atoms, order)
        tensor, shift = _kernels.orbit_tensor(reps, z, mu, owner, share, n_atoms)
        kernels = {
            "shifted_info_density": lambda: _kernels.shifted_info_density(reps, z, omega, mu, logw),
            "shifted_stats": lambda: _kernels.shifted_stats(reps, z, omega, mu, logw),
            "orbit_tensor": lambda: _kernels.orbit_tensor(reps, z, mu, owner, share, n_atoms),
            "orbit_info_density": lambda: _kernels.orbit_info_density(tensor, shift, omega, w),
        }
        for name, fn in kernels.items():
            times = {}
            results = {}
            for b in ("numba", "numpy"):
                prev = _kernels.use_backend(b)
                times[b] = _time(fn, args.repeat)
                results[b] = fn()
                _kernels.use_backend(prev)
            a, b = results["numba"], results["numpy"]
            a = a if isinstance(a, tuple) else (a,)
            b = b if isinstance(b, tuple) else (b,)
            # the twins must agree before their timings mean anything
            for u, v in zip(a, b):
                assert np.allclose(u, v, rtol=1e-12, atol=1e-13), name
            s = times["numpy"] / times["numba"]
            print(f"{name:<22}{n_atoms:>6}{order:>6}{times['numba'] * 1e3:>11.3f}{times['numpy'] * 1e3:>11.3f}{s:>8.1f}x")


if __name__ == "__main__":
    main()
