"""Compare the numba and pure-numpy kernels.

    python3 benchmarks/bench_kernels.py [--n 4096] [--repeat 20]

Times each kernel in isolation and one fd4 integration of the curved
equation with each backend.  The first numba call (compilation) is excluded.
"""

import argparse
import timeit

import numpy as np

from diracmap import _accel, kernels
from diracmap.fields import GridSpec
from diracmap.flat import GaussianPacket, gaussian_initial
from diracmap.mapping import map_to_curved
from diracmap.metric import wormhole_conformal_factor
from diracmap.oracle import SolverConfig, evolve_curved


def best_of(func, repeat):
    func()  # warm-up / jit
    return min(timeit.repeat(func, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy kernels can be timed")

    rng = np.random.default_rng(0)
    n = args.n
    up = rng.normal(size=n) + 1j * rng.normal(size=n)
    dn = rng.normal(size=n) + 1j * rng.normal(size=n)
    g = rng.normal(size=n)
    ks = [rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(4)]
    cases = {
        "fd4_derivative": (lambda: kernels.fd4_derivative_numpy(up, 0.1),
                           lambda: kernels.fd4_derivative_loop(up, 0.1)),
        "curved_rhs_fd4": (lambda: kernels.curved_rhs_fd4_numpy(up, dn, g, 0.1),
                           lambda: kernels.curved_rhs_fd4_loop(up, dn, g, 0.1)),
        "rk4_combine": (lambda: kernels.rk4_combine_numpy(up, *ks, 0.01),
                        lambda: kernels.rk4_combine_loop(up, *ks, 0.01)),
        "density": (lambda: kernels.density_numpy(up, dn),
                    lambda: kernels.density_loop(up, dn)),
    }
    print(f"{'kernel':<18}{'numpy [us]':>12}{'numba [us]':>12}{'speedup':>9}")
    for name, (np_fn, nb_fn) in cases.items():
        t_np = best_of(np_fn, args.repeat) * 1e6
        if _accel.HAVE_NUMBA:
            t_nb = best_of(nb_fn, args.repeat) * 1e6
            print(f"{name:<18}{t_np:>12.1f}{t_nb:>12.1f}{t_np / t_nb:>8.2f}x")
        else:
            print(f"{name:<18}{t_np:>12.1f}{'-':>12}{'-':>9}")

    cf = wormhole_conformal_factor(10.0)
    grid = GridSpec(2.0, 130.0, n)
    psi0 = map_to_curved(gaussian_initial(GaussianPacket(30.0, 5.0), grid), cf).curved
    cfg = SolverConfig.for_grid(grid, 10.0, scheme="fd4", stride=10**9)
    saved = _accel.USE_NUMBA
    try:
        timings = {}
        for backend in ("numpy", "numba"):
            if backend == "numba" and not _accel.HAVE_NUMBA:
                continue
            _accel.USE_NUMBA = backend == "numba"
            timings[backend] = best_of(lambda: evolve_curved(psi0, cf, cfg), max(1, args.repeat // 10))
    finally:
        _accel.USE_NUMBA = saved
    line = ", ".join(f"{k} {v:.3f}s" for k, v in timings.items())
    print(f"fd4 integration n={n}, {cfg.steps} steps: {line}")


if __name__ == "__main__":
    main()
