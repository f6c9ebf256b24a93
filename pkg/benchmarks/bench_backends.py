"""Numba kernels against their numpy twins on the experiment-sized problems.

    python3 benchmarks/bench_backends.py [--repeat 5]

Both backends are imported side by side, so one process times both. The
first numba call (compilation or cache load) is excluded.
"""
import argparse
import timeit

import numpy as np

from fplab import kernels
from fplab.mlp import Dataset, MlpSpec, init_params
from fplab.harness.data import build_1d_dataset, gaussian_clusters


def cases():
    grid = build_1d_dataset("sin1_3_5", 201)
    for widths in ((1, 100, 10, 1), (1, 100, 1), (1, 500, 50, 1)):
        spec = MlpSpec(widths)
        yield f"fd gradient {spec}", "fd_increments", (init_params(spec, 0), spec.widths_array,
                                                       grid.inputs, grid.targets, 1.49e-8)
    spec = MlpSpec((1, 100, 10, 1))
    rng = np.random.default_rng(0)
    swarm = init_params(spec, 0) + rng.uniform(-0.5, 0.5, (2 * spec.param_count, spec.param_count))
    yield f"batch loss x{len(swarm)} {spec}", "batch_mse", (swarm, spec.widths_array,
                                                          grid.inputs, grid.targets)
    yield f"mse {spec}", "mse", (init_params(spec, 0), spec.widths_array, grid.inputs, grid.targets)
    clusters = gaussian_clusters(550, 20, seed=0)
    yield "pairwise sq. distances 550x20", "pairwise_sqdist", (clusters.inputs,)


def best_of(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.2 and number < 10_000:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'case':40s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for label, name, call in cases():
        nb = getattr(kernels, name + "_nb")
        npy = getattr(kernels, name + "_np")
        a, b = nb(*call), npy(*call)
        a = a[0] if isinstance(a, tuple) else a
        b = b[0] if isinstance(b, tuple) else b
        assert np.allclose(a, b, rtol=1e-6, atol=1e-12), label
        t_nb = best_of(nb, call, args.repeat)
        t_np = best_of(npy, call, args.repeat)
        print(f"{label:40s} {1e3 * t_nb:10.3f} {1e3 * t_np:10.3f} {t_np / t_nb:7.2f}x")


if __name__ == "__main__":
    main()
