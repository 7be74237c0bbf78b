"""Compiled vs numpy kernel throughput on identical pre-drawn randomness.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from tvmcaqc import gen_ri1d, gen_sk
from tvmcaqc.jastrow import JastrowParams
from tvmcaqc.kernels import get_backend
from tvmcaqc.oracles import simulated_annealing
from tvmcaqc.sampler import SamplingPlan, sample_batch


def random_params(inst, rng):
    p = JastrowParams.zeros(inst)
    k = p.n_params
    return p.with_flat(0.3 * (rng.standard_normal(k) + 1j * rng.standard_normal(k)))


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--samples", type=int, default=10_000)
    args = ap.parse_args()

    try:
        compiled = get_backend("cython")
    except ImportError:
        print("compiled backend unavailable; build with `pip install -e . --no-build-isolation`")
        return
    numpy_backend = get_backend("python")
    rng = np.random.default_rng(0)

    print(f"{'case':<28}{'chains':>7}{'cython s':>11}{'python s':>11}{'speedup':>9}")
    for label, inst in (("RI1D N=8", gen_ri1d(8, 1)), ("RI1D N=64", gen_ri1d(64, 1)),
                        ("SK N=24", gen_sk(24, 1))):
        p = random_params(inst, rng)
        for chains in (1, 16):
            plan = SamplingPlan(n_chains=chains, n_samples=args.samples)

            def run(backend):
                return sample_batch(p, inst, 0.5, plan, seed=1, backend=backend)

            tc = best_of(lambda: run(compiled), args.repeat)
            tp = best_of(lambda: run(numpy_backend), args.repeat)
            a, b = run(compiled), run(numpy_backend)
            assert a.n_accepted == b.n_accepted, "backends diverged"
            print(f"{'sample ' + label:<28}{chains:>7}{tc:>11.3f}{tp:>11.3f}{tp / tc:>9.1f}")

    inst = gen_sk(24, 2)
    for runs in (1, 100):
        tc = best_of(lambda: simulated_annealing(inst, 1000, seed=3, n_runs=runs, backend=compiled), args.repeat)
        tp = best_of(lambda: simulated_annealing(inst, 1000, seed=3, n_runs=runs, backend=numpy_backend), args.repeat)
        print(f"{'anneal SK N=24 1000 sweeps':<28}{runs:>7}{tc:>11.3f}{tp:>11.3f}{tp / tc:>9.1f}")


if __name__ == "__main__":
    main()
