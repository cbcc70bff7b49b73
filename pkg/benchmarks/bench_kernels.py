"""Compare the compiled and pure-Python kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Times the binomial bound bisection, the entailment-set search, and a full
model-selecting calibration on a simulated dataset under each backend.
"""
import argparse
import timeit

import numpy as np

from selgen import _backend
from selgen.calibrate import sgen_semi_ms
from selgen.records import RiskBudget
from selgen.simulator import identity_world, sample_dataset


def cases():
    rng = np.random.default_rng(0)
    fe = np.sort(rng.uniform(size=2000))
    e = (rng.uniform(size=2000) < fe).astype(np.int8)
    z_e, z_u = sample_dataset(identity_world(seed=1), 2500).partition()
    budget = RiskBudget.from_total(0.25, 0.02)
    return {
        "u_binom x1000": lambda k: [k.u_binom(j, 1000, 0.01) for j in range(0, 1000)],
        "es_search n=2000": lambda k: k.es_search(fe, e, 0.1, 0.005),
        "semi-ms n=2500": lambda k: sgen_semi_ms(z_e, z_u, budget),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = _backend.available()
    print(f"{'case':<20}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, fn in cases().items():
        times = []
        for b in backends:
            with _backend.use_backend(b) as k:
                times.append(min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)))
        row = f"{label:<20}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[backends.index('python')] / times[backends.index('cython')]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
