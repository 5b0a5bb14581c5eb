#!/usr/bin/env python3
"""Compare the compiled and pure-Python kernels on the hot path.

The equilibrium oracle and every rate protocol spend their time in two
calls per round: step_round (one update of all buyer rows) and phi_terms
(per-buyer potential contributions). This script times both backends on a
sweep of market sizes and reports the per-round cost and speedup.

Usage: python benchmarks/bench_kernels.py [--rounds 2000]
"""

import argparse
import time

import numpy as np

from prores import _kernels
from prores import market as mkt


def bench_backend(backend, market, b0, rounds):
    kinds, rhos = market.kinds, market.rhos
    weights, budgets = market.weights, market.budgets
    step, phi = backend.step_round, backend.phi_terms
    b = b0.copy()
    for _ in range(20):  # warmup
        b = step(b, kinds, rhos, weights, budgets, 1)
        phi(b, kinds, rhos, weights, True)
    b = b0.copy()
    t0 = time.perf_counter()
    for _ in range(rounds):
        b = step(b, kinds, rhos, weights, budgets, 1)
        phi(b, kinds, rhos, weights, True)
    elapsed = time.perf_counter() - t0
    return elapsed / rounds, b


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rounds", type=int, default=2000)
    args = parser.parse_args()

    backends = _kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    if "compiled" not in backends:
        print("compiled kernels not built; run `python setup.py build_ext --inplace`")

    print(f"{'market':>14} {'python us/round':>16} {'compiled us/round':>18} {'speedup':>8}")
    for m, n in [(5, 5), (10, 10), (30, 30), (100, 50)]:
        market = mkt.generate_random(m, n, "everything" if m >= 5 else "mixed", seed=1)
        b0 = mkt.uniform_spending(market)
        row = {}
        final = {}
        for name in backends:
            per_round, b_end = bench_backend(_kernels.get_backend(name), market,
                                             b0, args.rounds)
            row[name] = per_round
            final[name] = b_end
        if len(backends) == 2:
            drift = float(np.max(np.abs(final["python"] - final["compiled"])))
            assert drift < 1e-9, f"backends disagree by {drift}"
            print(f"{f'{m}x{n}':>14} {row['python']*1e6:16.1f} "
                  f"{row['compiled']*1e6:18.1f} {row['python']/row['compiled']:7.1f}x")
        else:
            print(f"{f'{m}x{n}':>14} {row['python']*1e6:16.1f} {'-':>18} {'-':>8}")


if __name__ == "__main__":
    main()
