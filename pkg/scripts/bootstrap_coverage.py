#!/usr/bin/env python3
"""Empirical coverage of the percentile bootstrap interval for AUC ROC.

Scores follow a binormal model: negatives N(0, 1), positives N(d, 1), so
the population AUC is Phi(d / sqrt(2)). For each (n, d) cell we draw
``--trials`` samples, build the interval, and count how often it covers
the population value.

    python3 scripts/bootstrap_coverage.py --trials 200 --n 50 200 800 --d 0.5 1.0 2.0
"""

import argparse
import math
import sys
import time

import numpy as np

from mammoeval.metrics import AUC_ROC, EvaluationConfig, bootstrap_ci


def coverage(n: int, d: float, trials: int, replicates: int, prevalence: float, seed: int) -> tuple[float, float]:
    truth = 0.5 * (1.0 + math.erf(d / 2.0))
    n_pos = max(1, round(n * prevalence))
    hits, widths = 0, []
    for t in range(trials):
        rng = np.random.default_rng([seed, n, t])
        s = np.r_[rng.normal(d, 1, n_pos), rng.normal(0, 1, n - n_pos)]
        y = np.r_[np.ones(n_pos, int), np.zeros(n - n_pos, int)]
        r = bootstrap_ci(s, y, AUC_ROC, EvaluationConfig(n_replicates=replicates, master_seed=t))
        hits += r.ci_low <= truth <= r.ci_high
        widths.append(r.ci_high - r.ci_low)
    return hits / trials, float(np.mean(widths))


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--replicates", type=int, default=2000)
    p.add_argument("--n", type=int, nargs="+", default=[50, 200, 800])
    p.add_argument("--d", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    p.add_argument("--prevalence", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    print(f"{'n':>5} {'d':>5} {'AUC':>7} {'coverage':>9} {'mean width':>11} {'secs':>6}")
    for n in args.n:
        for d in args.d:
            t0 = time.perf_counter()
            cov, width = coverage(n, d, args.trials, args.replicates, args.prevalence, args.seed)
            auc = 0.5 * (1.0 + math.erf(d / 2.0))
            print(f"{n:5d} {d:5.2f} {auc:7.4f} {cov:9.3f} {width:11.4f} {time.perf_counter() - t0:6.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
