"""Brute-force reference implementations, deliberately naive.

None of these share code with the package: exact rationals, explicit pair
and threshold enumeration, and a replicate-by-replicate bootstrap loop.
"""

import math
from fractions import Fraction

import numpy as np


def pair_count_auc(scores, labels) -> Fraction:
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = Fraction(0)
    for p in pos:
        for n in neg:
            if p > n:
                total += 1
            elif p == n:
                total += Fraction(1, 2)
    return total / (len(pos) * len(neg))


def pair_matrix_auc(scores, labels) -> float:
    """Same pair enumeration as :func:`pair_count_auc`, as one float matrix."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    diff = s[y == 1][:, None] - s[y == 0][None, :]
    return float(((diff > 0) + 0.5 * (diff == 0)).mean())


def threshold_ap(scores, labels) -> Fraction:
    n_pos = sum(1 for y in labels if y == 1)
    ap = Fraction(0)
    prev_recall = Fraction(0)
    for t in sorted(set(scores), reverse=True):
        called = [y for s, y in zip(scores, labels) if s >= t]
        tp = sum(called)
        recall = Fraction(tp, n_pos)
        precision = Fraction(tp, len(called))
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def half_up_rescale(v: int, depth: int) -> int:
    return math.floor(Fraction(v * 65535, 2 ** depth - 1) + Fraction(1, 2))


def linear_quantile(sorted_values, q):
    pos = q * (len(sorted_values) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = pos - lo
    return sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * frac


def reference_bootstrap(scores, labels, stat, n_replicates, confidence, master_seed, max_redraws=100):
    """Straight loop over replicates; ``stat`` gets plain resampled lists."""
    scores = list(scores)
    labels = list(labels)
    n = len(scores)
    values = []
    skipped = 0
    for r in range(n_replicates):
        rng = np.random.default_rng([master_seed, r])
        for _ in range(max_redraws + 1):
            idx = rng.integers(0, n, size=n)
            ys = [labels[i] for i in idx]
            if 0 < sum(ys) < n:
                break
        else:
            skipped += 1
            continue
        values.append(float(stat([scores[i] for i in idx], ys)))
    values.sort()
    alpha = 1 - confidence
    return linear_quantile(values, alpha / 2), linear_quantile(values, 1 - alpha / 2), skipped
