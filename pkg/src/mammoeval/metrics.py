"""Non-parametric AUC ROC / AUC PR, curves, and percentile bootstrap CIs.

Both estimators work on *threshold groups*: samples sorted by descending
score, with tied scores forming one group. A bootstrap resample is the same
sample set with integer multiplicities, so replicates are evaluated by
re-weighting the groups of the original sample instead of re-sorting.

* AUC ROC is the Mann-Whitney statistic: the fraction of (positive, negative)
  pairs ranked correctly, ties counting one half.
* AUC PR is step-wise average precision, ``sum (R_i - R_{i-1}) * P_i`` over
  threshold groups, with no interpolation between operating points.

Replicate ``r`` draws from ``numpy.random.default_rng([master_seed, r])``,
so the interval does not depend on how replicates are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from mammoeval.errors import DegenerateLabels, TooManySkips

AUC_ROC = "AUC_ROC"
AUC_PR = "AUC_PR"
METRICS = (AUC_ROC, AUC_PR)
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class ScoredSample:
    score: float
    label: int


@dataclass(frozen=True)
class EvaluationConfig:
    n_replicates: int = 2000
    confidence: float = 0.95
    master_seed: int = 0
    max_redraws: int = 100
    skip_budget: float = 0.10

    def __post_init__(self):
        if self.n_replicates < 1:
            raise ValueError("n_replicates must be >= 1")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must be in (0, 1)")
        if self.max_redraws < 0:
            raise ValueError("max_redraws must be >= 0")


@dataclass(frozen=True)
class MetricResult:
    metric: str
    level: str
    point: float
    ci_low: float
    ci_high: float
    curve: tuple[tuple[float, float], ...] = ()
    n_samples: int | None = None
    n_positives: int | None = None
    n_replicates: int | None = None
    n_skipped: int | None = None
    confidence: float | None = None

    def format(self) -> str:
        return format_interval(self.point, self.ci_low, self.ci_high)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["curve"] = [list(p) for p in self.curve]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> MetricResult:
        d = dict(d)
        d["curve"] = tuple(tuple(p) for p in d.get("curve", ()))
        return cls(**d)


def format_interval(point: float, low: float, high: float) -> str:
    return f"{point:.3f} ({low:.3f}-{high:.3f})"


def as_arrays(scores, labels=None) -> tuple[np.ndarray, np.ndarray]:
    """Accept ``(scores, labels)`` arrays or a sequence of :class:`ScoredSample`."""
    if labels is None:
        samples = list(scores)
        scores = [s.score for s in samples]
        labels = [s.label for s in samples]
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores but {y.size} labels")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    if y.size and not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return s, y.astype(np.int64)


def _require(y: np.ndarray, need_negative: bool) -> None:
    n_pos = int(y.sum())
    if n_pos == 0:
        raise DegenerateLabels("no positive samples")
    if need_negative and n_pos == y.size:
        raise DegenerateLabels("no negative samples")


@dataclass(frozen=True)
class _Groups:
    order: np.ndarray        # sample indices, descending score
    starts: np.ndarray       # first position of each tie group in ``order``
    pos_sorted: np.ndarray   # labels in ``order``

    @classmethod
    def build(cls, s: np.ndarray, y: np.ndarray) -> _Groups:
        order = np.argsort(-s, kind="stable")
        ss = s[order]
        starts = np.flatnonzero(np.r_[True, ss[1:] != ss[:-1]])
        return cls(order, starts, y[order].astype(np.float64))

    def counts(self, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-group positive and negative weight; ``weights`` is (R, n)."""
        w = weights[:, self.order]
        pos = np.add.reduceat(w * self.pos_sorted, self.starts, axis=1)
        neg = np.add.reduceat(w * (1.0 - self.pos_sorted), self.starts, axis=1)
        return pos, neg


def _roc_from_groups(pos: np.ndarray, neg: np.ndarray) -> np.ndarray:
    n_pos = pos.sum(axis=1)
    n_neg = neg.sum(axis=1)
    neg_below = n_neg[:, None] - np.cumsum(neg, axis=1)
    concordant = (pos * (neg_below + 0.5 * neg)).sum(axis=1)
    return concordant / (n_pos * n_neg)


def _ap_from_groups(pos: np.ndarray, neg: np.ndarray) -> np.ndarray:
    tp = np.cumsum(pos, axis=1)
    fp = np.cumsum(neg, axis=1)
    called = tp + fp
    precision = np.divide(tp, called, out=np.zeros_like(tp), where=called > 0)
    # weight by the recall step so a single tie group returns its precision unchanged
    return (pos / pos.sum(axis=1, keepdims=True) * precision).sum(axis=1)


def auc_roc(scores, labels=None) -> float:
    s, y = as_arrays(scores, labels)
    _require(y, need_negative=True)
    pos, neg = _Groups.build(s, y).counts(np.ones((1, s.size)))
    return float(_roc_from_groups(pos, neg)[0])


def auc_pr(scores, labels=None) -> float:
    s, y = as_arrays(scores, labels)
    _require(y, need_negative=False)
    pos, neg = _Groups.build(s, y).counts(np.ones((1, s.size)))
    return float(_ap_from_groups(pos, neg)[0])


def roc_curve(scores, labels=None) -> list[tuple[float, float]]:
    """(FPR, TPR) from (0, 0) through one point per distinct score."""
    s, y = as_arrays(scores, labels)
    _require(y, need_negative=True)
    pos, neg = _Groups.build(s, y).counts(np.ones((1, s.size)))
    tp, fp = np.cumsum(pos[0]), np.cumsum(neg[0])
    return [(0.0, 0.0)] + [(float(f / fp[-1]), float(t / tp[-1])) for f, t in zip(fp, tp)]


def pr_curve(scores, labels=None) -> list[tuple[float, float]]:
    """(recall, precision) from (0, 1) through one point per distinct score."""
    s, y = as_arrays(scores, labels)
    _require(y, need_negative=False)
    pos, neg = _Groups.build(s, y).counts(np.ones((1, s.size)))
    tp, fp = np.cumsum(pos[0]), np.cumsum(neg[0])
    return [(0.0, 1.0)] + [(float(t / tp[-1]), float(t / (t + f))) for t, f in zip(tp, fp)]


def trapezoid(points) -> float:
    return math.fsum((x1 - x0) * (y0 + y1) / 2 for (x0, y0), (x1, y1) in zip(points, points[1:]))


_ESTIMATORS = {AUC_ROC: (auc_roc, roc_curve, _roc_from_groups),
               AUC_PR: (auc_pr, pr_curve, _ap_from_groups)}


def replicate_rng(master_seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng([master_seed & _U64, r])


def draw_replicate(y: np.ndarray, master_seed: int, r: int, max_redraws: int) -> np.ndarray | None:
    """Resample indices for replicate ``r``, or None once redraws run out.

    A resample holding a single class is redrawn from the same stream.
    """
    n = y.size
    rng = replicate_rng(master_seed, r)
    for _ in range(max_redraws + 1):
        idx = rng.integers(0, n, size=n)
        k = int(y[idx].sum())
        if 0 < k < n:
            return idx
    return None


def _replicate_block(s, y, groups, metric, config, rs) -> tuple[np.ndarray, int]:
    n = y.size
    rows = []
    skipped = 0
    for r in rs:
        idx = draw_replicate(y, config.master_seed, r, config.max_redraws)
        if idx is None:
            skipped += 1
            continue
        rows.append(np.bincount(idx, minlength=n))
    if not rows:
        return np.empty(0), skipped
    pos, neg = groups.counts(np.asarray(rows, dtype=np.float64))
    return _ESTIMATORS[metric][2](pos, neg), skipped


def bootstrap_statistics(scores, labels, metric: str, config: EvaluationConfig,
                         n_jobs: int = 1) -> tuple[np.ndarray, int]:
    """Replicate statistics in replicate order, plus the number skipped."""
    s, y = as_arrays(scores, labels)
    groups = _Groups.build(s, y)
    # weight blocks of about 1M entries; the size depends only on n, never on n_jobs
    block = max(1, min(config.n_replicates, 1_000_000 // max(1, s.size)))
    blocks = [range(a, min(a + block, config.n_replicates)) for a in range(0, config.n_replicates, block)]
    if n_jobs == 1 or len(blocks) == 1:
        parts = [_replicate_block(s, y, groups, metric, config, rs) for rs in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda rs: _replicate_block(s, y, groups, metric, config, rs), blocks))
    stats = np.concatenate([p[0] for p in parts])
    return stats, sum(p[1] for p in parts)


def bootstrap_ci(scores, labels, metric: str, config: EvaluationConfig | None = None,
                 level: str = "breast", n_jobs: int = 1) -> MetricResult:
    """Point estimate, percentile bootstrap interval and curve for ``metric``.

    The interval is the (alpha/2, 1 - alpha/2) linear-interpolation quantile
    pair of the non-skipped replicate statistics.
    """
    if metric not in _ESTIMATORS:
        raise ValueError(f"unknown metric {metric!r}")
    config = config or EvaluationConfig()
    s, y = as_arrays(scores, labels)
    point_fn, curve_fn, _ = _ESTIMATORS[metric]
    _require(y, need_negative=True)
    point = point_fn(s, y)
    stats, skipped = bootstrap_statistics(s, y, metric, config, n_jobs)
    if skipped > config.skip_budget * config.n_replicates or stats.size == 0:
        raise TooManySkips(f"{skipped} of {config.n_replicates} bootstrap replicates were single-class")
    alpha = 1.0 - config.confidence
    low, high = np.quantile(stats, [alpha / 2, 1 - alpha / 2], method="linear")
    return MetricResult(
        metric=metric,
        level=level,
        point=point,
        ci_low=float(low),
        ci_high=float(high),
        curve=tuple(curve_fn(s, y)),
        n_samples=int(s.size),
        n_positives=int(y.sum()),
        n_replicates=config.n_replicates,
        n_skipped=skipped,
        confidence=config.confidence,
    )


def evaluate(scores, labels, level: str, config: EvaluationConfig, n_jobs: int = 1) -> list[MetricResult]:
    return [bootstrap_ci(scores, labels, m, config, level=level, n_jobs=n_jobs) for m in METRICS]
