"""Training losses and evaluation metrics."""

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .duration import duration_nll
from .errors import DegenerateInput

# (minuend, subtrahend) positions in (b_i, e_i, b_j, e_j) for each L1 term.
DIFF_TERMS = ((0, 2), (1, 2), (3, 0), (1, 3))
_PLUS = np.array([p for p, _ in DIFF_TERMS])
_MINUS = np.array([m for _, m in DIFF_TERMS])


def difference_terms(t) -> np.ndarray:
    """The four within-pair differences compared by :func:`relation_loss`.

    Accepts one quadruple or an ``(N, 4)`` array.
    """
    t = np.asarray(t, dtype=float)
    return t[..., _PLUS] - t[..., _MINUS]


def relation_loss(gold: Sequence[float], pred: Sequence[float]) -> float:
    return float(np.abs(difference_terms(gold) - difference_terms(pred)).sum())


@dataclass
class PairLossInput:
    gold: Sequence[float]
    pred: Sequence[float]
    gold_durations: Optional[tuple] = None
    pred_duration_dists: Optional[tuple] = None
    confidence_weights: Optional[tuple] = None

    def __post_init__(self):
        if self.confidence_weights is not None:
            if any(not 0.0 <= w <= 1.0 for w in self.confidence_weights):
                raise ValueError("confidence weights must lie in [0, 1]")


def total_loss(items: Sequence[PairLossInput]) -> float:
    """Confidence-weighted duration cross-entropy plus twice the relation loss."""
    if not items:
        raise ValueError("total_loss needs at least one item")
    total = 0.0
    for item in items:
        w_rel, w_dur1, w_dur2 = item.confidence_weights or (1.0, 1.0, 1.0)
        if item.gold_durations is not None and item.pred_duration_dists is not None:
            (g1, g2), (p1, p2) = item.gold_durations, item.pred_duration_dists
            total += w_dur1 * duration_nll(p1, g1) + w_dur2 * duration_nll(p2, g2)
        total += 2.0 * w_rel * relation_loss(item.gold, item.pred)
    return total


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInput("spearman needs two 1-d sequences of equal length")
    if x.size < 2:
        raise DegenerateInput("spearman needs at least two observations")
    rx = rankdata(x) - (x.size + 1) / 2.0
    ry = rankdata(y) - (y.size + 1) / 2.0
    sxx = float(rx @ rx)
    syy = float(ry @ ry)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInput("spearman is undefined for a constant sequence")
    rho = float(rx @ ry) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


def _spearman_or_nan(x, y) -> float:
    try:
        return spearman(x, y)
    except DegenerateInput:
        return math.nan


def r1_score(mae_model: float, mae_baseline: float) -> float:
    """Proportion of baseline error explained: ``1 - mae_model / mae_baseline``."""
    if mae_model == 0.0:
        return 1.0
    if mae_baseline == 0.0:
        return math.nan
    return 1.0 - mae_model / mae_baseline


@dataclass
class MetricReport:
    """Evaluation scores; fields not computed for a task stay ``None``.

    A correlation that is undefined on the given data (constant input) is NaN
    and serializes as ``null``.
    """

    rho: Optional[float] = None
    rank_diff: Optional[float] = None
    r1: Optional[float] = None
    absolute_rho: Optional[float] = None
    relative_rho: Optional[float] = None
    n: int = field(default=0)

    def to_dict(self) -> dict:
        keys = ("rho", "rank_diff", "r1", "absolute_rho", "relative_rho")
        out = {}
        for key in keys:
            value = getattr(self, key)
            if value is not None:
                out[key] = value if math.isfinite(value) else None
        out["n"] = self.n
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def eval_durations(gold: Sequence[int], pred: Sequence[int]) -> MetricReport:
    g = np.asarray([int(d) for d in gold], dtype=float)
    p = np.asarray([int(d) for d in pred], dtype=float)
    if g.size == 0 or g.shape != p.shape:
        raise DegenerateInput("gold and pred must be nonempty and equally long")
    mae = float(np.abs(g - p).mean())
    baseline = float(np.abs(g - np.median(g)).mean())
    return MetricReport(
        rho=_spearman_or_nan(g, p),
        rank_diff=mae,
        r1=r1_score(mae, baseline),
        n=int(g.size),
    )


def eval_relations(gold, pred) -> MetricReport:
    """Absolute and relative rank correlation and R1 for relative timelines.

    Absolute correlation pools all normalized endpoints; relative
    correlation and R1 pool the four difference terms of every pair.
    """
    g = np.asarray(gold, dtype=float).reshape(-1, 4)
    p = np.asarray(pred, dtype=float).reshape(-1, 4)
    if g.shape[0] == 0 or g.shape != p.shape:
        raise DegenerateInput("gold and pred must be nonempty and equally long")
    dg = difference_terms(g)
    dp = difference_terms(p)
    mae = float(np.abs(dg - dp).mean())
    baseline = float(np.abs(dg - np.median(dg, axis=0)).mean())
    return MetricReport(
        absolute_rho=_spearman_or_nan(g.ravel(), p.ravel()),
        relative_rho=_spearman_or_nan(dg.ravel(), dp.ravel()),
        r1=r1_score(mae, baseline),
        n=int(g.shape[0]),
    )


def median_baseline_terms(gold) -> np.ndarray:
    """Per-term gold medians predicted by the R1 baseline."""
    return np.median(difference_terms(np.asarray(gold, dtype=float).reshape(-1, 4)), axis=0)
