"""Accuracy and ranking metrics over predicted and ground-truth GEDs."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from scipy import stats


@dataclass
class MetricsReport:
    mae: float
    accuracy: float
    spearman_rho: float
    kendall_tau: float
    p_at_10: float
    p_at_20: float
    mean_solve_seconds: float
    pairs: int = 0

    def to_json(self) -> dict:
        def clean(x):
            return None if x is None or (isinstance(x, float) and math.isnan(x)) else x

        return {
            "mae": clean(self.mae),
            "accuracy": clean(self.accuracy),
            "rho": clean(self.spearman_rho),
            "tau": clean(self.kendall_tau),
            "p10": clean(self.p_at_10),
            "p20": clean(self.p_at_20),
            "time_s": clean(self.mean_solve_seconds),
        }


def _degenerate(gt: np.ndarray, pred: np.ndarray) -> float | None:
    # correlation is undefined when either side is constant
    gt_const = np.all(gt == gt[0])
    pred_const = np.all(pred == pred[0])
    if gt_const and pred_const:
        return 1.0
    if gt_const or pred_const:
        return 0.0
    return None


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    cx, cy = x - x.mean(), y - y.mean()
    # for y = +-x the denominator is sqrt(s**2) == s exactly, so the result is exactly +-1
    return float(np.dot(cx, cy) / np.sqrt(np.dot(cx, cx) * np.dot(cy, cy)))


def spearman_rho(gt, pred) -> float:
    """Spearman correlation with average ranks for ties."""
    gt, pred = np.asarray(gt, dtype=np.float64), np.asarray(pred, dtype=np.float64)
    d = _degenerate(gt, pred)
    if d is not None:
        return d
    return _pearson(stats.rankdata(gt), stats.rankdata(pred))


def kendall_tau(gt, pred) -> float:
    """Kendall tau-b from integer pair counts (exactly +-1 for perfect or reversed orders)."""
    gt, pred = np.asarray(gt, dtype=np.float64), np.asarray(pred, dtype=np.float64)
    d = _degenerate(gt, pred)
    if d is not None:
        return d
    iu = np.triu_indices(len(gt), 1)
    sx = np.sign(gt[:, None] - gt[None, :])[iu].astype(np.int64)
    sy = np.sign(pred[:, None] - pred[None, :])[iu].astype(np.int64)
    n0 = len(sx)
    return float(int(np.dot(sx, sy)) / np.sqrt(float((n0 - np.count_nonzero(sx == 0)) *
                                                     (n0 - np.count_nonzero(sy == 0)))))


def top_k(scores, k: int) -> set[int]:
    """Indices of the k smallest scores (smaller GED = more similar); ties by index."""
    scores = np.asarray(scores)
    return set(np.argsort(scores, kind="stable")[:k].tolist())


def precision_at_k(gt, pred, k: int) -> float:
    k = min(k, len(gt))
    return len(top_k(gt, k) & top_k(pred, k)) / k


def evaluate_predictions(gt: Sequence[int], pred: Sequence[int], groups: Sequence[Hashable] | None = None,
                         seconds: Sequence[float] | None = None) -> MetricsReport:
    """Pairwise accuracy/MAE plus per-query ranking metrics averaged over queries.

    ``groups`` names the query graph of each pair; queries with fewer than two
    partners are left out of the ranking averages.
    """
    gt = np.asarray(gt, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if gt.shape != pred.shape or gt.size == 0:
        raise ValueError("need equally sized, non-empty prediction and ground-truth vectors")
    mae = float(np.mean(np.abs(pred - gt)))
    acc = float(np.mean(pred == gt))
    if groups is None:
        groups = [0] * len(gt)
    members: dict = defaultdict(list)
    for i, q in enumerate(groups):
        members[q].append(i)
    rhos, taus, p10s, p20s = [], [], [], []
    for idx in members.values():
        if len(idx) < 2:
            continue
        a, b = gt[idx], pred[idx]
        rhos.append(spearman_rho(a, b))
        taus.append(kendall_tau(a, b))
        p10s.append(precision_at_k(a, b, 10))
        p20s.append(precision_at_k(a, b, 20))

    def mean(xs):
        return float(np.mean(xs)) if xs else float("nan")

    t = float(np.mean(seconds)) if seconds is not None and len(seconds) else float("nan")
    return MetricsReport(mae, acc, mean(rhos), mean(taus), mean(p10s), mean(p20s), t, int(gt.size))
