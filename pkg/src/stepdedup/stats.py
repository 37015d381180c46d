"""Descriptive statistics and chance-corrected agreement coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "Agreement",
    "cohen_agreement",
    "cohen_kappa",
    "descriptive_stats",
    "fleiss_kappa",
    "nearest_rank",
    "ratings_matrix",
    "spearman_rho",
]


def nearest_rank(sorted_values: Sequence[float], pct: float) -> float:
    n = len(sorted_values)
    rank = max(1, math.ceil(pct / 100.0 * n))
    return sorted_values[min(rank, n) - 1]


def descriptive_stats(values: Sequence[float]) -> dict[str, float]:
    """Nearest-rank p25/median/p75/p99 plus the arithmetic mean."""
    if len(values) == 0:
        raise ValueError("descriptive_stats needs at least one value")
    ordered = sorted(values)
    return {
        "p25": nearest_rank(ordered, 25),
        "median": nearest_rank(ordered, 50),
        "p75": nearest_rank(ordered, 75),
        "p99": nearest_rank(ordered, 99),
        "mean": math.fsum(ordered) / len(ordered),
    }


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average-tie ranks. NaN if either side is constant."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        return float("nan")
    rx = rankdata(x) - (len(x) + 1) / 2
    ry = rankdata(y) - (len(y) + 1) / 2
    denom = math.sqrt(float(np.dot(rx, rx)) * float(np.dot(ry, ry)))
    if denom == 0:
        return float("nan")
    return max(-1.0, min(1.0, float(np.dot(rx, ry)) / denom))


@dataclass(frozen=True)
class Agreement:
    kappa: float
    observed: float
    expected: float

    @property
    def disagreement(self) -> float:
        return 1.0 - self.observed

    @property
    def chance_disagreement(self) -> float:
        return 1.0 - self.expected


def cohen_agreement(labels_a: Sequence[bool], labels_b: Sequence[bool]) -> Agreement:
    if len(labels_a) != len(labels_b):
        raise ValueError(f"length mismatch: {len(labels_a)} vs {len(labels_b)}")
    if len(labels_a) == 0:
        raise ValueError("cohen_kappa needs at least one item")
    a = np.asarray(labels_a, dtype=bool)
    b = np.asarray(labels_b, dtype=bool)
    p_o = float(np.mean(a == b))
    pa, pb = float(a.mean()), float(b.mean())
    p_e = pa * pb + (1 - pa) * (1 - pb)
    if p_e == 1.0:
        kappa = 1.0 if p_o == 1.0 else 0.0
    else:
        kappa = (p_o - p_e) / (1 - p_e)
    return Agreement(kappa=kappa, observed=p_o, expected=p_e)


def cohen_kappa(labels_a: Sequence[bool], labels_b: Sequence[bool]) -> float:
    return cohen_agreement(labels_a, labels_b).kappa


def fleiss_kappa(ratings: Sequence[Sequence[int]] | np.ndarray) -> float:
    """Fleiss' kappa from an items x categories matrix of rating counts.

    Every row must sum to the same number of raters n >= 2.
    """
    m = np.asarray(ratings, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError("ratings must be a non-empty items x categories matrix")
    if (m < 0).any():
        raise ValueError("rating counts must be non-negative")
    n_per_item = m.sum(axis=1)
    n = n_per_item[0]
    if not np.all(n_per_item == n):
        raise ValueError("every item must be rated by the same number of raters")
    if n < 2:
        raise ValueError("Fleiss' kappa needs at least two raters per item")
    n_items = m.shape[0]
    p_j = m.sum(axis=0) / (n_items * n)
    p_i = (np.sum(m * m, axis=1) - n) / (n * (n - 1))
    p_bar = float(p_i.mean())
    p_e = float(np.sum(p_j * p_j))
    if p_bar == 1.0:
        return 1.0
    return (p_bar - p_e) / (1 - p_e)


def ratings_matrix(records: Sequence[tuple[str, bool]]) -> np.ndarray:
    """Collapse ``(item_id, is_duplicate)`` ratings into a two-column count matrix."""
    counts: dict[str, list[int]] = {}
    for item, positive in records:
        row = counts.setdefault(item, [0, 0])
        row[0 if positive else 1] += 1
    return np.array([counts[k] for k in sorted(counts)], dtype=np.int64).reshape(-1, 2)
