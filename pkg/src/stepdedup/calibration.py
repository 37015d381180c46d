"""Benchmark metrics: P/R/F1, bootstrap intervals, threshold sweeps, k-fold CV."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from .detector import StrategyConfig
from .errors import ConfigError, DataError
from .identity import DEFAULT_SYNONYMS, ParamMode, tokenize, whitespace_collapse
from .pairs import LabeledPair
from .scorefree import relabel_benchmark
from .similarity import EmbeddingProvider, TfidfModel, embed_batch, fit_tfidf, levenshtein_ratio, tfidf_cosine, token_jaccard
from .stats import cohen_agreement, cohen_kappa, descriptive_stats, fleiss_kappa, spearman_rho

__all__ = [
    "BASELINES",
    "CVResult",
    "DEFAULT_GRID",
    "DETECTORS",
    "MetricPoint",
    "SweepResult",
    "bootstrap_ci",
    "calibrate",
    "cohen_kappa",
    "descriptive_stats",
    "fleiss_kappa",
    "kfold_cv",
    "pair_scores",
    "prf",
    "spearman_rho",
    "threshold_sweep",
]

DETECTORS = ("exact", "near_exact", "semantic", "hybrid")
BASELINES = ("jaccard", "tfidf")
DEFAULT_GRID = tuple(round(0.50 + 0.01 * k, 2) for k in range(51))

# absorbs float noise such as 1 - 1/5 landing a hair under 0.8
_EPS = 1e-12
_CHUNK = 1000


@dataclass(frozen=True)
class MetricPoint:
    threshold: float
    precision: float
    recall: float
    f1: float
    precision_ci: tuple[float, float] | None = None
    recall_ci: tuple[float, float] | None = None
    f1_ci: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _counts_to_metrics(tp, fp, fn):
    """Vectorised precision/recall/F1 with this package's degenerate-case conventions."""
    tp, fp, fn = (np.asarray(x, dtype=np.float64) for x in (tp, fp, fn))
    pred = tp + fp
    pos = tp + fn
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred > 0, tp / pred, np.where(pos > 0, 0.0, 1.0))
        recall = np.where(pos > 0, tp / pos, 1.0)
        s = precision + recall
        f1 = np.where(s > 0, 2 * precision * recall / s, 0.0)
    return precision, recall, f1


def _validate(scores: Sequence[float], labels: Sequence[bool]) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError(f"scores and labels must be equal-length 1-D sequences ({s.shape} vs {y.shape})")
    if s.size == 0:
        raise ValueError("no scored pairs")
    return s, y


def prf(scores: Sequence[float], labels: Sequence[bool], threshold: float) -> MetricPoint:
    """Metrics for the rule ``score >= threshold`` means duplicate.

    Precision is 1 when nothing is predicted and nothing is positive, else 0
    when nothing is predicted; recall is 1 when there are no positives.
    """
    s, y = _validate(scores, labels)
    pred = s >= threshold - _EPS
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    p, r, f = (float(v) for v in _counts_to_metrics(tp, fp, fn))
    return MetricPoint(threshold=float(threshold), precision=p, recall=r, f1=f)


def bootstrap_ci(
    scores: Sequence[float],
    labels: Sequence[bool],
    threshold: float,
    B: int = 10_000,
    seed: int = 0,
    level: float = 0.95,
) -> MetricPoint:
    """Percentile bootstrap over pairs.

    Resamples are drawn in chunks of 1000, each from its own child of
    ``SeedSequence(seed)``, so the result does not depend on how chunks are
    scheduled. Intervals are widened if needed to contain the point value.
    """
    if B < 1000:
        raise ValueError("bootstrap needs B >= 1000 resamples")
    s, y = _validate(scores, labels)
    point = prf(s, y, threshold)
    pred = s >= threshold - _EPS
    tp_v = (pred & y).astype(np.int32)
    fp_v = (pred & ~y).astype(np.int32)
    fn_v = (~pred & y).astype(np.int32)
    n = s.size

    children = np.random.SeedSequence(seed).spawn(math.ceil(B / _CHUNK))
    parts = []
    for c, child in enumerate(children):
        m = min(_CHUNK, B - c * _CHUNK)
        idx = np.random.default_rng(child).integers(0, n, size=(m, n))
        parts.append(_counts_to_metrics(tp_v[idx].sum(1), fp_v[idx].sum(1), fn_v[idx].sum(1)))
    stacked = [np.concatenate([p[k] for p in parts]) for k in range(3)]

    alpha = (1.0 - level) / 2 * 100
    cis = []
    for values, pt in zip(stacked, (point.precision, point.recall, point.f1)):
        lo, hi = np.percentile(values, [alpha, 100 - alpha])
        cis.append((min(float(lo), pt), max(float(hi), pt)))
    return MetricPoint(point.threshold, point.precision, point.recall, point.f1, *cis)


@dataclass(frozen=True)
class SweepResult:
    points: tuple[MetricPoint, ...]
    best: MetricPoint


def threshold_sweep(
    scores: Sequence[float],
    labels: Sequence[bool],
    grid: Sequence[float] = DEFAULT_GRID,
) -> SweepResult:
    """Evaluate every grid threshold; the best F1 wins, ties go to the lowest threshold."""
    points = tuple(prf(scores, labels, t) for t in sorted(grid))
    best = points[0]
    for p in points[1:]:
        if p.f1 > best.f1:
            best = p
    return SweepResult(points, best)


@dataclass(frozen=True)
class CVResult:
    thresholds: tuple[float, ...]
    f1: tuple[float, ...]
    mean: float
    sd: float
    low: float
    high: float

    def to_dict(self) -> dict:
        return asdict(self)


def stratified_folds(labels: Sequence[bool], k: int, seed: int) -> list[np.ndarray]:
    y = np.asarray(labels, dtype=bool)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for cls in (True, False):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[(offset + j) % k].append(int(i))
        offset += len(idx)
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def kfold_cv(
    scores: Sequence[float],
    labels: Sequence[bool],
    k: int = 5,
    seed: int = 0,
    grid: Sequence[float] = DEFAULT_GRID,
) -> CVResult:
    """Stratified k-fold: pick the threshold on k-1 folds, score F1 on the held-out one."""
    if k < 2:
        raise ValueError("k-fold CV needs k >= 2")
    s, y = _validate(scores, labels)
    folds = stratified_folds(y, k, seed)
    thresholds, f1s = [], []
    for f in folds:
        held = np.zeros(s.size, dtype=bool)
        held[f] = True
        if len(set(y[held].tolist())) < 2 or len(set(y[~held].tolist())) < 2:
            raise DataError(f"a fold has a single class; use fewer folds than {k} or more labelled pairs")
        best = threshold_sweep(s[~held], y[~held], grid).best
        thresholds.append(best.threshold)
        f1s.append(prf(s[held], y[held], best.threshold).f1)
    arr = np.array(f1s)
    return CVResult(
        thresholds=tuple(thresholds),
        f1=tuple(f1s),
        mean=float(arr.mean()),
        sd=float(arr.std(ddof=1)),
        low=float(arr.min()),
        high=float(arr.max()),
    )


def pair_scores(
    pairs: Sequence[LabeledPair],
    method: str,
    config: StrategyConfig | None = None,
    provider: EmbeddingProvider | None = None,
    tfidf: TfidfModel | None = None,
) -> np.ndarray:
    """One similarity score per pair for a detector strategy or lexical baseline.

    ``hybrid`` scores are the cosine when the Levenshtein ratio falls inside
    the band (or the texts are identical) and 0 otherwise.
    """
    config = config or StrategyConfig()
    a = [whitespace_collapse(p.text_a) for p in pairs]
    b = [whitespace_collapse(p.text_b) for p in pairs]
    if method == "exact":
        return np.array([1.0 if x == y else 0.0 for x, y in zip(a, b)])
    if method == "near_exact":
        return np.array([levenshtein_ratio(x, y, config.levenshtein_normalization) for x, y in zip(a, b)])
    if method == "jaccard":
        return np.array(
            [token_jaccard(tokenize(x, ParamMode.QUOTED_ONLY), tokenize(y, ParamMode.QUOTED_ONLY)) for x, y in zip(a, b)]
        )
    if method == "tfidf":
        model = tfidf or fit_tfidf(sorted(set(a) | set(b)))
        return np.array([tfidf_cosine(model, x, y) for x, y in zip(a, b)])
    if method in ("semantic", "hybrid"):
        if provider is None:
            raise ConfigError(f"method {method!r} needs an embedding provider")
        uniq = sorted(set(a) | set(b))
        where = {t: i for i, t in enumerate(uniq)}
        emb = embed_batch(provider, uniq)
        cos = np.array([float(np.dot(emb[where[x]], emb[where[y]])) for x, y in zip(a, b)])
        if method == "semantic":
            return cos
        lo, hi = config.hybrid_band
        norm = config.levenshtein_normalization
        keep = np.array([x == y or lo <= levenshtein_ratio(x, y, norm) <= hi for x, y in zip(a, b)])
        return np.where(keep, cos, 0.0)
    raise ConfigError(f"unknown method {method!r}")


def calibrate(
    pairs: Sequence[LabeledPair],
    methods: Sequence[str] = DETECTORS + BASELINES,
    config: StrategyConfig | None = None,
    provider: EmbeddingProvider | None = None,
    synonyms: Mapping[str, str] = DEFAULT_SYNONYMS,
    seed: int = 0,
    B: int = 10_000,
    folds: int = 5,
) -> dict:
    """Best-F1 operating point per method under both labelling protocols.

    For each method: primary-label sweep, bootstrap intervals at the best
    threshold, k-fold CV, F1 against score-free labels at the primary
    threshold, and a separately tuned score-free operating point.
    """
    if not pairs:
        raise DataError("no labelled pairs")
    config = config or StrategyConfig()
    primary = np.array([p.is_duplicate for p in pairs])
    relabelled, summary = relabel_benchmark(pairs, synonyms)
    score_free = np.array([p.is_duplicate for p in relabelled])
    agreement = cohen_agreement(primary, score_free)

    rows = {}
    for method in methods:
        scores = pair_scores(pairs, method, config, provider)
        sweep = threshold_sweep(scores, primary)
        best = bootstrap_ci(scores, primary, sweep.best.threshold, B=B, seed=seed)
        try:
            cv = kfold_cv(scores, primary, k=folds, seed=seed).to_dict()
        except DataError as exc:
            cv = {"error": str(exc)}
        sf_best = threshold_sweep(scores, score_free).best
        rows[method] = {
            "kind": "baseline" if method in BASELINES else "detector",
            "primary": best.to_dict(),
            "score_free_at_primary_threshold": prf(scores, score_free, best.threshold).to_dict(),
            "score_free_tuned": sf_best.to_dict(),
            "cv": cv,
            "sweep": [p.to_dict() for p in sweep.points],
        }
    return {
        "pairs": len(pairs),
        "primary_positives": int(primary.sum()),
        "primary_negatives": int((~primary).sum()),
        "score_free_positives": int(score_free.sum()),
        "score_free_negatives": int((~score_free).sum()),
        "score_free_rule_counts": summary.rule_counts,
        "protocol_agreement": {
            "cohen_kappa": agreement.kappa,
            "disagreements": int(np.sum(primary != score_free)),
            "chance_disagreement": agreement.chance_disagreement,
        },
        "bootstrap": {"resamples": B, "seed": seed, "method": "percentile"},
        "methods": rows,
    }
