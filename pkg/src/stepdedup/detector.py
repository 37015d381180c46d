"""Duplicate-step detection: four matching strategies plus union-find clustering."""

from __future__ import annotations

import bisect
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping, Sequence

import numpy as np
from rapidfuzz import process
from rapidfuzz.distance import Indel, Levenshtein

from .errors import ConfigError
from .identity import StepOccurrence, step_identity
from .similarity import NORMALIZATIONS, EmbeddingProvider, cosine, embed_batch, levenshtein_at_least, levenshtein_ratio
from .stats import descriptive_stats, spearman_rho

__all__ = [
    "Cluster",
    "RepoRates",
    "Strategy",
    "StrategyConfig",
    "UnionFind",
    "detect",
    "duplication_rate",
    "match_pair",
    "per_repo_rates",
]

LARGE_UNIQUE_LIMIT = 50_000
_BLOCK = 1024
_SLACK = 1e-6


class Strategy(str, Enum):
    EXACT = "exact"
    NEAR_EXACT = "near_exact"
    SEMANTIC = "semantic"
    HYBRID = "hybrid"


def _default_confidence() -> dict[str, float]:
    return {"exact": 1.00, "near_exact": 0.83, "hybrid": 0.57}


@dataclass(frozen=True)
class StrategyConfig:
    cosine_threshold: float = 0.82
    levenshtein_threshold: float = 0.80
    hybrid_band: tuple[float, float] = (0.3, 0.95)
    confidence: Mapping[str, float] = field(default_factory=_default_confidence)
    levenshtein_normalization: str = "max"

    def __post_init__(self) -> None:
        for name in ("cosine_threshold", "levenshtein_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        lo, hi = self.hybrid_band
        if not (0.0 <= lo < hi <= 1.0):
            raise ConfigError(f"hybrid_band must satisfy 0 <= low < high <= 1, got {self.hybrid_band}")
        for k, v in self.confidence.items():
            if k not in Strategy._value2member_map_:
                raise ConfigError(f"confidence given for unknown strategy {k!r}")
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"confidence[{k}] must lie in [0, 1], got {v}")
        if self.levenshtein_normalization not in NORMALIZATIONS:
            raise ConfigError(f"levenshtein_normalization must be one of {NORMALIZATIONS}")
        object.__setattr__(self, "hybrid_band", (float(lo), float(hi)))
        object.__setattr__(self, "confidence", dict(self.confidence))

    def to_dict(self) -> dict:
        return {
            "cosine_threshold": self.cosine_threshold,
            "levenshtein_threshold": self.levenshtein_threshold,
            "hybrid_band": list(self.hybrid_band),
            "confidence": dict(sorted(self.confidence.items())),
            "levenshtein_normalization": self.levenshtein_normalization,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> StrategyConfig:
        kw = dict(d)
        if "hybrid_band" in kw:
            kw["hybrid_band"] = tuple(kw["hybrid_band"])
        if "confidence" in kw:
            kw["confidence"] = {**_default_confidence(), **kw["confidence"]}
        unknown = set(kw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown strategy settings: {sorted(unknown)}")
        return cls(**kw)


@dataclass(frozen=True)
class Cluster:
    strategy: Strategy
    members: tuple[int, ...]
    canonical_text: str
    occurrence_count: int
    distinct_files: int
    distinct_repos: int


class UnionFind:
    """Disjoint sets with path compression and union by size."""

    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = defaultdict(list)
        for i in range(len(self.parent)):
            out[self.find(i)].append(i)
        return list(out.values())


def _in_band(a: str, b: str, config: StrategyConfig) -> bool:
    lo, hi = config.hybrid_band
    return lo <= levenshtein_ratio(a, b, config.levenshtein_normalization) <= hi


def match_pair(
    strategy: Strategy | str,
    a: str,
    b: str,
    config: StrategyConfig | None = None,
    provider: EmbeddingProvider | None = None,
) -> bool:
    """Decide whether two normalised step texts are duplicates under *strategy*."""
    strategy = Strategy(strategy)
    config = config or StrategyConfig()
    if strategy is Strategy.EXACT or a == b:
        return step_identity(a) == step_identity(b)
    if strategy is Strategy.NEAR_EXACT:
        return levenshtein_at_least(a, b, config.levenshtein_threshold, config.levenshtein_normalization)
    if provider is None:
        raise ConfigError(f"strategy {strategy.value!r} needs an embedding provider")
    u, v = embed_batch(provider, [a, b])
    if cosine(u, v) < config.cosine_threshold:
        return False
    return strategy is Strategy.SEMANTIC or _in_band(a, b, config)


def _near_exact_pairs(texts: Sequence[str], threshold: float, normalization: str = "max") -> Iterator[tuple[int, int]]:
    order = sorted(range(len(texts)), key=lambda i: (len(texts[i]), texts[i]))
    lengths = [len(texts[i]) for i in order]
    cutoff = max(0.0, threshold - _SLACK)
    scorer = Indel.normalized_similarity if normalization == "sum" else Levenshtein.normalized_similarity
    for pos, i in enumerate(order):
        a = texts[i]
        # lossless length filter on the longer partner L (len(a) <= L):
        # max-norm needs len(a) >= threshold * L, sum-norm needs 2 len(a) >= threshold * (len(a) + L)
        if threshold <= 0:
            hi = len(order)
        elif normalization == "sum":
            hi = bisect.bisect_right(lengths, len(a) * (2 - threshold) / threshold + 1)
        else:
            hi = bisect.bisect_right(lengths, len(a) / threshold + 1)
        window = [texts[j] for j in order[pos + 1 : hi]]
        if not window:
            continue
        hits = process.extract(a, window, scorer=scorer, score_cutoff=cutoff, limit=None)
        for _, _, k in hits:
            j = order[pos + 1 + k]
            if levenshtein_at_least(a, texts[j], threshold, normalization):
                yield i, j


def _embedding_pairs(
    texts: Sequence[str],
    strategy: Strategy,
    config: StrategyConfig,
    provider: EmbeddingProvider,
) -> Iterator[tuple[int, int]]:
    emb = embed_batch(provider, texts)
    n = len(texts)
    for start in range(0, n, _BLOCK):
        sims = emb[start : start + _BLOCK] @ emb.T
        rows, cols = np.nonzero(sims >= config.cosine_threshold - _SLACK)
        for r, j in zip(rows.tolist(), cols.tolist()):
            i = start + r
            if j <= i or cosine(emb[i], emb[j]) < config.cosine_threshold:
                continue
            if strategy is Strategy.HYBRID and not _in_band(texts[i], texts[j], config):
                continue
            yield i, j


def detect(
    occurrences: Sequence[StepOccurrence],
    strategy: Strategy | str,
    config: StrategyConfig | None = None,
    provider: EmbeddingProvider | None = None,
    *,
    allow_large: bool = False,
) -> list[Cluster]:
    """Cluster occurrences into duplicate groups.

    Matching runs over unique normalised texts; each unique text is then
    expanded back to its occurrences. Identical texts always share a cluster,
    whatever the strategy. Members are indices into *occurrences*. Clusters
    are ordered by descending size, then canonical text.
    """
    strategy = Strategy(strategy)
    config = config or StrategyConfig()

    by_digest: dict[str, list[int]] = defaultdict(list)
    text_of: dict[str, str] = {}
    for idx, occ in enumerate(occurrences):
        by_digest[occ.identity_digest].append(idx)
        text_of.setdefault(occ.identity_digest, occ.normalized_text)
    digests = sorted(by_digest, key=lambda d: (text_of[d], d))
    texts = [text_of[d] for d in digests]

    uf = UnionFind(len(digests))
    if strategy is Strategy.NEAR_EXACT:
        for i, j in _near_exact_pairs(texts, config.levenshtein_threshold, config.levenshtein_normalization):
            uf.union(i, j)
    elif strategy in (Strategy.SEMANTIC, Strategy.HYBRID):
        if provider is None:
            raise ConfigError(f"strategy {strategy.value!r} needs an embedding provider")
        if len(texts) > LARGE_UNIQUE_LIMIT and not allow_large:
            raise ConfigError(
                f"{len(texts)} unique texts exceed {LARGE_UNIQUE_LIMIT} for all-pairs {strategy.value}; "
                "pass allow_large to proceed"
            )
        for i, j in _embedding_pairs(texts, strategy, config, provider):
            uf.union(i, j)

    clusters = []
    for group in uf.groups():
        members = sorted(m for u in group for m in by_digest[digests[u]])
        freq = Counter(occurrences[m].normalized_text for m in members)
        top = max(freq.values())
        canonical = min(t for t, c in freq.items() if c == top)
        clusters.append(
            Cluster(
                strategy=strategy,
                members=tuple(members),
                canonical_text=canonical,
                occurrence_count=len(members),
                distinct_files=len({(occurrences[m].repo_id, occurrences[m].path) for m in members}),
                distinct_repos=len({occurrences[m].repo_id for m in members}),
            )
        )
    clusters.sort(key=lambda c: (-c.occurrence_count, c.canonical_text))
    return clusters


def duplication_rate(clusters: Sequence[Cluster], total_steps: int) -> float:
    """Share of steps that are non-first members of their cluster."""
    if total_steps <= 0:
        raise ValueError("total_steps must be positive")
    return sum(c.occurrence_count - 1 for c in clusters) / total_steps


@dataclass
class RepoRates:
    rates: dict[str, float]
    steps: dict[str, int]
    median: float | None
    spearman: float | None


def group_by_repo(occurrences: Sequence[StepOccurrence]) -> dict[str, list[StepOccurrence]]:
    out: dict[str, list[StepOccurrence]] = defaultdict(list)
    for occ in occurrences:
        out[occ.repo_id].append(occ)
    return dict(sorted(out.items()))


def per_repo_rates(
    occurrences: Sequence[StepOccurrence],
    strategy: Strategy | str = Strategy.EXACT,
    config: StrategyConfig | None = None,
    provider: EmbeddingProvider | None = None,
) -> RepoRates:
    """Duplication rate of each repository, clustering within that repository only."""
    rates: dict[str, float] = {}
    steps: dict[str, int] = {}
    for repo, occs in group_by_repo(occurrences).items():
        clusters = detect(occs, strategy, config, provider)
        rates[repo] = duplication_rate(clusters, len(occs))
        steps[repo] = len(occs)
    if not rates:
        return RepoRates(rates, steps, None, None)
    median = descriptive_stats(list(rates.values()))["median"]
    rho = spearman_rho([steps[r] for r in rates], list(rates.values()))
    return RepoRates(rates, steps, median, None if np.isnan(rho) else rho)
