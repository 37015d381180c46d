"""Consolidation-savings model: how many step occurrences a merge could remove."""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .detector import Cluster, Strategy, StrategyConfig, detect, group_by_repo
from .identity import StepOccurrence
from .similarity import EmbeddingProvider

__all__ = [
    "ISO_25010_TAGS",
    "TIERS",
    "Attribution",
    "RepoSavings",
    "SavingsReport",
    "TierRow",
    "aggregate_savings",
    "cluster_savings",
    "repo_savings",
    "tier_breakdown",
]

# (name, inclusive lower bound, exclusive upper bound) on repository step count
TIERS: tuple[tuple[str, int, float], ...] = (
    ("small", 0, 1_000),
    ("medium", 1_000, 10_000),
    ("large", 10_000, 100_000),
    ("enterprise", 100_000, float("inf")),
)

ISO_25010_TAGS: tuple[dict[str, str], ...] = (
    {"characteristic": "Maintainability", "sub_characteristic": "Modifiability", "report_section": "clusters"},
    {"characteristic": "Maintainability", "sub_characteristic": "Modularity", "report_section": "top_clusters"},
    {"characteristic": "Maintainability", "sub_characteristic": "Reusability", "report_section": "cross_repo_clusters"},
    {"characteristic": "Maintainability", "sub_characteristic": "Analyzability", "report_section": "rosters"},
    {"characteristic": "Maintainability", "sub_characteristic": "Testability", "report_section": "calibration"},
    {"characteristic": "Reliability", "sub_characteristic": "Maturity", "report_section": "near_duplicate_clusters"},
)

SENSITIVITY_GRID = tuple(round(0.1 * k, 1) for k in range(11))


class Attribution(str, Enum):
    REPO_LOCAL = "repo_local"
    PROPORTIONAL = "proportional"


@dataclass
class RepoSavings:
    steps: int
    exact_eliminable: float
    hybrid_eliminable: float
    eliminable: float
    rate: float


@dataclass
class TierRow:
    tier: str
    repo_count: int
    tier_steps: int
    tier_eliminable: float


@dataclass
class SavingsReport:
    aggregate_exact: float
    aggregate_hybrid: float
    hybrid_surplus: float
    hybrid_confidence: float
    aggregate_combined: float
    sensitivity: dict[float, float]
    per_repo: dict[str, RepoSavings] = field(default_factory=dict)
    tiers: list[TierRow] = field(default_factory=list)
    attribution: Attribution = Attribution.REPO_LOCAL
    iso_tags: tuple[dict[str, str], ...] = ISO_25010_TAGS

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sensitivity"] = {f"{k:.1f}": v for k, v in self.sensitivity.items()}
        d["attribution"] = self.attribution.value
        d["iso_tags"] = list(self.iso_tags)
        return d


def cluster_savings(cluster: Cluster, conf: float) -> float:
    if not 0.0 <= conf <= 1.0:
        raise ValueError(f"confidence must lie in [0, 1], got {conf}")
    return (cluster.occurrence_count - 1) * conf


def _surplus_total(clusters: Sequence[Cluster]) -> int:
    return sum(c.occurrence_count - 1 for c in clusters)


def _hybrid_conf(config: StrategyConfig) -> float:
    return config.confidence.get("hybrid", 0.0)


def repo_savings(
    occurrences: Sequence[StepOccurrence],
    config: StrategyConfig | None = None,
    provider: EmbeddingProvider | None = None,
    attribution: Attribution | str = Attribution.REPO_LOCAL,
    exact_clusters: Sequence[Cluster] | None = None,
    hybrid_clusters: Sequence[Cluster] | None = None,
) -> dict[str, RepoSavings]:
    """Per-repository eliminable occurrences.

    ``repo_local`` re-clusters each repository on its own steps.
    ``proportional`` splits each global cluster's savings across repositories
    in proportion to their member counts, so the per-repo figures add up to
    the global aggregate.
    """
    config = config or StrategyConfig()
    attribution = Attribution(attribution)
    exact_conf = config.confidence.get("exact", 1.0)
    hybrid_conf = _hybrid_conf(config)
    steps = Counter(o.repo_id for o in occurrences)
    exact_by: Counter[str] = Counter()
    hybrid_by: Counter[str] = Counter()

    if attribution is Attribution.REPO_LOCAL:
        for repo, occs in group_by_repo(occurrences).items():
            exact_by[repo] = _surplus_total(detect(occs, Strategy.EXACT, config))
            hybrid_by[repo] = _surplus_total(detect(occs, Strategy.HYBRID, config, provider)) if provider else exact_by[repo]
    else:
        if exact_clusters is None:
            exact_clusters = detect(occurrences, Strategy.EXACT, config)
        if hybrid_clusters is None:
            hybrid_clusters = detect(occurrences, Strategy.HYBRID, config, provider) if provider else exact_clusters
        for target, clusters in ((exact_by, exact_clusters), (hybrid_by, hybrid_clusters)):
            for c in clusters:
                if c.occurrence_count < 2:
                    continue
                share = Counter(occurrences[m].repo_id for m in c.members)
                for repo, k in share.items():
                    target[repo] += (c.occurrence_count - 1) * k / c.occurrence_count

    out: dict[str, RepoSavings] = {}
    for repo in sorted(steps):
        exact = exact_by[repo] * exact_conf
        surplus = max(0.0, hybrid_by[repo] - exact_by[repo])
        eliminable = exact + surplus * hybrid_conf
        out[repo] = RepoSavings(
            steps=steps[repo],
            exact_eliminable=exact,
            hybrid_eliminable=float(hybrid_by[repo]),
            eliminable=eliminable,
            rate=eliminable / steps[repo],
        )
    return out


def tier_breakdown(per_repo: Mapping[str, RepoSavings]) -> list[TierRow]:
    """Group repositories by step count; eliminable lines use the exact-only model."""
    rows = {name: TierRow(name, 0, 0, 0.0) for name, _, _ in TIERS}
    for stats in per_repo.values():
        for name, lo, hi in TIERS:
            if lo <= stats.steps < hi:
                row = rows[name]
                row.repo_count += 1
                row.tier_steps += stats.steps
                row.tier_eliminable += stats.exact_eliminable
                break
    return [rows[name] for name, _, _ in TIERS]


def aggregate_savings(
    exact_clusters: Sequence[Cluster],
    hybrid_clusters: Sequence[Cluster],
    config: StrategyConfig | None = None,
    per_repo: Mapping[str, RepoSavings] | None = None,
    attribution: Attribution | str = Attribution.REPO_LOCAL,
) -> SavingsReport:
    """Corpus-wide savings: exact at its confidence plus the hybrid surplus at the hybrid confidence."""
    config = config or StrategyConfig()
    exact_total = _surplus_total(exact_clusters) * config.confidence.get("exact", 1.0)
    hybrid_total = float(_surplus_total(hybrid_clusters))
    surplus = max(0.0, hybrid_total - exact_total)
    conf = _hybrid_conf(config)
    per_repo = dict(per_repo or {})
    return SavingsReport(
        aggregate_exact=exact_total,
        aggregate_hybrid=hybrid_total,
        hybrid_surplus=surplus,
        hybrid_confidence=conf,
        aggregate_combined=exact_total + surplus * conf,
        sensitivity={c: exact_total + surplus * c for c in SENSITIVITY_GRID},
        per_repo=per_repo,
        tiers=tier_breakdown(per_repo),
        attribution=Attribution(attribution),
    )
