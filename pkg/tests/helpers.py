from __future__ import annotations

from stepdedup.identity import StepOccurrence, step_identity, whitespace_collapse


def occ(text: str, repo: str = "repo", path: str = "a.feature", line: int = 1) -> StepOccurrence:
    norm = whitespace_collapse(text)
    return StepOccurrence(
        repo_id=repo,
        path=path,
        line_no=line,
        keyword="Given",
        raw_text=text,
        normalized_text=norm,
        identity_digest=step_identity(norm),
    )


def occs(texts, repo: str = "repo") -> list[StepOccurrence]:
    return [occ(t, repo=repo, path=f"f{i % 3}.feature", line=i + 1) for i, t in enumerate(texts)]


def pair(a: str, b: str, dup: bool, pid: str = "", band=(0.80, 0.85)):
    from stepdedup.pairs import Label, LabeledPair

    return LabeledPair(
        pair_id=pid or f"{a}|{b}",
        text_a=a,
        text_b=b,
        cosine_band=band,
        label=Label.DUPLICATE if dup else Label.NOT_DUPLICATE,
        rule_fired="fixture",
    )


def separable_pairs() -> list:
    """Duplicates are near-identical strings, non-duplicates share nothing."""
    out = []
    for k in range(12):
        base = f"the user opens page number {k} quickly"
        out.append(pair(base, base, True, f"p{k}"))
        out.append(pair(f"zz{k} qqq xxx", f"yy{k} wwww vvvv kkk", False, f"n{k}"))
    return out


def even_split(total: int, parts: int) -> list[int]:
    q, r = divmod(total, parts)
    return [q + (i < r) for i in range(parts)]


def clusters_with_totals(n_clusters: int, occurrences: int, strategy="exact") -> list:
    """Synthetic clusters whose sizes sum to *occurrences*."""
    from stepdedup.detector import Cluster, Strategy

    out, start = [], 0
    for size in even_split(occurrences, n_clusters):
        out.append(Cluster(Strategy(strategy), tuple(range(start, start + size)), f"t{start}", size, 1, 1))
        start += size
    return out


# Corpus-scale tier fixture: (repos, total steps, eliminable lines)
TIER_FIXTURE = {
    "small": (240, 64_181, 38_742),
    "medium": (82, 247_828, 175_706),
    "large": (24, 624_000, 504_455),
    "enterprise": (1, 177_607, 174_453),
}


def tier_fixture_per_repo() -> dict:
    from stepdedup.savings import RepoSavings

    per_repo = {}
    for tier, (repos, steps, elim) in TIER_FIXTURE.items():
        for k, (s, e) in enumerate(zip(even_split(steps, repos), even_split(elim, repos))):
            per_repo[f"{tier}-{k:03d}"] = RepoSavings(s, float(e), float(e), float(e), e / s)
    return per_repo
