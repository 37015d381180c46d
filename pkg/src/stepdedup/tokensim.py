"""Token-sequence similarities. No string-edit or embedding scores live here."""

from __future__ import annotations

from typing import Sequence

__all__ = ["lcs_length", "subsequence_containment", "token_jaccard"]


def token_jaccard(a: Sequence[str], b: Sequence[str]) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def subsequence_containment(a: Sequence[str], b: Sequence[str]) -> float:
    """Share of the shorter sequence found, in order, inside the longer one."""
    shorter = a if len(a) <= len(b) else b
    if not shorter:
        return 1.0
    return lcs_length(a, b) / len(shorter)
