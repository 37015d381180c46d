"""Score-free pair labelling.

Structural negative rules (R4-R8) are checked first; any firing rule makes
the pair a non-duplicate. Then the positive rules P1-P4 run in order on
parameter-normalised, synonym-canonicalised tokens. Nothing here looks at
an edit-distance or embedding score: only token sequences and word lists.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .identity import DEFAULT_SYNONYMS, ParamMode, canonicalize, tokenize, whitespace_collapse
from .pairs import LabeledPair, Label, Protocol
from .stats import cohen_agreement
from .tokensim import subsequence_containment, token_jaccard

__all__ = [
    "DEFAULT_RULES",
    "RelabelSummary",
    "Rule",
    "RuleConfig",
    "RuleVerdict",
    "relabel_benchmark",
    "score_free_label",
]


class Rule(str, Enum):
    R4 = "R4"
    R5 = "R5"
    R6 = "R6"
    R7 = "R7"
    R8 = "R8"
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"
    DEFAULT_NEG = "DEFAULT_NEG"


@dataclass(frozen=True)
class RuleConfig:
    keyword_words: frozenset[str] = frozenset({"given", "when", "then"})
    http_verbs: frozenset[str] = frozenset({"GET", "POST", "PUT", "DELETE", "PATCH", "HEAD", "OPTIONS"})
    negations: frozenset[str] = frozenset({"not", "no", "never", "n't", "without"})
    presence_patterns: tuple[str, ...] = (
        r"\bexists?\b",
        r"\b(?:is|are) present\b",
        r"\b(?:is|are) displayed\b",
    )
    content_patterns: tuple[str, ...] = (
        r"\bequals?\b",
        r"\bequal to\b",
        r"\bcontains?\b",
        r"\bcontaining\b",
    )
    action_verbs: frozenset[str] = frozenset(
        """
        add adds call calls check checks choose chooses click clicks create creates delete deletes
        drag drags edit edits enter enters fill fills hover hovers log logs login navigate navigates
        open opens press presses remove removes request requests save saves scroll scrolls select
        selects send sends set sets sign signs submit submits tap taps type types uncheck unchecks
        update updates upload uploads visit visits wait waits go goes
        """.split()
    )
    assertion_words: frozenset[str] = frozenset(
        {"should", "must", "verify", "verifies", "expect", "expects", "see", "sees", "assert", "asserts"}
    )
    subject_words: frozenset[str] = frozenset({"i", "we", "they", "the", "a", "an", "user", "admin"})
    containment_min: float = 0.70
    jaccard_min: float = 0.80


DEFAULT_RULES = RuleConfig()

_QUOTED = re.compile(r'"[^"]*"')
_WORDS = re.compile(r"[a-z0-9_']+")
_QUOTED_VALUE = re.compile(r'\b(?:is|be|equals?|equal to)\s+"')


@dataclass(frozen=True)
class RuleVerdict:
    label: Label
    rule: Rule
    evidence: str = ""

    @property
    def is_duplicate(self) -> bool:
        return self.label is Label.DUPLICATE


@dataclass(frozen=True)
class _Features:
    text: str
    words: tuple[str, ...]
    tokens: tuple[str, ...]


def _features(text: str, synonyms: Mapping[str, str]) -> _Features:
    text = whitespace_collapse(text)
    unquoted = _QUOTED.sub(" ", text).lower()
    words = tuple(_WORDS.findall(unquoted))
    tokens = tuple(canonicalize(tokenize(text, ParamMode.FULL), synonyms))
    return _Features(text, words, tokens)


def _negations(f: _Features, rules: RuleConfig) -> frozenset[str]:
    found = set()
    for w in f.words:
        if w.endswith("n't") and "n't" in rules.negations:
            found.add("n't")
        elif w == "cannot" and "not" in rules.negations:
            found.add("not")
        elif w in rules.negations:
            found.add(w)
    return frozenset(found)


def _value_kind(f: _Features, rules: RuleConfig) -> str | None:
    unquoted = " ".join(f.words)
    if any(re.search(p, unquoted) for p in rules.content_patterns) or _QUOTED_VALUE.search(f.text.lower()):
        return "content"
    if any(re.search(p, unquoted) for p in rules.presence_patterns):
        return "presence"
    return None


def _mood(f: _Features, rules: RuleConfig) -> str | None:
    if any(w in rules.assertion_words for w in f.words):
        return "assertion"
    for w in f.words[:4]:
        if w in rules.subject_words:
            continue
        return "action" if w in rules.action_verbs else None
    return None


def _negative(a: _Features, b: _Features, rules: RuleConfig) -> RuleVerdict | None:
    kw_a = frozenset(w for w in a.words if w in rules.keyword_words)
    kw_b = frozenset(w for w in b.words if w in rules.keyword_words)
    if kw_a != kw_b:
        return RuleVerdict(Label.NOT_DUPLICATE, Rule.R4, f"embedded keywords {sorted(kw_a)} vs {sorted(kw_b)}")

    verb_re = r"\b(" + "|".join(sorted(rules.http_verbs)) + r")\b"
    verbs_a = frozenset(re.findall(verb_re, a.text))
    verbs_b = frozenset(re.findall(verb_re, b.text))
    if verbs_a and verbs_b and verbs_a != verbs_b:
        return RuleVerdict(Label.NOT_DUPLICATE, Rule.R5, f"HTTP verbs {sorted(verbs_a)} vs {sorted(verbs_b)}")

    neg_a, neg_b = _negations(a, rules), _negations(b, rules)
    if neg_a != neg_b:
        return RuleVerdict(Label.NOT_DUPLICATE, Rule.R6, f"negations {sorted(neg_a)} vs {sorted(neg_b)}")

    kinds = {_value_kind(a, rules), _value_kind(b, rules)}
    if kinds == {"presence", "content"}:
        return RuleVerdict(Label.NOT_DUPLICATE, Rule.R7, "presence check vs value check")

    moods = {_mood(a, rules), _mood(b, rules)}
    if moods == {"action", "assertion"}:
        return RuleVerdict(Label.NOT_DUPLICATE, Rule.R8, "action vs assertion")
    return None


def score_free_label(
    text_a: str,
    text_b: str,
    synonyms: Mapping[str, str] = DEFAULT_SYNONYMS,
    rules: RuleConfig = DEFAULT_RULES,
) -> RuleVerdict:
    a, b = _features(text_a, synonyms), _features(text_b, synonyms)
    verdict = _negative(a, b, rules)
    if verdict is not None:
        return verdict
    if a.tokens == b.tokens:
        return RuleVerdict(Label.DUPLICATE, Rule.P1, "identical after normalisation")
    if Counter(a.tokens) == Counter(b.tokens):
        return RuleVerdict(Label.DUPLICATE, Rule.P2, "same token multiset")
    if a.tokens and b.tokens:
        contained = subsequence_containment(a.tokens, b.tokens)
        if contained >= rules.containment_min:
            return RuleVerdict(Label.DUPLICATE, Rule.P3, f"containment {contained:.3f}")
    jac = token_jaccard(a.tokens, b.tokens)
    if jac >= rules.jaccard_min:
        return RuleVerdict(Label.DUPLICATE, Rule.P4, f"jaccard {jac:.3f}")
    return RuleVerdict(Label.NOT_DUPLICATE, Rule.DEFAULT_NEG, "no positive rule fired")


@dataclass
class RelabelSummary:
    n: int = 0
    positives: int = 0
    negatives: int = 0
    positive_rate: float | None = None
    rule_counts: dict[str, int] = field(default_factory=dict)
    kappa_vs_primary: float | None = None
    disagreements: int | None = None
    chance_disagreement: float | None = None


def relabel_benchmark(
    pairs: Sequence[LabeledPair],
    synonyms: Mapping[str, str] = DEFAULT_SYNONYMS,
    rules: RuleConfig = DEFAULT_RULES,
) -> tuple[list[LabeledPair], RelabelSummary]:
    out: list[LabeledPair] = []
    counts: Counter[str] = Counter()
    for p in pairs:
        v = score_free_label(p.text_a, p.text_b, synonyms, rules)
        counts[v.rule.value] += 1
        out.append(p.relabelled(v.label, v.rule.value, "score-free", Protocol.SCORE_FREE))
    if not out:
        return out, RelabelSummary()

    positives = sum(p.is_duplicate for p in out)
    summary = RelabelSummary(
        n=len(out),
        positives=positives,
        negatives=len(out) - positives,
        positive_rate=positives / len(out),
        rule_counts=dict(sorted(counts.items())),
    )
    if all(p.protocol is Protocol.PRIMARY for p in pairs):
        primary = [p.is_duplicate for p in pairs]
        relabelled = [p.is_duplicate for p in out]
        agreement = cohen_agreement(primary, relabelled)
        summary.kappa_vs_primary = agreement.kappa
        summary.disagreements = sum(x != y for x, y in zip(primary, relabelled))
        summary.chance_disagreement = agreement.chance_disagreement
    return out, summary
