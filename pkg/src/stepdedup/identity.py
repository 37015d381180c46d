"""Step identity: whitespace normalisation, digests, tokenisation, synonyms."""

from __future__ import annotations

import hashlib
import os
import re
import string
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

__all__ = [
    "DEFAULT_SYNONYMS",
    "LicenseClass",
    "PARAM",
    "ParamMode",
    "StepOccurrence",
    "SynonymTable",
    "canonicalize",
    "load_synonyms",
    "step_identity",
    "tokenize",
    "whitespace_collapse",
]

PARAM = "PARAM"

_WS = re.compile(r"\s+")
_QUOTED = re.compile(r'"[^"]*"')
_QUOTED_OR_PLACEHOLDER = re.compile(r'"[^"]*"|<[^<>\s][^<>]*>')
_NUMERIC = re.compile(r"[+-]?\d+(?:[.,]\d+)*")
_NON_WORD = re.compile(r"[^\w]")
_EDGE_PUNCT = string.punctuation


class ParamMode(str, Enum):
    QUOTED_ONLY = "quoted_only"
    FULL = "full"


class LicenseClass(str, Enum):
    PERMISSIVE = "permissive"
    COPYLEFT = "copyleft"
    UNKNOWN = "unknown"
    UNLICENSED = "unlicensed"


@dataclass(frozen=True)
class StepOccurrence:
    repo_id: str
    path: str
    line_no: int
    keyword: str
    raw_text: str
    normalized_text: str
    identity_digest: str
    has_docstring: bool = False
    has_datatable: bool = False
    is_background: bool = False
    is_outline: bool = False
    license_class: LicenseClass = LicenseClass.UNKNOWN


def whitespace_collapse(text: str) -> str:
    return _WS.sub(" ", text).strip()


def step_identity(normalized_text: str) -> str:
    """128-bit BLAKE2b digest of an already-collapsed step text, as hex."""
    return hashlib.blake2b(normalized_text.encode("utf-8"), digest_size=16).hexdigest()


def _plain_tokens(segment: str, full: bool) -> list[str]:
    out: list[str] = []
    for raw in segment.lower().replace("-", " ").split():
        if full and _NUMERIC.fullmatch(raw.strip(_EDGE_PUNCT)):
            out.append(PARAM)
            continue
        tok = _NON_WORD.sub("", raw)
        if tok:
            out.append(tok)
    return out


def tokenize(text: str, param_mode: ParamMode | str = ParamMode.QUOTED_ONLY) -> list[str]:
    """Lowercased word tokens with parameters replaced by ``PARAM``.

    ``quoted_only`` replaces each double-quoted span. ``full`` additionally
    replaces ``<placeholder>`` spans and standalone numeric literals.
    Punctuation is dropped, except hyphens which separate tokens.
    """
    full = ParamMode(param_mode) is ParamMode.FULL
    pattern = _QUOTED_OR_PLACEHOLDER if full else _QUOTED
    tokens: list[str] = []
    pos = 0
    for m in pattern.finditer(text):
        tokens.extend(_plain_tokens(text[pos : m.start()], full))
        tokens.append(PARAM)
        pos = m.end()
    tokens.extend(_plain_tokens(text[pos:], full))
    return tokens


class SynonymTable(Mapping[str, str]):
    """Variant token -> canonical token. Canonical tokens map to themselves."""

    def __init__(self, pairs: Mapping[str, str] | Iterable[tuple[str, str]] = ()) -> None:
        items = pairs.items() if isinstance(pairs, Mapping) else pairs
        table: dict[str, str] = {}
        for variant, canonical in items:
            variant, canonical = variant.strip().lower(), canonical.strip().lower()
            if not variant or not canonical:
                raise ValueError("empty synonym entry")
            if table.get(variant, canonical) != canonical:
                raise ValueError(f"conflicting synonym entries for {variant!r}")
            table[variant] = canonical
        for canonical in set(table.values()):
            target = table.setdefault(canonical, canonical)
            if target != canonical:
                raise ValueError(f"synonym chain through {canonical!r}; map variants to the final form")
        self._table = table

    def __getitem__(self, key: str) -> str:
        return self._table[key]

    def __iter__(self):
        return iter(self._table)

    def __len__(self) -> int:
        return len(self._table)

    def __repr__(self) -> str:
        return f"SynonymTable({len(self._table)} entries)"


DEFAULT_SYNONYMS = SynonymTable(
    {
        "click": "press",
        "tap": "press",
        "press": "press",
        "shown": "displayed",
        "visible": "displayed",
        "displayed": "displayed",
        "go": "navigate",
        "navigate": "navigate",
        "correct": "valid",
        "valid": "valid",
    }
)


def load_synonyms(path: str | os.PathLike[str]) -> SynonymTable:
    """Read ``variant -> canonical`` lines; ``#`` starts a comment."""
    pairs: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "->" not in line:
                raise ValueError(f"{path}:{line_no}: expected 'variant -> canonical'")
            variant, canonical = line.split("->", 1)
            pairs.append((variant, canonical))
    return SynonymTable(pairs)


def canonicalize(tokens: Sequence[str], synonyms: Mapping[str, str]) -> list[str]:
    return [synonyms.get(t, t) for t in tokens]
