"""Pairwise similarity primitives and embedding providers."""

from __future__ import annotations

import hashlib
import json
import math
import shlex
import subprocess
import urllib.request
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from rapidfuzz.distance import Indel, Levenshtein

from .errors import ProviderError
from .identity import whitespace_collapse
from .tokensim import subsequence_containment, token_jaccard

__all__ = [
    "EmbeddingProvider",
    "ExternalProvider",
    "FallbackProvider",
    "TfidfModel",
    "char_ngrams",
    "cosine",
    "edit_distance",
    "embed_batch",
    "fit_tfidf",
    "levenshtein_at_least",
    "levenshtein_ratio",
    "NORMALIZATIONS",
    "max_edits_for",
    "subsequence_containment",
    "tfidf_cosine",
    "token_jaccard",
]


# --- Levenshtein -----------------------------------------------------------


def edit_distance(a: str, b: str, max_distance: int | None = None) -> int:
    """Unit-cost edit distance.

    With *max_distance*, the computation is banded and any result above the
    bound is reported as ``max_distance + 1``.
    """
    return Levenshtein.distance(a, b, score_cutoff=max_distance)


NORMALIZATIONS = ("max", "sum")


def levenshtein_ratio(a: str, b: str, normalization: str = "max") -> float:
    """Edit similarity in [0, 1].

    ``max``: ``1 - d / max(|a|, |b|)`` with unit-cost insert/delete/substitute.
    ``sum``: ``1 - d_indel / (|a| + |b|)``, where a substitution costs two
    (the ratio used by difflib-style and python-Levenshtein tooling).
    """
    if normalization == "sum":
        total = len(a) + len(b)
        return 1.0 if total == 0 else 1.0 - Indel.distance(a, b) / total
    if normalization != "max":
        raise ValueError(f"unknown normalization {normalization!r}; choose from {NORMALIZATIONS}")
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / longest


def max_edits_for(threshold: float, longest: int) -> int:
    # the epsilon keeps e.g. (1 - 0.8) * 10 from flooring to 1; the exact ratio decides anyway
    return max(0, math.floor((1.0 - threshold) * longest + 1e-9))


def levenshtein_at_least(a: str, b: str, threshold: float, normalization: str = "max") -> bool:
    """``levenshtein_ratio(a, b) >= threshold`` with an early-exit band."""
    if normalization != "max":
        return levenshtein_ratio(a, b, normalization) >= threshold
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0 >= threshold
    bound = max_edits_for(threshold, longest)
    if abs(len(a) - len(b)) > bound:
        return False
    d = edit_distance(a, b, bound)
    if d > bound:
        return False
    return 1.0 - d / longest >= threshold


# --- embeddings ------------------------------------------------------------


@runtime_checkable
class EmbeddingProvider(Protocol):
    name: str
    dim: int
    max_tokens: int

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return an ``(len(texts), dim)`` array; normalisation is not required."""
        ...


def char_ngrams(text: str, lo: int = 3, hi: int = 5) -> list[str]:
    text = whitespace_collapse(text).lower()
    grams = []
    for n in range(lo, hi + 1):
        grams.extend(text[i : i + n] for i in range(len(text) - n + 1))
    return grams


@dataclass
class FallbackProvider:
    """Offline, deterministic stand-in for a sentence-embedding model.

    Character 3-5-grams are weighted by ``1 + ln(tf)`` and projected to
    ``dim`` dimensions; each n-gram's projection row is a Gaussian vector
    drawn from a generator seeded by the n-gram's BLAKE2b digest.
    """

    dim: int = 384
    max_tokens: int = 256
    seed: int = 0
    name: str = "fallback-char3-5-rp384"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            counts = Counter(char_ngrams(text)) or Counter({"\x00" + text.lower(): 1})
            for gram in sorted(counts):
                out[i] += (1.0 + math.log(counts[gram])) * _projection_row(gram, self.seed, self.dim)
        return out


@lru_cache(maxsize=262_144)
def _projection_row(gram: str, seed: int, dim: int) -> np.ndarray:
    key = int.from_bytes(hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "big")
    row = np.random.default_rng([seed, key]).standard_normal(dim)
    row.setflags(write=False)
    return row


class ExternalProvider:
    """Vectors from an external process or HTTP service.

    Texts go out newline-delimited; one whitespace-separated vector per line
    comes back (a JSON array per line is accepted too). An endpoint starting with ``http://`` or ``https://`` is
    POSTed to, anything else is run as a command with the texts on stdin.
    """

    def __init__(
        self,
        endpoint: str,
        name: str | None = None,
        dim: int | None = None,
        max_tokens: int = 256,
        timeout: float = 300.0,
    ) -> None:
        self.endpoint = endpoint
        self.name = name or f"external:{endpoint}"
        self.dim = dim or 0
        self.max_tokens = max_tokens
        self.timeout = timeout

    def _call(self, payload: str) -> str:
        if self.endpoint.startswith(("http://", "https://")):
            req = urllib.request.Request(
                self.endpoint,
                data=payload.encode("utf-8"),
                headers={"Content-Type": "text/plain; charset=utf-8"},
                method="POST",
            )
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.read().decode("utf-8")
        proc = subprocess.run(
            shlex.split(self.endpoint),
            input=payload,
            capture_output=True,
            text=True,
            timeout=self.timeout,
        )
        if proc.returncode != 0:
            raise RuntimeError(f"exit status {proc.returncode}: {proc.stderr.strip()[:200]}")
        return proc.stdout

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim))
        payload = "".join(t.replace("\r", " ").replace("\n", " ") + "\n" for t in texts)
        try:
            body = self._call(payload)
        except Exception as exc:
            raise ProviderError(self.name, None, str(exc)) from exc
        lines = [ln for ln in body.splitlines() if ln.strip()]
        if len(lines) != len(texts):
            raise ProviderError(self.name, min(len(lines), len(texts) - 1), f"expected {len(texts)} vectors, got {len(lines)}")
        rows = []
        for i, ln in enumerate(lines):
            try:
                rows.append(_parse_vector(ln))
            except (ValueError, TypeError) as exc:
                raise ProviderError(self.name, i, f"unparseable vector: {exc}") from exc
        width = len(rows[0])
        for i, r in enumerate(rows):
            if len(r) != width or (self.dim and width != self.dim):
                raise ProviderError(self.name, i, f"vector has {len(r)} values, expected {self.dim or width}")
        self.dim = width
        return np.asarray(rows, dtype=np.float64)


def _parse_vector(line: str) -> list[float]:
    line = line.strip()
    if line.startswith("["):
        return [float(x) for x in json.loads(line)]
    return [float(x) for x in line.replace(",", " ").split()]


def _truncate(text: str, max_tokens: int) -> str:
    words = text.split()
    if len(words) <= max_tokens:
        return text
    return " ".join(words[:max_tokens])


def embed_batch(provider: EmbeddingProvider, texts: Sequence[str]) -> np.ndarray:
    """Unit-normalised embeddings, one row per input text, order preserved."""
    prepared = [_truncate(t, provider.max_tokens) for t in texts]
    try:
        raw = np.asarray(provider.embed(prepared), dtype=np.float64)
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(provider.name, _first_failing(provider, prepared), str(exc)) from exc
    if raw.shape[0] != len(prepared):
        raise ProviderError(provider.name, None, f"returned {raw.shape[0]} vectors for {len(prepared)} texts")
    if len(prepared) == 0:
        return raw.reshape(0, provider.dim)
    norms = np.linalg.norm(raw, axis=1)
    bad = np.flatnonzero(~np.isfinite(norms) | (norms == 0))
    if bad.size:
        raise ProviderError(provider.name, int(bad[0]), "zero or non-finite vector")
    return raw / norms[:, None]


def _first_failing(provider: EmbeddingProvider, texts: Sequence[str]) -> int | None:
    for i, t in enumerate(texts):
        try:
            provider.embed([t])
        except Exception:
            return i
    return None


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


# --- TF-IDF ----------------------------------------------------------------


@dataclass
class TfidfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    fitted_on: int
    ngram_range: tuple[int, int] = (3, 5)

    def transform(self, text: str) -> dict[int, float]:
        """Sparse L2-normalised TF-IDF vector as ``{index: weight}``."""
        counts = Counter(g for g in char_ngrams(text, *self.ngram_range) if g in self.vocabulary)
        vec = {self.vocabulary[g]: c * float(self.idf[self.vocabulary[g]]) for g, c in counts.items()}
        norm = math.sqrt(sum(w * w for w in vec.values()))
        if norm == 0:
            return {}
        return {k: w / norm for k, w in vec.items()}


def fit_tfidf(texts: Sequence[str], ngram_range: tuple[int, int] = (3, 5)) -> TfidfModel:
    """Character n-gram TF-IDF with smoothed idf ``ln((1+N)/(1+df)) + 1``."""
    df: Counter[str] = Counter()
    for t in texts:
        df.update(set(char_ngrams(t, *ngram_range)))
    vocabulary = {g: i for i, g in enumerate(sorted(df))}
    n = len(texts)
    idf = np.array([math.log((1 + n) / (1 + df[g])) + 1.0 for g in sorted(df)], dtype=np.float64)
    return TfidfModel(vocabulary=vocabulary, idf=idf, fitted_on=n, ngram_range=ngram_range)


def tfidf_cosine(model: TfidfModel, a: str, b: str) -> float:
    va, vb = model.transform(a), model.transform(b)
    dot = math.fsum(va[k] * vb[k] for k in va.keys() & vb.keys())
    return min(1.0, max(0.0, dot))
