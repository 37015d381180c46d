"""Slow, independent reference implementations used only by the tests."""

from __future__ import annotations

import math
from collections import Counter
from functools import lru_cache


def dp_edit_distance(a: str, b: str) -> int:
    """Full Wagner-Fischer matrix, no banding, no shortcuts."""
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(
                d[i - 1][j] + 1,
                d[i][j - 1] + 1,
                d[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return d[len(a)][len(b)]


def dp_ratio(a: str, b: str) -> float:
    m = max(len(a), len(b))
    return 1.0 if m == 0 else 1.0 - dp_edit_distance(a, b) / m


def recursive_lcs(a, b) -> int:
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def brute_partition(texts, match) -> set[frozenset[str]]:
    """All pairs, then connected components by repeated BFS."""
    texts = sorted(set(texts))
    adj = {t: set() for t in texts}
    for i, a in enumerate(texts):
        for b in texts[i + 1 :]:
            if match(a, b):
                adj[a].add(b)
                adj[b].add(a)
    seen: set[str] = set()
    parts = set()
    for t in texts:
        if t in seen:
            continue
        comp, stack = set(), [t]
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            stack.extend(adj[x] - comp)
        seen |= comp
        parts.add(frozenset(comp))
    return parts


def brute_tfidf_cosine(corpus, a: str, b: str, lo: int = 3, hi: int = 5) -> float:
    def grams(t: str):
        t = " ".join(t.split()).lower()
        return [t[i : i + n] for n in range(lo, hi + 1) for i in range(len(t) - n + 1)]

    n = len(corpus)
    df = Counter()
    for t in corpus:
        for g in set(grams(t)):
            df[g] += 1

    def vec(t: str):
        tf = Counter(g for g in grams(t) if g in df)
        return {g: c * (math.log((1 + n) / (1 + df[g])) + 1) for g, c in tf.items()}

    va, vb = vec(a), vec(b)
    na = math.sqrt(sum(v * v for v in va.values()))
    nb = math.sqrt(sum(v * v for v in vb.values()))
    if na == 0 or nb == 0:
        return 0.0
    return sum(va[g] * vb.get(g, 0.0) for g in va) / (na * nb)


def fleiss_by_hand(table) -> float:
    """Fleiss' kappa with explicit loops over items and categories."""
    N = len(table)
    n = sum(table[0])
    k = len(table[0])
    p_j = [sum(row[j] for row in table) / (N * n) for j in range(k)]
    P_i = []
    for row in table:
        P_i.append((sum(x * x for x in row) - n) / (n * (n - 1)))
    P_bar = sum(P_i) / N
    Pe = sum(p * p for p in p_j)
    return (P_bar - Pe) / (1 - Pe)


def dp_ratio_all_pairs(texts):
    """Full DP for every pair at once, vectorised across pairs with numpy.

    Returns a dict {(a, b): ratio} for a < b. Every cell of every matrix is
    filled; the answer is read at (len(a), len(b)).
    """
    import numpy as np

    texts = sorted(set(texts))
    idx_a, idx_b = np.triu_indices(len(texts), k=1)
    if idx_a.size == 0:
        return {}
    width = max(len(t) for t in texts)
    codes = np.full((len(texts), width), -1, dtype=np.int64)
    for r, t in enumerate(texts):
        codes[r, : len(t)] = [ord(c) for c in t]
    lens = np.array([len(t) for t in texts])
    A, B = codes[idx_a], codes[idx_b]
    n = idx_a.size
    prev = np.tile(np.arange(width + 1), (n, 1))
    rows = [prev]
    for i in range(1, width + 1):
        cur = np.empty_like(prev)
        cur[:, 0] = i
        for j in range(1, width + 1):
            sub = prev[:, j - 1] + (A[:, i - 1] != B[:, j - 1])
            cur[:, j] = np.minimum(np.minimum(prev[:, j] + 1, cur[:, j - 1] + 1), sub)
        rows.append(cur)
        prev = cur
    full = np.stack(rows, axis=1)  # (pairs, width+1, width+1)
    la, lb = lens[idx_a], lens[idx_b]
    dist = full[np.arange(n), la, lb]
    longest = np.maximum(la, lb)
    ratio = np.where(longest == 0, 1.0, 1.0 - dist / np.maximum(longest, 1))
    return {(texts[i], texts[j]): float(r) for i, j, r in zip(idx_a.tolist(), idx_b.tolist(), ratio.tolist())}


def random_step_texts(rng, n_unique: int, max_len: int = 24):
    """Clumpy random texts: a few seeds plus point mutations of them."""
    alphabet = "abcdefg "
    seeds = []
    while len(seeds) < max(1, n_unique // 8):
        s = " ".join("".join(rng.choice(alphabet) for _ in range(rng.randint(4, max_len))).split())
        if s:
            seeds.append(s)
    out = set(seeds)
    while len(out) < n_unique:
        t = list(rng.choice(seeds))
        for _ in range(rng.randint(1, 4)):
            op = rng.random()
            pos = rng.randint(0, len(t))
            if op < 0.4 and len(t) < max_len:
                t.insert(pos, rng.choice(alphabet))
            elif op < 0.7 and len(t) > 1:
                del t[min(pos, len(t) - 1)]
            elif t:
                t[min(pos, len(t) - 1)] = rng.choice(alphabet)
        s = "".join(t).strip()
        if s:
            out.add(" ".join(s.split()))
    return sorted(out)


def sum_norm_ratio(a: str, b: str) -> float:
    """Insert/delete-only similarity: 2 * LCS / (|a| + |b|)."""
    total = len(a) + len(b)
    return 1.0 if total == 0 else 2 * recursive_lcs(a, b) / total
