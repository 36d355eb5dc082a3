"""Edit-distance recovery for near-miss method references.

Uses the optimal-string-alignment variant of Damerau-Levenshtein: inserts,
deletes, substitutions, and adjacent transpositions, with no substring edited
twice (so d("ca","abc") is 3, where unrestricted Damerau-Levenshtein gives 2).
"""

from __future__ import annotations

from .code_index import CodeIndex


def damerau_levenshtein(a: str, b: str) -> int:
    """OSA distance between two strings."""
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev2 = [0] * (lb + 1)
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        ca = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            best = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and ca == b[j - 2] and a[i - 2] == b[j - 1]:
                best = min(best, prev2[j - 2] + 1)
            cur[j] = best
        prev2, prev = prev, cur
    return prev[lb]


def default_distance_cap(query: str) -> int:
    return max(2, -(-len(query) // 4))


def fuzzy_method_candidates(
    query: str, index: CodeIndex, n: int = 5, cap: int | None = None
) -> list[tuple[str, str]]:
    """(method name, fq_path) pairs within edit distance cap of the query,
    sorted by (distance, name, path) and truncated to n."""
    if cap is None:
        cap = default_distance_cap(query)
    scored: list[tuple[int, str, str]] = []
    for name, paths in index.method_locator.items():
        distance = damerau_levenshtein(query, name)
        if distance <= cap:
            scored.extend((distance, name, path) for path in paths)
    scored.sort()
    return [(name, path) for _, name, path in scored[:n]]
