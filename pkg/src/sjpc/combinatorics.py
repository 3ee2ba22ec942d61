"""Binomial coefficients and the lattice of column combinations.

Combinations are always ordered lexicographically; the rank of a combination
is its position in that order. Every other module (sub-value encoding,
sampling, reporting) relies on this single canonical order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

# Binomials feed the solver as scale factors; anything past 128 bits means
# the caller asked for a lattice far beyond what the estimator can handle.
BINOMIAL_LIMIT = 1 << 127


def choose(n: int, k: int) -> int:
    """Exact ``C(n, k)``; zero when ``k > n``.

    Raises:
        ValueError: negative arguments.
        OverflowError: result does not fit in 127 bits.
    """
    if n < 0 or k < 0:
        raise ValueError(f"choose needs non-negative arguments, got ({n}, {k})")
    if k > n:
        return 0
    k = min(k, n - k)
    result = 1
    for i in range(1, k + 1):
        result = result * (n - k + i) // i
        if result >= BINOMIAL_LIMIT:
            raise OverflowError(f"C({n}, {k}) exceeds the 128-bit limit")
    return result


@dataclass(frozen=True)
class ColumnCombination:
    """A k-subset of attribute indices, one node of the lattice."""

    level_k: int
    indices: tuple[int, ...]
    rank: int

    def __post_init__(self) -> None:
        if len(self.indices) != self.level_k:
            raise ValueError("indices length must equal level_k")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")


def _check_level(d: int, k: int) -> None:
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")


def combination_rank(indices: tuple[int, ...] | list[int], d: int) -> int:
    """Lexicographic rank of ``indices`` among all k-subsets of ``range(d)``."""
    k = len(indices)
    rank = 0
    prev = -1
    for pos, col in enumerate(indices):
        if not prev < col < d:
            raise ValueError(f"invalid combination {indices!r} for d={d}")
        for skipped in range(prev + 1, col):
            rank += choose(d - skipped - 1, k - pos - 1)
        prev = col
    return rank


def unrank_combination(d: int, k: int, rank: int) -> ColumnCombination:
    """Return the ``rank``-th k-subset of ``range(d)`` in lexicographic order."""
    _check_level(d, k)
    total = choose(d, k)
    if not 0 <= rank < total:
        raise ValueError(f"rank {rank} out of range [0, {total}) for d={d}, k={k}")
    remaining = rank
    indices = []
    col = 0
    for pos in range(k):
        while True:
            block = choose(d - col - 1, k - pos - 1)
            if remaining < block:
                break
            remaining -= block
            col += 1
        indices.append(col)
        col += 1
    return ColumnCombination(k, tuple(indices), rank)


@lru_cache(maxsize=256)
def _enumerate(d: int, k: int) -> tuple[ColumnCombination, ...]:
    out = []
    indices = list(range(k))
    rank = 0
    while True:
        out.append(ColumnCombination(k, tuple(indices), rank))
        rank += 1
        # advance to the next subset in lexicographic order
        i = k - 1
        while i >= 0 and indices[i] == d - k + i:
            i -= 1
        if i < 0:
            break
        indices[i] += 1
        for j in range(i + 1, k):
            indices[j] = indices[j - 1] + 1
    return tuple(out)


def enumerate_combinations(d: int, k: int) -> list[ColumnCombination]:
    """All ``C(d, k)`` combinations, ranks ``0..C(d,k)-1`` in order."""
    _check_level(d, k)
    return list(_enumerate(d, k))


def alternating_binomial_sum(i: int, k: int) -> int:
    """Term-by-term ``sum_{j=k..i} (-1)^(i-j) * C(i-k+1, j-k+1)``.

    Deliberately not simplified: this exists so the closed form ``(-1)^(i-k)``
    can be checked against it.
    """
    if not i >= k >= 0:
        raise ValueError(f"need i >= k >= 0, got i={i}, k={k}")
    total = 0
    for j in range(k, i + 1):
        sign = -1 if (i - j) % 2 else 1
        total += sign * choose(i - k + 1, j - k + 1)
    return total
