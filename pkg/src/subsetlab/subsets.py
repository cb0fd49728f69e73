"""Index sets and combinatorial enumeration.

Conventions used throughout the package:

- variables are 0-based indices ``0..d-1`` internally; the CLI converts to
  1-based at its boundary,
- a support is a strictly increasing tuple of indices wrapped in
  :class:`SupportSet`, which orders lexicographically (the tie-break order
  used by every estimator),
- size-``k`` subsets are enumerated in colexicographic order, so every subset
  has a deterministic rank (:func:`colex_rank` / :func:`colex_unrank`) that
  enumeration work can be partitioned by.

:func:`revolving_door_combinations` yields the same subsets in a Gray-code
order where consecutive subsets differ by a single element swap; useful when
an incremental per-subset update is cheaper than a fresh solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True, order=True)
class SupportSet:
    """Sorted, duplicate-free set of variable indices."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        for a, b in zip(idx, idx[1:]):
            if a >= b:
                raise InvalidParameterError(f"support indices must be strictly increasing, got {idx}")
        if idx and idx[0] < 0:
            raise InvalidParameterError(f"support indices must be nonnegative, got {idx}")

    @classmethod
    def of(cls, items: Iterable[int]) -> "SupportSet":
        """Build from any iterable, sorting and deduplicating."""
        return cls(tuple(sorted({int(i) for i in items})))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, item) -> bool:
        return int(item) in self.indices

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def validate_for_dim(self, d: int) -> None:
        if self.indices and self.indices[-1] >= d:
            raise InvalidParameterError(f"support {self.indices} out of range for dimension {d}")

    def difference(self, other: "SupportSet") -> "SupportSet":
        return SupportSet.of(set(self.indices) - set(other.indices))

    def union(self, other: "SupportSet") -> "SupportSet":
        return SupportSet.of(set(self.indices) | set(other.indices))

    def issubset(self, other: "SupportSet") -> bool:
        return set(self.indices) <= set(other.indices)


EMPTY_SUPPORT = SupportSet(())


def binom(n: int, k: int) -> int:
    """Exact binomial coefficient; 0 outside the triangle."""
    if k < 0 or n < 0 or k > n:
        return 0
    return math.comb(n, k)


def colex_combinations(d: int, k: int) -> Iterator[tuple[int, ...]]:
    """All size-``k`` subsets of ``range(d)`` in colexicographic order.

    Colex compares subsets by their largest differing element, so the sequence
    starts at ``(0, .., k-1)`` and ends at ``(d-k, .., d-1)``.
    """
    if k < 0 or k > d:
        return
    if k == 0:
        yield ()
        return
    state = list(range(k))
    while True:
        yield tuple(state)
        # smallest position whose entry can advance without colliding
        i = 0
        while i + 1 < k and state[i] + 1 == state[i + 1]:
            i += 1
        if state[i] + 1 >= d:
            return
        state[i] += 1
        for j in range(i):
            state[j] = j


def colex_rank(subset: Iterable[int]) -> int:
    """Position of a subset within the colex enumeration of its size class."""
    rank = 0
    for pos, value in enumerate(sorted(int(i) for i in subset)):
        rank += binom(value, pos + 1)
    return rank


def colex_unrank(d: int, k: int, rank: int) -> tuple[int, ...]:
    """Inverse of :func:`colex_rank` for subsets of ``range(d)``."""
    total = binom(d, k)
    if rank < 0 or rank >= total:
        raise InvalidParameterError(f"rank {rank} out of range for C({d},{k})={total}")
    out = []
    remaining = rank
    for pos in range(k, 0, -1):
        # largest value whose prefix count fits in the remaining rank
        value = pos - 1
        while binom(value + 1, pos) <= remaining:
            value += 1
        out.append(value)
        remaining -= binom(value, pos)
    return tuple(reversed(out))


def revolving_door_combinations(d: int, k: int) -> Iterator[tuple[int, ...]]:
    """Size-``k`` subsets of ``range(d)`` in a single-swap Gray-code order.

    Consecutive outputs differ by exactly one element (one leaves, one
    enters).  Covers each subset exactly once.
    """
    if k < 0 or k > d:
        return
    if k == 0:
        yield ()
        return
    if k == d:
        yield tuple(range(d))
        return

    def rec(n: int, t: int, forward: bool) -> Iterator[tuple[int, ...]]:
        if t == 0:
            yield ()
            return
        if t == n:
            yield tuple(range(n))
            return
        if forward:
            yield from rec(n - 1, t, True)
            for rest in rec(n - 1, t - 1, False):
                yield rest + (n - 1,)
        else:
            for rest in rec(n - 1, t - 1, True):
                yield rest + (n - 1,)
            yield from rec(n - 1, t, False)

    yield from rec(d, k, True)


@lru_cache(maxsize=64)
def combination_array(d: int, k: int) -> np.ndarray:
    """All size-``k`` subsets of ``range(d)`` as a ``(C(d,k), k)`` int array.

    Rows follow colex order.  Cached because sweeps reuse the same (d, k)
    across thousands of trials; treat the result as read-only.
    """
    count = binom(d, k)
    out = np.empty((count, k), dtype=np.intp)
    for row, comb in enumerate(colex_combinations(d, k)):
        out[row] = comb
    out.setflags(write=False)
    return out


def count_subsets_up_to(d: int, kmax: int) -> int:
    """Number of subsets of ``range(d)`` with size at most ``kmax``."""
    return sum(binom(d, k) for k in range(kmax + 1))
