"""Rankings with ties over a fixed set of alternatives.

A ranking is stored as a tuple of tier indices, one per alternative, with
tier 0 the best. Tiers are always numbered ``0..t_max`` without gaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .exceptions import InputError


@dataclass(frozen=True)
class Ranking:
    ranks: tuple[int, ...]

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        if not ranks:
            raise InputError("a ranking needs at least one alternative")
        if any(r < 0 for r in ranks):
            raise InputError(f"tier indices must be non-negative: {ranks}")
        if set(ranks) != set(range(max(ranks) + 1)):
            raise InputError(f"tiers must be numbered 0..t_max without gaps: {ranks}")
        object.__setattr__(self, "ranks", ranks)

    @property
    def n_a(self) -> int:
        return len(self.ranks)

    @property
    def n_tiers(self) -> int:
        return max(self.ranks) + 1

    def __len__(self):
        return len(self.ranks)

    def __getitem__(self, i):
        return self.ranks[i]

    def __iter__(self):
        return iter(self.ranks)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.ranks, dtype=dtype or np.int64)

    @classmethod
    def from_scores(cls, scores, higher_is_better=True, tie_tol=0.0):
        return ranking_from_scores(scores, higher_is_better, tie_tol)


@dataclass(frozen=True)
class AlternativeSet:
    names: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        if not names:
            raise InputError("an alternative set needs at least one name")
        if len(set(names)) != len(names):
            raise InputError(f"alternative names must be unique: {names}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    @property
    def n_a(self) -> int:
        return len(self.names)

    def index(self, name) -> int:
        try:
            return self._index[str(name)]
        except KeyError:
            raise InputError(f"unknown alternative {name!r}") from None

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)


def _as_ranks(r) -> tuple[int, ...]:
    return r.ranks if isinstance(r, Ranking) else Ranking(tuple(r)).ranks


def ranking_from_scores(
    scores: Sequence[float], higher_is_better: bool = True, tie_tol: float = 0.0
) -> Ranking:
    """Rank alternatives by score.

    Scores are sorted (descending when ``higher_is_better``) and consecutive
    sorted values whose gap is at most ``tie_tol`` are chained into one tier.
    Chaining makes the grouping independent of input order.
    """
    s = np.asarray(scores, dtype=float).ravel()
    if s.size == 0:
        raise InputError("scores must contain at least one value")
    if not np.all(np.isfinite(s)):
        raise InputError(f"scores must be finite: {s.tolist()}")
    if tie_tol < 0 or not math.isfinite(tie_tol):
        raise InputError(f"tie_tol must be a non-negative real, got {tie_tol}")
    key = -s if higher_is_better else s
    order = np.argsort(key, kind="stable")
    sorted_key = key[order]
    # a new tier starts wherever the gap to the previous sorted score exceeds tol
    new_tier = np.concatenate(([0], (np.diff(sorted_key) > tie_tol).astype(np.int64)))
    tiers = np.cumsum(new_tier)
    ranks = np.empty_like(tiers)
    ranks[order] = tiers
    return Ranking(tuple(ranks.tolist()))


def borda_count(r, target: int) -> int:
    """Number of alternatives weakly dominated by ``target`` (itself included)."""
    ranks = _as_ranks(r)
    if not 0 <= target < len(ranks):
        raise InputError(f"target {target} out of range for {len(ranks)} alternatives")
    t = ranks[target]
    return sum(1 for x in ranks if x >= t)


def top_k_tiers(r, k: int) -> frozenset[int]:
    """Alternatives in the ``k`` best tiers."""
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    ranks = _as_ranks(r)
    return frozenset(i for i, x in enumerate(ranks) if x <= k - 1)


def discordant_pairs(r1, r2) -> float:
    """Discordant pairs between two rankings, tie-vs-strict mismatches counting half.

    Ranges over ``[0, C(n_a, 2)]``.
    """
    a, b = _as_ranks(r1), _as_ranks(r2)
    if len(a) != len(b):
        raise InputError(f"rankings differ in length: {len(a)} vs {len(b)}")
    total = 0.0
    for i, j in combinations(range(len(a)), 2):
        sa = (a[i] > a[j]) - (a[i] < a[j])
        sb = (b[i] > b[j]) - (b[i] < b[j])
        # |sa - sb| is 2 for a reversal, 1 for a one-sided tie
        total += abs(sa - sb) / 2
    return total
