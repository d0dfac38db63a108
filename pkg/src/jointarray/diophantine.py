"""Receive geometries with exactly equal spatial variance.

Two ``n``-sensor arrays share a spatial variance exactly when their centred
sums of squares agree, an equal-sums-of-squares identity such as
``1^2 + 8^2 = 4^2 + 7^2``. Since the optimal-waveform CRB depends on the
receive array only through its variance, such arrays have identical CRBs.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from math import comb

from .geometry import BudgetExceededError, GeometryError, SensorArray

DEFAULT_SEARCH_BUDGET = 10**7


@dataclass(frozen=True)
class VarianceClass:
    variance_key: int
    members: tuple[SensorArray, ...]

    def to_text(self) -> str:
        arrays = " ".join(f"[{m}]" for m in self.members)
        return f"key={self.variance_key}: {arrays}"


def variance_key(d: SensorArray) -> int:
    """``N * sum(d^2) - sum(d)^2``, i.e. ``N^2`` times the spatial variance."""
    s = sum(d.positions)
    return len(d) * sum(p * p for p in d.positions) - s * s


def canonical_form(d: SensorArray) -> SensorArray:
    """Translate to start at 0, then take the lexicographically smaller of the
    array and its mirror image."""
    lo, hi = d.positions[0], d.positions[-1]
    fwd = tuple(p - lo for p in d.positions)
    rev = tuple(sorted(hi - p for p in d.positions))
    return SensorArray(min(fwd, rev))


def _canonical_subsets(n, l_max):
    # every canonical subset starts at 0; the mirror check removes reflections
    for rest in combinations(range(1, l_max + 1), n - 1):
        cand = (0,) + rest
        top = cand[-1]
        mirrored = tuple(sorted(top - p for p in cand))
        if mirrored < cand:
            continue
        yield cand


def equal_variance_search(n: int, l_max: int,
                          budget: int = DEFAULT_SEARCH_BUDGET) -> list[VarianceClass]:
    """Group canonical ``n``-subsets of ``{0, ..., l_max}`` by variance.

    Returns only groups with at least two non-congruent members, sorted by
    key; members within a group are sorted by aperture, then positions.

    Raises
    ------
    BudgetExceededError
        If ``C(l_max+1, n)`` exceeds ``budget``.
    """
    if n < 2:
        raise GeometryError(f"need at least two sensors, got n={n}")
    if l_max < 1:
        raise GeometryError(f"l_max must be positive, got {l_max}")
    count = comb(l_max + 1, n)
    if count > budget:
        raise BudgetExceededError(count, budget)

    groups = defaultdict(list)
    for cand in _canonical_subsets(n, l_max):
        s = sum(cand)
        key = n * sum(p * p for p in cand) - s * s
        groups[key].append(cand)

    classes = []
    for key in sorted(groups):
        members = groups[key]
        if len(members) < 2:
            continue
        members.sort(key=lambda m: (m[-1], m))
        classes.append(VarianceClass(key, tuple(SensorArray(m) for m in members)))
    return classes


def find_class(classes: list[VarianceClass], d: SensorArray) -> VarianceClass | None:
    """Return the class containing the canonical form of ``d``, if any."""
    target = canonical_form(d)
    for cls in classes:
        if target in cls.members:
            return cls
    return None
