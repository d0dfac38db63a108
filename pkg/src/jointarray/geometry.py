"""Integer sensor geometries on the half-wavelength grid.

Spatial statistics are exact: means and variances come back as
:class:`fractions.Fraction`. Floating point only enters at the CRB and
signal layers.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Mapping

DEFAULT_ENUMERATION_BUDGET = 10**7


class GeometryError(ValueError):
    """Raised for arrays or constructor arguments that are not admissible."""


class BudgetExceededError(GeometryError):
    """Raised when an exhaustive search would enumerate too many subsets."""

    def __init__(self, count, budget):
        super().__init__(
            f"enumeration of {count} subsets exceeds the budget of {budget}")
        self.count = count
        self.budget = budget


@dataclass(frozen=True)
class SensorArray:
    """Strictly increasing integer sensor positions (half-wavelength units)."""

    positions: tuple[int, ...]

    def __init__(self, positions: Iterable[int]):
        pos = tuple(int(p) for p in positions)
        if not pos:
            raise GeometryError("a sensor array needs at least one sensor")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise GeometryError(
                f"positions must be strictly increasing, got {list(pos)}")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def parse(cls, text: str) -> "SensorArray":
        """Parse a comma-separated list such as ``"0,1,2,12,13,14"``.

        Positions are sorted; duplicates are rejected.
        """
        try:
            values = [int(tok) for tok in text.replace(" ", "").split(",") if tok]
        except ValueError as exc:
            raise GeometryError(f"cannot parse sensor positions {text!r}") from exc
        return cls(sorted(values))

    def __len__(self):
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)

    def __str__(self):
        return ",".join(str(p) for p in self.positions)

    def aperture(self) -> int:
        return self.positions[-1] - self.positions[0]

    def shift(self, offset: int) -> "SensorArray":
        return SensorArray(p + offset for p in self.positions)

    def scale(self, factor: int) -> "SensorArray":
        """Dilate by a nonzero integer factor (negative factors reflect)."""
        if factor == 0:
            raise GeometryError("dilation factor must be nonzero")
        return SensorArray(sorted(p * factor for p in self.positions))

    def reflect(self) -> "SensorArray":
        return SensorArray(sorted(-p for p in self.positions))


@dataclass(frozen=True)
class CoArray:
    """Sum co-array elements together with their pair multiplicities."""

    multiplicity: Mapping[int, int] = field(default_factory=dict)

    @property
    def elements(self) -> tuple[int, ...]:
        return tuple(sorted(self.multiplicity))

    def __len__(self):
        return len(self.multiplicity)

    def total_pairs(self) -> int:
        return sum(self.multiplicity.values())

    def to_text(self) -> str:
        """Two-column ``element multiplicity`` report, one line per element."""
        return "\n".join(f"{e} {self.multiplicity[e]}" for e in self.elements)


def spatial_mean(d: SensorArray) -> Fraction:
    return Fraction(sum(d.positions), len(d))


def spatial_variance(d: SensorArray) -> Fraction:
    """Population variance of the sensor positions, as an exact fraction."""
    mu = spatial_mean(d)
    return sum(((p - mu) ** 2 for p in d.positions), Fraction(0)) / len(d)


def ula(n: int) -> SensorArray:
    """Uniform linear array ``{0, 1, ..., n-1}``."""
    if n < 1:
        raise GeometryError(f"ULA size must be positive, got {n}")
    return SensorArray(range(n))


def _check_clustered_args(n, l):
    if l < 1:
        raise GeometryError(f"aperture must be a positive integer, got {l}")
    if n < 2 or n % 2:
        raise GeometryError(
            f"clustered arrays are defined for even n >= 2 only, got n={n}")
    if n > l + 1:
        raise GeometryError(f"{n} sensors do not fit in aperture {l}")


def clustered_array(n: int, l: int) -> SensorArray:
    """Half the sensors packed at each end of the aperture ``[0, l]``.

    This is the unique ``n``-subset of ``{0, ..., l}`` with maximal
    spatial variance (for even ``n``).
    """
    _check_clustered_args(n, l)
    half = n // 2
    return SensorArray(sorted(set(range(half)) | {l - k for k in range(half)}))


def clustered_variance_closed_form(n: int, l: int) -> Fraction:
    _check_clustered_args(n, l)
    gap = Fraction(l + 1) - Fraction(n, 2)
    return (gap**2 + Fraction(1, 3) * (Fraction(n * n, 4) - 1)) / 4


def max_variance_subset(n: int, l: int,
                        budget: int = DEFAULT_ENUMERATION_BUDGET) -> SensorArray:
    """Brute-force the ``n``-subset of ``{0, ..., l}`` with largest variance.

    Serves as an independent oracle for :func:`clustered_array`. Only subsets
    containing both endpoints are enumerated (any optimum spans the full
    aperture, since stretching the outermost sensor outward increases the
    variance) and each reflection pair is visited once.

    Raises
    ------
    BudgetExceededError
        If ``C(l+1, n)`` exceeds ``budget``.
    """
    _check_clustered_args(n, l)
    count = comb(l + 1, n)
    if count > budget:
        raise BudgetExceededError(count, budget)

    best_key, best = None, None
    interior = range(1, l)
    for inner in combinations(interior, n - 2):
        # reflection prune: keep the lexicographically smaller representative
        mirrored = tuple(sorted(l - p for p in inner))
        if mirrored < inner:
            continue
        cand = (0,) + inner + (l,)
        # n * sum(d^2) - sum(d)^2 is n^2 times the variance
        key = n * sum(p * p for p in cand) - sum(cand) ** 2
        if best_key is None or key > best_key:
            best_key, best = key, cand
    return SensorArray(best)


def optimal_tx_array(nt: int, nr: int) -> SensorArray:
    """Transmit ULA dilated by ``nr/2``.

    Paired with ``clustered_array(nr, corollary_aperture(nt, nr))`` the sum
    co-array is contiguous and nonredundant.
    """
    if nt < 1:
        raise GeometryError(f"nt must be positive, got {nt}")
    if nr < 2 or nr % 2:
        raise GeometryError(f"nr must be even and >= 2, got {nr}")
    return SensorArray(k * (nr // 2) for k in range(nt))


def corollary_aperture(nt: int, nr: int) -> int:
    if nt < 1:
        raise GeometryError(f"nt must be positive, got {nt}")
    if nr < 2 or nr % 2:
        raise GeometryError(f"nr must be even and >= 2, got {nr}")
    return (nt + 1) * nr // 2 - 1


def canonical_mimo(nt: int, nr: int) -> tuple[SensorArray, SensorArray]:
    """Nested MIMO pair: transmit ULA and receive ULA dilated by ``nt``."""
    if nt < 1 or nr < 1:
        raise GeometryError(f"nt and nr must be positive, got ({nt}, {nr})")
    return ula(nt), ula(nr).scale(nt)


def sum_coarray(tx: SensorArray, rx: SensorArray) -> CoArray:
    counts = Counter(a + b for a in tx.positions for b in rx.positions)
    return CoArray(dict(sorted(counts.items())))


def is_contiguous(c: CoArray | Iterable[int]) -> bool:
    elements = sorted(c.elements if isinstance(c, CoArray) else set(c))
    if not elements:
        return False
    return elements[-1] - elements[0] + 1 == len(elements)


def is_nonredundant(c: CoArray, nt: int, nr: int) -> bool:
    return len(c) == nt * nr


def beamforming_condition(tx: SensorArray, rx: SensorArray) -> bool:
    """True when the receive variance strictly exceeds the transmit variance.

    Under this condition transmit beamforming toward the target is the
    CRB-optimal waveform.
    """
    return spatial_variance(rx) > spatial_variance(tx)
