from __future__ import annotations
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union

import numpy as np

from core.errors import CapacityExceeded, EmptyInput, InvalidSpec, UnsupportedVariant
from core.rationals import expansion, has_expansion, parse_rational

# Exact-arithmetic caps: denominators up to 3**64, at most 2**22 pieces.
MAX_DENOMINATOR = 3 ** 64
MAX_PIECES = 1 << 22
FAT_MAX_GENERATION = 6
FAT_EXACT_GENERATION = 20


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if not (0 <= lo <= hi <= 1):
            raise InvalidSpec(f"interval [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint closed intervals, sorted by lo."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple(self.intervals)
        for a, b in zip(ivs, ivs[1:]):
            if not a.hi < b.lo:
                raise InvalidSpec(f"intervals [{a.lo},{a.hi}] and [{b.lo},{b.hi}] overlap or are unsorted")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def from_pairs(cls, pairs: Iterable, merge: bool = True) -> "IntervalSet":
        pieces = [p if isinstance(p, Interval) else Interval(*p) for p in pairs]
        return cls(tuple(_merge(pieces) if merge else pieces))

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def pairs(self) -> list[tuple[Fraction, Fraction]]:
        return [(iv.lo, iv.hi) for iv in self.intervals]

    def total_length(self) -> Fraction:
        return sum((iv.length for iv in self.intervals), Fraction(0))

    def measure_below(self, x: Fraction) -> Fraction:
        """Length of the part of the set inside [0, x]."""
        x = Fraction(x)
        return sum((min(iv.hi, x) - iv.lo for iv in self.intervals if iv.lo < x), Fraction(0))

    def contains_point(self, x: Fraction) -> bool:
        return any(iv.contains(x) for iv in self.intervals)

    def covers(self, other: "IntervalSet") -> bool:
        return all(any(a.lo <= b.lo and b.hi <= a.hi for a in self.intervals) for b in other.intervals)

    def reflected(self) -> "IntervalSet":
        return IntervalSet(tuple(Interval(1 - iv.hi, 1 - iv.lo) for iv in reversed(self.intervals)))

    def scaled(self, factor: Fraction, shift: Fraction = Fraction(0)) -> "IntervalSet":
        return IntervalSet(tuple(Interval(iv.lo * factor + shift, iv.hi * factor + shift) for iv in self.intervals))


def _merge(pieces: list[Interval]) -> list[Interval]:
    out: list[Interval] = []
    for iv in sorted(pieces, key=lambda p: p.lo):
        if out and iv.lo <= out[-1].hi:
            if iv.hi > out[-1].hi:
                out[-1] = Interval(out[-1].lo, iv.hi)
        else:
            out.append(iv)
    return out


# --- construction variants ---

@dataclass(frozen=True)
class KeepDigits:
    base: int
    kept: frozenset

    def __post_init__(self):
        kept = frozenset(int(d) for d in self.kept)
        object.__setattr__(self, "kept", kept)
        if not all(0 <= d < self.base for d in kept):
            raise InvalidSpec(f"kept digits {sorted(kept)} must lie in 0..{self.base - 1}")
        if not 2 <= len(kept) < self.base:
            raise InvalidSpec(f"need 2 <= |K| < b, got |K|={len(kept)}, b={self.base}")

    def digits(self) -> "KeepDigits":
        return self


@dataclass(frozen=True)
class MiddleRemove:
    """Base-b construction dropping the central digit (b - 1) / 2."""

    base: int

    def __post_init__(self):
        if self.base < 3 or self.base % 2 == 0:
            raise InvalidSpec(f"middle removal needs an odd base >= 3, got {self.base}")

    def digits(self) -> KeepDigits:
        mid = (self.base - 1) // 2
        return KeepDigits(self.base, frozenset(d for d in range(self.base) if d != mid))


@dataclass(frozen=True)
class TwoScale:
    l1: Fraction
    l2: Fraction

    def __post_init__(self):
        l1, l2 = Fraction(self.l1), Fraction(self.l2)
        if l1 <= 0 or l2 <= 0 or l1 + l2 >= 1:
            raise InvalidSpec(f"two-scale ratios need l1, l2 > 0 and l1 + l2 < 1, got {l1}, {l2}")
        object.__setattr__(self, "l1", l1)
        object.__setattr__(self, "l2", l2)


@dataclass(frozen=True)
class Fat:
    """Triadic-style set removing a centred 3**-(2**k) fraction at step k."""


CantorSpec = Union[KeepDigits, MiddleRemove, TwoScale, Fat]
TRIADIC = KeepDigits(3, frozenset({0, 2}))


def parse_variant(text: str) -> CantorSpec:
    """triadic | middle:<b> | digits:<b>:<kept> | twoscale:<l1>:<l2> | fat

    <kept> is a comma list ("0,2") or, for bases up to 10, a digit string ("02").
    """
    parts = text.strip().split(":")
    kind = parts[0].lower()
    try:
        if kind == "triadic" and len(parts) == 1:
            return TRIADIC
        if kind == "fat" and len(parts) == 1:
            return Fat()
        if kind == "middle" and len(parts) == 2:
            return MiddleRemove(int(parts[1]))
        if kind == "digits" and len(parts) == 3:
            kept = parts[2].split(",") if "," in parts[2] else list(parts[2])
            return KeepDigits(int(parts[1]), frozenset(int(d) for d in kept))
        if kind == "twoscale" and len(parts) == 3:
            return TwoScale(parse_rational(parts[1]), parse_rational(parts[2]))
    except ValueError as e:
        raise InvalidSpec(f"bad variant {text!r}: {e}")
    raise InvalidSpec(f"unknown variant {text!r}")


def _check_generation(n: int) -> None:
    if n < 0:
        raise InvalidSpec(f"generation must be >= 0, got {n}")


def kept_numerators(spec: KeepDigits, n: int) -> np.ndarray:
    """Sorted k such that [k / b^n, (k + 1) / b^n] is a generation-n piece."""
    b = spec.base
    if b ** n > MAX_DENOMINATOR:
        raise CapacityExceeded(f"denominator {b}^{n} exceeds 3^64")
    if len(spec.kept) ** n > MAX_PIECES:
        raise CapacityExceeded(f"{len(spec.kept)}^{n} pieces exceeds {MAX_PIECES}")
    dtype = np.int64 if b ** n < 2 ** 63 else object
    ks = np.zeros(1, dtype=dtype)
    digits = np.array(sorted(spec.kept), dtype=dtype)
    for _ in range(n):
        ks = (ks[:, None] * b + digits).ravel()
    return ks


def _digit_segments(spec: KeepDigits, n: int) -> list[Interval]:
    den = spec.base ** n
    return [Interval(Fraction(k, den), Fraction(k + 1, den)) for k in kept_numerators(spec, n).tolist()]


def _two_scale_segments(spec: TwoScale, n: int) -> list[Interval]:
    if (spec.l1.denominator * spec.l2.denominator) ** n > MAX_DENOMINATOR:
        raise CapacityExceeded(f"two-scale generation {n} exceeds the denominator cap")
    if 2 ** n > MAX_PIECES:
        raise CapacityExceeded(f"2^{n} pieces exceeds {MAX_PIECES}")
    pieces = [(Fraction(0), Fraction(1))]
    for _ in range(n):
        nxt = []
        for a, b in pieces:
            length = b - a
            nxt.append((a, a + spec.l1 * length))
            nxt.append((b - spec.l2 * length, b))
        pieces = nxt
    return [Interval(a, b) for a, b in pieces]


def _fat_segments(n: int) -> list[Interval]:
    if n > FAT_MAX_GENERATION:
        raise CapacityExceeded(f"fat generation {n} exceeds {FAT_MAX_GENERATION}")
    pieces = [(Fraction(0), Fraction(1))]
    for k in range(n):
        keep = (1 - Fraction(1, 3 ** (2 ** k))) / 2
        nxt = []
        for a, b in pieces:
            side = (b - a) * keep
            nxt.append((a, a + side))
            nxt.append((b - side, b))
        pieces = nxt
    return [Interval(a, b) for a, b in pieces]


def segments(spec: CantorSpec, n: int) -> list[Interval]:
    """Generation-n construction pieces before touching pieces are merged."""
    _check_generation(n)
    if isinstance(spec, (KeepDigits, MiddleRemove)):
        return _digit_segments(spec.digits(), n)
    if isinstance(spec, TwoScale):
        return _two_scale_segments(spec, n)
    if isinstance(spec, Fat):
        return _fat_segments(n)
    raise UnsupportedVariant(f"unknown Cantor spec {spec!r}")


def generate(spec: CantorSpec, n: int) -> IntervalSet:
    return IntervalSet(tuple(_merge(segments(spec, n))))


def total_length(s: IntervalSet) -> Fraction:
    return s.total_length()


@lru_cache(maxsize=None)
def _fat_length_exact(n: int) -> Fraction:
    num, den = 1, 1
    for k in range(n):
        m = 3 ** (2 ** k)
        num *= m - 1
        den *= m
    return Fraction(num, den)


def fat_length(n: int, exact: bool = True):
    """Surviving length of the fat set: prod_{k<n} (1 - 3**-(2**k))."""
    _check_generation(n)
    if not exact:
        return math.prod(1.0 - 3.0 ** -(2 ** k) for k in range(n))
    if n > FAT_EXACT_GENERATION:
        raise CapacityExceeded(f"exact fat length limited to n <= {FAT_EXACT_GENERATION}, got {n}")
    return _fat_length_exact(n)


def length_at(spec: CantorSpec, n: int) -> Fraction:
    """Closed-form surviving length at generation n."""
    _check_generation(n)
    if isinstance(spec, (KeepDigits, MiddleRemove)):
        d = spec.digits()
        return Fraction(len(d.kept), d.base) ** n
    if isinstance(spec, TwoScale):
        return (spec.l1 + spec.l2) ** n
    if isinstance(spec, Fat):
        return fat_length(n)
    raise UnsupportedVariant(f"unknown Cantor spec {spec!r}")


def removed_length(spec: CantorSpec, n: int) -> Fraction:
    return 1 - length_at(spec, n)


def removal_series(spec: CantorSpec, n: int) -> list[Fraction]:
    """Length removed at each step 1..n; partial sums equal removed_length."""
    lengths = [length_at(spec, k) for k in range(n + 1)]
    return [a - b for a, b in zip(lengths, lengths[1:])]


def similarity_dimension(spec: CantorSpec) -> float:
    if isinstance(spec, (KeepDigits, MiddleRemove)):
        d = spec.digits()
        return math.log(len(d.kept)) / math.log(d.base)
    raise UnsupportedVariant(f"similarity dimension needs equal-ratio pieces, got {type(spec).__name__}")


class Membership(str, Enum):
    IN = "in"
    OUT = "out"
    UNDECIDED = "undecided"


def _digits_kept(x: Fraction, spec: KeepDigits, depth: int, lower: bool) -> bool:
    digits = expansion(x, spec.base, lower)
    return all(next(digits)[0] in spec.kept for _ in range(depth))


def contains(spec: CantorSpec, x, depth: int) -> Membership:
    """Membership in generate(spec, depth) from the first `depth` base-b digits.

    Both expansions of a b-adic x are tried and either one qualifying gives
    IN, so endpoints of removed intervals are members. With dual expansions
    resolved this way every depth-n verdict is IN or OUT; UNDECIDED is left
    to the open-ended games in `sierpinski`.
    """
    if not isinstance(spec, (KeepDigits, MiddleRemove)):
        raise UnsupportedVariant(f"contains needs a digit construction, got {type(spec).__name__}")
    x = parse_rational(x)
    if not 0 <= x <= 1:
        raise InvalidSpec(f"x must lie in [0, 1], got {x}")
    if depth < 1:
        raise InvalidSpec(f"depth must be >= 1, got {depth}")
    digits = spec.digits()
    if any(_digits_kept(x, digits, depth, lower) for lower in (False, True) if has_expansion(x, lower)):
        return Membership.IN
    return Membership.OUT


def largest_gap(s: IntervalSet) -> Fraction:
    if len(s) == 0:
        raise EmptyInput("largest_gap of an empty interval set")
    ivs = s.intervals
    return max((b.lo - a.hi for a, b in zip(ivs, ivs[1:])), default=Fraction(0))


def rasterize(s: IntervalSet, resolution: int) -> np.ndarray:
    """Cell i is occupied when [i/R, (i+1)/R] overlaps the set with positive length."""
    cells = np.zeros(resolution, dtype=bool)
    for iv in s:
        lo = math.floor(iv.lo * resolution)
        hi = math.ceil(iv.hi * resolution)
        if hi > lo:
            cells[lo:hi] = True
    return cells
