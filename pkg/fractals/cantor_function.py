from __future__ import annotations
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from core.errors import FractalBenchError, InvalidSpec, NoPlateau
from core.rationals import expansion, is_dyadic, parse_rational
from .cantor_sets import TRIADIC, Interval, generate, kept_numerators


@dataclass(frozen=True)
class DyadicValue:
    """M(x) as an exact dyadic; truncated values lie within `bound` below the true M(x)."""

    value: Fraction
    truncated: bool = False
    bound: Fraction = Fraction(0)

    def __post_init__(self):
        if not (0 <= self.value <= 1 and is_dyadic(self.value)):
            raise InvalidSpec(f"{self.value} is not a dyadic value in [0, 1]")


@dataclass(frozen=True)
class BarSegment:
    interval: Interval
    mass: Fraction
    density: Fraction


@dataclass(frozen=True)
class Staircase:
    """Polyline vertices as integer numerators over the common denominators 3^n and 2^n."""

    x_num: np.ndarray
    x_den: int
    y_num: np.ndarray
    y_den: int
    length: float

    def __len__(self) -> int:
        return len(self.x_num)

    @property
    def points(self) -> list[tuple[Fraction, Fraction]]:
        return [(Fraction(int(x), self.x_den), Fraction(int(y), self.y_den))
                for x, y in zip(self.x_num.tolist(), self.y_num.tolist())]


def evaluate(x, depth: int) -> DyadicValue:
    """Cantor function by the ternary digit rule.

    Digits 0/2 become binary 0/1 until the first ternary 1, which is kept as
    1 and ends the expansion. The result equals M(floor(3^depth x) / 3^depth).
    """
    x = parse_rational(x)
    if not 0 <= x <= 1:
        raise InvalidSpec(f"x must lie in [0, 1], got {x}")
    if depth < 1:
        raise InvalidSpec(f"depth must be >= 1, got {depth}")
    if x == 1:
        return DyadicValue(Fraction(1))
    value = Fraction(0)
    digits = expansion(x, 3)
    for i in range(1, depth + 1):
        d, r = next(digits)
        if d == 1:
            return DyadicValue(value + Fraction(1, 2 ** i))
        if d == 2:
            value += Fraction(1, 2 ** i)
        if r == 0:
            return DyadicValue(value)
    return DyadicValue(value, truncated=True, bound=Fraction(1, 2 ** depth))


def _periodic_preimage(m: Fraction) -> Fraction:
    # binary expansion of a non-dyadic m is periodic; map digit b -> 2b in base 3
    seen: dict = {}
    bits = []
    r = m
    for d, nr in expansion(m, 2):
        if r in seen:
            break
        seen[r] = len(bits)
        bits.append(d)
        r = nr
    start = seen[r]
    head = sum((Fraction(2 * b, 3 ** (i + 1)) for i, b in enumerate(bits[:start])), Fraction(0))
    cycle = bits[start:]
    period = sum((Fraction(2 * b, 3 ** (j + 1)) for j, b in enumerate(cycle)), Fraction(0))
    return head + Fraction(1, 3 ** start) * period / (1 - Fraction(1, 3 ** len(cycle)))


def plateau_of(m) -> Interval:
    """Closed interval on which M equals m; zero width when m is not dyadic."""
    m = parse_rational(m)
    if m <= 0 or m >= 1:
        raise NoPlateau(f"M takes the value {m} on no plateau (need 0 < m < 1)")
    if not is_dyadic(m):
        x = _periodic_preimage(m)
        return Interval(x, x)
    n = m.denominator.bit_length() - 1
    bits = [(m.numerator >> (n - 1 - i)) & 1 for i in range(n)]
    lo = sum((Fraction(2 * b, 3 ** (i + 1)) for i, b in enumerate(bits[:-1])), Fraction(0))
    lo += Fraction(1, 3 ** n)
    return Interval(lo, lo + Fraction(1, 3 ** n))


def staircase_length(n: int) -> float:
    """Plateaus add 1 - (2/3)^n, the 2^n risers sqrt(1 + (4/9)^n)."""
    return 1.0 - (2.0 / 3.0) ** n + math.sqrt(1.0 + (4.0 / 9.0) ** n)


def staircase_polyline(n: int) -> Staircase:
    """Generation-n polyline: a riser across each kept piece, flat across each gap."""
    if n < 1:
        raise InvalidSpec(f"staircase generation must be >= 1, got {n}")
    ks = kept_numerators(TRIADIC, n)
    pieces = len(ks)
    xs = np.zeros(2 * pieces, dtype=np.int64)
    ys = np.zeros(2 * pieces, dtype=np.int64)
    xs[1::2] = ks + 1
    xs[2::2] = ks[1:]
    ys[1::2] = np.arange(1, pieces + 1)
    ys[2::2] = np.arange(1, pieces)
    x_den, y_den = 3 ** n, 2 ** n
    length = math.fsum(np.hypot(np.diff(xs) / x_den, np.diff(ys) / y_den).tolist())
    return Staircase(xs, x_den, ys, y_den, length)


def bar_distribution(n: int) -> list[BarSegment]:
    bars = generate(TRIADIC, n)
    mass = Fraction(1, 2 ** n)
    return [BarSegment(iv, mass, mass / iv.length) for iv in bars]


def holder_exponent() -> float:
    alpha = math.log(2) / math.log(3)
    for n in range(1, 21):
        # mu_n = 2^-n, l_n = 3^-n
        ratio = math.log(2 ** n) / math.log(3 ** n)
        if abs(ratio - alpha) > 1e-12:
            raise FractalBenchError(f"ln mu_n / ln l_n = {ratio} differs from {alpha} at n={n}")
    return alpha
