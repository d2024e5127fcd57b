from __future__ import annotations
import math
from fractions import Fraction
from typing import Iterator, Tuple

from .errors import InvalidSpec


def parse_rational(text) -> Fraction:
    """Accept `p/q`, decimals and integers; decimals are read exactly ("0.6" -> 3/5)."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise InvalidSpec(f"not a rational number: {text!r} ({e})")


def format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def fmt12(v) -> str:
    return f"{float(v):.12g}"


def expansion(x: Fraction, base: int, lower: bool = False) -> Iterator[Tuple[int, Fraction]]:
    """Yield (digit, remainder) pairs of the base-`base` expansion of x in [0, 1].

    lower=False gives the greedy expansion (terminating where possible),
    lower=True the one ending in repeated (base - 1) digits. The remainder is
    the value of the tail still to be expanded: [0, 1) for greedy, (0, 1] for lower.
    """
    r = Fraction(x)
    while True:
        t = r * base
        d = math.ceil(t) - 1 if lower else math.floor(t)
        r = t - d
        yield d, r


def has_expansion(x: Fraction, lower: bool) -> bool:
    # 1 has no greedy digits below the base, 0 has no lower expansion
    return x > 0 if lower else x < 1


def is_dyadic(x: Fraction) -> bool:
    d = x.denominator
    return d & (d - 1) == 0
