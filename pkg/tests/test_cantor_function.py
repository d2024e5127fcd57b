import math
from fractions import Fraction as F

import pytest

from core.errors import InvalidSpec, NoPlateau
from core.random_stream import RandomStream
from fractals.cantor_function import (bar_distribution, evaluate, holder_exponent, plateau_of,
                                      staircase_length, staircase_polyline)


def test_exact_values():
    assert evaluate(F(1, 3), 10).value == F(1, 2)
    assert evaluate(F(7, 9), 10).value == F(3, 4)
    assert evaluate(F(0), 10).value == 0
    assert evaluate(F(1), 10).value == 1
    assert not evaluate(F(2, 9), 10).truncated


def test_truncated_value_is_a_lower_bound():
    v = evaluate(F(1, 4), 20)
    assert v.truncated
    assert 0 <= F(1, 3) - v.value <= v.bound == F(1, 2 ** 20)


def test_monotone_and_symmetric_on_random_rationals():
    s = RandomStream(0)
    den = 3 ** 10
    xs = sorted({F(s.next_choice(den + 1), den) for _ in range(2000)})
    values = [evaluate(x, 11).value for x in xs]
    assert values == sorted(values)
    assert all(evaluate(1 - x, 11).value == 1 - v for x, v in zip(xs, values))


@pytest.mark.parametrize("m, lo, hi", [
    (F(1, 4), F(1, 9), F(2, 9)),
    (F(1, 2), F(1, 3), F(2, 3)),
    (F(3, 4), F(7, 9), F(8, 9)),
    (F(5, 8), F(19, 27), F(20, 27)),
])
def test_plateaus(m, lo, hi):
    iv = plateau_of(m)
    assert (iv.lo, iv.hi) == (lo, hi)
    assert evaluate(F(lo + hi, 2), 30).value == m


def test_non_dyadic_value_has_a_single_preimage():
    iv = plateau_of(F(1, 3))
    assert iv.lo == iv.hi == F(1, 4)
    with pytest.raises(NoPlateau):
        plateau_of(F(0))
    with pytest.raises(NoPlateau):
        plateau_of(F(1))


def test_staircase():
    first = staircase_polyline(1)
    assert first.points == [(0, 0), (F(1, 3), F(1, 2)), (F(2, 3), F(1, 2)), (1, 1)]
    assert first.length == pytest.approx(F(1, 3) + math.sqrt(13) / 3)
    for n in range(1, 8):
        assert staircase_polyline(n).length == pytest.approx(staircase_length(n), rel=1e-12)
    lengths = [staircase_length(n) for n in range(1, 21)]
    assert all(a < b for a, b in zip(lengths, lengths[1:]))
    assert lengths[-1] == pytest.approx(2.0, abs=1e-3)
    with pytest.raises(InvalidSpec):
        staircase_polyline(0)


def test_bar_distribution_and_holder_exponent():
    bars = bar_distribution(2)
    assert len(bars) == 4
    assert sum(b.mass for b in bars) == 1
    assert all(b.density == F(9, 4) for b in bars)
    assert holder_exponent() == pytest.approx(math.log(2) / math.log(3))


def test_evaluate_rejects_bad_input():
    with pytest.raises(InvalidSpec):
        evaluate(F(3, 2), 5)
    with pytest.raises(InvalidSpec):
        evaluate(F(1, 2), 0)


def test_self_similarity_on_thirds():
    s = RandomStream(3)
    den = 3 ** 10
    for _ in range(500):
        x = F(s.next_choice(den + 1), den)
        m = evaluate(x, 11).value
        assert evaluate(x / 3, 12).value == m / 2
        assert evaluate(x / 3 + F(2, 3), 12).value == F(1, 2) + m / 2


@pytest.mark.parametrize("n", [1, 3, 6])
def test_staircase_risers_match_bars(n):
    points = staircase_polyline(n).points
    bars = bar_distribution(n)
    assert len(points) == 2 * len(bars)
    for i, bar in enumerate(bars):
        (x0, y0), (x1, y1) = points[2 * i], points[2 * i + 1]
        assert (x0, x1) == (bar.interval.lo, bar.interval.hi)
        assert y1 - y0 == bar.mass
        assert bar.density == (y1 - y0) / (x1 - x0)
        if i:
            assert points[2 * i - 1][1] == y0


@pytest.mark.slow
def test_staircase_at_generation_twenty():
    stair = staircase_polyline(20)
    assert len(stair) == 2 ** 21
    assert stair.length == pytest.approx(staircase_length(20), rel=1e-12)
    assert (int(stair.x_num[-1]), int(stair.y_num[-1])) == (stair.x_den, stair.y_den)
