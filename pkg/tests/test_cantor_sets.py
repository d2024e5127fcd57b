import math
from fractions import Fraction as F

import numpy as np
import pytest

from core.errors import CapacityExceeded, EmptyInput, InvalidSpec, UnsupportedVariant
from core.random_stream import RandomStream
from fractals.cantor_sets import (TRIADIC, Fat, IntervalSet, KeepDigits, Membership, MiddleRemove, TwoScale,
                                  contains, fat_length, generate, kept_numerators, largest_gap, length_at,
                                  parse_variant, rasterize, removal_series, removed_length, segments,
                                  similarity_dimension, total_length)


def test_triadic_first_generations():
    assert generate(TRIADIC, 1).pairs() == [(0, F(1, 3)), (F(2, 3), 1)]
    assert generate(TRIADIC, 2).pairs() == [(0, F(1, 9)), (F(2, 9), F(1, 3)), (F(2, 3), F(7, 9)), (F(8, 9), 1)]


@pytest.mark.parametrize("spec", [TRIADIC, MiddleRemove(5), TwoScale(F(1, 4), F(2, 5)), Fat()])
def test_generation_zero_is_unit_segment(spec):
    assert generate(spec, 0).pairs() == [(0, 1)]
    assert removed_length(spec, 0) == 0


def test_middle_fifth_merges_touching_pieces():
    assert generate(MiddleRemove(5), 1).pairs() == [(0, F(2, 5)), (F(3, 5), 1)]
    assert len(segments(MiddleRemove(5), 1)) == 4
    assert len(segments(MiddleRemove(5), 3)) == 4 ** 3


@pytest.mark.parametrize("n", range(1, 9))
def test_triadic_self_similar_and_nested(n):
    s, nxt = generate(TRIADIC, n), generate(TRIADIC, n + 1)
    halves = s.scaled(F(1, 3)).pairs() + s.scaled(F(1, 3), F(2, 3)).pairs()
    assert nxt.pairs() == halves
    assert s.covers(nxt)
    assert len(nxt) == 2 ** (n + 1)


def test_kept_digit_sets_reach_the_piece_cap():
    ks = kept_numerators(TRIADIC, 3)
    assert ks.tolist() == [0, 2, 6, 8, 18, 20, 24, 26]
    wide = kept_numerators(KeepDigits(10, frozenset({0, 9})), 22)
    assert int(wide[-1]) == 10 ** 22 - 1


@pytest.mark.slow
def test_triadic_generation_twenty():
    s = generate(TRIADIC, 20)
    assert len(s) == 2 ** 20
    assert s.total_length() == F(2, 3) ** 20
    assert s.intervals[1].lo == F(2, 3 ** 20)


def test_piece_counts():
    assert len(segments(TRIADIC, 6)) == 2 ** 6
    assert len(segments(KeepDigits(10, frozenset(range(7))), 3)) == 7 ** 3
    assert len(generate(TwoScale(F(1, 4), F(2, 5)), 5)) == 2 ** 5
    assert len(generate(Fat(), 4)) == 2 ** 4


def test_lengths():
    assert total_length(generate(TRIADIC, 3)) == F(8, 27)
    assert total_length(generate(Fat(), 2)) == F(16, 27)
    ts = TwoScale(F(1, 4), F(2, 5))
    assert total_length(generate(ts, 4)) == length_at(ts, 4) == F(13, 20) ** 4
    for n in range(7):
        assert total_length(generate(MiddleRemove(5), n)) == length_at(MiddleRemove(5), n)


def test_removed_length_series():
    series = removal_series(TRIADIC, 12)
    assert series == [F(2 ** (k - 1), 3 ** k) for k in range(1, 13)]
    assert sum(series) == removed_length(TRIADIC, 12) == 1 - F(2, 3) ** 12
    assert 1 - removed_length(MiddleRemove(5), 80) < F(1, 10 ** 7)


def test_fat_length():
    assert fat_length(2) == F(16, 27)
    assert fat_length(30, exact=False) == pytest.approx(0.585187, abs=1e-5)
    with pytest.raises(CapacityExceeded):
        fat_length(21)
    with pytest.raises(CapacityExceeded):
        generate(Fat(), 7)


def test_similarity_dimensions():
    assert similarity_dimension(TRIADIC) == pytest.approx(0.63093, abs=1e-5)
    assert similarity_dimension(MiddleRemove(5)) == pytest.approx(math.log(4) / math.log(5))
    nine = KeepDigits(10, frozenset(set(range(10)) - {3}))
    assert similarity_dimension(nine) == pytest.approx(0.95424, abs=1e-5)
    assert similarity_dimension(KeepDigits(10, frozenset(range(7)))) == pytest.approx(0.8451, abs=1e-4)
    with pytest.raises(UnsupportedVariant):
        similarity_dimension(TwoScale(F(1, 4), F(2, 5)))
    with pytest.raises(UnsupportedVariant):
        similarity_dimension(Fat())


def test_spec_validation():
    with pytest.raises(InvalidSpec):
        KeepDigits(3, frozenset({1}))
    with pytest.raises(InvalidSpec):
        KeepDigits(3, frozenset({0, 1, 2}))
    with pytest.raises(InvalidSpec):
        MiddleRemove(4)
    with pytest.raises(InvalidSpec):
        TwoScale(F(1, 2), F(1, 2))
    with pytest.raises(InvalidSpec):
        generate(TRIADIC, -1)
    with pytest.raises(CapacityExceeded):
        generate(TRIADIC, 23)


def test_parse_variant():
    assert parse_variant("triadic") == TRIADIC
    assert parse_variant("middle:5") == MiddleRemove(5)
    assert parse_variant("digits:3:02") == TRIADIC
    assert parse_variant("digits:10:0,1,2,4,5,6,7,8,9") == KeepDigits(10, frozenset(set(range(10)) - {3}))
    assert parse_variant("twoscale:1/4:2/5") == TwoScale(F(1, 4), F(2, 5))
    assert parse_variant("fat") == Fat()
    with pytest.raises(InvalidSpec):
        parse_variant("middle:4")
    with pytest.raises(InvalidSpec):
        parse_variant("spiral")


@pytest.mark.parametrize("x, verdict", [
    (F(0), Membership.IN),
    (F(1), Membership.IN),
    (F(1, 4), Membership.IN),
    (F(1, 3), Membership.IN),
    (F(2, 3), Membership.IN),
    (F(1, 2), Membership.OUT),
    (F(4, 9), Membership.OUT),
])
def test_triadic_membership(x, verdict):
    assert contains(TRIADIC, x, 20) == verdict


def test_membership_reads_only_first_digits():
    # 1/10 = 0.(0022) in base 3
    assert contains(TRIADIC, F(1, 10), 2) == Membership.IN
    assert contains(TRIADIC, F(1, 10), 30) == Membership.IN
    # 5/18 = 0.021(1) in base 3
    assert contains(TRIADIC, F(5, 18), 2) == Membership.IN
    assert contains(TRIADIC, F(5, 18), 3) == Membership.OUT
    assert contains(TRIADIC, F(2, 3 ** 25), 5) == Membership.IN
    assert generate(TRIADIC, 2).contains_point(F(1, 10))
    assert not generate(TRIADIC, 3).contains_point(F(5, 18))


def test_membership_agrees_with_generated_set():
    s = generate(TRIADIC, 5)
    for k in range(244):
        x = F(k, 243)
        assert (contains(TRIADIC, x, 5) == Membership.IN) == s.contains_point(x)


def test_membership_agrees_on_random_rationals():
    rng = RandomStream(11)
    for spec, n in [(TRIADIC, 6), (MiddleRemove(5), 4), (KeepDigits(4, frozenset({0, 3})), 5)]:
        s = generate(spec, n)
        for _ in range(300):
            den = 1 + rng.next_choice(5000)
            x = F(rng.next_choice(den + 1), den)
            verdict = contains(spec, x, n)
            assert verdict != Membership.UNDECIDED
            assert (verdict == Membership.IN) == s.contains_point(x)


def test_membership_errors():
    with pytest.raises(UnsupportedVariant):
        contains(Fat(), F(1, 2), 5)
    with pytest.raises(InvalidSpec):
        contains(TRIADIC, F(3, 2), 5)
    with pytest.raises(InvalidSpec):
        contains(TRIADIC, F(1, 2), 0)


def test_interval_set_operations():
    s = generate(TRIADIC, 2)
    assert s.reflected() == s
    assert generate(TRIADIC, 1).covers(s)
    assert s.scaled(F(1, 3)).pairs()[-1] == (F(8, 27), F(1, 3))
    assert s.measure_below(F(1, 2)) == F(2, 9)
    with pytest.raises(InvalidSpec):
        IntervalSet.from_pairs([(0, F(1, 2)), (F(1, 4), 1)], merge=False)
    assert IntervalSet.from_pairs([(0, F(1, 2)), (F(1, 2), 1)]).pairs() == [(0, 1)]


def test_largest_gap_and_raster():
    assert largest_gap(generate(TRIADIC, 1)) == F(1, 3)
    assert largest_gap(generate(TRIADIC, 0)) == 0
    with pytest.raises(EmptyInput):
        largest_gap(IntervalSet(()))
    r = rasterize(generate(TRIADIC, 2), 9)
    assert r.tolist() == [True, False, True, False, False, False, True, False, True]
    assert np.count_nonzero(rasterize(generate(TRIADIC, 4), 81)) == 16
