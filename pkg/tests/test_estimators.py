import math

import numpy as np
import pytest

from analysis.estimators import (box_count, correlation_dimension, correlation_integral, fit_dimension,
                                 information_dimension, mass_dimension, parse_scale_range, renyi_spectrum,
                                 scale_list, two_scale_box_series, two_scale_cells)
from analysis.multifractal import REFERENCE_MEASURE, information_dimension as analytic_d1, support_dimension
from core.errors import DegenerateFit, EmptyInput, InsufficientScales, InvalidSpec, ScaleMismatch
from core.grid import Grid2D
from core.random_stream import RandomStream
from fractals.cantor_sets import TRIADIC, generate
from fractals.sierpinski import STANDARD_CARPET, carpet_generate, sponge_generate


def test_scale_helpers():
    assert scale_list(3, 1, 3).tolist() == pytest.approx([1 / 3, 1 / 9, 1 / 27])
    assert parse_scale_range("2..8") == (2, 8)
    assert parse_scale_range("4") == (4, 4)
    with pytest.raises(InvalidSpec):
        parse_scale_range("a..b")
    with pytest.raises(InvalidSpec):
        scale_list(2, 5, 1)


def test_carpet_and_sponge_slopes_are_exact():
    carpet = box_count(carpet_generate(STANDARD_CARPET, 4), scale_list(3, 1, 4))
    assert carpet.counts.tolist() == [8, 64, 512, 4096]
    fit = fit_dimension(carpet)
    assert fit.slope == pytest.approx(math.log(8) / math.log(3), abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)
    sponge = fit_dimension(box_count(sponge_generate(3), scale_list(3, 1, 3)))
    assert sponge.slope == pytest.approx(math.log(20) / math.log(3), abs=1e-12)


def test_box_count_errors():
    grid = Grid2D.full(9, 3)
    with pytest.raises(ScaleMismatch):
        box_count(grid, [0.5])
    with pytest.raises(InsufficientScales):
        fit_dimension(box_count(grid, [1 / 3, 1 / 9]))
    with pytest.raises(EmptyInput):
        box_count(Grid2D(np.zeros((4, 4), dtype=bool)), [0.5])
    with pytest.raises(InvalidSpec):
        box_count(grid, [1.5])
    with pytest.raises(DegenerateFit):
        fit_dimension(box_count(np.full(10, 0.3), scale_list(2, 1, 3)))


def test_point_scales_flag_sampling():
    pts = np.linspace(0.01, 0.99, 50)
    assert not box_count(pts, [0.5, 0.25]).sampled
    assert box_count(pts, [0.3]).sampled


def test_renyi_on_a_full_square():
    for q, dq, r2 in renyi_spectrum(Grid2D.full(16), [0, 1, 2, -3], scale_list(2, 1, 4)):
        assert dq == pytest.approx(2.0, abs=1e-9), q
        assert r2 == pytest.approx(1.0)


def test_uniform_points_recover_the_plane():
    pts = RandomStream(5).next_unit_array(200_000).reshape(-1, 2)
    results = {q: dq for q, dq, _ in renyi_spectrum(pts, [0, 1, 2], scale_list(2, 2, 5))}
    for q in (0, 1, 2):
        assert results[q] == pytest.approx(2.0, abs=0.05)


def test_correlation_integral_counts_strictly_closer_pairs():
    pts = np.array([0.0, 0.5, 1.0])
    c = correlation_integral(pts, [0.6, 0.5, 1.5])
    assert c.tolist() == pytest.approx([4 / 9, 0.0, 6 / 9])
    with pytest.raises(EmptyInput):
        correlation_integral(np.array([0.3]), [0.1])


def test_correlation_dimension_of_cantor_endpoints():
    ends = np.array([float(x) for pair in generate(TRIADIC, 10).pairs() for x in pair])
    fit = correlation_dimension(ends, scale_list(3, 1, 6))
    assert fit.slope == pytest.approx(math.log(2) / math.log(3), abs=0.03)


def test_correlation_dimension_of_coincident_points():
    with pytest.raises(DegenerateFit):
        correlation_dimension(np.full((20, 2), 0.25), scale_list(2, 1, 4))


def test_mass_dimension():
    assert mass_dimension(1.0, 1.0, 10.0) == 3.0
    assert mass_dimension(2.0, 1.0, 2.0) == pytest.approx(2.0)
    with pytest.raises(InvalidSpec):
        mass_dimension(1.0, 1.0, 1.0)
    with pytest.raises(InvalidSpec):
        mass_dimension(0.0, 1.0, 3.0)


def test_two_scale_cells():
    m = REFERENCE_MEASURE
    lo, width, mass = two_scale_cells(m, 6)
    assert len(lo) == 64
    assert mass.sum() == pytest.approx(1.0)
    assert width.sum() == pytest.approx((m.l1 + m.l2) ** 6)
    assert np.all(lo >= 0) and np.all(lo + width <= 1 + 1e-12)
    with pytest.raises(InvalidSpec):
        two_scale_cells(m, 25)


@pytest.mark.slow
def test_two_scale_refinement_estimates():
    m = REFERENCE_MEASURE
    series = two_scale_box_series(m, 20, 12, 20)
    assert fit_dimension(series).slope == pytest.approx(support_dimension(m), abs=0.02)
    assert information_dimension(series).slope == pytest.approx(analytic_d1(m), abs=0.02)
