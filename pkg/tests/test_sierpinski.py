import math
from fractions import Fraction as F

import numpy as np
import pytest

from core.errors import CapacityExceeded, InvalidSpec, Undersampled
from core.grid import face_slice
from core.random_stream import RandomStream
from fractals.cantor_sets import Membership
from fractals.sierpinski import (CANTOR_DUST, IDENTITY, IFS, LATTICE_FRAME, STANDARD_CARPET, TRIANGLE, AffineMap2D,
                                 barycentric_membership, carpet_area, carpet_dimension, carpet_generate,
                                 centered_carpet_dimension, chaos_game, cheese_dimension, from_lattice,
                                 ifs_render, in_subdivision, nearest_vertex, perimeter_series, perimeter_sum,
                                 product_dimensions, pyramid_counts, removed_area, removed_area_series,
                                 ring_carpet, sierpinski_ifs, sir_pinsky_game, sir_pinsky_step,
                                 sponge_generate, sponge_volume, to_lattice, triangle_area, triangle_cells,
                                 triangle_raster, triangle_subdivide, vertex_ifs)


def test_subdivision_counts():
    assert triangle_cells(0).tolist() == [[0, 0]]
    assert sorted(map(tuple, triangle_cells(1).tolist())) == [(0, 0), (0, 1), (1, 0)]
    assert triangle_subdivide(4).shape == (81, 3, 2)
    assert triangle_raster(5).occupied() == 3 ** 5
    with pytest.raises(CapacityExceeded):
        triangle_cells(13)


def test_subdivided_triangles_have_the_right_side():
    tris = triangle_subdivide(3)
    sides = np.linalg.norm(tris[:, 1] - tris[:, 0], axis=1)
    assert np.allclose(sides, 1 / 8)
    np.testing.assert_allclose(triangle_subdivide(0)[0], TRIANGLE, atol=1e-12)


@pytest.mark.parametrize("n", range(0, 7))
def test_ifs_raster_matches_subdivision(n):
    assert ifs_render(sierpinski_ifs(), n, 1 << n) == triangle_raster(n)


def test_ifs_render_counts_in_the_default_frame():
    assert ifs_render(sierpinski_ifs(), 0, 1).occupied() == 1
    assert ifs_render(sierpinski_ifs(), 1, 2).occupied() == 3
    assert ifs_render(sierpinski_ifs(), 5, 32).occupied() == 243
    assert ifs_render(sierpinski_ifs(), 3, 8, frame=LATTICE_FRAME) == ifs_render(sierpinski_ifs(), 3, 8)
    # raw Cartesian squares overlap
    assert ifs_render(sierpinski_ifs(), 1, 2, frame=IDENTITY).occupied() == 4


def test_sierpinski_maps():
    f1, f2, f3 = sierpinski_ifs().maps
    np.testing.assert_allclose(f2([1.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(f3([0.0, 0.0]), [0.25, math.sqrt(3) / 4])
    np.testing.assert_allclose(f1([1.0, 1.0]), [0.5, 0.5])


def test_ifs_render_guards():
    with pytest.raises(Undersampled):
        ifs_render(sierpinski_ifs(), 3, 4)
    with pytest.raises(InvalidSpec):
        ifs_render(sierpinski_ifs(), 2, 6)
    with pytest.raises(InvalidSpec):
        IFS((AffineMap2D(((1.0, 0.0), (0.0, 1.0)), (0.0, 0.0)),))


def test_affine_maps():
    f = AffineMap2D(((0.5, 0.0), (0.0, 0.5)), (0.25, 0.0))
    g = f.compose(f.inverse())
    np.testing.assert_allclose(g.A, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(f([[1.0, 1.0]]), [[0.75, 0.5]])
    assert f.ratio() == pytest.approx(0.5)
    np.testing.assert_allclose(to_lattice(TRIANGLE), [[0, 0], [1, 0], [0, 1]], atol=1e-12)
    np.testing.assert_allclose(from_lattice([[0.0, 1.0]]), [TRIANGLE[2]], atol=1e-12)


def test_chaos_game_stays_on_the_attractor():
    pts = chaos_game(TRIANGLE, 20_000, transient=16, seed=3)
    assert pts.shape == (20_000, 2)
    assert in_subdivision(pts, 8).all()
    assert np.array_equal(pts, chaos_game(TRIANGLE, 20_000, transient=16, seed=3))
    assert not np.array_equal(pts, chaos_game(TRIANGLE, 20_000, transient=16, seed=4))


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_chaos_game_visits_every_generation_six_cell(seed):
    pts = chaos_game(TRIANGLE, 1_000_000, transient=16, seed=seed)
    idx = np.clip(np.floor(to_lattice(pts) * 64).astype(np.int64), 0, 63)
    hit = set(map(tuple, idx.tolist()))
    cells = set(map(tuple, triangle_cells(6).tolist()))
    assert len(cells) == 3 ** 6
    assert cells <= hit


def test_chaos_game_filter_matches_direct_iteration():
    ifs = vertex_ifs(TRIANGLE)
    pts = chaos_game(ifs, 500, seed=11, start=(0.2, 0.1))
    choices = RandomStream(11).next_choice_array(500, 3)
    p = np.array([0.2, 0.1])
    expected = []
    for c in choices:
        p = ifs.maps[c](p)
        expected.append(p)
    np.testing.assert_allclose(pts, expected, atol=1e-12)


def test_in_subdivision_rejects_the_central_hole():
    centre = np.array([[0.5, math.sqrt(3) / 6]])
    assert not in_subdivision(centre, 3)[0]
    assert in_subdivision(TRIANGLE, 5).all()


def test_area_and_perimeter_series():
    assert triangle_area(3) == F(27, 64)
    assert removed_area(3) == 1 - F(27, 64) == sum(removed_area_series(3))
    assert perimeter_sum(2) == F(15, 4) == sum(perimeter_series(2))
    for n in range(21):
        direct = sum((3 ** (k - 1) * 3 * F(1, 2 ** k) for k in range(1, n + 1)), F(0))
        assert perimeter_sum(n) == direct


def test_sir_pinsky_game():
    assert sir_pinsky_game((F(1, 2), F(1, 4), F(1, 4)), 20) == Membership.IN
    assert sir_pinsky_game((F(1, 3), F(1, 3), F(1, 3)), 20) == Membership.OUT
    assert sir_pinsky_game((F(3, 8), F(3, 8), F(1, 4)), 20) == Membership.OUT
    np.testing.assert_allclose(sir_pinsky_step([0.3, 0.1], [0.0, 0.0]), [0.6, 0.2])
    np.testing.assert_allclose(nearest_vertex([0.9, 0.05]), TRIANGLE[1])
    with pytest.raises(InvalidSpec):
        sir_pinsky_game((F(1, 2), F(1, 2), F(1, 2)), 5)


@pytest.mark.parametrize("bary, verdict", [
    (("1/2", "1/4", "1/4"), Membership.IN),
    (("1/3", "1/3", "1/3"), Membership.OUT),
    (("3/8", "3/8", "1/4"), Membership.OUT),
    (("1", "0", "0"), Membership.IN),
])
def test_barycentric_membership(bary, verdict):
    assert barycentric_membership(*bary, depth=12) == verdict


def test_carpets():
    assert carpet_generate(STANDARD_CARPET, 2).occupied() == 64
    assert carpet_generate(CANTOR_DUST, 2).occupied() == 16
    assert carpet_generate(STANDARD_CARPET, 1).cells.tolist() == [
        [True, True, True], [True, False, True], [True, True, True]]
    assert len(ring_carpet(4).kept) == 12
    assert carpet_dimension(STANDARD_CARPET) == pytest.approx(1.892789, abs=1e-6)
    assert carpet_dimension(ring_carpet(7)) == pytest.approx(centered_carpet_dimension(7))
    assert carpet_area(2) == F(64, 81)
    assert cheese_dimension(3) == pytest.approx(2.965647, abs=1e-6)
    with pytest.raises(CapacityExceeded):
        carpet_generate(STANDARD_CARPET, 8)


@pytest.mark.parametrize("spec", [STANDARD_CARPET, ring_carpet(4), CANTOR_DUST])
@pytest.mark.parametrize("n", range(1, 5))
def test_carpet_nested_and_self_similar(spec, n):
    b = spec.base
    coarse, fine = carpet_generate(spec, n), carpet_generate(spec, n + 1)
    assert not (fine.cells & ~coarse.scaled(b).cells).any()
    side = b ** n
    for r in range(b):
        for c in range(b):
            block = fine.cells[r * side:(r + 1) * side, c * side:(c + 1) * side]
            if (r, c) in spec.kept:
                assert np.array_equal(block, coarse.cells)
            else:
                assert not block.any()


@pytest.mark.parametrize("n", range(0, 3))
def test_sponge_generations_nested(n):
    coarse, fine = sponge_generate(n).cells, sponge_generate(n + 1).cells
    assert not (fine & ~np.kron(coarse, np.ones((3, 3, 3), dtype=bool))).any()
    assert fine.sum() == 20 * coarse.sum()


def test_sponge():
    assert sponge_generate(1).occupied() == 20
    assert sponge_generate(2).occupied() == 400
    assert sponge_volume(2) == F(400, 729)
    for axis in range(3):
        assert face_slice(sponge_generate(2), axis, 0) == carpet_generate(STANDARD_CARPET, 2)
    with pytest.raises(CapacityExceeded):
        sponge_generate(5)


def test_pyramid_counts():
    c = pyramid_counts(3)
    assert c == {"tetrahedra": 64, "volume": F(1, 8), "removed": F(7, 8)}


@pytest.mark.parametrize("key, printed", [
    ("triadic_cantor", 0.6309), ("middle_fifth", 0.86135), ("decimal_nine_digits", 0.9542),
    ("decimal_eight_digits", 0.9031), ("decimal_seven_digits", 0.8451), ("triangle", 1.58496250),
    ("carpet", 1.892789), ("cantor_dust", 1.2618595), ("sponge", 2.726833), ("cheese", 2.965647),
    ("c4_cube", 2.120085), ("c4_square", 1.41339018), ("base7_carpet", 1.8957), ("four_corner_dust", 1.2618),
])
def test_dimension_table(key, printed):
    assert product_dimensions()[key] == pytest.approx(printed, rel=1e-4)
