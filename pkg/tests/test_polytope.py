import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import spd_from_seed
from ma3d.lattice import Stencil, make_table1_stencil
from ma3d.polytope import (
    measure_D_of_matrix,
    measure_halfspaces,
    measure_polytope,
    monte_carlo_volume,
    polytope_off,
    symmetric_halfspaces,
    symmetric_polytope,
    volume_gradient,
)

AXES = Stencil(np.eye(3, dtype=int), "axes")
SMALL = make_table1_stencil("small")
LARGE = make_table1_stencil("large")


def offsets_strategy(m, lo=0.5, hi=3.0):
    return st.lists(st.floats(lo, hi), min_size=m, max_size=m).map(np.array)


def test_unit_cube():
    meas = measure_polytope(AXES, [1.0, 1.0, 1.0])
    assert meas.volume == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(meas.facet_area, [2, 2, 2], atol=1e-14)
    assert meas.nondegenerate


def test_box_with_distinct_sides():
    meas = measure_polytope(AXES, [1.0, 2.0, 4.0])  # half-widths 1/2, 1, 2
    assert meas.volume == pytest.approx(1 * 2 * 4)
    np.testing.assert_allclose(meas.facet_area, [2 * 8, 2 * 4, 2 * 2])


def test_rhombic_dodecahedron():
    # |g_i +- g_j| <= 1: vertices (+-1,0,0) and (+-1/2,+-1/2,+-1/2), volume 2
    V = Stencil(np.array([(1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1)]))
    meas = measure_polytope(V, np.full(6, 2.0))
    assert meas.volume == pytest.approx(2.0, rel=1e-13)
    # 12 congruent rhombi with diagonals 1 and sqrt(2)
    np.testing.assert_allclose(meas.facet_area, 2 * (1 * np.sqrt(2) / 2), rtol=1e-13)


def test_small_stencil_voronoi_of_identity():
    meas = measure_polytope(SMALL, SMALL.norms() ** 2)
    assert meas.volume == pytest.approx(1.0, abs=1e-12)
    # only the axis facets are present
    axis = np.array([np.count_nonzero(e) == 1 for e in SMALL.directions])
    assert np.all(meas.facet_area[~axis] < 1e-10)


def test_zero_offset_gives_empty():
    b = SMALL.norms() ** 2
    b[4] = 0.0
    meas = measure_polytope(SMALL, b)
    assert meas.volume == 0 and not meas.nondegenerate
    assert np.all(meas.facet_area == 0)
    b[4] = -1.0
    assert measure_polytope(SMALL, b).volume == 0


def test_shape_and_finiteness_checks():
    with pytest.raises(ValueError):
        measure_polytope(SMALL, np.ones(12))
    with pytest.raises(ValueError):
        measure_polytope(AXES, [1.0, np.nan, 1.0])
    with pytest.raises(ValueError):
        measure_polytope(AXES, [1.0, np.inf, 1.0])


def test_two_dimensional_square():
    V = Stencil(np.eye(2, dtype=int))
    meas = measure_polytope(V, [1.0, 1.0])
    assert meas.volume == pytest.approx(1.0)
    np.testing.assert_allclose(meas.facet_area, [2.0, 2.0])


def test_two_dimensional_octagon_and_diamond():
    # 2<g,(1,+-1)> <= c is |x +- y| <= c/2; for c > 1 it clips the four corners of
    # the unit square by right isosceles triangles with legs 1 - c/2
    V = Stencil(np.array([(1, 0), (0, 1), (1, 1), (1, -1)]))
    c = 1.8
    meas = measure_polytope(V, [1.0, 1.0, c, c])
    assert meas.volume == pytest.approx(1 - 4 * (1 - c / 2) ** 2 / 2, rel=1e-13)
    # for c < 1 only the diamond |x| + |y| <= c/2 is left
    c = 0.8
    meas = measure_polytope(V, [1.0, 1.0, c, c])
    assert meas.volume == pytest.approx(2 * (c / 2) ** 2, rel=1e-13)
    assert meas.facet_area[0] < 1e-12 and meas.facet_area[1] < 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_monte_carlo_three_digits_at_1e7(seed):
    rng = np.random.default_rng(seed)
    b = SMALL.norms() ** 2 * rng.uniform(0.7, 1.5, size=len(SMALL))
    vol = measure_polytope(SMALL, b).volume
    a, c = symmetric_halfspaces(SMALL.directions, b)
    mc = monte_carlo_volume(a, c, n_samples=10**7, seed=seed, quasi=False)
    assert abs(mc - vol) / vol < 1e-3


def test_general_halfspaces_against_monte_carlo(rng):
    a = rng.normal(size=(20, 3))
    c = rng.uniform(0.5, 1.5, size=20)
    vol, area = measure_halfspaces(a, c)
    assert abs(monte_carlo_volume(a, c, 2**20, seed=1) - vol) / vol < 1e-3
    # cone decomposition: sum of area * distance / d
    assert vol == pytest.approx((area * c / np.linalg.norm(a, axis=1)).sum() / 3)


def test_unbounded_rejected():
    with pytest.raises(ValueError):
        measure_halfspaces(np.array([(1.0, 0, 0), (0, 1.0, 0), (0, 0, 1.0)]), np.ones(3))


@pytest.mark.parametrize("stencil", [SMALL, LARGE], ids=["small", "large"])
def test_gradient_matches_finite_differences(stencil, rng):
    for _ in range(3):
        b = stencil.norms() ** 2 * rng.uniform(0.8, 1.6, size=len(stencil))
        grad = volume_gradient(stencil, measure_polytope(stencil, b))
        fd = np.empty_like(grad)
        for k in range(len(b)):
            h = 1e-6 * b[k]
            bp, bm = b.copy(), b.copy()
            bp[k] += h
            bm[k] -= h
            fd[k] = (measure_polytope(stencil, bp).volume - measure_polytope(stencil, bm).volume) / (2 * h)
        scale = np.abs(grad).max()
        assert np.abs(fd - grad).max() / scale <= 1e-5


@given(offsets_strategy(13), st.integers(0, 12), st.floats(0.0, 2.0))
def test_monotone_in_offsets(b, k, dt):
    v0 = measure_polytope(SMALL, b).volume
    b2 = b.copy()
    b2[k] += dt
    assert measure_polytope(SMALL, b2).volume >= v0 * (1 - 1e-12)


@given(offsets_strategy(13), st.floats(0.2, 5.0))
def test_scaling(b, t):
    m0 = measure_polytope(SMALL, b)
    m1 = measure_polytope(SMALL, t * b)
    assert m1.volume == pytest.approx(t**3 * m0.volume, rel=1e-10)
    np.testing.assert_allclose(m1.facet_area, t**2 * m0.facet_area, rtol=1e-9, atol=1e-12)


def test_symmetric_facets_equal():
    b = np.linspace(0.9, 1.8, len(SMALL)) * SMALL.norms() ** 2
    a, c = symmetric_halfspaces(SMALL.directions, b)
    _, area = measure_halfspaces(a, c)
    m = len(SMALL)
    np.testing.assert_allclose(area[:m], area[m:], rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(area[:m] + area[m:], measure_polytope(SMALL, b).facet_area, rtol=1e-12, atol=1e-13)


def test_D_of_matrix_examples():
    assert measure_D_of_matrix(np.diag([1.0, 2.0, 3.0]), SMALL) == pytest.approx(6.0, rel=1e-13)
    assert measure_D_of_matrix(np.eye(3), SMALL) == pytest.approx(1.0, rel=1e-13)
    assert measure_D_of_matrix(np.diag([1.0, -1.0, 2.0]), SMALL) == 0.0


@given(st.integers(0, 10**6))
def test_D_lower_bound(seed):
    M = spd_from_seed(seed)
    for V in (SMALL, LARGE):
        assert measure_D_of_matrix(M, V) >= np.linalg.det(M) * (1 - 1e-12)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_D_superadditive(s1, s2):
    M, H = spd_from_seed(s1, 4.0), spd_from_seed(s2, 4.0)
    DM, DH, DMH = (measure_D_of_matrix(A, SMALL) for A in (M, H, M + H))
    assert DMH ** (1 / 3) >= (DM ** (1 / 3) + DH ** (1 / 3)) * (1 - 1e-12)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_D_matrix_monotone(s1, s2):
    M = spd_from_seed(s1, 4.0)
    P = spd_from_seed(s2, 4.0) * 0.1  # M <= M + P
    assert measure_D_of_matrix(M, SMALL) <= measure_D_of_matrix(M + P, SMALL) * (1 + 1e-12)


def test_off_export():
    meas_b = np.array([1.0, 1.0, 1.0])
    a, c = symmetric_halfspaces(AXES.directions, meas_b)
    text = polytope_off(a, c)
    lines = text.split("\n")
    assert lines[0] == "OFF"
    nv, nf, _ = map(int, lines[1].split())
    assert (nv, nf) == (8, 6)
    verts = np.array([[float(x) for x in lines[2 + i].split()] for i in range(nv)])
    np.testing.assert_allclose(np.abs(verts), 0.5)


def test_monte_carlo_rejects_unbounded_region():
    with pytest.raises(ValueError):
        monte_carlo_volume(np.eye(3), np.ones(3), n_samples=1024)
