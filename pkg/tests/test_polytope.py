"""Tests for the exact convex geometry helpers.

The oracles here deliberately avoid the code paths under test: membership
oracles are hand-written inequality systems for fixed polytopes, and area
oracles go through Pick's theorem.
"""

import itertools
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from semistable.polytope import (
    affine_dim,
    affine_span_basis,
    cut_by_hyperplane,
    extreme_points,
    facets,
    hull_triangulation,
    in_hull,
    in_relative_interior,
    is_lower_envelope,
    lattice_points,
    lp_solve,
    normalized_volume,
    polytope_index,
    simplex_normalized_volume,
    vertex_lattice,
)

# --------------------------------------------------------------- oracles


def oracle_triangle_member(x, y):
    """conv{(0,0),(1,0),(0,2)} written out as inequalities by hand."""
    return x >= 0 and y >= 0 and 2 * x + y <= 2


def oracle_quad_member(x, y):
    """conv{(0,0),(2,0),(2,1),(0,3)}: x>=0, y>=0, x<=2, x+y<=3."""
    return 0 <= x <= 2 and y >= 0 and x + y <= 3


def oracle_points(member, box):
    pts = []
    for x in range(-box, box + 1):
        for y in range(-box, box + 1):
            if member(x, y):
                pts.append((x, y))
    return sorted(pts)


def pick_normalized_area(pts2d):
    """2 * area of a lattice polygon via Pick, using hull membership only.

    Interior/boundary classification runs through in_relative_interior and
    in_hull, which are separate LPs from the triangulation-based volume this
    validates, so agreement is meaningful.
    """
    hull = extreme_points(pts2d)
    if affine_dim(hull) < 2:
        return 0
    xs = [int(p[0]) for p in hull]
    ys = [int(p[1]) for p in hull]
    interior = 0
    boundary = 0
    for x in range(min(xs), max(xs) + 1):
        for y in range(min(ys), max(ys) + 1):
            if not in_hull((x, y), hull):
                continue
            if in_relative_interior((x, y), hull):
                interior += 1
            else:
                boundary += 1
    return 2 * interior + boundary - 2


# ------------------------------------------------------------- fixed cases


def test_triangle_lattice_points_match_inequality_oracle():
    tri = [(0, 0), (1, 0), (0, 2)]
    expected = oracle_points(oracle_triangle_member, 4)
    assert list(lattice_points(tri)) == expected
    assert expected == [(0, 0), (0, 1), (0, 2), (1, 0)]


def test_quad_lattice_points_match_inequality_oracle():
    quad = [(0, 0), (2, 0), (2, 1), (0, 3)]
    assert list(lattice_points(quad)) == oracle_points(oracle_quad_member, 5)


def test_triangle_volume_and_index():
    tri = [(0, 0), (1, 0), (0, 2)]
    # Pick with the hand inequalities: 4 boundary points, no interior
    pts = oracle_points(oracle_triangle_member, 4)
    assert len(pts) == 4
    assert normalized_volume(tri) == 2
    assert polytope_index(tri) == 2
    assert vertex_lattice(tri) == ((1, 0), (0, 2))


def test_unimodular_simplex_measures_one():
    assert normalized_volume([(0, 0), (1, 0), (0, 1)]) == 1
    assert simplex_normalized_volume([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]) == 1


def test_segment_volume_is_lattice_length():
    assert normalized_volume([(0, 0), (3, 0)]) == 3
    assert normalized_volume([(0, 0), (2, 4)]) == 2  # primitive direction (1,2)


def test_membership_against_oracle_grid():
    tri = [(0, 0), (1, 0), (0, 2)]
    for x in range(-2, 4):
        for y in range(-2, 4):
            got = in_hull((x, y), tri)
            assert got == oracle_triangle_member(x, y), (x, y)


def test_relative_interior_of_segment():
    seg = [(0, 0), (2, 2)]
    assert in_relative_interior((1, 1), seg)
    assert not in_relative_interior((0, 0), seg)
    assert not in_relative_interior((2, 2), seg)
    assert in_relative_interior((Fraction(1, 2), Fraction(1, 2)), seg)


def test_extreme_points_drop_redundant():
    pts = [(0, 0), (2, 0), (1, 0), (0, 2), (1, 1)]
    ext = extreme_points(pts)
    assert set(ext) == {(0, 0), (2, 0), (0, 2)}


def test_facets_of_square():
    sq = [(0, 0), (1, 0), (0, 1), (1, 1)]
    fs = facets(sq)
    assert len(fs) == 4
    for on, normal, offset in fs:
        assert len(on) == 2


def test_hull_triangulation_square():
    sq = [(0, 0), (1, 0), (0, 1), (1, 1)]
    cells = hull_triangulation(sq)
    assert len(cells) == 2
    assert sum(simplex_normalized_volume(c) for c in cells) == 2
    # faces through the apex (0,0) stay consistent: both cells start there
    assert all(c[0] == (0, 0) for c in cells)


def test_lp_solve_basic():
    # maximize y2 with y1 + y2 = 1
    status, val, y = lp_solve([0, 1], [[1, 1]], [1])
    assert status == "optimal" and val == 1 and y == (0, 1)
    status, _, _ = lp_solve([1, 1], [[1, -1]], [0])
    assert status == "unbounded"
    status, _, _ = lp_solve([0], [[1], [1]], [1, 2])
    assert status == "infeasible"


def test_cut_square_by_diagonal():
    sq = [(0, 0), (1, 0), (0, 1), (1, 1)]
    below, above = cut_by_hyperplane(sq, (1, 1), 1)
    assert set(below) == {(0, 0), (1, 0), (0, 1)}
    assert set(above) == {(1, 0), (0, 1), (1, 1)}


def test_cut_generates_crossings():
    tri = [(0, 0), (2, 0), (0, 2)]
    below, above = cut_by_hyperplane(tri, (1, 0), 1)
    assert (1, 0) in set(below) and (1, 0) in set(above)
    assert (Fraction(1), Fraction(1)) in set(above) or (1, 1) in set(above)
    total = normalized_volume(tri, lattice=((1, 0), (0, 1)))
    parts = sum(
        normalized_volume(p, lattice=((1, 0), (0, 1))) for p in (below, above)
    )
    assert parts == total


def test_lower_envelope_certificate():
    a, b, c, d = (0, 0), (1, 0), (0, 1), (1, 1)
    lift = {a: 0, b: 0, c: 0, d: 1}
    good = [(a, b, c), (b, c, d)]
    bad = [(a, b, d), (a, c, d)]
    assert is_lower_envelope(good, lift)
    assert not is_lower_envelope(bad, lift)
    flat = {a: 0, b: 0, c: 0, d: 0}
    assert is_lower_envelope([(a, b, c, d)], flat)
    assert not is_lower_envelope(good, flat)


# ---------------------------------------------------------- property tests

coord = st.integers(min_value=-3, max_value=3)
point2 = st.tuples(coord, coord)


@settings(max_examples=40, deadline=None)
@given(st.lists(point2, min_size=3, max_size=6, unique=True))
def test_pick_agreement_random_polygons(pts):
    nv = normalized_volume(pts)
    if affine_dim(pts) < 2:
        return
    assert nv == pick_normalized_area(pts)


@settings(max_examples=60, deadline=None)
@given(st.lists(point2, min_size=1, max_size=6, unique=True))
def test_extremes_carry_the_hull(pts):
    ext = extreme_points(pts)
    assert set(ext) <= {tuple(Fraction(x) for x in p) for p in pts}
    for p in pts:
        assert in_hull(p, ext)


@settings(max_examples=40, deadline=None)
@given(st.lists(point2, min_size=3, max_size=5, unique=True))
def test_triangulation_covers_lattice_points(pts):
    cells = hull_triangulation(pts)
    covered = set()
    for cell in cells:
        covered.update(lattice_points(cell))
    assert covered == set(lattice_points(pts))


@settings(max_examples=40, deadline=None)
@given(st.lists(point2, min_size=3, max_size=5, unique=True), coord, coord,
       st.integers(min_value=-3, max_value=3))
def test_cut_pieces_partition_euclidean_volume(pts, na, nb, off):
    if na == 0 and nb == 0:
        return
    if affine_dim(pts) < 2:
        return
    ident = ((1, 0), (0, 1))
    below, above = cut_by_hyperplane(pts, (na, nb), off)
    total = normalized_volume(pts, lattice=ident)
    got = 0
    for part in (below, above):
        if part and affine_dim(part) == 2:
            got += normalized_volume(part, lattice=ident)
    assert got == total


@settings(max_examples=30, deadline=None)
@given(st.lists(point2, min_size=3, max_size=5, unique=True))
def test_relint_inside_hull(pts):
    hull = extreme_points(pts)
    bary = tuple(sum(p[i] for p in hull) / Fraction(len(hull)) for i in range(2))
    assert in_hull(bary, hull)
    if affine_dim(hull) >= 1:
        assert in_relative_interior(bary, hull)
        assert not in_relative_interior(hull[0], hull)


def test_affine_span_basis_rank():
    pts = [(0, 0, 0), (1, 0, 0), (2, 0, 0), (0, 1, 0)]
    basis = affine_span_basis(pts)
    assert len(basis) == 2
    assert affine_dim(pts) == 2
