"""Tests for the slab move system and canonical dilated triangulations.

The small fixed cases were worked out by hand (segment dilations, the
two-slab staircase, pure point-factor shifting); the volume identities in
check_simplicial_cover then certify the larger runs independently of the
move engine.
"""

import random
from fractions import Fraction

import pytest

from semistable.cayley_moves import (
    cells_unimodular,
    check_triangulation,
    confluence_probe,
    in_cayley,
    in_dilated_sum,
    initial_state,
    stcan,
    triangulate_cayley,
)
from semistable.polytope import (
    affine_dim,
    check_simplicial_cover,
    in_relative_interior,
    lattice_points,
    simplex_normalized_volume,
)

SEG = ((0,), (1,))
TRI = ((0, 0), (1, 0), (0, 1))


def test_single_slab_dilation_gives_unit_segments():
    for c in (1, 2, 3, 5):
        cells = triangulate_cayley((SEG,), [[c]])
        assert len(cells) == c
        got = {frozenset(cell) for cell in cells}
        want = {frozenset({(i, 1), (i + 1, 1)}) for i in range(c)}
        assert got == want
        check_triangulation((SEG,), [[c]], cells)


def test_two_slab_staircase():
    cells = triangulate_cayley((SEG,), [[1], [1]])
    got = {frozenset(cell) for cell in cells}
    want = {
        frozenset({(0, 1, 0), (0, 0, 1), (1, 0, 1)}),
        frozenset({(0, 1, 0), (1, 1, 0), (1, 0, 1)}),
    }
    assert got == want
    check_triangulation((SEG,), [[1], [1]], cells)


def test_point_factor_only_shifts():
    pt = ((1,),)
    cells = triangulate_cayley((pt,), [[0], [1], [1]])
    assert cells == (((0, 1, 0, 0), (1, 0, 1, 0), (1, 0, 0, 1)),)


def test_two_factor_mixed_instance():
    # horizontal segment and a vertical one of lattice length two
    factors = (((0, 0), (1, 0)), ((0, 0), (0, 2)))
    matrix = [[1, 1], [0, 1]]
    cells = triangulate_cayley(factors, matrix)
    check_triangulation(factors, matrix, cells)
    assert cells_unimodular(cells, _reference_lattice(factors, matrix))


def test_rejects_dependent_factors():
    with pytest.raises(ValueError):
        triangulate_cayley((SEG, ((0,), (2,))), [[1, 1]])


def _reference_lattice(factors, matrix):
    # basis of L_P x (differences of the slab simplex), over supported factors
    d = len(factors[0][0])
    m = len(matrix)
    rows = []
    for j, f in enumerate(factors):
        if not any(r[j] for r in matrix):
            continue
        for v in f[1:]:
            rows.append(tuple(a - b for a, b in zip(v, f[0])) + (0,) * m)
    for l in range(m - 1):
        mu = [0] * m
        mu[l], mu[l + 1] = 1, -1
        rows.append((0,) * d + tuple(mu))
    from semistable.intlat import lattice_basis

    return lattice_basis(rows)


def test_stcan_segment_counts():
    for c in (2, 3, 4):
        cells = stcan(SEG, c)
        assert len(cells) == c
        assert {frozenset(cell) for cell in cells} == {
            frozenset({(i,), (i + 1,)}) for i in range(c)
        }
        check_simplicial_cover(cells, [(0,), (c,)])


def test_stcan_triangle_three():
    cells = stcan(TRI, 3)
    assert len(cells) == 9
    hull = [(0, 0), (3, 0), (0, 3)]
    check_simplicial_cover(cells, hull)
    lat = ((1, 0), (0, 1))
    assert cells_unimodular(cells, lat)
    used = {v for cell in cells for v in cell}
    assert used == set(lattice_points(hull))
    assert len(used) == 10


def test_stcan_triangle_four():
    cells = stcan(TRI, 4)
    assert len(cells) == 16
    check_simplicial_cover(cells, [(0, 0), (4, 0), (0, 4)])
    assert cells_unimodular(cells, ((1, 0), (0, 1)))


def test_stcan_first_vertex_is_interior():
    for c in (3, 4):
        hull = [(0, 0), (c, 0), (0, c)]
        for cell in stcan(TRI, c):
            assert in_relative_interior(cell[0], hull)


def _support(v, c):
    # barycentric support of a point of c * TRI
    x, y = v
    coords = (c - x - y, x, y)
    return frozenset(i for i, t in enumerate(coords) if t != 0)


def test_stcan_supports_shrink_along_cells():
    for c in (3, 4):
        for cell in stcan(TRI, c):
            supports = [_support(v, c) for v in cell]
            for a, b in zip(supports, supports[1:]):
                assert b <= a


def test_confluence_on_fixed_instances():
    assert confluence_probe((SEG,), [[3]], trials=8, seed=1)
    assert confluence_probe((SEG,), [[1], [1]], trials=8, seed=2)
    factors = (((0, 0), (1, 0)), ((0, 0), (0, 2)))
    assert confluence_probe(factors, [[1, 1], [0, 1]], trials=8, seed=3)


def test_in_cayley_unit_square():
    factors = (SEG,)
    matrix = [[1], [1]]
    half = Fraction(1, 2)
    assert in_cayley(factors, matrix, (half, half, half))
    assert in_cayley(factors, matrix, (0, 1, 0))
    assert not in_cayley(factors, matrix, (2, 1, 0))
    assert not in_cayley(factors, matrix, (half, half, Fraction(1, 3)))


def test_in_dilated_sum_scaling():
    assert in_dilated_sum((SEG,), (3,), (2,))
    assert not in_dilated_sum((SEG,), (1,), (2,))
    assert in_dilated_sum((TRI,), (Fraction(1, 2),), (Fraction(1, 4), Fraction(1, 4)))


def random_pair(rng, d, max_factors, max_rows, max_entry, max_edge=2):
    """A legal random instance: factors on disjoint axes, then sheared.

    Each factor starts at the origin (so its vertex lattice contains its
    base point) and occupies its own block of coordinate axes with edge
    vectors c * e_a for small c, keeping the family affinely independent; a
    unimodular shear then mixes the coordinates.
    """
    n = rng.randrange(1, max_factors + 1)
    dims = []
    left = d
    for _ in range(n):
        k = rng.randrange(0, left + 1)
        dims.append(k)
        left -= k
    rng.shuffle(dims)
    factors = []
    axis = 0
    for k in dims:
        base = (0,) * d
        verts = [base]
        for a in range(axis, axis + k):
            step = rng.randrange(1, max_edge + 1)
            verts.append(tuple(step if t == a else 0 for t in range(d)))
        axis += k
        factors.append(tuple(verts))
    shear = [[1 if i == j else 0 for j in range(d)] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            shear[i][j] = rng.randrange(-1, 2)
    factors = tuple(
        tuple(tuple(sum(shear[t][s] * v[s] for s in range(d)) for t in range(d)) for v in f)
        for f in factors
    )
    m = rng.randrange(1, max_rows + 1)
    matrix = [[rng.randrange(0, max_entry + 1) for _ in range(n)] for _ in range(m)]
    return factors, matrix


def test_random_instances_both_modes():
    rng = random.Random(20240817)
    for _ in range(20):
        factors, matrix = random_pair(rng, rng.randrange(1, 3), 2, 2, 2)
        rows = list(range(len(matrix)))
        for partition in (None, [[i] for i in rows]):
            cells = triangulate_cayley(factors, matrix, partition)
            check_triangulation(factors, matrix, cells)
            assert cells_unimodular(cells, _reference_lattice(factors, matrix))


def test_stcan_rejects_small_dilation():
    with pytest.raises(ValueError):
        stcan(TRI, 2)
