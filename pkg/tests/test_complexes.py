"""Tests for the cell complex layer and its subdivision surgeries.

Frozen cell sets in this file came from hand-worked subdivisions and are
certified on the spot: structural validity through validate, projectivity
through the lower envelope routine applied to the returned heights,
coverage through exact membership probes, and volume bookkeeping through
the normalized volume oracle.  Box point picks are cross-checked by a
Cramer rule scan that shares no code with the solver the implementation
uses.
"""

from fractions import Fraction

import pytest

from semistable.complexes import (
    AssertionFailed,
    Cell,
    Complex,
    DescentMismatch,
    FaceRec,
    NotLattice,
    NotRegularSimplicial,
    RegularityRequired,
    VerticalComponent,
    _assemble_alteration,
    _parallelepiped_witness,
    barycentric,
    base_change,
    build_complex,
    cell_dim,
    check_semistable,
    compose_alterations,
    dehomogenize,
    disjoint_cover_descend,
    disjoint_union,
    homogenize,
    identity_alteration,
    make_good,
    map_with_matrix,
    resolve_cones,
    scale_base,
    split_vertical_horizontal,
    validate,
    validate_map,
    weak_semistable_scaling,
)
from semistable.intlat import (
    identity,
    in_lattice,
    lattice_basis,
    lattice_index,
    matvec,
    vsub,
)
from semistable.polytope import (
    in_hull,
    is_lower_envelope,
    normalized_volume,
)

QUADRANT = ((1, 0), (0, 1))
CONE_2 = ((1, 0), (1, 2))
CONE_3 = ((1, 0), (1, 3))


def quad():
    return build_complex("conical", [QUADRANT])


def ray():
    return build_complex("conical", [((1,),)])


def max_sets(alt):
    comp = alt.result if hasattr(alt, "result") else alt
    return sorted(
        sorted(comp.cells[c].points) for c in comp.maximal_ids()
    )


def all_regular(comp):
    """Regularity of every cell, rechecked from scratch with lattice_index."""
    for c in comp.cells.values():
        k = cell_dim(c)
        if len(c.points) != k:
            return False
        if k == 0:
            continue
        span = lattice_basis(c.points)
        if len(span) != k or lattice_index(span, c.lattice) != 1:
            return False
    return True


# ---------------------------------------------------------------------------
# construction and validation


def test_closure_of_a_regular_cone():
    comp = quad()
    dims = sorted(cell_dim(c) for c in comp.cells.values())
    assert dims == [0, 1, 1, 2]
    assert comp.maximal_ids() == ("c0",)
    rep = validate(comp)
    assert rep.ok, rep.failures
    rays = sorted(
        c.points for c in comp.cells.values() if cell_dim(c) == 1
    )
    assert rays == [((0, 1),), ((1, 0),)]
    for c in comp.cells.values():
        if cell_dim(c) == 1:
            assert c.lattice == c.points


def test_closure_of_a_square():
    sq = build_complex("polytopal", [((0, 0), (2, 0), (0, 2), (2, 2))])
    assert validate(sq).ok
    dims = sorted(cell_dim(c) for c in sq.cells.values())
    assert dims == [0, 0, 0, 0, 1, 1, 1, 1, 2]


def test_two_cones_share_their_face_once():
    comp = build_complex("conical", [((1, 0), (1, 1)), ((1, 1), (0, 1))])
    assert validate(comp).ok
    shared = [c for c in comp.cells.values() if c.points == ((1, 1),)]
    assert len(shared) == 1
    assert len(comp.maximal_ids()) == 2
    assert len(comp.components()) == 1


def test_disjoint_union_separates_components():
    du = disjoint_union([quad(), quad()])
    assert validate(du).ok
    assert len(du.components()) == 2
    assert sorted(du.maximal_ids()) == ["0:c0", "1:c0"]


def test_validate_rejects_zero_generator():
    bad = Complex("conical", [Cell("a", "conical", ((0, 0),), ((1, 0),), 2)])
    rep = validate(bad)
    assert not rep.ok
    assert any("zero generator" in f for f in rep.failures)


def test_validate_rejects_a_line():
    bad = Complex(
        "conical",
        [Cell("a", "conical", ((1, 0), (-1, 0)), ((1, 0),), 2)],
    )
    rep = validate(bad)
    assert not rep.ok


def test_validate_rejects_generator_outside_lattice():
    bad = Complex(
        "conical",
        [Cell("a", "conical", ((1, 0), (0, 1)), ((2, 0), (0, 2)), 2)],
    )
    rep = validate(bad)
    assert any("outside the cell lattice" in f for f in rep.failures)


def test_validate_rejects_missing_faces():
    lone = Complex(
        "conical",
        [Cell("a", "conical", QUADRANT, tuple(identity(2)), 2)],
    )
    rep = validate(lone)
    assert any("not registered" in f for f in rep.failures)


def test_validate_rejects_vertex_off_lattice():
    bad = Complex(
        "polytopal",
        [Cell("a", "polytopal", ((0,), (1,)), ((2,),), 1)],
    )
    rep = validate(bad)
    assert any("vertex difference" in f for f in rep.failures)


def test_validate_checks_embedding_lattices():
    big = Cell("big", "conical", QUADRANT, tuple(identity(2)), 2)
    small = Cell("small", "conical", ((2,),), ((2,),), 1)
    comp = Complex(
        "conical",
        [big, small],
        [FaceRec("small", "big", ((1,), (0,)), (0, 0))],
    )
    rep = validate(comp)
    assert any("not the parent lattice" in f for f in rep.failures)


def test_validate_map_identity():
    q = quad()
    f = map_with_matrix(q, q, identity(2))
    assert validate_map(f).ok


def test_validate_map_catches_escaping_image():
    q = quad()
    r = ray()
    bad = {cid: ("c0", ((-1, 0),)) for cid in q.cells}
    from semistable.complexes import ComplexMap

    f = ComplexMap(q, r, bad)
    rep = validate_map(f)
    assert any("leaves its target" in f_ for f_ in rep.failures)


def test_validate_map_catches_lattice_escape():
    q = quad()
    coarse = build_complex("conical", [((2,),)], lattices=[((2,),)])
    from semistable.complexes import ComplexMap

    f = ComplexMap(q, coarse, {cid: ("c0", ((1, 0),)) for cid in q.cells})
    rep = validate_map(f)
    assert any("leaves the target lattice" in f_ for f_ in rep.failures)


# ---------------------------------------------------------------------------
# barycentric subdivision


def test_barycentric_quadrant():
    alt = barycentric(quad())
    assert max_sets(alt) == [[(0, 1), (1, 1)], [(1, 0), (1, 1)]]
    assert validate(alt.result).ok
    assert alt.scale == 1
    h = alt.heights["c0"]
    assert h[(0, 0)] == 0 and h[(1, 1)] < h[(1, 0)] < 0
    cells = [
        alt.result.cells[c].points + ((0, 0),) for c in alt.result.maximal_ids()
    ]
    assert is_lower_envelope(cells, h)


def test_barycentric_unit_segment():
    alt = barycentric(build_complex("polytopal", [((0,), (1,))]))
    assert alt.scale == 2
    assert max_sets(alt) == [[(0,), (1,)], [(1,), (2,)]]
    assert validate(alt.result).ok
    assert is_lower_envelope(
        [alt.result.cells[c].points for c in alt.result.maximal_ids()],
        alt.heights["c0"],
    )


def test_barycentric_triangle_conserves_volume():
    tri = ((0, 0), (1, 0), (0, 1))
    alt = barycentric(build_complex("polytopal", [tri]))
    assert alt.scale == 6
    pieces = [alt.result.cells[c].points for c in alt.result.maximal_ids()]
    assert len(pieces) == 6
    total = sum(normalized_volume(p) for p in pieces)
    assert total == alt.scale**2 * normalized_volume(tri)
    assert validate(alt.result).ok


def test_barycentric_respects_coarse_lattices():
    seg = build_complex("polytopal", [((0,), (2,))], lattices=[((2,),)])
    alt = barycentric(seg)
    assert alt.scale == 2
    assert max_sets(alt) == [[(0,), (2,)], [(2,), (4,)]]
    assert validate(alt.result).ok

    cone = build_complex(
        "conical", [((2, 0), (0, 2))], lattices=[((2, 0), (0, 2))]
    )
    alt = barycentric(cone)
    assert max_sets(alt) == [[(0, 2), (2, 2)], [(2, 0), (2, 2)]]
    assert validate(alt.result).ok


# ---------------------------------------------------------------------------
# base change


def test_base_change_along_identity():
    q = quad()
    f = map_with_matrix(q, q, identity(2))
    alt, f2 = base_change(f, identity_alteration(q))
    assert max_sets(alt) == [[(0, 1), (1, 0)]]
    assert validate_map(f2).ok


def test_base_change_pulls_back_lattices():
    q = quad()
    r = ray()
    f = map_with_matrix(q, r, ((1, 0),))
    alt_b = scale_base(r, 2)
    alt, f2 = base_change(f, alt_b)
    (cid,) = alt.result.maximal_ids()
    lat = alt.result.cells[cid].lattice
    assert in_lattice((2, 0), lat) and in_lattice((0, 1), lat)
    assert not in_lattice((1, 0), lat)
    assert validate(alt.result).ok
    assert validate_map(f2).ok


def test_base_change_transports_heights():
    q = quad()
    f = map_with_matrix(q, q, identity(2))
    balt = barycentric(q)
    alt, f2 = base_change(f, balt)
    assert alt.heights["c0"] == balt.heights["c0"]
    assert max_sets(alt) == max_sets(balt)
    assert validate_map(f2).ok


def test_base_change_flags_fractional_vertices():
    seg1 = build_complex("polytopal", [((0,), (1,))])
    seg2 = build_complex("polytopal", [((0,), (2,))])
    dbl = map_with_matrix(seg1, seg2, ((2,),))
    split = _assemble_alteration(
        "polytopal",
        seg2,
        [(((0,), (1,)), ((1,),), "c0"), (((1,), (2,)), ((1,),), "c0")],
    )
    with pytest.raises(NotLattice) as err:
        base_change(dbl, split)
    assert ("c0", (Fraction(1, 2),)) in err.value.witnesses


def test_base_change_counts_match_the_base():
    seg = build_complex("polytopal", [((0,), (2,))])
    f = map_with_matrix(seg, seg, ((1,),))
    split = _assemble_alteration(
        "polytopal",
        seg,
        [(((0,), (1,)), ((1,),), "c0"), (((1,), (2,)), ((1,),), "c0")],
    )
    alt, f2 = base_change(f, split)
    assert max_sets(alt) == [[(0,), (1,)], [(1,), (2,)]]
    assert validate_map(f2).ok


# ---------------------------------------------------------------------------
# goodness


def test_make_good_identity_is_trivial():
    q = quad()
    f = map_with_matrix(q, q, identity(2))
    c, alt_t, alt_s, f2 = make_good(f)
    assert c == 1
    assert max_sets(alt_t) == [[(0, 1), (1, 0)]]
    assert validate_map(f2).ok


def test_make_good_splits_at_an_interior_vertex():
    x = build_complex("polytopal", [((0,), (1,)), ((1,), (2,))])
    y = build_complex("polytopal", [((0,), (2,))])
    f = map_with_matrix(x, y, ((1,),))
    c, alt_t, alt_s, f2 = make_good(f)
    assert c == 1
    assert max_sets(alt_t) == [[(0,), (1,)], [(1,), (2,)]]
    assert max_sets(alt_s) == [[(0,), (1,)], [(1,), (2,)]]
    assert validate_map(f2).ok
    for cid in x.maximal_ids():
        imgs = tuple(f2.apply(rc, p) for rc in alt_s.cells_over(cid) for p in alt_s.result.cells[rc].points)
        assert all(any(in_hull(p, alt_t.result.cells[t].points) for t in alt_t.result.maximal_ids()) for p in imgs)


def test_make_good_cuts_the_square_along_the_diagonal():
    diag = build_complex("polytopal", [((0, 0), (2, 2))])
    sq = build_complex("polytopal", [((0, 0), (2, 0), (0, 2), (2, 2))])
    f = map_with_matrix(diag, sq, identity(2))
    c, alt_t, alt_s, f2 = make_good(f)
    assert c == 1
    assert max_sets(alt_t) == [
        [(0, 0), (0, 2), (2, 2)],
        [(0, 0), (2, 0), (2, 2)],
    ]
    total = sum(
        normalized_volume(alt_t.result.cells[t].points)
        for t in alt_t.result.maximal_ids()
    )
    assert total == normalized_volume(sq.cells["c0"].points)
    assert validate_map(f2).ok
    assert is_lower_envelope(
        [alt_t.result.cells[t].points for t in alt_t.result.maximal_ids()],
        alt_t.heights["c0"],
    )


def test_make_good_conical_ray_in_quadrant():
    rd = build_complex("conical", [((1, 1),)])
    f = map_with_matrix(rd, quad(), identity(2))
    c, alt_t, alt_s, f2 = make_good(f)
    assert c == 1
    assert max_sets(alt_t) == [[(0, 1), (1, 1)], [(1, 0), (1, 1)]]
    assert validate(alt_t.result).ok
    assert validate_map(f2).ok


# ---------------------------------------------------------------------------
# base dilation


def test_scale_base_ray():
    alt = scale_base(ray(), 2)
    (cid,) = alt.result.maximal_ids()
    assert alt.result.cells[cid].points == ((2,),)
    assert alt.result.cells[cid].lattice == ((2,),)


def test_scale_base_rounds_up_past_the_dimension():
    alt = scale_base(ray(), 1)
    (cid,) = alt.result.maximal_ids()
    assert alt.result.cells[cid].lattice == ((2,),)


def test_scale_base_quadrant_three():
    alt = scale_base(quad(), 3)
    assert max_sets(alt) == [
        [(0, 3), (3, 6)],
        [(3, 0), (6, 3)],
        [(3, 3), (3, 6)],
        [(3, 3), (6, 3)],
    ]
    assert all_regular(alt.result)
    assert validate(alt.result).ok
    for cid in alt.result.cells:
        assert alt.parent[cid] in alt.source.cells


def test_scale_base_quadrant_two_resolves():
    alt = scale_base(quad(), 2)
    assert len(alt.result.maximal_ids()) == 6
    assert all_regular(alt.result)
    assert validate(alt.result).ok
    probes = [(1, 0), (0, 1), (1, 1), (3, 1), (1, 3), (5, 2)]
    for p in probes:
        assert any(
            all(
                in_hull(
                    p,
                    alt.result.cells[c].points + ((0, 0),),
                )
                for _ in (0,)
            )
            for c in alt.result.maximal_ids()
        )


def test_scale_base_needs_regularity():
    with pytest.raises(RegularityRequired):
        scale_base(build_complex("conical", [CONE_2]), 2)


# ---------------------------------------------------------------------------
# stellar resolution


def cramer_box_scan(g1, g2):
    """Independent pick of the weight minimal box point of two generators."""
    det = g1[0] * g2[1] - g1[1] * g2[0]
    best = None
    for x in range(-8, 9):
        for y in range(-8, 9):
            if (x, y) == (0, 0):
                continue
            l1 = Fraction(x * g2[1] - y * g2[0], det)
            l2 = Fraction(g1[0] * y - g1[1] * x, det)
            if 0 <= l1 < 1 and 0 <= l2 < 1:
                key = (l1 + l2, (l1, l2))
                if best is None or key < best[0]:
                    best = (key, (x, y))
    return best[1]


def test_box_point_matches_cramer_scan():
    for gens in [CONE_2, CONE_3, ((2, 1), (1, 2)), ((1, 0), (3, 4))]:
        oracle = cramer_box_scan(*gens)
        got = _parallelepiped_witness(gens, identity(2))
        assert got == oracle, (gens, got, oracle)
    assert _parallelepiped_witness(CONE_3, identity(2)) == (1, 2)
    assert _parallelepiped_witness(QUADRANT, identity(2)) is None


def test_resolve_index_two():
    alt = resolve_cones(build_complex("conical", [CONE_2]))
    assert max_sets(alt) == [[(1, 0), (1, 1)], [(1, 1), (1, 2)]]
    assert all_regular(alt.result)
    assert validate(alt.result).ok


def test_resolve_index_three():
    alt = resolve_cones(build_complex("conical", [CONE_3]))
    assert max_sets(alt) == [
        [(1, 0), (1, 1)],
        [(1, 1), (1, 2)],
        [(1, 2), (1, 3)],
    ]
    assert all_regular(alt.result)


def test_resolve_is_idempotent_on_regular_fans():
    q = quad()
    alt = resolve_cones(q)
    assert max_sets(alt) == [[(0, 1), (1, 0)]]
    again = resolve_cones(alt.result)
    assert max_sets(again) == max_sets(alt)


def test_resolve_is_local_on_disjoint_parts():
    du = disjoint_union([build_complex("conical", [CONE_2]), quad()])
    alt = resolve_cones(du)
    assert max_sets(alt) == [
        [(0, 1), (1, 0)],
        [(1, 0), (1, 1)],
        [(1, 1), (1, 2)],
    ]
    by_part = {}
    for cid in alt.result.maximal_ids():
        part = alt.parent[cid].split(":")[0]
        by_part.setdefault(part, []).append(cid)
    assert len(by_part["0"]) == 2 and len(by_part["1"]) == 1


# ---------------------------------------------------------------------------
# splitting


def test_split_projection():
    q = quad()
    f = map_with_matrix(q, ray(), ((1, 0),))
    xv, xh, pairs = split_vertical_horizontal(f)
    assert [xv.cells[c].points for c in xv.maximal_ids()] == [((0, 1),)]
    assert [xh.cells[c].points for c in xh.maximal_ids()] == [((1, 0),)]
    vcid, hcid = pairs["c0"]
    assert xv.cells[vcid].points == ((0, 1),)
    assert xh.cells[hcid].points == ((1, 0),)


def test_split_rejects_singular_cells():
    f = map_with_matrix(build_complex("conical", [CONE_2]), ray(), ((1, 0),))
    with pytest.raises(NotRegularSimplicial):
        split_vertical_horizontal(f)


# ---------------------------------------------------------------------------
# weak semistability


def test_scaling_identity_is_trivial():
    q = quad()
    f = map_with_matrix(q, q, identity(2))
    res = weak_semistable_scaling(f)
    assert (res.c_edges, res.c_lattice, res.c) == (1, 1, 1)
    assert res.map is f


def test_scaling_doubles_for_the_doubling_map():
    r = ray()
    f = map_with_matrix(r, r, ((2,),))
    assert not check_semistable(f).weakly
    res = weak_semistable_scaling(f)
    assert (res.c_edges, res.c_lattice, res.c) == (1, 2, 2)
    (bcid,) = res.base_alteration.result.maximal_ids()
    assert res.base_alteration.result.cells[bcid].lattice == ((2,),)
    assert check_semistable(res.map).weakly


def test_scaling_clears_fractional_levels():
    f = map_with_matrix(ray(), quad(), ((1,), (1,)))
    res = weak_semistable_scaling(f)
    assert (res.c_edges, res.c_lattice) == (2, 1)
    assert check_semistable(res.map).semistable
    assert validate(res.source_alteration.result).ok


# ---------------------------------------------------------------------------
# sections


def test_dehomogenize_the_two_cone():
    f = map_with_matrix(build_complex("conical", [CONE_2]), ray(), ((1, 0),))
    dh = dehomogenize(f)
    assert dh.c == 1
    z = dh.map.source
    (m,) = z.maximal_ids()
    assert sorted(z.cells[m].points) == [(1, 0), (1, 2)]
    assert z.cells[m].lattice == ((0, 1),)
    assert validate(z).ok
    assert validate_map(dh.map).ok
    assert dh.source_of[m] == "c0"


def test_dehomogenize_at_a_higher_level():
    f = map_with_matrix(build_complex("conical", [CONE_2]), ray(), ((1, 0),))
    dh = dehomogenize(f, c=2)
    z = dh.map.source
    (m,) = z.maximal_ids()
    assert sorted(z.cells[m].points) == [(2, 0), (2, 4)]
    with pytest.raises(ValueError):
        dehomogenize(f, c=0)


def test_dehomogenize_identity_ray_is_a_point():
    f = map_with_matrix(ray(), ray(), ((1,),))
    dh = dehomogenize(f)
    z = dh.map.source
    (m,) = z.maximal_ids()
    assert z.cells[m].points == ((1,),)
    assert cell_dim(z.cells[m]) == 0


def test_dehomogenize_rejects_collapsed_rays():
    f = map_with_matrix(build_complex("conical", [CONE_2]), ray(), ((0, 0),))
    with pytest.raises(VerticalComponent):
        dehomogenize(f)


def test_homogenize_round_trip():
    c2 = build_complex("conical", [CONE_2])
    f = map_with_matrix(c2, ray(), ((1, 0),))
    dh = dehomogenize(f)
    hz = homogenize(
        dh,
        c2,
        ray(),
        identity_alteration(dh.map.source),
        identity_alteration(dh.map.target),
    )
    assert max_sets(hz.source_alteration) == [[(1, 0), (1, 2)]]
    assert validate(hz.source_alteration.result).ok
    assert validate_map(hz.map).ok


def test_homogenize_refined_section_resolves_the_cone():
    c2 = build_complex("conical", [CONE_2])
    f = map_with_matrix(c2, ray(), ((1, 0),))
    dh = dehomogenize(f)
    z = dh.map.source
    (zmax,) = z.maximal_ids()
    refined = _assemble_alteration(
        "polytopal",
        z,
        [
            (((1, 0), (1, 1)), ((0, 1),), zmax),
            (((1, 1), (1, 2)), ((0, 1),), zmax),
        ],
    )
    hz = homogenize(dh, c2, ray(), refined, identity_alteration(dh.map.target))
    assert max_sets(hz.source_alteration) == [
        [(1, 0), (1, 1)],
        [(1, 1), (1, 2)],
    ]
    rep = check_semistable(hz.map)
    assert rep.semistable
    for cid in hz.source_alteration.result.maximal_ids():
        assert hz.source_alteration.parent[cid] == "c0"


# ---------------------------------------------------------------------------
# the semistability report


def test_check_semistable_identity():
    q = quad()
    f = map_with_matrix(q, q, identity(2))
    rep = check_semistable(f)
    assert rep.weakly and rep.semistable


def test_check_semistable_catches_lattice_defect():
    r = ray()
    f = map_with_matrix(r, r, ((2,),))
    rep = check_semistable(f)
    assert rep.cells_to_cells.ok
    assert not rep.lattices_onto.ok
    assert not rep.weakly


def test_check_semistable_catches_non_onto_images():
    rd = build_complex("conical", [((1, 1),)])
    from semistable.complexes import ComplexMap

    f = ComplexMap(rd, quad(), {cid: ("c0", identity(2)) for cid in rd.cells})
    rep = check_semistable(f)
    assert not rep.cells_to_cells.ok


# ---------------------------------------------------------------------------
# descent


def wedge_complex():
    return build_complex("conical", [((1, 0), (1, 1)), ((1, 1), (0, 1))])


def test_descent_glues_matching_pieces():
    comp = wedge_complex()
    per = {}
    for cid in comp.maximal_ids():
        cell = comp.cells[cid]
        per[cid] = _assemble_alteration(
            "conical", comp, [(cell.points, cell.lattice, cid)]
        )
    glued = disjoint_cover_descend(comp, per)
    assert max_sets(glued) == [[(0, 1), (1, 1)], [(1, 0), (1, 1)]]
    shared = [c for c in glued.result.cells.values() if c.points == ((1, 1),)]
    assert len(shared) == 1


def test_descent_detects_disagreement():
    left = build_complex(
        "polytopal", [((0, 0), (2, 0), (2, 2), (0, 2))]
    )
    comp = build_complex(
        "polytopal",
        [((0, 0), (2, 0), (2, 2), (0, 2)), ((2, 0), (4, 0), (4, 2), (2, 2))],
    )
    cids = comp.maximal_ids()
    by_pts = {frozenset(comp.cells[c].points): c for c in cids}
    lcid = by_pts[frozenset(left.cells["c0"].points)]
    rcid = next(c for c in cids if c != lcid)
    per = {
        lcid: _assemble_alteration(
            "polytopal",
            comp,
            [
                (((0, 0), (2, 0), (2, 1), (0, 1)), tuple(identity(2)), lcid),
                (((0, 1), (2, 1), (2, 2), (0, 2)), tuple(identity(2)), lcid),
            ],
        ),
        rcid: _assemble_alteration(
            "polytopal",
            comp,
            [(comp.cells[rcid].points, tuple(identity(2)), rcid)],
        ),
    }
    with pytest.raises(DescentMismatch) as err:
        disjoint_cover_descend(comp, per)
    face = comp.cells[err.value.face]
    assert sorted(face.points) == [(2, 0), (2, 2)]


# ---------------------------------------------------------------------------
# composition bookkeeping


def test_compose_alterations_chains_parents():
    c3 = build_complex("conical", [CONE_3])
    alt1 = resolve_cones(c3)
    alt2 = resolve_cones(alt1.result)
    both = compose_alterations(alt2, alt1)
    assert both.source is c3
    for cid in both.result.maximal_ids():
        assert both.parent[cid] == "c0"
