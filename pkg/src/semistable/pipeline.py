"""End to end reduction of complex maps to semistable form.

The two drivers are reduce_polytopal, which subdivides and rescales a
map of polytopal complexes until every cell is a unimodular simplex
mapping onto a cell, and resolve_conical, which does the same for maps
of rational cone complexes by cutting cross sections, reducing those,
and rebuilding the cones.  unimodularize triangulates a single complex
by reducing its map to a point, and verify rechecks a recorded result
from nothing but its own chains.

Both drivers return a ReductionResult carrying the base and source
alteration chains, the final map, per round index statistics, and a
verification report.  They fail loudly: a round that does not lower the
index profile, a verification miss, or an inconsistent face subdivision
raises instead of returning a weakened result.
"""

from collections import namedtuple
from fractions import Fraction
from math import lcm

from .box_reduction import box_points, in_Fm, sigma_m
from .cayley_moves import stcan, triangulate_cayley
from .complexes import (
    AssertionFailed,
    ComplexMap,
    DescentMismatch,
    NotLattice,
    Report,
    _assemble_alteration,
    _carrier,
    _cone_cell_index,
    _cone_hrep,
    _cone_key,
    _in_cone,
    _is_regular,
    _poly_key,
    _primitive_in,
    _pullback_lattice,
    _sublattice_in_span,
    _triangulate_cone_points,
    barycentric,
    base_change,
    build_complex,
    cell_dim,
    check_semistable,
    compose_alterations,
    dehomogenize,
    identity_alteration,
    make_good,
    map_with_matrix,
    resolve_cones,
    split_vertical_horizontal,
    validate,
    validate_map,
    weak_semistable_scaling,
)
from .intlat import (
    dot,
    in_lattice,
    kernel_basis,
    lattice_basis,
    lattice_index,
    matvec,
    rational_solve,
    transpose,
    vadd,
    vscale,
    vsub,
)
from .polytope import (
    affine_dim,
    hull_triangulation,
    in_hull,
    is_lower_envelope,
    normalized_volume,
)


class NoBoxPoint(ValueError):
    """Raised when a box point is requested from a family without one."""


class RoundLimit(RuntimeError):
    """Raised when the round budget runs out; carries the partial result."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


RoundStats = namedtuple(
    "RoundStats",
    ["number", "c", "c_prime", "before", "after", "cells_before", "cells_after"],
)


class ReductionResult:
    """Everything a reduction run records.

    base_chain and source_chain are alteration sequences composing to
    the total change of each side, final_map is the reduced map between
    their end complexes, rounds lists the scales and index profiles of
    the subdivision rounds, c_lattice is the total lattice dilation
    applied to the base, and report holds the verification outcome once
    one has been run.
    """

    def __init__(
        self,
        kind,
        base_chain,
        source_chain,
        final_map,
        rounds,
        c_lattice=1,
        completed=True,
        stats=None,
    ):
        self.kind = kind
        self.base_chain = tuple(base_chain)
        self.source_chain = tuple(source_chain)
        self.final_map = final_map
        self.rounds = tuple(rounds)
        self.c_lattice = c_lattice
        self.completed = completed
        self.stats = dict(stats or {})
        self.report = None

    @property
    def c_geometry(self):
        out = 1
        for alt in self.base_chain:
            out *= alt.scale
        return out

    @property
    def c(self):
        return self.c_geometry

    def __repr__(self):
        return "ReductionResult(%s, %d rounds, c=%d, completed=%s)" % (
            self.kind,
            len(self.rounds),
            self.c_geometry,
            self.completed,
        )


class VerificationReport:
    """Named verification conditions with their failure witnesses."""

    def __init__(self, conditions):
        self.conditions = dict(conditions)

    @property
    def ok(self):
        return all(rep.ok for rep in self.conditions.values())

    def failures(self):
        out = []
        for name, rep in self.conditions.items():
            for item in rep.failures:
                out.append((name, item))
        return out

    def __repr__(self):
        bad = [name for name, rep in self.conditions.items() if not rep.ok]
        if not bad:
            return "VerificationReport(ok)"
        return "VerificationReport(failing: %s)" % ", ".join(bad)


# ---------------------------------------------------------------------------
# box point choice and index bookkeeping


def choose_box_point(factors):
    """Pick the canonical box point of a family of lattice simplices.

    The first entry of box_points is taken, so the choice minimizes the
    total dilation, then the dilation tuple, then the representative,
    and depends on the family's geometry alone.  Raises NoBoxPoint when
    every class is hit by a vertex sum, that is when the family's index
    is one.
    """
    pts = box_points(factors)
    if not pts:
        raise NoBoxPoint("the family has no box points")
    return pts[0]


def _poly_index(cell):
    """Index of a polytopal cell against its stored lattice."""
    if len(cell.points) <= 1:
        return 1
    base = cell.points[0]
    span = lattice_basis(tuple(vsub(p, base) for p in cell.points[1:]))
    return lattice_index(span, cell.lattice)


def _index_histogram(comp):
    hist = {}
    for cid in comp.maximal_ids():
        idx = _poly_index(comp.cells[cid])
        hist[idx] = hist.get(idx, 0) + 1
    return hist


# ---------------------------------------------------------------------------
# map reassignment over refined complexes


def _owner_assignment(result, entries, target, scale_parent=None):
    """Build a map assignment for a subdivided source complex.

    entries sends known result cids to (matrix, offset, home) triples,
    home being a target cid whose component the image must stay in, or
    None for a global carrier search.  Cells without an entry inherit
    one from a containing cell through the face records, which works
    because cells are visited in decreasing dimension.  scale_parent,
    when given, supplies a last resort entry from the parent map.
    """
    t_comp_of = target.component_of()
    comp_cells = {}
    for tcid, gi in t_comp_of.items():
        comp_cells.setdefault(gi, set()).add(tcid)
    entries = dict(entries)
    assign = {}
    order = sorted(
        result.cells, key=lambda cid: (-cell_dim(result.cells[cid]), cid)
    )
    up = {}
    for rec in result.faces:
        up.setdefault(rec.child, []).append(rec.parent)
    for rcid in order:
        cell = result.cells[rcid]
        ent = entries.get(rcid)
        if ent is None:
            for parent in sorted(up.get(rcid, ())):
                if parent in entries:
                    ent = entries[parent]
                    break
        if ent is None and scale_parent is not None:
            ent = scale_parent(rcid)
        if ent is None:
            raise AssertionFailed("no map data reaches cell %r" % (rcid,), rcid)
        entries[rcid] = ent
        mat, off, home = ent
        imgs = [vadd(matvec(mat, p), off) for p in cell.points]
        if not imgs:
            imgs = [(0,) * len(mat)]
        allowed = comp_cells.get(t_comp_of[home]) if home is not None else None
        tcid = _carrier(target, imgs, restrict=allowed)
        if tcid is None:
            tcid = _carrier(target, imgs)
        if tcid is None:
            raise AssertionFailed(
                "cell %r maps outside the refined target" % (rcid,), rcid
            )
        assign[rcid] = (tcid, mat, off)
    return assign


def _refine_source(fmap, alt, scale=1):
    """Carry a map across an alteration of its source.

    Each refined cell inherits the matrix of its parent, with offsets
    dilated when the refinement rescaled the geometry, and has its
    target re resolved to the smallest carrier.  Only valid when the
    target is unchanged and scale matches the alteration's dilation.
    """
    entries = {}
    for rcid in alt.result.cells:
        owner = alt.parent[rcid]
        tcid0, mat, off = fmap.assign[owner]
        entries[rcid] = (mat, vscale(scale, off), tcid0)
    assign = _owner_assignment(alt.result, entries, fmap.target)
    return ComplexMap(alt.result, fmap.target, assign)


# ---------------------------------------------------------------------------
# chain utilities


def _compose_chain(chain):
    alt = chain[0]
    for nxt in chain[1:]:
        alt = compose_alterations(nxt, alt)
    return alt


def _dilate_alteration(alt, k):
    """Dilate an alteration's result geometry and lattices by k.

    Cells stay unimodular against their stored lattices because both
    stretch together, and recorded heights scale along so the lower
    envelope witnesses survive.
    """
    if k == 1:
        return alt
    pieces = []
    for rcid in alt.result.maximal_ids():
        cell = alt.result.cells[rcid]
        pts = tuple(vscale(k, p) for p in cell.points)
        lat = tuple(vscale(k, b) for b in cell.lattice)
        pieces.append((pts, lat, alt.parent[rcid]))
    heights = None
    if alt.heights:
        heights = {}
        for scid, table in alt.heights.items():
            heights[scid] = {vscale(k, v): k * h for v, h in table.items()}
    return _assemble_alteration(
        alt.result.kind, alt.source, pieces, heights=heights, scale=alt.scale * k
    )


def _induced_transport(fmap, balt):
    """Pull a map back along a base alteration, dilating as needed.

    When the induced subdivision has fractional vertices the whole base
    alteration is dilated, geometry and lattices together, by the least
    factor clearing the recorded denominators, and the pullback is
    retried.  Returns the dilation factor, the dilated alteration, the
    source alteration, and the new map.
    """
    cp = 1
    alt = balt
    for _ in range(16):
        try:
            alt_x, f2 = base_change(fmap, alt)
            return cp, alt, alt_x, f2
        except NotLattice as err:
            dens = [1]
            for _, vert in err.witnesses:
                for x in vert:
                    dens.append(Fraction(x).denominator)
            step = lcm(*dens)
            if step == 1:
                raise
            cp *= step
            alt = _dilate_alteration(balt, cp)
    raise AssertionFailed("no dilation clears the induced vertices", None)


# ---------------------------------------------------------------------------
# polytopal reduction


def _point_target(comp):
    """A one vertex complex and the constant map of comp onto it."""
    point = build_complex("polytopal", [((0,),)], lattices=[()])
    amb = next(iter(comp.cells.values())).ambient
    return map_with_matrix(comp, point, ((0,) * amb,))


def _triangulate_source(fmap):
    """Split every maximal source cell into simplices, no new vertices.

    Uses the pulling triangulation of each cell, which restricts to the
    pulling triangulation of every face, so shared faces of adjacent
    cells receive matching subdivisions.
    """
    src = fmap.source
    pieces = []
    for cid in src.maximal_ids():
        cell = src.cells[cid]
        if len(cell.points) == cell_dim(cell) + 1:
            pieces.append((cell.points, cell.lattice, cid))
            continue
        for simp in hull_triangulation(cell.points):
            pieces.append((tuple(simp), cell.lattice, cid))
    alt, order = _assemble_alteration("polytopal", src, pieces, want_order=True)
    owner_of = {}
    for (pts, lat, cid), rcid in zip(pieces, order):
        owner_of.setdefault(rcid, cid)
    entries = {}
    for rcid, cid in owner_of.items():
        tcid0, mat, off = fmap.assign[cid]
        entries[rcid] = (mat, off, tcid0)
    assign = _owner_assignment(alt.result, entries, fmap.target)
    return alt, ComplexMap(alt.result, fmap.target, assign)


def _scale_ladder(dim_b, dim_x):
    """Dilation candidates for one round, cheapest first.

    The identity is tried before any rescaling; after that the base is
    subdivided canonically at the least admissible factor and the
    lattice dilation climbs until divisibility silences every floor
    condition, which is guaranteed once it exceeds the source dimension.
    """
    out = [(1, 1)]
    cb = dim_b + 1
    if cb > 1:
        out.append((cb, 1))
    for t in range(2, dim_x + 2):
        out.append((cb, t))
    return out


def _dilation_row(verts, u, s):
    """Nonnegative integer weights on verts summing to s with sum u.

    Returns None when the unique rational solution is fractional or
    signed, which callers treat as a failed dilation candidate.
    """
    amb = len(u)
    rows = [tuple(Fraction(v[t]) for v in verts) for t in range(amb)]
    rows.append(tuple(Fraction(1) for _ in verts))
    rhs = tuple(Fraction(x) for x in u) + (Fraction(s),)
    sol = rational_solve(tuple(rows), rhs)
    if sol is None:
        return None
    out = []
    for a in sol:
        fa = Fraction(a)
        if fa.denominator != 1 or fa < 0:
            return None
        out.append(int(fa))
    return tuple(out)


def _cells_over_face(alt_b, tgt, tcid, s):
    """Result cells of a base alteration tiling one dilated source face."""
    face = tgt.cells[tcid]
    k = cell_dim(face)
    geom = tuple(vscale(s, p) for p in face.points)
    out = []
    for rcid, cell in alt_b.result.cells.items():
        if cell_dim(cell) != k:
            continue
        if cell.points and all(in_hull(p, geom) for p in cell.points):
            out.append(rcid)
    return tuple(sorted(out))


def _maximal_owners(comp):
    """Map each cell to the set of maximal cells containing it."""
    up = {}
    for rec in comp.faces:
        up.setdefault(rec.child, set()).add(rec.parent)
    maxi = set(comp.maximal_ids())
    owners = {}
    for cid in comp.cells:
        found = set()
        stack = [cid]
        seen = set()
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            if cur in maxi:
                found.add(cur)
            stack.extend(up.get(cur, ()))
        owners[cid] = frozenset(found)
    return owners


def _face_restriction(pieces, face_cell, s):
    """Vertex sets of the piece faces tiling one dilated face.

    The pieces all live inside a dilated parent having this cell as a
    geometric face, so membership only needs the face's affine hull
    equations, never a full containment test.
    """
    geom = tuple(vscale(s, p) for p in face_cell.points)
    k = cell_dim(face_cell)
    p0 = geom[0]
    sig = set()
    if k == 0:
        for pts in pieces:
            sub = tuple(p for p in pts if p == p0)
            if sub:
                sig.add(frozenset(sub))
        return frozenset(sig)
    rows = tuple(vsub(p, p0) for p in geom[1:])
    eqs = kernel_basis(rows)
    offs = tuple(dot(n, p0) for n in eqs)
    for pts in pieces:
        sub = tuple(
            p
            for p in pts
            if all(dot(n, p) == o for n, o in zip(eqs, offs))
        )
        if sub and affine_dim(sub) == k:
            sig.add(frozenset(sub))
    return frozenset(sig)


def _sort_rows(pairs, supp_c):
    """Order dilation rows so supports shrink, largest first.

    pairs holds (vertex, row) couples; the sort looks at the support
    met with the box point's support when one is given, then the full
    support, then the row itself, so the order depends only on the
    data.
    """

    def key(pair):
        _, row = pair
        supp = {j for j, a in enumerate(row) if a}
        met = len(supp & supp_c) if supp_c is not None else 0
        return (-met, -len(supp), row)

    return sorted(pairs, key=key)


def _face_slices(src, fmap, fcid):
    """Fiber slices of a face cell, grouped by image point."""
    cell = src.cells[fcid]
    tcid, mat, off = fmap.assign[fcid]
    groups = {}
    for p in cell.points:
        groups.setdefault(vadd(matvec(mat, p), off), []).append(p)
    return tuple(tuple(sorted(g)) for _, g in sorted(groups.items()))


def _match_box(w, boxes, difflat):
    """The box point whose class w represents modulo difflat, if any."""
    for bp in boxes:
        if in_lattice(vsub(w, bp.representative), difflat):
            return bp
    return None


def _through_face(w, difflat, slices):
    """Representative of w's torsion class on a shared face, or None.

    A class crosses a face exactly when one of the face's own box
    points represents it modulo the difference lattice of the cell the
    class currently sits in; the face groups inject into the groups of
    every cell around the face, so the crossing is unambiguous.
    """
    if all(len(s) == 1 for s in slices):
        return None
    got = _match_box(w, box_points(slices), difflat)
    return None if got is None else got.representative


def _attempt_round(fmap, prep, m_of, c, cp):
    """Try one reduction round at the given scales.

    Returns (c, cp, base alteration, source alteration, new map), or
    None when some cell rejects the dilation so the caller can climb
    the ladder.  Inconsistent subdivisions of a shared face raise
    DescentMismatch.
    """
    src, tgt = fmap.source, fmap.target
    s = c * cp
    if s == 1:
        alt_b = identity_alteration(tgt)
    else:
        b_pieces = []
        for tcid in tgt.maximal_ids():
            q = tgt.cells[tcid]
            lat = tuple(vscale(cp, b) for b in q.lattice)
            if len(q.points) == 1:
                b_pieces.append(((vscale(s, q.points[0]),), lat, tcid))
                continue
            for cellv in stcan(q.points, c):
                b_pieces.append(
                    (tuple(vscale(cp, v) for v in cellv), lat, tcid)
                )
        alt_b = _assemble_alteration("polytopal", tgt, b_pieces, scale=s)
    x_pieces = []
    homes = []
    for cid in src.maximal_ids():
        fibers, tcid, mat, off, idx = prep[cid][:5]
        box = m_of.get(cid)
        cell = src.cells[cid]
        amb = cell.ambient
        if len(cell.points) == 1:
            bover = _cells_over_face(alt_b, tgt, tcid, s) if s != 1 else (tcid,)
            x_pieces.append(((vscale(s, cell.points[0]),), cell.lattice, cid))
            homes.append(bover[0])
            continue
        over = (tcid,) if s == 1 else _cells_over_face(alt_b, tgt, tcid, s)
        supp_c = None
        if box is not None:
            supp_c = {j for j, cv in enumerate(box.c_tuple) if cv}
        for bcid in over:
            q1 = alt_b.result.cells[bcid]
            pairs = []
            for u in q1.points:
                row = _dilation_row(tgt.cells[tcid].points, u, s)
                if row is None:
                    return None
                pairs.append((u, row))
            pairs = _sort_rows(pairs, supp_c)
            a_mat = tuple(row for _, row in pairs)
            part = [[j] for j in range(len(a_mat))]
            lat = _pullback_lattice(cell.lattice, mat, q1.lattice)
            if box is not None:
                if not in_Fm(fibers, a_mat, box, part):
                    return None
                cells = sigma_m(fibers, a_mat, box, part)
            elif s == 1:
                x_pieces.append((cell.points, cell.lattice, cid))
                homes.append(bcid)
                continue
            else:
                cells = triangulate_cayley(fibers, a_mat, part)
            for simplex in cells:
                verts = tuple(sorted(tuple(v[:amb]) for v in simplex))
                x_pieces.append((verts, lat, cid))
                homes.append(bcid)
    owners = _maximal_owners(src)
    by_parent = {}
    for pts, lat, cid in x_pieces:
        by_parent.setdefault(cid, []).append(pts)
    for fcid, cell in src.cells.items():
        having = sorted(owners[fcid])
        if len(having) < 2:
            continue
        sigs = {}
        for pcid in having:
            sigs[pcid] = _face_restriction(by_parent[pcid], cell, s)
        first = having[0]
        for pcid in having[1:]:
            if sigs[pcid] != sigs[first]:
                raise DescentMismatch(fcid, first, pcid)
    alt_x, order = _assemble_alteration(
        "polytopal", src, x_pieces, scale=s, want_order=True
    )
    entries = {}
    for (pts, lat, cid), home, rcid in zip(x_pieces, homes, order):
        if rcid in entries:
            continue
        tcid0, mat, off = fmap.assign[cid]
        entries[rcid] = (mat, vscale(s, off), home)

    def fallback(rcid):
        owner = alt_x.parent[rcid]
        tcid0, mat, off = fmap.assign[owner]
        return (mat, vscale(s, off), None)

    assign = _owner_assignment(
        alt_x.result, entries, alt_b.result, scale_parent=fallback
    )
    f2 = ComplexMap(alt_x.result, alt_b.result, assign)
    return c, cp, alt_b, alt_x, f2


def _reduction_round(fmap):
    """Run one canonical subdivision round on a triangulated map.

    Each connected component settles on one torsion class for the whole
    round, read off the lexicographically least cell of top index.  The
    class spreads from that cell across shared faces, crossing a face
    only when the face's own box points carry it, and jumping between
    cells with equal difference lattices; cells it never reaches keep
    their lattice through the canonical triangulation, so shared faces
    receive matching subdivisions.  When a face still comes out
    inconsistent the round moves to the anchor's next class before
    giving up.
    """
    src, tgt = fmap.source, fmap.target
    dim_x = max(cell_dim(src.cells[cid]) for cid in src.maximal_ids())
    dim_b = max(cell_dim(tgt.cells[tcid]) for tcid in tgt.maximal_ids())
    prep = {}
    for cid in src.maximal_ids():
        cell = src.cells[cid]
        tcid, mat, off = fmap.assign[cid]
        q = tgt.cells[tcid]
        fibers = []
        for v in q.points:
            fib = tuple(
                sorted(
                    p
                    for p in cell.points
                    if vadd(matvec(mat, p), off) == v
                )
            )
            if not fib:
                raise AssertionFailed(
                    "cell %r does not cover its carrier's vertices" % (cid,), cid
                )
            fibers.append(fib)
        fibers = tuple(fibers)
        idx = _poly_index(cell)
        boxes = ()
        dirs = []
        for f in fibers:
            dirs.extend(vsub(v, f[0]) for v in f[1:])
        stored = _sublattice_in_span(cell.lattice, dirs) if dirs else ()
        difflat = lattice_basis(dirs)
        if idx > 1:
            boxes = tuple(box_points(fibers))
        prep[cid] = (fibers, tcid, mat, off, idx, boxes, stored, difflat)
    comp_of = src.component_of()
    groups = {}
    for cid in src.maximal_ids():
        groups.setdefault(comp_of[cid], []).append(cid)
    owners = _maximal_owners(src)
    edges = {}
    for fcid, owns in owners.items():
        if len(owns) < 2:
            continue
        pair = sorted(owns)
        for i, a in enumerate(pair):
            for b in pair[i + 1 :]:
                edges.setdefault(a, []).append((b, fcid))
                edges.setdefault(b, []).append((a, fcid))
    for lst in edges.values():
        lst.sort()
    bylat = {}
    for comp, cids in groups.items():
        for cid in cids:
            bylat.setdefault((comp, prep[cid][7]), []).append(cid)
    candidates = {}
    anchors = {}
    for comp, cids in groups.items():
        top = max(prep[cid][4] for cid in cids)
        if top == 1:
            candidates[comp] = ()
            continue
        anchor = min(
            (cid for cid in cids if prep[cid][4] == top),
            key=lambda cid: tuple(sorted(src.cells[cid].points)),
        )
        boxes, stored = prep[anchor][5], prep[anchor][6]
        real = tuple(
            bp for bp in boxes if in_lattice(bp.representative, stored)
        )
        if not real:
            raise AssertionFailed(
                "cell %r has index %d but no usable torsion class"
                % (anchor, top),
                anchor,
            )
        candidates[comp] = real
        anchors[comp] = anchor
    depth = max((len(v) for v in candidates.values()), default=0)
    first_mismatch = None
    for k in range(max(depth, 1)):
        m_of = {cid: None for cid in src.maximal_ids()}
        for comp, cids in groups.items():
            cand = candidates[comp]
            if not cand:
                continue
            anchor = anchors[comp]
            m_of[anchor] = cand[min(k, len(cand) - 1)]
            queue = [anchor]
            while queue:
                cur = queue.pop(0)
                w = m_of[cur].representative
                for nb in bylat[(comp, prep[cur][7])]:
                    if nb == cur or m_of[nb] is not None:
                        continue
                    got = _match_box(w, prep[nb][5], prep[nb][7])
                    if got is not None:
                        m_of[nb] = got
                        queue.append(nb)
                for nb, fcid in edges.get(cur, ()):
                    if m_of[nb] is not None:
                        continue
                    u = _through_face(
                        w, prep[cur][7], _face_slices(src, fmap, fcid)
                    )
                    if u is None:
                        continue
                    got = _match_box(u, prep[nb][5], prep[nb][7])
                    if got is not None:
                        m_of[nb] = got
                        queue.append(nb)
        for c, cp in _scale_ladder(dim_b, dim_x):
            try:
                built = _attempt_round(fmap, prep, m_of, c, cp)
            except DescentMismatch as err:
                if first_mismatch is None:
                    first_mismatch = err
                continue
            if built is not None:
                return built
    if first_mismatch is not None:
        raise first_mismatch
    raise AssertionFailed("no dilation admits a reduction round", None)


def reduce_polytopal(fmap, max_rounds=None, check=True):
    """Reduce a map of polytopal complexes to a semistable one.

    The map is first made good, so every cell lands onto a cell, the
    base is replaced by a unimodular triangulation obtained by reducing
    it over a point, and the source is triangulated without new
    vertices.  Canonical subdivision rounds then lower the worst cell
    index through box point moves until every cell is unimodular
    against its stored lattice.  A round that fails to lower the index
    profile raises AssertionFailed; exceeding max_rounds raises
    RoundLimit carrying the partial result.
    """
    src, tgt = fmap.source, fmap.target
    if src.kind != "polytopal" or tgt.kind != "polytopal":
        raise ValueError("this reduction drives polytopal maps")
    base_chain = []
    source_chain = []
    c_lattice = 1

    c0, alt_b0, alt_x0, f = make_good(fmap)
    base_chain.append(alt_b0)
    source_chain.append(alt_x0)

    if not all(_is_regular(f.target.cells[t]) for t in f.target.maximal_ids()):
        inner = reduce_polytopal(
            _point_target(f.target), max_rounds=max_rounds, check=False
        )
        balt = _compose_chain(inner.source_chain)
        cp, balt2, alt_x, f = _induced_transport(f, balt)
        c_lattice *= cp * inner.c_lattice
        base_chain.append(balt2)
        source_chain.append(alt_x)

    if not all(
        len(f.source.cells[cid].points) == cell_dim(f.source.cells[cid]) + 1
        for cid in f.source.maximal_ids()
    ):
        alt_x, f = _triangulate_source(f)
        source_chain.append(alt_x)

    rounds = []
    while True:
        hist = _index_histogram(f.source)
        top = max(hist)
        if top == 1:
            break
        if max_rounds is not None and len(rounds) >= max_rounds:
            partial = ReductionResult(
                "polytopal",
                base_chain,
                source_chain,
                f,
                rounds,
                c_lattice=c_lattice,
                completed=False,
                stats={"final_index_profile": tuple(sorted(hist.items()))},
            )
            raise RoundLimit(
                "the round budget of %d was spent with index %d remaining"
                % (max_rounds, top),
                partial,
            )
        cells_before = len(f.source.cells)
        c, cp, alt_b, alt_x, f = _reduction_round(f)
        c_lattice *= cp
        base_chain.append(alt_b)
        source_chain.append(alt_x)
        hist2 = _index_histogram(f.source)
        top2 = max(hist2)
        rounds.append(
            RoundStats(
                len(rounds) + 1,
                c,
                cp,
                tuple(sorted(hist.items())),
                tuple(sorted(hist2.items())),
                cells_before,
                len(f.source.cells),
            )
        )
        if not (top2 < top or (top2 == top and hist2[top2] < hist[top])):
            raise AssertionFailed(
                "a reduction round failed to lower the index profile",
                (tuple(sorted(hist.items())), tuple(sorted(hist2.items()))),
            )

    hist = _index_histogram(f.source)
    stats = {
        "rounds": [r._asdict() for r in rounds],
        "final_index_profile": tuple(sorted(hist.items())),
        "source_cells": len(f.source.cells),
        "target_cells": len(f.target.cells),
    }
    result = ReductionResult(
        "polytopal",
        base_chain,
        source_chain,
        f,
        rounds,
        c_lattice=c_lattice,
        completed=True,
        stats=stats,
    )
    result.stats["base_lattice_index"] = max(
        _base_lattice_indices(result).values(), default=1
    )
    if check:
        result.report = verify(result, fmap)
        if not result.report.ok:
            name, witness = result.report.failures()[0]
            raise AssertionFailed(
                "verification failed at %s: %s" % (name, witness), witness
            )
    return result


def unimodularize(comp, max_rounds=None):
    """Dilate and triangulate a polytopal complex into unimodular cells.

    Reduces the constant map of the complex onto a point and returns
    (c, alteration): the alteration subdivides the c dilated complex
    into simplices of index one against their stored lattices.
    """
    res = reduce_polytopal(_point_target(comp), max_rounds=max_rounds, check=False)
    alt = _compose_chain(res.source_chain)
    return alt.scale, alt


def _base_lattice_indices(result):
    """Index of each final base lattice inside the original one."""
    comp = result.final_map.target
    chain = result.base_chain
    out = {}
    for tcid in comp.maximal_ids():
        cell = comp.cells[tcid]
        owner = tcid
        for alt in reversed(chain):
            owner = alt.parent[owner]
        ocell = chain[0].source.cells[owner]
        if not cell.lattice:
            out[tcid] = 1
            continue
        sup = _sublattice_in_span(ocell.lattice, cell.lattice)
        out[tcid] = lattice_index(cell.lattice, sup)
    return out


# ---------------------------------------------------------------------------
# conical resolution


def _split_parts(fmap):
    """Vertical and horizontal factors of a resolved conical source.

    Returns the two factor complexes, the pairing from source maximal
    cids, the set of fully vertical maximal cids, and the horizontal
    map carrying each factor by the matrix of its owner.
    """
    xv, xh, pairs = split_vertical_horizontal(fmap)
    fully_vertical = set()
    owner_of_h = {}
    for cid in sorted(pairs):
        vcid, hcid = pairs[cid]
        if not xh.cells[hcid].points:
            fully_vertical.add(cid)
            continue
        owner_of_h.setdefault(hcid, cid)
    entries = {}
    for hcid, cid in owner_of_h.items():
        tcid0, mat, off = fmap.assign[cid]
        entries[hcid] = (mat, off, tcid0)
    if not entries:
        return xv, xh, pairs, fully_vertical, None
    some = next(iter(entries.values()))

    def fallback(rcid):
        return (some[0], some[1], None)

    assign = _owner_assignment(xh, entries, fmap.target, scale_parent=fallback)
    f_h = ComplexMap(xh, fmap.target, assign)
    return xv, xh, pairs, fully_vertical, f_h


def _homogenize_sections(f_h, dh, zalt, balt, cp):
    """Rebuild cones over reduced cross sections.

    f_h is the conical map that was sectioned, dh its section data,
    zalt and balt the composed section alterations, and cp the lattice
    dilation the reduction applied to the base.  New base cones carry
    the cp dilated lattice of their owner cut to their span; new source
    cones carry the pullback of that lattice, which is the lattice of
    the fiber product.  Returns the base alteration, the source
    alteration, the rebuilt conical map, and the trace from its maximal
    source cells to the cells of f_h's source.
    """
    tgt_old = f_h.target
    src_old = f_h.source
    t_comp_of = tgt_old.component_of()
    b_pieces = []
    b_owners = []
    for rcid in balt.result.maximal_ids():
        cell = balt.result.cells[rcid]
        owner = dh.base_source_of[balt.parent[rcid]]
        span = lattice_basis(cell.points)
        lat = _sublattice_in_span(
            tuple(vscale(cp, b) for b in tgt_old.cells[owner].lattice), span
        )
        gens = tuple(_primitive_in(p, lat) for p in cell.points)
        b_pieces.append((gens, lat, owner))
        b_owners.append(owner)
    for tcid in tgt_old.maximal_ids():
        if not tgt_old.cells[tcid].points:
            b_pieces.append(((), (), tcid))
            b_owners.append(tcid)
    alt_b, order_b = _assemble_alteration(
        "conical", tgt_old, b_pieces, want_order=True
    )
    sample_of_comp = {}
    for owner, rcid in zip(b_owners, order_b):
        sample_of_comp.setdefault(t_comp_of[owner], rcid)
    x_pieces = []
    x_entries = []
    trace = []
    for rcid in zalt.result.maximal_ids():
        cell = zalt.result.cells[rcid]
        zparent = zalt.parent[rcid]
        owner = dh.source_of[zparent]
        tcid0, mat, _ = f_h.assign[owner]
        span = lattice_basis(cell.points)
        lat = _pullback_lattice(
            _sublattice_in_span(src_old.cells[owner].lattice, span),
            mat,
            tuple(vscale(cp, b) for b in tgt_old.cells[tcid0].lattice),
        )
        gens = tuple(_primitive_in(p, lat) for p in cell.points)
        x_pieces.append((gens, lat, owner))
        home = sample_of_comp[t_comp_of[tcid0]]
        x_entries.append((mat, (0,) * len(mat), home))
        trace.append(owner)
    alt_x, order_x = _assemble_alteration(
        "conical", src_old, x_pieces, want_order=True
    )
    entries = {}
    trace_of = {}
    for (pts, lat, owner), ent, rcid, own in zip(
        x_pieces, x_entries, order_x, trace
    ):
        entries.setdefault(rcid, ent)
        trace_of.setdefault(rcid, own)

    def fallback(rcid):
        owner = alt_x.parent[rcid]
        ent = f_h.assign.get(owner)
        if ent is None:
            return None
        return (ent[1], (0,) * len(ent[1]), None)

    assign = _owner_assignment(
        alt_x.result, entries, alt_b.result, scale_parent=fallback
    )
    f_fin = ComplexMap(alt_x.result, alt_b.result, assign)
    return alt_b, alt_x, f_fin, trace_of


def _assemble_final(f_res, xv, pairs, fully_vertical, f_h_fin, trace_h):
    """Multiply the vertical factors back onto the reduced horizontal map.

    f_res is the resolved conical map whose maximal cells were split,
    f_h_fin the reduced horizontal map, and trace_h sends its maximal
    source cells to the horizontal factor cids of the split.  Each
    final cone is spanned by the vertical rays of its owner and the
    rays of one reduced horizontal cell, against the fiber product
    lattice.  Returns the final source alteration and map.
    """
    xr = f_res.source
    bfin = f_h_fin.target
    by_h = {}
    for rcid, hcid in trace_h.items():
        by_h.setdefault(hcid, []).append(rcid)
    pieces = []
    ents = []
    for cid in xr.maximal_ids():
        cell = xr.cells[cid]
        tcid0, mat, off = f_res.assign[cid]
        if cid in fully_vertical:
            pieces.append((cell.points, cell.lattice, cid))
            ents.append((mat, (0,) * len(mat), None))
            continue
        vcid, hcid = pairs[cid]
        vcell = xv.cells[vcid]
        for rcid in sorted(by_h.get(hcid, ())):
            hcell = f_h_fin.source.cells[rcid]
            tfin = f_h_fin.assign[rcid][0]
            tlat = bfin.cells[tfin].lattice
            lat = _pullback_lattice(cell.lattice, mat, tlat)
            gens = vcell.points + tuple(
                _primitive_in(p, lat) for p in hcell.points
            )
            pieces.append((gens, lat, cid))
            ents.append((mat, (0,) * len(mat), tfin))
    alt_fin, order = _assemble_alteration("conical", xr, pieces, want_order=True)
    entries = {}
    for (pts, lat, cid), ent, rcid in zip(pieces, ents, order):
        entries.setdefault(rcid, ent)

    def fallback(rcid):
        owner = alt_fin.parent[rcid]
        ent = f_res.assign.get(owner)
        if ent is None:
            return None
        return (ent[1], (0,) * len(ent[1]), None)

    assign = _owner_assignment(
        alt_fin.result, entries, bfin, scale_parent=fallback
    )
    return alt_fin, ComplexMap(alt_fin.result, bfin, assign)


def resolve_conical(fmap, max_rounds=None):
    """Resolve a map of cone complexes to a semistable one.

    The source is made simplicial with index one cells, vertical rays
    are split off, the base is ordered and regularized, the scaling
    making edges and lattices spread weakly semistably is applied, and
    the remaining indices are lowered on cross sections through the
    polytopal reduction before the cones are rebuilt.  The returned
    result has passed check_semistable; failure to get there raises.
    """
    src, tgt = fmap.source, fmap.target
    if src.kind != "conical" or tgt.kind != "conical":
        raise ValueError("this resolution drives conical maps")
    for comp in (src, tgt):
        rep = validate(comp)
        if not rep.ok:
            raise ValueError("invalid input complex: %s" % (rep.failures[0],))
    rep = validate_map(fmap)
    if not rep.ok:
        raise ValueError("invalid input map: %s" % (rep.failures[0],))

    if check_semistable(fmap).semistable:
        result = ReductionResult(
            "conical",
            (identity_alteration(tgt),),
            (identity_alteration(src),),
            fmap,
            (),
            stats={"path": "identity"},
        )
        result.stats["base_lattice_index"] = 1
        result.report = verify(result, fmap)
        if not result.report.ok:
            name, witness = result.report.failures()[0]
            raise AssertionFailed(
                "verification failed at %s: %s" % (name, witness), witness
            )
        return result

    base_chain = []
    alt_rx = resolve_cones(src)
    f_res = _refine_source(fmap, alt_rx)

    if check_semistable(f_res).semistable:
        return _finish_conical(
            fmap, alt_rx, f_res, base_chain, None, (), 1, {"path": "source"}
        )

    xv, xh, pairs, fully_vertical, f_h = _split_parts(f_res)
    h_chain = []
    rounds = ()
    c_lattice = 1
    stats = {"path": "sections"}

    if f_h is not None:
        alt_bb = barycentric(f_h.target)
        alt_h1, f_h = base_change(f_h, alt_bb)
        base_chain.append(alt_bb)
        h_chain.append(alt_h1)
        alt_xb = barycentric(f_h.source)
        f_h = _refine_source(f_h, alt_xb)
        h_chain.append(alt_xb)
        alt_br = resolve_cones(f_h.target)
        alt_h2, f_h = base_change(f_h, alt_br)
        base_chain.append(alt_br)
        h_chain.append(alt_h2)
        scaling = weak_semistable_scaling(f_h)
        base_chain.append(scaling.base_alteration)
        h_chain.append(scaling.source_alteration)
        f_h = scaling.map
        stats["weak_scaling"] = scaling.c

        if check_semistable(f_h).semistable:
            f_h_fin = f_h
            trace_h = {}
            for rcid in f_h.source.maximal_ids():
                cur = rcid
                for alt in reversed(h_chain):
                    cur = alt.parent[cur]
                trace_h[rcid] = cur
        else:
            dh = dehomogenize(f_h)
            rp = reduce_polytopal(dh.map, max_rounds=max_rounds, check=False)
            rounds = rp.rounds
            c_lattice = rp.c_lattice
            stats["section_level"] = dh.c
            zalt = _compose_chain(rp.source_chain)
            balt = _compose_chain(rp.base_chain)
            alt_bs, alt_xs, f_h_fin, trace_new = _homogenize_sections(
                f_h, dh, zalt, balt, c_lattice
            )
            base_chain.append(alt_bs)
            trace_h = {}
            for rcid, hcur in trace_new.items():
                cur = hcur
                for alt in reversed(h_chain):
                    cur = alt.parent[cur]
                trace_h[rcid] = cur
    else:
        f_h_fin = None
        trace_h = {}
        if base_chain == []:
            base_chain.append(identity_alteration(tgt))

    if f_h_fin is None:
        alt_fin, f_fin = _assemble_final(
            f_res, xv, pairs, fully_vertical, _IdentityTail(tgt), trace_h
        )
    else:
        alt_fin, f_fin = _assemble_final(
            f_res, xv, pairs, fully_vertical, f_h_fin, trace_h
        )
    return _finish_conical(
        fmap,
        alt_rx,
        f_fin,
        base_chain,
        alt_fin,
        rounds,
        c_lattice,
        stats,
    )


class _IdentityTail:
    """Stand in for a reduced horizontal map when no cell had one."""

    def __init__(self, target):
        self.target = target
        self.source = build_complex("conical", [()])
        self.assign = {}


def _finish_conical(fmap, alt_rx, f_fin, base_chain, alt_fin, rounds, c_lattice, stats):
    source_chain = [alt_rx]
    if alt_fin is not None:
        source_chain.append(alt_fin)
    if not base_chain:
        base_chain = [identity_alteration(fmap.target)]
    rep = check_semistable(f_fin)
    if not rep.semistable:
        for part in (
            rep.cells_to_cells,
            rep.lattices_onto,
            rep.target_regular,
            rep.source_regular,
        ):
            if not part.ok:
                raise AssertionFailed(
                    "the resolved map is not semistable: %s" % (part.failures[0],),
                    part.failures[0],
                )
    result = ReductionResult(
        "conical",
        base_chain,
        source_chain,
        f_fin,
        rounds,
        c_lattice=c_lattice,
        completed=True,
        stats=stats,
    )
    result.stats["base_lattice_index"] = max(
        _base_lattice_indices(result).values(), default=1
    )
    result.report = verify(result, fmap)
    if not result.report.ok:
        name, witness = result.report.failures()[0]
        raise AssertionFailed(
            "verification failed at %s: %s" % (name, witness), witness
        )
    return result


# ---------------------------------------------------------------------------
# verification


def _complex_signature(comp):
    out = set()
    keyfun = _cone_key if comp.kind == "conical" else _poly_key
    for cid in comp.maximal_ids():
        cell = comp.cells[cid]
        key = keyfun(cell.points) if cell.points else frozenset()
        out.add((key, lattice_basis(cell.lattice)))
    return frozenset(out)


def _frac_det(rows):
    m = [list(r) for r in rows]
    n = len(m)
    out = Fraction(1)
    for col in range(n):
        piv = None
        for r in range(col, n):
            if m[r][col]:
                piv = r
                break
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            out = -out
        out *= m[col][col]
        for r in range(col + 1, n):
            fac = m[r][col] / m[col][col]
            for cc in range(col, n):
                m[r][cc] -= fac * m[col][cc]
    return out


def _cone_content(points, lattice, ell):
    """Content of a cone against a functional positive on it.

    Triangulates, scales each ray onto the level one slice of ell, and
    sums the absolute determinants in lattice coordinates.  Additive
    over subdivisions, so it detects dropped pieces exactly.
    """
    if not points or not lattice:
        return Fraction(0)
    bt = transpose(lattice_basis(lattice))
    total = Fraction(0)
    for simp in _triangulate_cone_points(points):
        rows = []
        for ray in simp:
            lv = Fraction(dot(ell, ray))
            if lv <= 0:
                raise ValueError("the reference functional misses a ray")
            scaled = tuple(Fraction(x) / lv for x in ray)
            sol = rational_solve(bt, scaled)
            if sol is None:
                raise ValueError("a ray leaves the lattice span")
            rows.append(sol)
        total += abs(_frac_det(rows))
    return total


def _check_chains(result, original):
    bad = []
    kind = result.final_map.source.kind
    cur = original.target
    for i, alt in enumerate(result.base_chain):
        if _complex_signature(alt.source) != _complex_signature(cur):
            bad.append("base link %d does not start where the last ended" % i)
        cur = alt.result
    if _complex_signature(cur) != _complex_signature(result.final_map.target):
        bad.append("the base chain does not end at the final base")
    cur = original.source
    for i, alt in enumerate(result.source_chain):
        if _complex_signature(alt.source) != _complex_signature(cur):
            bad.append("source link %d does not start where the last ended" % i)
        cur = alt.result
    if _complex_signature(cur) != _complex_signature(result.final_map.source):
        bad.append("the source chain does not end at the final source")
    s_total = 1
    for alt in result.source_chain:
        s_total *= alt.scale
    for cid in result.final_map.source.maximal_ids():
        owner = cid
        for alt in reversed(result.source_chain):
            owner = alt.parent[owner]
        if owner not in original.assign:
            bad.append("cell %r does not trace back to the original" % (cid,))
            continue
        _, mat0, off0 = original.assign[owner]
        _, mat, off = result.final_map.assign[cid]
        if mat != mat0:
            bad.append("cell %r does not carry its original matrix" % (cid,))
        elif kind == "polytopal" and off != vscale(s_total, off0):
            bad.append("cell %r does not carry the scaled offset" % (cid,))
    return Report(bad)


def _check_subdivisions(result):
    bad = []
    for side, chain in (("base", result.base_chain), ("source", result.source_chain)):
        for i, alt in enumerate(chain):
            kind = alt.result.kind
            for rcid in alt.result.maximal_ids():
                cell = alt.result.cells[rcid]
                parent = alt.source.cells[alt.parent[rcid]]
                geom = tuple(vscale(alt.scale, p) for p in parent.points)
                if kind == "polytopal":
                    inside = geom and all(in_hull(p, geom) for p in cell.points)
                else:
                    inside = all(_in_cone(p, geom) for p in cell.points)
                if not inside:
                    bad.append(
                        "%s link %d cell %r leaves its parent" % (side, i, rcid)
                    )
            if alt.heights and kind == "polytopal":
                for scid, table in alt.heights.items():
                    cells = [
                        alt.result.cells[r].points for r in alt.cells_over(scid)
                    ]
                    if cells and not is_lower_envelope(cells, table):
                        bad.append(
                            "%s link %d heights over %r fail the envelope"
                            % (side, i, scid)
                        )
    for name, comp in (
        ("source", result.final_map.source),
        ("target", result.final_map.target),
    ):
        rep = validate(comp)
        for item in rep.failures:
            bad.append("final %s: %s" % (name, item))
    rep = validate_map(result.final_map)
    for item in rep.failures:
        bad.append("final map: %s" % (item,))
    return Report(bad)


def _check_volumes(result):
    bad = []
    for side, chain in (("base", result.base_chain), ("source", result.source_chain)):
        for i, alt in enumerate(chain):
            kind = alt.result.kind
            for scid in alt.source.maximal_ids():
                cell = alt.source.cells[scid]
                over = alt.cells_over(scid)
                if kind == "polytopal":
                    if cell_dim(cell) == 0:
                        got = len(over)
                        want = 1
                    else:
                        geom = tuple(vscale(alt.scale, p) for p in cell.points)
                        want = normalized_volume(geom, cell.lattice)
                        got = sum(
                            normalized_volume(
                                alt.result.cells[r].points, cell.lattice
                            )
                            for r in over
                        )
                else:
                    if not cell.points:
                        continue
                    ineqs, _ = _cone_hrep(cell.points, cell.ambient)
                    ell = tuple(
                        sum(col) for col in zip(*ineqs)
                    ) if ineqs else None
                    if ell is None:
                        continue
                    want = _cone_content(cell.points, cell.lattice, ell)
                    got = sum(
                        (
                            _cone_content(
                                alt.result.cells[r].points, cell.lattice, ell
                            )
                            for r in over
                        ),
                        Fraction(0),
                    )
                if got != want:
                    bad.append(
                        "%s link %d loses volume over %r (%s of %s)"
                        % (side, i, scid, got, want)
                    )
    return Report(bad)


def _check_index_one(fmap):
    bad = []
    for name, comp in (("source", fmap.source), ("target", fmap.target)):
        for cid, cell in comp.cells.items():
            try:
                if comp.kind == "polytopal":
                    idx = _poly_index(cell)
                elif not cell.points:
                    idx = 1
                else:
                    idx = _cone_cell_index(cell.points, cell.lattice)[0]
            except Exception as err:
                bad.append("%s cell %r: index undefined (%s)" % (name, cid, err))
                continue
            if idx != 1:
                bad.append("%s cell %r has index %d" % (name, cid, idx))
    return Report(bad)


def _guarded(fn):
    try:
        return fn()
    except Exception as err:
        return Report(["check crashed: %s" % (err,)])


def verify(result, original_map):
    """Recheck a reduction result from its recorded pieces.

    The chains must compose from the original map's complexes to the
    final ones with matrices carried faithfully, every alteration must
    stay inside its dilated parents with volume conserved and recorded
    heights convex, the final complexes and map must validate, the four
    semistability conditions must hold, and every final cell must have
    index one.  Nothing is cached: tampering with any recorded piece
    shows up in the corresponding condition.
    """
    conds = {}
    conds["chains_compose"] = _guarded(lambda: _check_chains(result, original_map))
    conds["subdivision_valid"] = _guarded(lambda: _check_subdivisions(result))
    conds["volume_conserved"] = _guarded(lambda: _check_volumes(result))
    rep = _guarded(lambda: check_semistable(result.final_map))
    if isinstance(rep, Report):
        conds["condition_1_cells_to_cells"] = rep
        conds["condition_2_lattices_onto"] = rep
        conds["condition_3_target_regular"] = rep
        conds["condition_4_source_regular"] = rep
    else:
        conds["condition_1_cells_to_cells"] = rep.cells_to_cells
        conds["condition_2_lattices_onto"] = rep.lattices_onto
        conds["condition_3_target_regular"] = rep.target_regular
        conds["condition_4_source_regular"] = rep.source_regular
    conds["index_one"] = _guarded(lambda: _check_index_one(result.final_map))
    return VerificationReport(conds)
