"""Cell complexes over exact lattices and the surgeries performed on them.

A complex is a finite family of cells, each presented in its own integer
coordinate space: a strictly convex rational cone given by ray generators,
or a lattice polytope given by vertices, together with a row basis of the
lattice the cell is measured against.  Face records glue cells along
affine embeddings.  The operations below validate that data, refine it by
barycentric, stellar, and canonical dilation subdivisions, pull a map of
complexes back along an alteration of its target, split off directions a
map collapses, rebuild cones from cross sections, and certify the
regularity conditions the reduction drives toward.

Subdividing operations expect their input in shared coordinates, meaning
every face record is an identity inclusion.  The constructors in this
module build exactly that form; validation also handles the general
shape with arbitrary affine embeddings.
"""

import itertools
from collections import namedtuple
from fractions import Fraction
from math import gcd, lcm

from .cayley_moves import stcan
from .intlat import (
    dot,
    identity,
    image_basis,
    in_lattice,
    kernel_basis,
    lattice_basis,
    lattice_index,
    matvec,
    preimage_basis,
    quotient_group,
    rational_solve,
    saturation,
    transpose,
    vadd,
    vscale,
    vsub,
)
from .polytope import (
    affine_coords,
    affine_dim,
    cut_by_hyperplane,
    extreme_points,
    facets,
    frac_point,
    in_hull,
    is_lower_envelope,
    lp_solve,
    simplex_normalized_volume,
)


class NotLattice(ValueError):
    """A required subdivision has vertices outside the relevant lattice."""

    def __init__(self, message, witnesses=()):
        super().__init__(message)
        self.witnesses = tuple(witnesses)


class RegularityRequired(ValueError):
    """An operation that needs a regular complex was handed something else."""


class NotRegularSimplicial(ValueError):
    """An operation that needs regular simplicial cells was handed something else."""


class VerticalComponent(ValueError):
    """A cross section was requested where the map collapses a whole component."""


class DescentMismatch(ValueError):
    """Results computed on a disjoint cover disagree on a shared face."""

    def __init__(self, face, left, right):
        super().__init__(
            "results disagree on face %r between cells %r and %r" % (face, left, right)
        )
        self.face = face
        self.left = left
        self.right = right


class AssertionFailed(AssertionError):
    """A runtime certificate did not hold; carries the offending witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


Cell = namedtuple("Cell", ["cid", "kind", "points", "lattice", "ambient"])

FaceRec = namedtuple("FaceRec", ["child", "parent", "matrix", "offset"])


class Report:
    """Outcome of a validation pass: truthy when nothing failed."""

    __slots__ = ("failures",)

    def __init__(self, failures):
        self.failures = tuple(failures)

    @property
    def ok(self):
        return not self.failures

    def __bool__(self):
        return self.ok

    def __repr__(self):
        if self.ok:
            return "Report(ok)"
        return "Report(%d failures)" % len(self.failures)


def cell_dim(cell):
    return len(cell.lattice)


def _primitive(v):
    g = 0
    for x in v:
        g = gcd(g, abs(x))
    if g <= 1:
        return tuple(v)
    return tuple(x // g for x in v)


def _qrank(rows):
    """Rank over the rationals of possibly fractional rows."""
    scaled = []
    for r in rows:
        r = frac_point(r)
        den = 1
        for x in r:
            den = lcm(den, x.denominator)
        scaled.append(tuple(int(x * den) for x in r))
    return len(lattice_basis(scaled))


def _in_cone(x, rays):
    """Exact membership of x in the cone generated by rays."""
    if not rays:
        return not any(x)
    d = len(rays[0])
    eq = tuple(tuple(Fraction(r[i]) for r in rays) for i in range(d))
    status, _, _ = lp_solve((0,) * len(rays), eq, tuple(Fraction(t) for t in x))
    return status == "optimal"


def _cone_extreme(rays):
    """Primitive generators of the extreme rays, sorted for canonical use."""
    prim = []
    for r in rays:
        p = _primitive(r)
        if any(p) and p not in prim:
            prim.append(p)
    out = []
    for i, p in enumerate(prim):
        rest = prim[:i] + prim[i + 1 :]
        if not _in_cone(p, tuple(rest)):
            out.append(p)
    return tuple(sorted(out))


def _cone_key(points):
    return frozenset(_cone_extreme(points))


def _poly_key(points):
    return frozenset(extreme_points(points))


def _span_combination(coeffs, rows):
    v = (0,) * len(rows[0])
    for c, b in zip(coeffs, rows):
        v = vadd(v, vscale(c, b))
    return v


def _sublattice_in_span(lat, dirs):
    """Basis of the part of a lattice lying in the rational span of dirs."""
    lat = lattice_basis(lat)
    if not lat:
        return ()
    dirs = [tuple(d) for d in dirs if any(d)]
    if not dirs:
        return ()
    normals = kernel_basis(tuple(dirs))
    if not normals:
        return lat
    mat = tuple(tuple(dot(n, b) for b in lat) for n in normals)
    return lattice_basis([_span_combination(a, lat) for a in kernel_basis(mat)])


def _lattice_in_hyperplanes(lat, normals):
    """Basis of the lattice vectors killed by every given linear form."""
    lat = lattice_basis(lat)
    if not lat or not normals:
        return lat
    mat = tuple(tuple(dot(n, b) for b in lat) for n in normals)
    return lattice_basis([_span_combination(a, lat) for a in kernel_basis(mat)])


def _pullback_lattice(src_lat, matrix, tgt_lat):
    """{v in the source lattice : matrix . v lies in the target lattice}."""
    src_lat = lattice_basis(src_lat)
    if not src_lat:
        return ()
    images = tuple(matvec(matrix, b) for b in src_lat)
    coeff = preimage_basis(transpose(images), tgt_lat)
    return lattice_basis([_span_combination(a, src_lat) for a in coeff])


def _primitive_in(v, lat):
    """Shortest positive multiple of the ray through v lying in lat.

    v must sit in the rational span of lat.
    """
    cols = tuple(tuple(Fraction(x) for x in r) for r in transpose(lat))
    coords = rational_solve(cols, tuple(Fraction(x) for x in v))
    if coords is None:
        raise ValueError("vector outside the span of the lattice")
    den = 1
    for c in coords:
        den = lcm(den, Fraction(c).denominator)
    scaled = [int(Fraction(c) * den) for c in coords]
    g = 0
    for c in scaled:
        g = gcd(g, abs(c))
    if g > 1:
        scaled = [c // g for c in scaled]
    return _span_combination(scaled, lat)


def _cone_hrep(points, ambient):
    """Linear inequality and equation normals cutting out a cone.

    Returns (ineqs, eqs): integer rows n with n.x >= 0 on the cone, and
    rows vanishing on its span.  Intended for the small dimensions the
    reduction works in.
    """
    span = lattice_basis([p for p in points if any(p)])
    k = len(span)
    eqs = tuple(kernel_basis(span)) if span else tuple(identity(ambient))
    if k == 0:
        return (), eqs
    if k == 1:
        return (tuple(span[0]),), eqs
    ineqs = set()
    for sub in itertools.combinations(points, k - 1):
        if len(lattice_basis(sub)) != k - 1:
            continue
        mat = tuple(tuple(dot(t, b) for b in span) for t in sub)
        ker = kernel_basis(mat)
        if len(ker) != 1:
            continue
        n = _primitive(_span_combination(ker[0], span))
        vals = [dot(n, p) for p in points]
        if all(t >= 0 for t in vals) and any(t > 0 for t in vals):
            ineqs.add(n)
        elif all(t <= 0 for t in vals) and any(t < 0 for t in vals):
            ineqs.add(tuple(-x for x in n))
    return tuple(sorted(ineqs)), eqs


def _cone_vrep(ineqs, eqs, ambient):
    """Extreme rays of {x : eqs.x = 0, ineqs.x >= 0}, sorted."""
    rays = set()
    pool = tuple(ineqs)
    for size in range(0, min(len(pool), ambient) + 1):
        for sub in itertools.combinations(pool, size):
            mat = tuple(eqs) + sub
            if not mat:
                if ambient != 1:
                    continue
                ker = ((1,),)
            else:
                ker = kernel_basis(mat)
            if len(ker) != 1:
                continue
            g = _primitive(ker[0])
            for cand in (g, tuple(-x for x in g)):
                if all(dot(n, cand) >= 0 for n in pool):
                    rays.add(cand)
    return _cone_extreme(tuple(sorted(rays)))


def _cut_cone(rays, normal):
    """Split a cone by a linear hyperplane; returns the two closed sides."""
    lo = [r for r in rays if dot(normal, r) <= 0]
    hi = [r for r in rays if dot(normal, r) >= 0]
    cross = []
    for rp in rays:
        a = dot(normal, rp)
        if a <= 0:
            continue
        for rn in rays:
            b = dot(normal, rn)
            if b >= 0:
                continue
            w = vsub(vscale(a, rn), vscale(b, rp))
            if any(w):
                cross.append(_primitive(w))
    below = _cone_extreme(tuple(lo) + tuple(cross))
    above = _cone_extreme(tuple(hi) + tuple(cross))
    return below, above


def _poly_hrep(points):
    """Ambient halfspace description of a polytope.

    Returns (ineqs, eqs) with integer normals and exact offsets; the
    polytope is where every inequality n.x <= b and every equation
    n.x = b holds.
    """
    pts = [frac_point(p) for p in points]
    d = len(pts[0])
    origin, basis, _ = affine_coords(points)
    int_basis = []
    for b in basis:
        den = 1
        for x in b:
            den = lcm(den, Fraction(x).denominator)
        int_basis.append(tuple(int(Fraction(x) * den) for x in b))
    eqs = []
    ker = kernel_basis(tuple(int_basis)) if int_basis else identity(d)
    for n in ker:
        eqs.append((tuple(n), sum(a * b for a, b in zip(n, origin))))
    k = len(int_basis)
    if k == 0:
        return (), tuple(eqs)
    grads = []
    fbasis = tuple(tuple(Fraction(x) for x in b) for b in basis)
    for j in range(k):
        rhs = tuple(Fraction(1 if i == j else 0) for i in range(k))
        grads.append(rational_solve(fbasis, rhs))
    ineqs = []
    for _, n_chart, off in facets(points):
        n_amb = [Fraction(0)] * d
        for c, g in zip(n_chart, grads):
            for i in range(d):
                n_amb[i] += Fraction(c) * g[i]
        b_amb = Fraction(off) + sum(a * b for a, b in zip(n_amb, origin))
        den = 1
        for x in n_amb:
            den = lcm(den, x.denominator)
        ineqs.append((tuple(int(x * den) for x in n_amb), b_amb * den))
    return tuple(ineqs), tuple(eqs)


def _cone_face_sets(points):
    """Generator index subsets carving out every proper face of a cone.

    Includes the apex as the empty set.  The cone must be strictly
    convex for the answer to mean anything.
    """
    points = tuple(points)
    if not points:
        return set()
    k = len(lattice_basis(points))
    if len(points) == k:
        return {
            frozenset(s)
            for r in range(k)
            for s in itertools.combinations(range(len(points)), r)
        }
    ambient = len(points[0])
    ineqs, _ = _cone_hrep(points, ambient)
    facet_sets = [
        frozenset(i for i, p in enumerate(points) if dot(n, p) == 0) for n in ineqs
    ]
    faces = set(facet_sets)
    frontier = set(facet_sets)
    while frontier:
        nxt = set()
        for f in frontier:
            for g in facet_sets:
                h = f & g
                if h not in faces:
                    faces.add(h)
                    nxt.add(h)
        frontier = nxt
    faces.add(frozenset())
    faces.discard(frozenset(range(len(points))))
    return faces


def _poly_face_sets(points):
    """Vertex index subsets for every proper face of a polytope."""
    points = tuple(points)
    k = affine_dim(points)
    if k == 0:
        return set()
    if len(points) == k + 1:
        # Simplex: every proper nonempty vertex subset spans a face.
        return {
            frozenset(s)
            for r in range(1, k + 1)
            for s in itertools.combinations(range(k + 1), r)
        }
    out = set()
    for idx, _, _ in facets(points):
        fset = frozenset(idx)
        out.add(fset)
        sub = tuple(points[i] for i in sorted(fset))
        back = {p: i for i, p in enumerate(points)}
        for inner in _poly_face_sets(sub):
            out.add(frozenset(back[sub[j]] for j in inner))
    return out


class Complex:
    """A finite collection of cells together with their face records."""

    def __init__(self, kind, cells, faces=()):
        if kind not in ("conical", "polytopal"):
            raise ValueError("kind must be conical or polytopal")
        self.kind = kind
        self.cells = {}
        for c in cells:
            if c.cid in self.cells:
                raise ValueError("duplicate cell id %r" % (c.cid,))
            self.cells[c.cid] = c
        self.faces = tuple(faces)

    def cell(self, cid):
        return self.cells[cid]

    def maximal_ids(self):
        children = {r.child for r in self.faces if r.child != r.parent}
        return tuple(cid for cid in self.cells if cid not in children)

    def parent_records(self, cid):
        return tuple(r for r in self.faces if r.child == cid)

    def child_records(self, cid):
        return tuple(r for r in self.faces if r.parent == cid)

    def components(self):
        """Connected components of the face relation, as cid tuples."""
        rep = {cid: cid for cid in self.cells}

        def find(x):
            while rep[x] != x:
                rep[x] = rep[rep[x]]
                x = rep[x]
            return x

        for r in self.faces:
            a, b = find(r.child), find(r.parent)
            if a != b:
                rep[a] = b
        groups = {}
        for cid in self.cells:
            groups.setdefault(find(cid), []).append(cid)
        return tuple(tuple(g) for _, g in sorted(groups.items()))

    def component_of(self):
        """Map from cid to the index of its component."""
        out = {}
        for i, group in enumerate(self.components()):
            for cid in group:
                out[cid] = i
        return out

    def find_cell(self, points):
        """Locate a cell by its geometry, or return None."""
        keyfun = _cone_key if self.kind == "conical" else _poly_key
        key = keyfun(points) if points else frozenset()
        for c in self.cells.values():
            ck = keyfun(c.points) if c.points else frozenset()
            if ck == key:
                return c.cid
        return None

    def __repr__(self):
        return "Complex(%s, %d cells)" % (self.kind, len(self.cells))


def _face_dirs(kind, points):
    if kind == "conical":
        return tuple(points)
    return tuple(vsub(p, points[0]) for p in points[1:])


def _build_closed(kind, specs):
    """Assemble a complex from maximal cells given in shared coordinates.

    specs is a sequence of (group, points, lattice); cells glue along
    shared faces only within a group.  Returns the complex together with
    the cid of each spec in order.
    """
    entries = []
    seen = {}
    order = []
    for group, points, lat in specs:
        points = tuple(tuple(v) for v in points)
        lat = lattice_basis(lat)
        key = (group, frozenset(points))
        if key in seen:
            order.append(seen[key])
            continue
        cid = "c%d" % len(entries)
        seen[key] = cid
        entries.append((cid, group, points, lat))
        order.append(cid)

    face_geo = {}
    ambients = {}
    for cid, group, points, lat in entries:
        ambient = len(points[0]) if points else (len(lat[0]) if lat else 0)
        ambients[cid] = ambient
        sets = _cone_face_sets(points) if kind == "conical" else _poly_face_sets(points)
        for s in sets:
            fpts = tuple(sorted(points[i] for i in sorted(s)))
            fkey = (group, frozenset(fpts))
            if fkey in seen:
                continue
            dirs = _face_dirs(kind, fpts) if fpts else ()
            flat = _sublattice_in_span(lat, dirs) if fpts else ()
            if fkey in face_geo:
                if face_geo[fkey][1] != flat:
                    raise ValueError(
                        "cells disagree about the lattice along a shared face"
                    )
            else:
                face_geo[fkey] = (fpts, flat, ambient)

    cells = [
        Cell(cid, kind, points, lat, ambients[cid])
        for cid, group, points, lat in entries
    ]
    face_ids = {}
    ranked = sorted(
        face_geo.items(),
        key=lambda kv: (len(kv[1][0]), kv[1][0], str(kv[0][0])),
    )
    for fkey, (fpts, flat, ambient) in ranked:
        fid = "f%d" % len(face_ids)
        face_ids[fkey] = fid
        cells.append(Cell(fid, kind, fpts, flat, ambient))
        ambients[fid] = ambient

    all_ids = {}
    for cid, group, points, lat in entries:
        all_ids[(group, frozenset(points))] = cid
    all_ids.update(face_ids)

    recs = []
    added = set()

    def add_rec(child_id, parent_id):
        if child_id == parent_id or (child_id, parent_id) in added:
            return
        added.add((child_id, parent_id))
        amb = ambients[parent_id]
        recs.append(FaceRec(child_id, parent_id, identity(amb), (0,) * amb))

    keys_by_group = {}
    for (group, pset) in all_ids:
        keys_by_group.setdefault(group, []).append(pset)
    for group, psets in keys_by_group.items():
        for a in psets:
            for b in psets:
                if a != b and a < b:
                    add_rec(all_ids[(group, a)], all_ids[(group, b)])
    return Complex(kind, cells, recs), tuple(order)


def build_complex(kind, pieces, lattices=None, groups=None):
    """Closure of maximal cells given in shared coordinates.

    pieces holds one point tuple per maximal cell; lattices defaults to
    the saturated span of each piece, and groups (a single one when
    omitted) controls which pieces may share faces.
    """
    specs = []
    for i, pts in enumerate(pieces):
        pts = tuple(tuple(v) for v in pts)
        if lattices is not None and lattices[i] is not None:
            lat = tuple(tuple(v) for v in lattices[i])
        else:
            dirs = _face_dirs(kind, pts) if pts else ()
            lat = saturation(lattice_basis(dirs)) if dirs else ()
        g = groups[i] if groups is not None else 0
        specs.append((g, pts, lat))
    comp, _ = _build_closed(kind, specs)
    return comp


def disjoint_union(parts):
    """Side by side union of complexes; cell ids gain a part prefix."""
    kinds = {p.kind for p in parts}
    if len(kinds) != 1:
        raise ValueError("cannot mix conical and polytopal parts")
    cells = []
    recs = []
    for i, part in enumerate(parts):
        for c in part.cells.values():
            cells.append(c._replace(cid="%d:%s" % (i, c.cid)))
        for r in part.faces:
            recs.append(
                FaceRec(
                    "%d:%s" % (i, r.child), "%d:%s" % (i, r.parent), r.matrix, r.offset
                )
            )
    return Complex(parts[0].kind, cells, recs)


class ComplexMap:
    """A per cell assignment of affine maps into cells of a target complex."""

    def __init__(self, source, target, assign):
        self.source = source
        self.target = target
        norm = {}
        for cid, entry in assign.items():
            if len(entry) == 2:
                tcid, mat = entry
                off = None
            else:
                tcid, mat, off = entry
            mat = tuple(tuple(r) for r in mat)
            if off is None:
                off = (0,) * len(mat)
            norm[cid] = (tcid, mat, tuple(off))
        self.assign = norm

    def target_of(self, cid):
        return self.assign[cid][0]

    def apply(self, cid, x):
        _, mat, off = self.assign[cid]
        return vadd(matvec(mat, x), off)

    def linear(self, cid, x):
        return matvec(self.assign[cid][1], x)

    def __repr__(self):
        return "ComplexMap(%d cells)" % len(self.assign)


def _carrier(comp, points, scale=1, restrict=None):
    """Cid of the smallest cell containing all the points, or None.

    Containment is tested against cell geometry dilated by scale, so
    subdivision data of a dilated complex can be matched to its source.
    """
    candidates = [
        c for c in comp.cells.values() if restrict is None or c.cid in restrict
    ]
    candidates.sort(key=lambda c: (cell_dim(c), c.cid))
    for c in candidates:
        geom = tuple(vscale(scale, p) for p in c.points)
        if comp.kind == "conical":
            if all(_in_cone(p, geom) for p in points):
                return c.cid
        else:
            if geom and all(in_hull(p, geom) for p in points):
                return c.cid
    return None


def map_with_matrix(source, target, matrix, offset=None):
    """Build a map from one global affine rule, assigning smallest targets."""
    matrix = tuple(tuple(r) for r in matrix)
    if offset is None:
        offset = (0,) * len(matrix)
    assign = {}
    for cid, c in source.cells.items():
        imgs = [vadd(matvec(matrix, p), offset) for p in c.points]
        if source.kind == "conical":
            imgs.append((0,) * len(matrix))
        tcid = _carrier(target, imgs)
        if tcid is None:
            raise ValueError("image of cell %r misses the target complex" % (cid,))
        assign[cid] = (tcid, matrix, offset)
    return ComplexMap(source, target, assign)


class Alteration:
    """A subdivision with lattice refinement of a complex.

    Result cells live in the coordinates of their parents; parent sends
    every result cid to the smallest source cell carrying it.  heights,
    when present, witness projectivity per source maximal cell; scale
    records the dilation applied to polytopal geometry before
    subdividing.
    """

    def __init__(self, source, result, parent, heights=None, scale=1):
        self.source = source
        self.result = result
        self.parent = dict(parent)
        self.heights = heights
        self.scale = scale

    def cells_over(self, source_cid):
        """Maximal result cells lying over the given source cell."""
        maxi = set(self.result.maximal_ids())
        return tuple(
            cid
            for cid in self.result.cells
            if cid in maxi and self.parent[cid] == source_cid
        )

    def __repr__(self):
        return "Alteration(%d -> %d cells)" % (
            len(self.source.cells),
            len(self.result.cells),
        )


def identity_alteration(comp):
    return Alteration(comp, comp, {cid: cid for cid in comp.cells})


def compose_alterations(second, first):
    """Compose an alteration of first.result with first; heights are dropped."""
    parent = {cid: first.parent[second.parent[cid]] for cid in second.result.cells}
    return Alteration(
        first.source,
        second.result,
        parent,
        heights=None,
        scale=first.scale * second.scale,
    )


def _assemble_alteration(kind, source, pieces, heights=None, scale=1, want_order=False):
    """Close a family of (points, lattice, source_cid) pieces over a source.

    Pieces inherit the component of their source cell as glue group; face
    cells receive the smallest source cell containing them as parent.
    """
    comp_index = source.component_of()
    specs = [(comp_index[src], pts, lat) for (pts, lat, src) in pieces]
    result, order = _build_closed(kind, specs)
    parent = {}
    for (pts, lat, src), cid in zip(pieces, order):
        parent.setdefault(cid, src)
    containers = {}
    for r in result.faces:
        containers.setdefault(r.child, []).append(r.parent)
    down = {}
    for r in source.faces:
        down.setdefault(r.parent, set()).add(r.child)
    closures = {}

    def closure(scid):
        got = closures.get(scid)
        if got is None:
            got = {scid}
            stack = [scid]
            while stack:
                for child in down.get(stack.pop(), ()):
                    if child not in got:
                        got.add(child)
                        stack.append(child)
            closures[scid] = got
        return got

    # Work down the dimensions so every face cell sees an assigned
    # container; its carrier is then a face of that container's carrier,
    # which keeps the search local.
    for cid in sorted(result.cells, key=lambda c: -cell_dim(result.cells[c])):
        if cid in parent:
            continue
        cell = result.cells[cid]
        pts = cell.points if cell.points else ((0,) * cell.ambient,)
        anc = next((p for p in containers.get(cid, ()) if p in parent), None)
        carrier = None
        if anc is not None:
            carrier = _carrier(source, pts, scale=scale, restrict=closure(parent[anc]))
        if carrier is None:
            carrier = _carrier(source, pts, scale=scale)
        if carrier is None:
            raise AssertionFailed("refinement cell %r escapes its source" % (cid,), cid)
        parent[cid] = carrier
    alt = Alteration(source, result, parent, heights=heights, scale=scale)
    if want_order:
        return alt, order
    return alt


def _require_shared_coordinates(comp):
    for r in comp.faces:
        amb = len(r.offset)
        if r.matrix != identity(amb) or any(r.offset):
            raise ValueError(
                "this operation expects cells presented in shared coordinates"
            )


def _is_regular(cell):
    k = cell_dim(cell)
    if cell.kind == "polytopal":
        if len(cell.points) != k + 1:
            return False
        if k == 0:
            return True
        return simplex_normalized_volume(cell.points, cell.lattice) == 1
    if len(cell.points) != k:
        return False
    if k == 0:
        return True
    span = lattice_basis(cell.points)
    if len(span) != k:
        return False
    return lattice_index(span, cell.lattice) == 1


# ---------------------------------------------------------------------------
# validation


def validate(comp):
    """Check every structural invariant of a complex, returning a Report."""
    bad = []
    cell_ok = {}
    for cid, c in comp.cells.items():
        ok = True
        if c.kind != comp.kind:
            bad.append("cell %r: kind %r differs from the complex" % (cid, c.kind))
            ok = False
        for p in c.points:
            if len(p) != c.ambient or not all(isinstance(x, int) for x in p):
                bad.append(
                    "cell %r: point %r is not an integer ambient vector" % (cid, p)
                )
                ok = False
        for b in c.lattice:
            if len(b) != c.ambient or not all(isinstance(x, int) for x in b):
                bad.append("cell %r: lattice row %r is malformed" % (cid, b))
                ok = False
        if not ok:
            cell_ok[cid] = False
            continue
        if len(lattice_basis(c.lattice)) != len(c.lattice):
            bad.append("cell %r: lattice rows are dependent" % (cid,))
            ok = False
        if comp.kind == "conical":
            if any(not any(p) for p in c.points):
                bad.append("cell %r: zero generator" % (cid,))
                ok = False
            elif c.points and in_hull((0,) * c.ambient, c.points):
                bad.append(
                    "cell %r: generators span a line through the origin" % (cid,)
                )
                ok = False
            if ok and len(lattice_basis(c.points)) != cell_dim(c):
                bad.append(
                    "cell %r: lattice rank differs from the cone dimension" % (cid,)
                )
                ok = False
            if ok and any(not in_lattice(p, c.lattice) for p in c.points):
                bad.append("cell %r: generator outside the cell lattice" % (cid,))
                ok = False
        else:
            if not c.points:
                bad.append("cell %r: polytope with no vertices" % (cid,))
                ok = False
            elif len(set(c.points)) != len(c.points):
                bad.append("cell %r: repeated vertex" % (cid,))
                ok = False
            elif affine_dim(c.points) != cell_dim(c):
                bad.append(
                    "cell %r: lattice rank differs from the polytope dimension"
                    % (cid,)
                )
                ok = False
            elif any(
                not in_lattice(vsub(p, c.points[0]), c.lattice) for p in c.points[1:]
            ):
                bad.append(
                    "cell %r: vertex difference outside the cell lattice" % (cid,)
                )
                ok = False
        cell_ok[cid] = ok

    by_pair = {}
    for r in comp.faces:
        if r.child not in comp.cells or r.parent not in comp.cells:
            bad.append(
                "face record %r -> %r names a missing cell" % (r.child, r.parent)
            )
            continue
        child = comp.cells[r.child]
        parent = comp.cells[r.parent]
        if not (cell_ok.get(r.child) and cell_ok.get(r.parent)):
            continue
        if len(r.matrix) != parent.ambient or any(
            len(row) != child.ambient for row in r.matrix
        ):
            bad.append(
                "face %r -> %r: embedding matrix has the wrong shape"
                % (r.child, r.parent)
            )
            continue
        if len(r.offset) != parent.ambient:
            bad.append(
                "face %r -> %r: offset has the wrong length" % (r.child, r.parent)
            )
            continue
        if comp.kind == "conical" and any(r.offset):
            bad.append(
                "face %r -> %r: cone embeddings must be linear" % (r.child, r.parent)
            )
            continue
        img_lat = tuple(matvec(r.matrix, b) for b in child.lattice)
        if len(lattice_basis(img_lat)) != len(child.lattice):
            bad.append(
                "face %r -> %r: embedding is not injective" % (r.child, r.parent)
            )
            continue
        imgs = [vadd(matvec(r.matrix, p), r.offset) for p in child.points]
        if comp.kind == "conical":
            inside = all(_in_cone(p, parent.points) for p in imgs)
        else:
            inside = all(in_hull(p, parent.points) for p in imgs)
        if not inside:
            bad.append(
                "face %r -> %r: image leaves the parent cell" % (r.child, r.parent)
            )
            continue
        expected = _sublattice_in_span(parent.lattice, img_lat)
        if lattice_basis(img_lat) != expected:
            bad.append(
                "face %r -> %r: child lattice is not the parent lattice on its span"
                % (r.child, r.parent)
            )
        by_pair[(r.child, r.parent)] = r

    for (a, b), r1 in by_pair.items():
        for (c0, d), r2 in by_pair.items():
            if c0 != b or a == d:
                continue
            comp_mat = transpose(
                tuple(matvec(r2.matrix, col) for col in transpose(r1.matrix))
            )
            comp_off = vadd(matvec(r2.matrix, r1.offset), r2.offset)
            found = by_pair.get((a, d))
            if found is None or found.matrix != comp_mat or found.offset != comp_off:
                bad.append(
                    "faces %r -> %r -> %r do not compose to a registered record"
                    % (a, b, d)
                )

    for cid, c in comp.cells.items():
        if not cell_ok.get(cid):
            continue
        sets = (
            _cone_face_sets(c.points)
            if comp.kind == "conical"
            else _poly_face_sets(c.points)
        )
        keyfun = _cone_key if comp.kind == "conical" else _poly_key
        have = set()
        for r in comp.faces:
            if r.parent != cid or r.child not in comp.cells:
                continue
            child = comp.cells[r.child]
            imgs = tuple(vadd(matvec(r.matrix, p), r.offset) for p in child.points)
            have.add(keyfun(imgs) if imgs else frozenset())
        for s in sets:
            fpts = tuple(c.points[i] for i in sorted(s))
            want = keyfun(fpts) if fpts else frozenset()
            if want not in have:
                bad.append(
                    "cell %r: face %r is not registered as a cell"
                    % (cid, tuple(sorted(fpts)))
                )
    return Report(bad)


def validate_map(fmap):
    """Check that a cell assignment is a map of complexes, returning a Report."""
    bad = []
    src, tgt = fmap.source, fmap.target
    for cid, c in src.cells.items():
        if cid not in fmap.assign:
            bad.append("cell %r has no assignment" % (cid,))
            continue
        tcid, mat, off = fmap.assign[cid]
        if tcid not in tgt.cells:
            bad.append("cell %r: target %r does not exist" % (cid, tcid))
            continue
        t = tgt.cells[tcid]
        if len(mat) != t.ambient or any(len(row) != c.ambient for row in mat):
            bad.append("cell %r: matrix shape does not fit its cells" % (cid,))
            continue
        if src.kind == "conical" and any(off):
            bad.append("cell %r: maps of cones must be linear" % (cid,))
            continue
        for b in c.lattice:
            img = matvec(mat, b)
            if not in_lattice(img, t.lattice):
                bad.append(
                    "cell %r: lattice image %r leaves the target lattice" % (cid, img)
                )
                break
        imgs = [vadd(matvec(mat, p), off) for p in c.points]
        if tgt.kind == "conical":
            inside = all(_in_cone(p, t.points) for p in imgs)
        else:
            inside = all(in_hull(p, t.points) for p in imgs) if t.points else not imgs
        if not inside:
            bad.append("cell %r: image leaves its target cell %r" % (cid, tcid))
    for r in src.faces:
        if r.child not in fmap.assign or r.parent not in fmap.assign:
            continue
        _, mc, oc = fmap.assign[r.child]
        _, mp, op = fmap.assign[r.parent]
        child = src.cells[r.child]
        agree = all(
            vadd(matvec(mc, p), oc)
            == vadd(matvec(mp, vadd(matvec(r.matrix, p), r.offset)), op)
            for p in child.points
        ) and all(
            matvec(mc, b) == matvec(mp, matvec(r.matrix, b)) for b in child.lattice
        )
        if not agree:
            bad.append(
                "map restricted to face %r disagrees with the map on %r"
                % (r.child, r.parent)
            )
    return Report(bad)


# ---------------------------------------------------------------------------
# barycentric subdivision


def _face_lists(kind, points):
    """Proper faces plus the cell itself, as point tuples.

    The apex of a cone is left out; polytopes list faces down to their
    vertices.
    """
    points = tuple(points)
    if kind == "conical":
        sets = {s for s in _cone_face_sets(points) if s}
    else:
        sets = _poly_face_sets(points)
    sets.add(frozenset(range(len(points))))
    faces = [tuple(points[i] for i in sorted(s)) for s in sets]
    if kind == "conical":
        return sorted(faces, key=lambda f: (len(lattice_basis(f)), sorted(f)))
    return sorted(faces, key=lambda f: (affine_dim(f), sorted(f)))


def _flags(kind, points):
    """All complete flags of faces, each listed from smallest to largest."""
    points = tuple(points)
    faces = _face_lists(kind, points)

    def fdim(f):
        return len(lattice_basis(f)) if kind == "conical" else affine_dim(f)

    by_dim = {}
    for f in faces:
        by_dim.setdefault(fdim(f), []).append(f)
    top = fdim(points)
    floor = 1 if kind == "conical" else 0

    def chains(face, d):
        if d == floor:
            return [[face]]
        out = []
        for g in by_dim.get(d - 1, []):
            if set(g) <= set(face):
                for chain in chains(g, d - 1):
                    out.append(chain + [face])
        return out

    if top < floor:
        return [[]]
    return chains(points, top)


def barycentric(comp):
    """Flag subdivision; polytopal geometry is dilated to keep it integral.

    Each new maximal cell lists one vertex per face of a complete flag,
    ordered by the dimension of the face it came from.  Heights
    witnessing projectivity are produced for every source maximal cell.
    """
    _require_shared_coordinates(comp)
    maxi = comp.maximal_ids()
    scale = 1
    if comp.kind == "polytopal":
        dens = [1]
        for cid in maxi:
            cell = comp.cells[cid]
            if not cell.lattice:
                continue
            chart = tuple(tuple(Fraction(x) for x in b) for b in transpose(cell.lattice))
            for face in _face_lists("polytopal", cell.points):
                verts = extreme_points(face)
                mean = tuple(
                    Fraction(sum(v[t] for v in verts), len(verts))
                    for t in range(len(verts[0]))
                )
                delta = tuple(m - Fraction(v) for m, v in zip(mean, verts[0]))
                coords = rational_solve(chart, delta)
                if coords is None:
                    raise AssertionFailed("a barycenter escapes its cell lattice span")
                for x in coords:
                    dens.append(Fraction(x).denominator)
        scale = lcm(*dens)

    centers = {}

    def center(face, lat):
        key = frozenset(face)
        if key not in centers:
            if comp.kind == "conical":
                b = (0,) * len(face[0])
                for r in _cone_extreme(face):
                    b = vadd(b, _primitive_in(r, lat))
                centers[key] = b
            else:
                verts = extreme_points(face)
                out = []
                for t in range(len(verts[0])):
                    q = Fraction(scale * sum(v[t] for v in verts), len(verts))
                    if q.denominator != 1:
                        raise AssertionFailed("dilation failed to clear a barycenter")
                    out.append(int(q))
                centers[key] = tuple(out)
        return centers[key]

    pieces = []
    for cid in maxi:
        cell = comp.cells[cid]
        if not cell.points:
            pieces.append(((), (), cid))
            continue
        for flag in _flags(comp.kind, cell.points):
            verts = tuple(center(f, cell.lattice) for f in flag)
            if comp.kind == "conical":
                lat = _sublattice_in_span(cell.lattice, verts)
            else:
                lat = _sublattice_in_span(
                    cell.lattice, tuple(vsub(v, verts[0]) for v in verts[1:])
                )
            pieces.append((verts, lat, cid))
    alt = _assemble_alteration(comp.kind, comp, pieces, scale=scale)

    heights = None
    for t in range(2, 64):
        trial = {}
        good = True
        for cid in maxi:
            cell = comp.cells[cid]
            hmap = {}
            if comp.kind == "conical":
                hmap[(0,) * cell.ambient] = Fraction(0)
            if not cell.points:
                trial[cid] = hmap
                continue
            for face in _face_lists(comp.kind, cell.points):
                fdim = (
                    len(lattice_basis(face))
                    if comp.kind == "conical"
                    else affine_dim(face)
                )
                hmap[center(face, cell.lattice)] = Fraction(-(t**fdim))
            trial[cid] = hmap
            cells_here = []
            for rcid in alt.cells_over(cid):
                pts = alt.result.cells[rcid].points
                if not pts:
                    continue
                if comp.kind == "conical":
                    pts = pts + ((0,) * cell.ambient,)
                cells_here.append(pts)
            if cells_here and not is_lower_envelope(cells_here, hmap):
                good = False
                break
        if good:
            heights = trial
            break
    if heights is None:
        raise AssertionFailed("no height certificate found for the flag subdivision")
    alt.heights = heights
    return alt


# ---------------------------------------------------------------------------
# base change


def _pl_height(alt, source_cid, point):
    """Value at a point of the piecewise linear heights of an alteration."""
    if not alt.heights or source_cid not in alt.heights:
        return None
    h = alt.heights[source_cid]
    for rcid in alt.cells_over(source_cid):
        cell = alt.result.cells[rcid]
        pts = cell.points
        if not pts:
            continue
        if alt.source.kind == "conical":
            if not _in_cone(point, pts):
                continue
            pts = pts + ((0,) * cell.ambient,)
        else:
            if not in_hull(point, pts):
                continue
        if any(p not in h for p in pts):
            continue
        _, basis, coords = affine_coords(pts)
        rows = [list(c) + [Fraction(1)] for c in coords]
        rhs = [Fraction(h[p]) for p in pts]
        sol = rational_solve(rows, rhs)
        if sol is None:
            continue
        origin = frac_point(pts[0])
        delta = tuple(Fraction(a) - b for a, b in zip(frac_point(point), origin))
        cvec = rational_solve(
            tuple(tuple(Fraction(b[i]) for b in basis) for i in range(len(origin))),
            delta,
        )
        if cvec is None:
            continue
        return sum(a * b for a, b in zip(sol[:-1], cvec)) + sol[-1]
    return None


def base_change(fmap, base_alt):
    """Pull a map back along an alteration of its target.

    Returns the induced alteration of the source together with the new
    map.  Polytopal sources whose induced subdivision has vertices off
    the lattice raise NotLattice; heights on the base transport to the
    source when present.
    """
    _require_shared_coordinates(fmap.source)
    _require_shared_coordinates(base_alt.result)
    src = fmap.source
    scale = base_alt.scale
    b_comp_of = base_alt.source.component_of()
    result_comp = {
        rcid: b_comp_of[base_alt.parent[rcid]] for rcid in base_alt.result.cells
    }
    new_max = base_alt.result.maximal_ids()
    pieces = []
    piece_targets = {}
    witnesses = []
    for cid in src.maximal_ids():
        cell = src.cells[cid]
        tcid, mat, off = fmap.assign[cid]
        comp = b_comp_of[tcid]
        eff_off = vscale(scale, off)
        if src.kind == "conical":
            found = set()
            s_ineq, s_eq = _cone_hrep(cell.points, cell.ambient)
            cols = transpose(mat)
            for rcid in new_max:
                if result_comp[rcid] != comp:
                    continue
                rcell = base_alt.result.cells[rcid]
                t_ineq, t_eq = _cone_hrep(rcell.points, rcell.ambient)
                pulled_i = tuple(tuple(dot(n, c0) for c0 in cols) for n in t_ineq)
                pulled_e = tuple(tuple(dot(n, c0) for c0 in cols) for n in t_eq)
                rays = _cone_vrep(s_ineq + pulled_i, s_eq + pulled_e, cell.ambient)
                if len(lattice_basis(rays)) != cell_dim(cell):
                    continue
                lat = _pullback_lattice(cell.lattice, mat, rcell.lattice)
                rays = tuple(sorted(_primitive_in(r, lat) for r in rays))
                key = frozenset(rays)
                if key in found:
                    continue
                found.add(key)
                pieces.append((rays, lat, cid))
                piece_targets[(cid, key)] = (mat, (0,) * len(mat))
        else:
            geom = tuple(vscale(scale, p) for p in cell.points)
            found = set()
            cols = transpose(mat)
            for rcid in new_max:
                if result_comp[rcid] != comp:
                    continue
                rcell = base_alt.result.cells[rcid]
                ineqs, eqs = _poly_hrep(rcell.points)
                piece = tuple(frac_point(p) for p in geom)
                dead = False
                for n, b in ineqs:
                    pulled = tuple(dot(n, c0) for c0 in cols)
                    shift = b - sum(a * o for a, o in zip(n, eff_off))
                    piece, _ = cut_by_hyperplane(piece, pulled, shift)
                    if not piece:
                        dead = True
                        break
                if not dead:
                    for n, b in eqs:
                        pulled = tuple(dot(n, c0) for c0 in cols)
                        shift = b - sum(a * o for a, o in zip(n, eff_off))
                        piece, _ = cut_by_hyperplane(piece, pulled, shift)
                        if piece:
                            _, piece = cut_by_hyperplane(piece, pulled, shift)
                        if not piece:
                            dead = True
                            break
                if dead:
                    continue
                dirs = [vsub(p, piece[0]) for p in piece[1:]]
                if _qrank(dirs) != cell_dim(cell):
                    continue
                verts = []
                fail = False
                for p in extreme_points(piece):
                    fp = frac_point(p)
                    if any(x.denominator != 1 for x in fp):
                        witnesses.append((cid, tuple(fp)))
                        fail = True
                        break
                    verts.append(tuple(int(x) for x in fp))
                if fail:
                    continue
                verts = tuple(sorted(verts))
                lat = _pullback_lattice(cell.lattice, mat, rcell.lattice)
                bad_vertex = None
                for p in verts[1:]:
                    if not in_lattice(vsub(p, verts[0]), lat):
                        bad_vertex = p
                        break
                if bad_vertex is not None:
                    witnesses.append((cid, bad_vertex))
                    continue
                if frozenset(verts) not in found:
                    found.add(frozenset(verts))
                    pieces.append((verts, lat, cid))
                    piece_targets[(cid, frozenset(verts))] = (mat, eff_off)
    if witnesses:
        raise NotLattice(
            "induced subdivision leaves the lattice at %d vertices" % len(witnesses),
            witnesses,
        )
    alt, order = _assemble_alteration(
        src.kind, src, pieces, scale=scale, want_order=True
    )
    if base_alt.heights is not None:
        heights = {}
        for cid in src.maximal_ids():
            cell = src.cells[cid]
            hmap = {}
            if src.kind == "conical":
                hmap[(0,) * cell.ambient] = Fraction(0)
            for (pts, lat, owner) in pieces:
                if owner != cid:
                    continue
                mat, off = piece_targets[(cid, frozenset(pts))]
                for v in pts:
                    if v in hmap:
                        continue
                    img = vadd(matvec(mat, v), off)
                    val = None
                    for bcid in base_alt.source.maximal_ids():
                        val = _pl_height(base_alt, bcid, img)
                        if val is not None:
                            break
                    if val is None:
                        raise AssertionFailed(
                            "no transported height for vertex %r" % (v,), cid
                        )
                    hmap[v] = val
            heights[cid] = hmap
        alt.heights = heights
    owner_of = {}
    for (pts, lat, owner), rcid in zip(pieces, order):
        owner_of[rcid] = (owner, frozenset(pts))
    assign = {}
    for rcid, c2 in alt.result.cells.items():
        if rcid in owner_of:
            owner, key = owner_of[rcid]
            mat, off = piece_targets[(owner, key)]
        else:
            mat = off = None
            for r in alt.result.faces:
                if r.child == rcid and r.parent in owner_of:
                    owner, key = owner_of[r.parent]
                    mat, off = piece_targets[(owner, key)]
                    break
            if mat is None:
                owner0 = alt.parent[rcid]
                entry = fmap.assign.get(owner0)
                if entry is None:
                    entry = fmap.assign[src.maximal_ids()[0]]
                _, mat, off0 = entry
                off = vscale(scale, off0)
        imgs = [vadd(matvec(mat, p), off) for p in c2.points]
        if not imgs:
            imgs = [(0,) * len(mat)]
        tcid2 = _carrier(base_alt.result, imgs)
        if tcid2 is None:
            raise AssertionFailed("image of %r misses the refined base" % (rcid,), rcid)
        assign[rcid] = (tcid2, mat, off)
    return alt, ComplexMap(alt.result, base_alt.result, assign)


# ---------------------------------------------------------------------------
# goodness


def _transverse_hyperplanes(face, dirs, k, n, ambient, kind):
    """Hyperplanes through a face of an image, enough to carve it out."""
    span = lattice_basis(dirs) if dirs else ()
    normals = kernel_basis(span) if span else identity(ambient)
    need = n - k
    if kind == "conical":
        return [(tuple(nrm), 0) for nrm in normals[:need]]
    base = face[0]
    return [
        (tuple(nrm), sum(a * b for a, b in zip(nrm, base))) for nrm in normals[:need]
    ]


def make_good(fmap):
    """Refine the target until every cell image is a union of cells.

    Returns (c, target alteration, source alteration, new map) where c is
    the dilation that cleared fractional cut vertices.  The heights on
    the refined target sum the distances to the cutting hyperplanes.
    """
    _require_shared_coordinates(fmap.source)
    _require_shared_coordinates(fmap.target)
    tgt = fmap.target
    planes_by_cell = {tcid: [] for tcid in tgt.maximal_ids()}
    for cid, cell in fmap.source.cells.items():
        tcid, mat, off = fmap.assign[cid]
        imgs = tuple(vadd(matvec(mat, p), off) for p in cell.points)
        if not imgs:
            continue
        for face in _face_lists(tgt.kind, imgs):
            if tgt.kind == "conical":
                k = len(lattice_basis(face))
                dirs = tuple(face)
            else:
                k = affine_dim(face)
                dirs = tuple(vsub(p, face[0]) for p in face[1:])
            for owner in tgt.maximal_ids():
                ocell = tgt.cells[owner]
                n = cell_dim(ocell)
                if k >= n:
                    continue
                for plane in _transverse_hyperplanes(
                    face, dirs, k, n, ocell.ambient, tgt.kind
                ):
                    if plane not in planes_by_cell[owner]:
                        planes_by_cell[owner].append(plane)
    raw = {}
    dens = [1]
    for tcid in tgt.maximal_ids():
        cell = tgt.cells[tcid]
        if tgt.kind == "conical":
            parts = [cell.points]
            for nrm, _ in planes_by_cell[tcid]:
                nxt = []
                for piece in parts:
                    for side in _cut_cone(piece, nrm):
                        if len(lattice_basis(side)) == cell_dim(cell) and frozenset(
                            side
                        ) not in {frozenset(q) for q in nxt}:
                            nxt.append(side)
                parts = nxt or parts
        else:
            parts = [tuple(frac_point(p) for p in cell.points)]
            for nrm, offv in planes_by_cell[tcid]:
                nxt = []
                for piece in parts:
                    below, above = cut_by_hyperplane(piece, nrm, offv)
                    for side in (below, above):
                        if side and _qrank(
                            [vsub(p, side[0]) for p in side[1:]]
                        ) == cell_dim(cell):
                            if frozenset(side) not in {frozenset(q) for q in nxt}:
                                nxt.append(tuple(side))
                parts = nxt or parts
            for piece in parts:
                for p in piece:
                    for x in frac_point(p):
                        dens.append(x.denominator)
        raw[tcid] = parts
    c = lcm(*dens)

    def build(scale_factor):
        pieces = []
        heights = {}
        for tcid in tgt.maximal_ids():
            cell = tgt.cells[tcid]
            hmap = {}
            if tgt.kind == "conical":
                hmap[(0,) * cell.ambient] = Fraction(0)
            for piece in raw[tcid]:
                if tgt.kind == "conical":
                    verts = piece
                    lat = _sublattice_in_span(cell.lattice, verts)
                else:
                    verts = tuple(
                        sorted(
                            tuple(
                                int(Fraction(x) * scale_factor) for x in frac_point(p)
                            )
                            for p in piece
                        )
                    )
                    lat = (
                        _sublattice_in_span(
                            cell.lattice,
                            tuple(vsub(p, verts[0]) for p in verts[1:]),
                        )
                        if len(verts) > 1
                        else ()
                    )
                pieces.append((verts, lat, tcid))
                for v in verts:
                    if v not in hmap:
                        total = Fraction(0)
                        for nrm, offv in planes_by_cell[tcid]:
                            total += abs(
                                sum(a * b for a, b in zip(nrm, v))
                                - Fraction(offv) * scale_factor
                            )
                        hmap[v] = total
            heights[tcid] = hmap
        return _assemble_alteration(
            tgt.kind, tgt, pieces, heights=heights, scale=scale_factor
        )

    alt_t = build(c)
    try:
        alt_s, f2 = base_change(fmap, alt_t)
    except NotLattice as err:
        extra = [1]
        for _, vert in err.witnesses:
            for x in frac_point(vert):
                extra.append(Fraction(x).denominator)
        c = c * lcm(*extra)
        alt_t = build(c)
        alt_s, f2 = base_change(fmap, alt_t)
    return c, alt_t, alt_s, f2


# ---------------------------------------------------------------------------
# dilation of a regular base


def scale_base(comp, c):
    """Dilate the lattice of a regular conical complex and resubdivide.

    The requested factor is rounded up to the least multiple exceeding
    the top cell dimension, each maximal cone is resectioned by the
    canonical triangulation of the dilated cross section simplex, and a
    stellar pass restores regularity with respect to the new lattice.
    """
    if comp.kind != "conical":
        raise ValueError("only conical complexes can be rescaled this way")
    _require_shared_coordinates(comp)
    if c < 1:
        raise ValueError("the dilation factor must be positive")
    for cid in comp.maximal_ids():
        if not _is_regular(comp.cells[cid]):
            raise RegularityRequired("cell %r is not regular" % (cid,))
    maxdim = max((cell_dim(comp.cells[cid]) for cid in comp.maximal_ids()), default=0)
    c_eff = c
    while c_eff < maxdim + 1:
        c_eff += c
    pieces = []
    for cid in comp.maximal_ids():
        cell = comp.cells[cid]
        new_lat = tuple(vscale(c_eff, b) for b in cell.lattice)
        if not cell.points:
            pieces.append(((), (), cid))
            continue
        if len(cell.points) == 1:
            pieces.append(((vscale(c_eff, cell.points[0]),), new_lat, cid))
            continue
        for sub in stcan(cell.points, c_eff):
            rays = tuple(_primitive_in(v, new_lat) for v in sub)
            pieces.append((rays, new_lat, cid))
    alt1 = _assemble_alteration("conical", comp, pieces)
    alt2 = resolve_cones(alt1.result)
    return compose_alterations(alt2, alt1)


# ---------------------------------------------------------------------------
# stellar resolution


def _triangulate_cone_points(points):
    """Deterministic fan of simplicial subcones covering a cone."""
    rays = _cone_extreme(points)
    k = len(lattice_basis(rays))
    if len(rays) == k:
        return [rays]
    apex = rays[0]
    out = []
    for s in _cone_face_sets(rays):
        face = tuple(rays[i] for i in sorted(s))
        if len(lattice_basis(face)) != k - 1 or apex in face:
            continue
        if _in_cone(apex, face):
            continue
        for piece in _triangulate_cone_points(face):
            out.append(piece + (apex,))
    return out


def _cone_cell_index(points, lat):
    prim = tuple(_primitive_in(p, lat) for p in points)
    span = lattice_basis(prim)
    if len(span) != len(points):
        raise ValueError("index of a non simplicial cone requested")
    return lattice_index(span, _sublattice_in_span(lat, prim)), prim


def _parallelepiped_witness(gens, lat):
    """The canonical interior lattice point of the half open box of gens.

    Minimizes the total barycentric weight with the weight tuple as tie
    break; None when the box holds no nonzero lattice point.
    """
    d = len(gens[0])
    lo = [sum(min(0, g[t]) for g in gens) for t in range(d)]
    hi = [sum(max(0, g[t]) for g in gens) for t in range(d)]
    mat = tuple(tuple(Fraction(g[t]) for g in gens) for t in range(d))
    best = None
    for p in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        if not any(p) or not in_lattice(p, lat):
            continue
        lam = rational_solve(mat, tuple(Fraction(x) for x in p))
        if lam is None or any(x < 0 or x >= 1 for x in lam):
            continue
        key = (sum(lam), tuple(lam))
        if best is None or key < best[0]:
            best = (key, p)
    return None if best is None else best[1]


def resolve_cones(comp):
    """Stellar subdivision until every cone is unimodular in its lattice.

    The cone of largest index is split at the canonical box point of its
    generators; the new ray goes last in each subdivided cone.  The rule
    is local, so disjoint parts resolve independently.
    """
    if comp.kind != "conical":
        raise ValueError("only conical complexes carry stellar resolutions")
    _require_shared_coordinates(comp)
    comp_of = comp.component_of()
    work = []
    for cid in comp.maximal_ids():
        cell = comp.cells[cid]
        if not cell.points:
            work.append(((), (), cid))
            continue
        for piece in _triangulate_cone_points(cell.points):
            prim = tuple(_primitive_in(p, cell.lattice) for p in piece)
            work.append((prim, cell.lattice, cid))
    for _ in range(10000):
        worst = None
        for i, (pts, lat, src) in enumerate(work):
            if not pts:
                continue
            ind, prim = _cone_cell_index(pts, lat)
            if ind > 1:
                key = (-ind, tuple(sorted(pts)))
                if worst is None or key < worst[0]:
                    worst = (key, i, prim, lat, comp_of[src])
        if worst is None:
            break
        _, i, prim, lat, group = worst
        w = _parallelepiped_witness(prim, _sublattice_in_span(lat, prim))
        if w is None:
            raise AssertionFailed("a singular cone produced no box point", work[i][2])
        nxt = []
        for pts, clat, src in work:
            if pts and comp_of[src] == group and _in_cone(w, pts):
                wp = _primitive_in(w, clat)
                mat = tuple(tuple(Fraction(g[t]) for g in pts) for t in range(len(w)))
                lam = rational_solve(mat, tuple(Fraction(x) for x in w))
                for j, l in enumerate(lam):
                    if l > 0:
                        rays = tuple(p for t, p in enumerate(pts) if t != j) + (wp,)
                        nxt.append((rays, clat, src))
            else:
                nxt.append((pts, clat, src))
        work = nxt
    else:
        raise AssertionFailed("stellar resolution did not terminate")
    return _assemble_alteration("conical", comp, list(work))


# ---------------------------------------------------------------------------
# vertical and horizontal parts


def split_vertical_horizontal(fmap):
    """Split each cone along the rays its map kills.

    Returns the vertical complex, the horizontal complex, and a pairing
    from source maximal cids to the cids of their two factors.  Requires
    regular simplicial source cells so the lattice splits with the rays.
    """
    src = fmap.source
    if src.kind != "conical":
        raise ValueError("only conical complexes split this way")
    _require_shared_coordinates(src)
    v_pieces = []
    h_pieces = []
    for cid in src.maximal_ids():
        cell = src.cells[cid]
        if not _is_regular(cell):
            raise NotRegularSimplicial("cell %r is not regular simplicial" % (cid,))
        _, mat, _ = fmap.assign[cid]
        vert = tuple(r for r in cell.points if not any(matvec(mat, r)))
        horiz = tuple(r for r in cell.points if any(matvec(mat, r)))
        v_pieces.append((vert, lattice_basis(vert), cid))
        h_pieces.append((horiz, lattice_basis(horiz), cid))
    alt_v, v_order = _assemble_alteration("conical", src, v_pieces, want_order=True)
    alt_h, h_order = _assemble_alteration("conical", src, h_pieces, want_order=True)
    pairs = {}
    for (vp, _, cid), vcid, hcid in zip(v_pieces, v_order, h_order):
        pairs[cid] = (vcid, hcid)
    return alt_v.result, alt_h.result, pairs


# ---------------------------------------------------------------------------
# weak semistability


ScalingResult = namedtuple(
    "ScalingResult",
    ["c_edges", "c_lattice", "c", "base_alteration", "source_alteration", "map"],
)


def _level_data(tgt, tcid):
    """Integer linear form and denominator giving the level in a base cone."""
    cell = tgt.cells[tcid]
    if not cell.points:
        return None
    prim = tuple(_primitive_in(p, cell.lattice) for p in cell.points)
    mat = tuple(tuple(Fraction(x) for x in p) for p in prim)
    phi = rational_solve(mat, tuple(Fraction(1) for _ in prim))
    den = 1
    for x in phi:
        den = lcm(den, Fraction(x).denominator)
    return tuple(int(Fraction(x) * den) for x in phi), den


def weak_semistable_scaling(fmap):
    """Rescale the base until edges and lattices spread semistably.

    The edge factor clears the denominators of level normalized ray
    images; the lattice factor clears the exponents of the image lattice
    quotients.  The base is then dilated, the map pulled back, and weak
    semistability certified, raising AssertionFailed with a witness when
    it does not hold.
    """
    src, tgt = fmap.source, fmap.target
    for tcid in tgt.maximal_ids():
        if not _is_regular(tgt.cells[tcid]):
            raise RegularityRequired("base cell %r is not regular" % (tcid,))
    c_edges = 1
    for cid in src.maximal_ids():
        cell = src.cells[cid]
        _, mat, _ = fmap.assign[cid]
        for r in cell.points:
            p = _primitive_in(r, cell.lattice)
            w = matvec(mat, p)
            if not any(w):
                continue
            tcid = _carrier(tgt, (w,))
            prim = tuple(
                _primitive_in(q, tgt.cells[tcid].lattice)
                for q in tgt.cells[tcid].points
            )
            coords = rational_solve(
                tuple(tuple(Fraction(x) for x in q) for q in transpose(prim)),
                tuple(Fraction(x) for x in w),
            )
            level = sum(coords)
            for a in coords:
                c_edges = lcm(c_edges, (Fraction(a) / level).denominator)
    c_lattice = 1
    for cid in src.maximal_ids():
        cell = src.cells[cid]
        _, mat, _ = fmap.assign[cid]
        img = image_basis(mat, cell.lattice)
        if not img:
            continue
        tcid = _carrier(tgt, tuple(matvec(mat, p) for p in cell.points))
        ambient_part = _sublattice_in_span(tgt.cells[tcid].lattice, img)
        factors = quotient_group(img, ambient_part)
        if factors:
            c_lattice = lcm(c_lattice, factors[-1])
    c = lcm(c_edges, c_lattice)
    if c == 1:
        rep = check_semistable(fmap)
        if rep.weakly:
            return ScalingResult(
                1, 1, 1, identity_alteration(tgt), identity_alteration(src), fmap
            )
    alt_b = scale_base(tgt, c)
    alt_x, f2 = base_change(fmap, alt_b)
    rep = check_semistable(f2)
    if not rep.weakly:
        witness = None
        for r in (rep.cells_to_cells, rep.lattices_onto, rep.target_regular):
            if not r.ok:
                witness = r.failures[0]
                break
        raise AssertionFailed(
            "the dilated map is not weakly semistable: %s" % (witness,), witness
        )
    return ScalingResult(c_edges, c_lattice, c, alt_b, alt_x, f2)


# ---------------------------------------------------------------------------
# sections


Dehomogenized = namedtuple("Dehomogenized", ["map", "c", "source_of", "base_source_of"])


def dehomogenize(fmap, c=None):
    """Cut the level c cross section out of a conical map.

    Every ray of the source must have nonzero image; the minimal c making
    all section vertices lattice points is used unless a multiple of it
    is requested.  Returns the polytopal map between the sections
    together with the provenance of every section cell.
    """
    src, tgt = fmap.source, fmap.target
    if src.kind != "conical":
        raise ValueError("sections are cut from conical maps")
    for tcid in tgt.maximal_ids():
        if not _is_regular(tgt.cells[tcid]):
            raise RegularityRequired("base cell %r is not regular" % (tcid,))
    _require_shared_coordinates(src)
    _require_shared_coordinates(tgt)
    t_comp_of = tgt.component_of()
    levels = {}
    for cid in src.maximal_ids():
        cell = src.cells[cid]
        if cell_dim(cell) == 0:
            raise VerticalComponent("cell %r has no rays to section" % (cid,))
        tcid0, mat, _ = fmap.assign[cid]
        allowed = {t for t in tgt.cells if t_comp_of[t] == t_comp_of[tcid0]}
        per_ray = []
        for r in cell.points:
            p = _primitive_in(r, cell.lattice)
            w = matvec(mat, p)
            if not any(w):
                raise VerticalComponent("ray %r of cell %r maps to zero" % (r, cid))
            tcid = _carrier(tgt, (w,), restrict=allowed)
            phi, den = _level_data(tgt, tcid)
            num = dot(phi, w)
            if num % den:
                raise AssertionFailed(
                    "a primitive ray image has a fractional level", cid
                )
            per_ray.append((p, num // den))
        levels[cid] = per_ray
    c_min = 1
    for per_ray in levels.values():
        for _, level in per_ray:
            c_min = lcm(c_min, level)
    if c is None:
        c = c_min
    elif c < 1 or c % c_min:
        raise ValueError("requested level %d is not a positive multiple of %d" % (c, c_min))
    z_pieces = []
    for cid, per_ray in levels.items():
        cell = src.cells[cid]
        verts = tuple(vscale(c // level, p) for p, level in per_ray)
        tcid0, mat, _ = fmap.assign[cid]
        allowed = {t for t in tgt.cells if t_comp_of[t] == t_comp_of[tcid0]}
        top = _carrier(tgt, tuple(matvec(mat, v) for v in verts), restrict=allowed)
        phi, _ = _level_data(tgt, top)
        normal = tuple(dot(phi, col) for col in transpose(mat))
        lat = _lattice_in_hyperplanes(cell.lattice, (normal,))
        z_pieces.append((verts, lat, cid))
    b_pieces = []
    for tcid in tgt.maximal_ids():
        cell = tgt.cells[tcid]
        if not cell.points:
            continue
        prim = tuple(_primitive_in(p, cell.lattice) for p in cell.points)
        phi, _ = _level_data(tgt, tcid)
        verts = tuple(vscale(c, p) for p in prim)
        lat = _lattice_in_hyperplanes(cell.lattice, (phi,))
        b_pieces.append((verts, lat, tcid))
    alt_z, z_order = _assemble_alteration("polytopal", src, z_pieces, want_order=True)
    alt_b = _assemble_alteration("polytopal", tgt, b_pieces)
    z_comp, b_comp = alt_z.result, alt_b.result
    mat_of = {}
    for (verts, lat, cid), zcid in zip(z_pieces, z_order):
        mat_of[zcid] = fmap.assign[cid][1]
    assign = {}
    for zcid, zc in z_comp.cells.items():
        mat = mat_of.get(zcid)
        if mat is None:
            for r in z_comp.faces:
                if r.child == zcid and r.parent in mat_of:
                    mat = mat_of[r.parent]
                    break
        if mat is None:
            mat = fmap.assign[src.maximal_ids()[0]][1]
        imgs = [matvec(mat, p) for p in zc.points]
        tzcid = _carrier(b_comp, imgs)
        if tzcid is None:
            raise AssertionFailed("section image misses the base section", zcid)
        assign[zcid] = (tzcid, mat, (0,) * len(mat))
    zmap = ComplexMap(z_comp, b_comp, assign)
    source_of = dict(alt_z.parent)
    base_source_of = dict(alt_b.parent)
    return Dehomogenized(zmap, c, source_of, base_source_of)


Homogenized = namedtuple("Homogenized", ["source_alteration", "base_alteration", "map"])


def _section_matrix(dh, zcid):
    """Matrix of the sectioned map over a cross section cell."""
    seen = set()
    while zcid not in dh.map.assign and zcid not in seen:
        seen.add(zcid)
        zcid = dh.source_of.get(zcid, zcid)
    return dh.map.assign[zcid][1]


def homogenize(dh, x_source, b_source, source_alt, base_alt):
    """Rebuild cones over refined cross sections.

    dh is the section data of a conical map from x_source to b_source;
    source_alt and base_alt refine the two sections.  Each refined cell
    becomes the cone on its vertices, measured against the span of the
    section lattice and one vertex, and the conical map is reassembled
    from the section provenance.
    """
    b_pieces = []
    for rcid in base_alt.result.maximal_ids():
        cell = base_alt.result.cells[rcid]
        owner = dh.base_source_of[base_alt.parent[rcid]]
        lat = lattice_basis(cell.lattice + (cell.points[0],))
        b_pieces.append((cell.points, lat, owner))
    alt_b = _assemble_alteration("conical", b_source, b_pieces)
    x_pieces = []
    mats = []
    for rcid in source_alt.result.maximal_ids():
        cell = source_alt.result.cells[rcid]
        zparent = source_alt.parent[rcid]
        owner = dh.source_of[zparent]
        lat = lattice_basis(cell.lattice + (cell.points[0],))
        x_pieces.append((cell.points, lat, owner))
        mats.append(_section_matrix(dh, zparent))
    alt_x, order = _assemble_alteration("conical", x_source, x_pieces, want_order=True)
    mat_of = {}
    for rcid, mat in zip(order, mats):
        mat_of[rcid] = mat
    assign = {}
    for rcid, cell in alt_x.result.cells.items():
        mat = mat_of.get(rcid)
        if mat is None:
            for r in alt_x.result.faces:
                if r.child == rcid and r.parent in mat_of:
                    mat = mat_of[r.parent]
                    break
        if mat is None:
            raise AssertionFailed("a homogenized cell has no map data", rcid)
        imgs = [matvec(mat, p) for p in cell.points] or [(0,) * len(mat)]
        tcid = _carrier(alt_b.result, imgs)
        if tcid is None:
            raise AssertionFailed("homogenized image misses the new base", rcid)
        assign[rcid] = (tcid, mat, (0,) * len(mat))
    return Homogenized(alt_x, alt_b, ComplexMap(alt_x.result, alt_b.result, assign))


# ---------------------------------------------------------------------------
# semistability report


class SemistabilityReport:
    """Per condition outcome of the semistability test."""

    def __init__(self, cells_to_cells, lattices_onto, target_regular, source_regular):
        self.cells_to_cells = cells_to_cells
        self.lattices_onto = lattices_onto
        self.target_regular = target_regular
        self.source_regular = source_regular

    @property
    def weakly(self):
        return bool(self.cells_to_cells and self.lattices_onto and self.target_regular)

    @property
    def semistable(self):
        return self.weakly and bool(self.source_regular)

    def __repr__(self):
        return "SemistabilityReport(weakly=%s, semistable=%s)" % (
            self.weakly,
            self.semistable,
        )


def check_semistable(fmap):
    """Test the semistability conditions, collecting witnesses.

    Cells must land onto cells of the target, image lattices must fill
    the lattices of those cells, and both sides must be regular for the
    strongest verdict; the first three conditions alone give the weak
    form.
    """
    src, tgt = fmap.source, fmap.target
    onto_bad = []
    lat_bad = []
    keyfun = _cone_key if tgt.kind == "conical" else _poly_key
    target_keys = {}
    for tcid, t in tgt.cells.items():
        target_keys.setdefault(keyfun(t.points) if t.points else frozenset(), []).append(
            tcid
        )
    for cid, cell in src.cells.items():
        tcid, mat, off = fmap.assign[cid]
        imgs = tuple(vadd(matvec(mat, p), off) for p in cell.points)
        key = keyfun(imgs) if imgs else frozenset()
        matches = target_keys.get(key, [])
        if not matches:
            onto_bad.append(cid)
            continue
        img_lat = image_basis(mat, cell.lattice)
        if not any(
            lattice_basis(tgt.cells[mcid].lattice) == img_lat for mcid in matches
        ):
            lat_bad.append(cid)
    t_bad = [tcid for tcid in tgt.cells if not _is_regular(tgt.cells[tcid])]
    s_bad = [cid for cid in src.cells if not _is_regular(src.cells[cid])]
    return SemistabilityReport(
        Report(["cell %r does not land onto a cell" % c for c in onto_bad]),
        Report(["cell %r does not fill the target lattice" % c for c in lat_bad]),
        Report(["target cell %r is not regular" % c for c in t_bad]),
        Report(["source cell %r is not regular" % c for c in s_bad]),
    )


# ---------------------------------------------------------------------------
# descent


def _restriction_signature(alt, face_cell):
    """Canonical form of an alteration restricted to one face."""
    out = set()
    for rcid, cell in alt.result.cells.items():
        if cell_dim(cell) != cell_dim(face_cell):
            continue
        if alt.source.kind == "conical":
            inside = all(_in_cone(p, face_cell.points) for p in cell.points)
        else:
            geom = tuple(vscale(alt.scale, p) for p in face_cell.points)
            inside = bool(cell.points) and all(in_hull(p, geom) for p in cell.points)
        if inside:
            out.add((frozenset(cell.points), cell.lattice))
    return frozenset(out)


def disjoint_cover_descend(comp, per_cell):
    """Glue per cell results computed on the disjoint cover of maximal cells.

    per_cell maps each maximal cid to an alteration of that cell alone,
    in the shared coordinates of the complex.  Restrictions to every
    shared face are compared exactly; the first disagreement raises
    DescentMismatch, otherwise the glued alteration is returned.
    """
    _require_shared_coordinates(comp)
    maxi = comp.maximal_ids()
    parents_of_face = {}
    for r in comp.faces:
        if r.parent in maxi:
            parents_of_face.setdefault(r.child, []).append(r.parent)
    scales = {per_cell[cid].scale for cid in maxi}
    if len(scales) != 1:
        raise DescentMismatch("scale", None, None)
    scale = scales.pop()
    for fcid in sorted(parents_of_face):
        parents = sorted(set(parents_of_face[fcid]))
        if len(parents) < 2:
            continue
        face_cell = comp.cells[fcid]
        sig = None
        first = None
        for pcid in parents:
            cur = _restriction_signature(per_cell[pcid], face_cell)
            if sig is None:
                sig, first = cur, pcid
            elif cur != sig:
                raise DescentMismatch(fcid, first, pcid)
    pieces = []
    heights = {}
    any_heights = False
    for cid in maxi:
        alt = per_cell[cid]
        for rcid in alt.result.maximal_ids():
            cell = alt.result.cells[rcid]
            pieces.append((cell.points, cell.lattice, cid))
        if alt.heights:
            any_heights = True
            merged = {}
            for hmap in alt.heights.values():
                merged.update(hmap)
            heights[cid] = merged
    return _assemble_alteration(
        comp.kind,
        comp,
        pieces,
        heights=heights if any_heights else None,
        scale=scale,
    )
