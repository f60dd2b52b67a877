"""Exact convex geometry for small lattice polytopes.

Points are tuples of ints or Fractions.  Membership and extremality run
through a tiny exact simplex method rather than facet enumeration, so they
work in any dimension; facet enumeration itself is brute force and meant for
the small dimensions this engine actually handles.
"""

import itertools
from fractions import Fraction

from .intlat import (
    dot,
    hnf,
    lattice_basis,
    lattice_index,
    rational_kernel,
    rational_solve,
    saturation,
    transpose,
    vsub,
)


def frac_point(p):
    return tuple(Fraction(x) for x in p)


def is_integral(p):
    return all(Fraction(x).denominator == 1 for x in p)


# ----------------------------------------------------------- exact simplex


def lp_solve(objective, eq_lhs, eq_rhs):
    """Maximize objective . y subject to eq_lhs y = eq_rhs, y >= 0.

    Returns (status, value, y) with status one of "optimal", "infeasible",
    "unbounded".  Small dense two-phase simplex with Bland's rule; exact
    Fractions throughout.
    """
    m = len(eq_lhs)
    n = len(eq_lhs[0]) if m else 0
    if m == 0:
        if any(Fraction(c) > 0 for c in objective):
            return "unbounded", None, None
        return "optimal", Fraction(0), tuple(Fraction(0) for _ in objective)
    a = [[Fraction(x) for x in row] for row in eq_lhs]
    b = [Fraction(x) for x in eq_rhs]
    for i in range(m):
        if b[i] < 0:
            a[i] = [-x for x in a[i]]
            b[i] = -b[i]
    # phase 1: artificials n..n+m-1
    tab = [a[i] + [Fraction(1) if j == i else Fraction(0) for j in range(m)] + [b[i]] for i in range(m)]
    basis = list(range(n, n + m))
    cost = [Fraction(0)] * n + [Fraction(-1)] * m

    def pivot(tab, basis, row, col):
        piv = tab[row][col]
        tab[row] = [x / piv for x in tab[row]]
        for i in range(len(tab)):
            if i != row and tab[i][col]:
                f = tab[i][col]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[row])]
        basis[row] = col

    def run(tab, basis, cost):
        width = len(tab[0]) - 1
        while True:
            # reduced costs with Bland's rule
            z = [Fraction(0)] * width
            for i, bi in enumerate(basis):
                if cost[bi]:
                    for j in range(width):
                        z[j] += cost[bi] * tab[i][j]
            enter = None
            for j in range(width):
                if cost[j] - z[j] > 0:
                    enter = j
                    break
            if enter is None:
                return "optimal"
            leave = None
            best = None
            for i in range(len(tab)):
                if tab[i][enter] > 0:
                    ratio = tab[i][-1] / tab[i][enter]
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best = ratio
                        leave = i
            if leave is None:
                return "unbounded"
            pivot(tab, basis, leave, enter)

    run(tab, basis, cost)
    val = sum(cost[bi] * tab[i][-1] for i, bi in enumerate(basis))
    if val < 0:
        return "infeasible", None, None
    # drive leftover artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if tab[i][j]), None)
            if col is not None:
                pivot(tab, basis, i, col)
    # drop artificial columns and rows that could not be pivoted out
    tab = [row[:n] + [row[-1]] for row in tab]
    rows = [tab[i] for i in range(m) if basis[i] < n]
    basis2 = [basis[i] for i in range(m) if basis[i] < n]
    cost2 = [Fraction(x) for x in objective]
    status = run(rows, basis2, cost2) if rows else "optimal"
    if status == "unbounded":
        return "unbounded", None, None
    y = [Fraction(0)] * n
    for i, bi in enumerate(basis2):
        y[bi] = rows[i][-1]
    value = sum(c * yi for c, yi in zip(cost2, y))
    return "optimal", value, tuple(y)


def in_hull(x, points):
    """Exact test x in conv(points)."""
    points = [frac_point(p) for p in points]
    if not points:
        return False
    x = frac_point(x)
    d = len(x)
    for i in range(d):
        xi = x[i]
        if xi < min(p[i] for p in points) or xi > max(p[i] for p in points):
            return False
    k = len(points)
    if k == 1:
        return x == points[0]
    lhs = [[p[i] for p in points] for i in range(d)]
    lhs.append([Fraction(1)] * k)
    rhs = list(x) + [Fraction(1)]
    if affine_dim(points) == k - 1:
        # Affinely independent spanning set: barycentric coordinates are
        # unique, so one linear solve settles membership.
        lam = rational_solve(lhs, rhs)
        return lam is not None and all(v >= 0 for v in lam)
    status, _, _ = lp_solve([Fraction(0)] * k, lhs, rhs)
    return status == "optimal"


def in_relative_interior(x, points):
    """Exact test x in relint(conv(points)).

    Uses the fact that the relative interior of the hull of a finite set is
    exactly the set of strictly positive convex combinations.
    """
    points = [frac_point(p) for p in points]
    x = frac_point(x)
    d = len(x)
    k = len(points)
    # variables: mu_1..mu_k, t;  lambda_i = mu_i + t
    s = [sum(p[i] for p in points) for i in range(d)]
    lhs = [[p[i] for p in points] + [s[i]] for i in range(d)]
    lhs.append([Fraction(1)] * k + [Fraction(k)])
    rhs = list(x) + [Fraction(1)]
    obj = [Fraction(0)] * k + [Fraction(1)]
    status, value, _ = lp_solve(obj, lhs, rhs)
    return status == "optimal" and value > 0


def extreme_points(points):
    """The vertices of conv(points), in the order they appear."""
    pts = []
    seen = set()
    for p in points:
        fp = frac_point(p)
        if fp not in seen:
            seen.add(fp)
            pts.append(fp)
    out = []
    for i, p in enumerate(pts):
        others = pts[:i] + pts[i + 1 :]
        if not others or not in_hull(p, others):
            out.append(p)
    return tuple(out)


# -------------------------------------------------------- affine structure


def affine_span_basis(points):
    """Rows spanning the linear directions of the points' affine hull."""
    if len(points) < 2:
        return ()
    p0 = frac_point(points[0])
    diffs = [vsub(frac_point(p), p0) for p in points[1:]]
    basis = []
    for v in diffs:
        trial = basis + [v]
        if _rank(trial) > len(basis):
            basis.append(v)
    return tuple(basis)


def _rank(rows):
    if not rows:
        return 0
    a = [[Fraction(x) for x in r] for r in rows]
    m, n = len(a), len(a[0])
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(m):
            if i != r and a[i][c]:
                f = a[i][c] / a[r][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        r += 1
    return r


def affine_dim(points):
    return len(affine_span_basis(points))


def affine_coords(points):
    """Chart for the affine hull: (origin, basis rows, coordinates).

    Every input point equals origin + sum(coord_i * basis_i); coordinates
    are Fractions.
    """
    pts = [frac_point(p) for p in points]
    p0 = pts[0]
    basis = affine_span_basis(pts)
    if not basis:
        return p0, (), [() for _ in pts]
    bt = transpose(basis)
    coords = []
    for p in pts:
        sol = rational_solve(bt, vsub(p, p0))
        coords.append(tuple(sol))
    return p0, basis, coords


# ------------------------------------------------------------------ facets


def facets(points):
    """Facet decomposition of conv(points) by brute force.

    Returns a list of (indices, normal, offset) where indices select the
    input points lying on the facet and the inequality normal . c <= offset
    (in chart coordinates of the affine hull) is valid for all points.
    Intended for small dimension and small point counts.
    """
    pts = [frac_point(p) for p in points]
    _, basis, coords = affine_coords(pts)
    k = len(basis)
    if k == 0:
        return []
    seen = {}
    n_pts = len(pts)
    for subset in itertools.combinations(range(n_pts), k):
        mat = [vsub(coords[i], coords[subset[0]]) for i in subset[1:]]
        if _rank(mat) != k - 1:
            continue
        kern = rational_kernel(mat) if mat else rational_kernel([[0] * k])
        if len(kern) != 1:
            continue
        normal = kern[0]
        offset = dot(normal, coords[subset[0]])
        sides = [dot(normal, c) - offset for c in coords]
        if all(s <= 0 for s in sides):
            normal = tuple(-x for x in normal)
            offset = -offset
            sides = [-s for s in sides]
        if not all(s >= 0 for s in sides):
            continue
        # orient inward: normal . c >= offset for all; flip to <= form
        normal = tuple(-x for x in normal)
        offset = -offset
        key = _primitive_key(normal, offset)
        if key not in seen:
            on = tuple(i for i, c in enumerate(coords) if dot(normal, c) == offset)
            seen[key] = (on, key[0], key[1])
    return list(seen.values())


def _primitive_key(normal, offset):
    denom = 1
    for x in list(normal) + [offset]:
        f = Fraction(x)
        denom = denom * f.denominator // _gcd_int(denom, f.denominator)
    ints = [int(Fraction(x) * denom) for x in normal]
    off = int(Fraction(offset) * denom)
    g = 0
    for x in ints + [off]:
        g = _gcd_int(g, x)
    if g:
        ints = [x // g for x in ints]
        off = off // g
    return tuple(ints), off


def _gcd_int(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def hull_triangulation(points):
    """Dissect conv(points) into simplices (tuples of points).

    Recursive cone construction from the lexicographically smallest point
    over triangulated facets; deterministic in the input geometry alone.
    """
    back = {tuple(frac_point(p)): p for p in points}
    pts = [back[tuple(p)] for p in extreme_points(points)]
    k = affine_dim(pts)
    if k == 0:
        return ((pts[0],),)
    pts.sort()
    if len(pts) == k + 1:
        return (tuple(pts),)
    v0 = pts[0]
    cells = []
    for on, normal, offset in facets(pts):
        face_pts = [pts[i] for i in on]
        if v0 in face_pts:
            continue
        for cell in hull_triangulation(face_pts):
            cells.append((v0,) + cell)
    return tuple(cells)


# ------------------------------------------------------------ measurements


def vertex_lattice(points):
    """Canonical basis of the lattice spanned by differences of the points."""
    if len(points) < 2:
        return ()
    p0 = points[0]
    return lattice_basis([vsub(p, p0) for p in points[1:]])


def polytope_index(points):
    """[Z^d cap span : lattice of vertex differences] for a lattice polytope."""
    lat = vertex_lattice(points)
    if not lat:
        return 1
    return lattice_index(lat, saturation(lat))


def simplex_normalized_volume(verts, lattice=None):
    """Normalized volume of one simplex with respect to an affine lattice.

    With lattice None, the reference is Z^d intersected with the linear span
    of the simplex's own edge directions (the usual normalization making
    unimodular simplices have volume 1).
    """
    if len(verts) < 2:
        return 1 if len(verts) == 1 else 0
    p0 = frac_point(verts[0])
    diffs = [vsub(frac_point(v), p0) for v in verts[1:]]
    if lattice is None:
        lattice = saturation(lattice_basis([tuple(x) for x in _clear_denominators(diffs)]))
    bt = transpose(lattice)
    rows = []
    for dvec in diffs:
        sol = rational_solve(bt, dvec)
        if sol is None:
            raise ValueError("simplex leaves the reference lattice's span")
        rows.append(sol)
    from .intlat import det

    return abs(det(rows))


def _clear_denominators(vectors):
    out = []
    for v in vectors:
        denom = 1
        for x in v:
            f = Fraction(x)
            denom = denom * f.denominator // _gcd_int(denom, f.denominator)
        out.append(tuple(int(Fraction(x) * denom) for x in v))
    return out


def normalized_volume(points, lattice=None):
    """Normalized volume of conv(points) w.r.t. an affine reference lattice.

    Defaults to the saturated lattice of the polytope's own span, so a
    unimodular simplex measures 1 and a lattice polytope measures a positive
    integer.
    """
    pts = [frac_point(p) for p in points]
    if affine_dim(pts) == 0:
        return 1
    if lattice is None:
        diffs = _clear_denominators([vsub(p, pts[0]) for p in pts[1:]])
        lattice = saturation(lattice_basis(diffs))
    total = 0
    for cell in hull_triangulation(pts):
        if len(cell) == len(lattice) + 1:
            total += simplex_normalized_volume(cell, lattice)
    return total


def lattice_points(points):
    """All integer points of conv(points), in lexicographic order."""
    pts = [frac_point(p) for p in points]
    if not pts:
        return ()
    d = len(pts[0])
    lows = []
    highs = []
    for i in range(d):
        vals = [p[i] for p in pts]
        lo, hi = min(vals), max(vals)
        lows.append(_ceil(lo))
        highs.append(_floor(hi))
    out = []
    for cand in itertools.product(*[range(lo, hi + 1) for lo, hi in zip(lows, highs)]):
        if in_hull(cand, pts):
            out.append(cand)
    return tuple(out)


def _ceil(f):
    f = Fraction(f)
    return -((-f.numerator) // f.denominator)


def _floor(f):
    f = Fraction(f)
    return f.numerator // f.denominator


# ------------------------------------------------------------------ cutting


def cut_by_hyperplane(points, normal, offset):
    """Split conv(points) by the hyperplane normal . x = offset.

    Returns (below, above): vertex tuples of the two closed pieces (either
    may be empty).  Crossing points are generated from every straddling pair
    and filtered back down to extreme points, which keeps the result exact
    without edge enumeration.
    """
    pts = [frac_point(p) for p in points]
    vals = [dot(normal, p) - Fraction(offset) for p in pts]
    below = [p for p, v in zip(pts, vals) if v <= 0]
    above = [p for p, v in zip(pts, vals) if v >= 0]
    cross = []
    for (p, vp), (q, vq) in itertools.combinations(zip(pts, vals), 2):
        if (vp < 0 < vq) or (vq < 0 < vp):
            t = vp / (vp - vq)
            cross.append(tuple(a + t * (b - a) for a, b in zip(p, q)))
    below_all = below + cross
    above_all = above + cross
    out = []
    for part in (below_all, above_all):
        out.append(extreme_points(part) if part else ())
    return out[0], out[1]


# ------------------------------------------------- triangulation checking


def check_simplicial_cover(cells, hull_points):
    """Certify that the cells triangulate conv(hull_points) exactly.

    cells: integer-vertex simplices covering the hull; hull_points: any
    point set spanning the target polytope.  Checks full-dimensionality,
    exact volume bookkeeping, and the wall condition: every codimension-one
    face of a cell either separates exactly two cells lying on opposite
    sides of it, or lies on the boundary of the polytope.  Raises
    AssertionError with a reason on failure.
    """
    ext = extreme_points(hull_points)
    dim = affine_dim(ext)
    assert cells, "no cells"
    all_pts = sorted({tuple(int(x) for x in v) for c in cells for v in c})
    if dim == 0:
        assert len(cells) == 1 and len(all_pts) == 1, "point hull needs one cell"
        assert frac_point(all_pts[0]) == ext[0], "cell misses the point"
        return True
    origin = all_pts[0]
    ref = saturation(lattice_basis([vsub(p, origin) for p in all_pts[1:]]))
    assert len(ref) == dim, "cells span a different dimension than the hull"
    bt = transpose(ref)
    chart = {}

    def coords(v):
        if v not in chart:
            sol = rational_solve(bt, vsub(v, origin))
            assert sol is not None, f"vertex {v} leaves the lattice span"
            chart[v] = tuple(int(x) for x in sol)
        return chart[v]

    total = 0
    walls = {}
    for idx, cell in enumerate(cells):
        uniq = tuple(dict.fromkeys(tuple(int(x) for x in v) for v in cell))
        assert len(uniq) == dim + 1, f"cell {idx} is not a {dim}-simplex"
        vol = simplex_normalized_volume(uniq, ref)
        assert vol > 0, f"cell {idx} is degenerate"
        total += vol
        for omit in range(len(uniq)):
            wall = frozenset(uniq[:omit] + uniq[omit + 1 :])
            walls.setdefault(wall, []).append(uniq[omit])

    hull_vol = normalized_volume(ext, lattice=ref)
    assert total == hull_vol, f"cell volumes sum to {total}, hull has {hull_vol}"

    for wall, opposite in walls.items():
        assert len(opposite) <= 2, f"wall shared by {len(opposite)} cells"
        wall_pts = sorted(wall)
        w0 = coords(wall_pts[0])
        mat = [vsub(coords(p), w0) for p in wall_pts[1:]]
        kern = rational_kernel(mat) if mat else rational_kernel([[0] * dim])
        assert len(kern) == 1, "wall is not a hyperplane"
        normal = kern[0]
        if len(opposite) == 2:
            s1 = dot(normal, vsub(coords(opposite[0]), w0))
            s2 = dot(normal, vsub(coords(opposite[1]), w0))
            assert s1 * s2 < 0, "two cells on the same side of a wall"
        else:
            k = len(wall_pts)
            bary = tuple(
                Fraction(sum(p[i] for p in wall_pts), k)
                for i in range(len(wall_pts[0]))
            )
            assert not in_relative_interior(
                bary, ext
            ), "boundary wall sits inside the polytope"
    return True


# ----------------------------------------------------- height certificates


def is_lower_envelope(cells, height):
    """Check that `cells` is the regular subdivision induced by `height`.

    cells: iterable of point tuples; height: mapping point -> exact number.
    For each cell the affine function through its lifted vertices must lie
    strictly below the lift at every other subdivision vertex.  This is the
    standard certificate that a height function is a projectivity witness.
    """
    cells = [tuple(frac_point(p) for p in cell) for cell in cells]
    all_pts = sorted({p for cell in cells for p in cell})
    h = {frac_point(p): Fraction(v) for p, v in height.items()}
    for cell in cells:
        _, basis, coords = affine_coords(cell)
        k = len(basis)
        # fit ell(c) = a . c + b on chart coordinates of this cell
        rows = [list(c) + [Fraction(1)] for c in coords]
        rhs = [h[p] for p in cell]
        sol = rational_solve(rows, rhs)
        if sol is None:
            return False
        # express every other vertex in the cell's chart; skip those outside
        # the affine hull (they cannot violate this cell's domain)
        p0 = cell[0]
        bt = transpose(basis)
        for w in all_pts:
            if w in cell:
                cw = rational_solve(bt, vsub(w, p0))
                if cw is not None:
                    ell = sum(a * x for a, x in zip(sol[:k], cw)) + sol[k]
                    if ell != h[w]:
                        return False
                continue
            cw = rational_solve(bt, vsub(w, p0))
            if cw is None:
                continue
            ell = sum(a * x for a, x in zip(sol[:k], cw)) + sol[k]
            if ell >= h[w]:
                return False
    return True
