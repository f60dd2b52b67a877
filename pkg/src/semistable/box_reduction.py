"""Torsion classes of simplex families and the index-lowering triangulation.

The differences of an affinely independent family of lattice simplices span
a sublattice; the finite quotient by its saturation measures how far the
family is from unimodular.  This module enumerates the nonzero classes of
that quotient, attaches to each a minimal dilation tuple and a canonical
representative point, and uses one chosen class to refine the canonical
Cayley triangulation so that every full-dimensional cell has strictly
smaller index than the family itself.  When no class survives on the
supported factors, the stratified canonical triangulation is already as
fine as the reference lattice allows and the code delegates to it,
certifying the resulting cell lattices instead.

All classes are handled through explicit integer representatives.  Factor
arrays are translated so that each factor starts at the origin before any
lattice question is asked; the translations are paid into the row shifts,
so the produced cells land in the original coordinates.
"""

import itertools
from collections import namedtuple
from functools import lru_cache

from .cayley_moves import (
    Row,
    State,
    initial_state,
    move_successors,
    state_vertex_candidates,
    triangulate_state,
    validate_factors,
)
from .intlat import (
    hnf,
    in_lattice,
    integer_coords,
    lattice_basis,
    lattice_index,
    rational_solve,
    saturation,
    snf,
    transpose,
    vadd,
    vsub,
)
from .polytope import affine_dim, extreme_points, lattice_points, polytope_index


class MinimalityViolation(ValueError):
    """The minimal dilation tuple, or its representative, is not unique."""


class CategoryViolation(ValueError):
    """A matrix left the shape class the reduction relies on.

    Raised on entry for bad arguments; if it surfaces mid-recursion it
    indicates a bug, since every construction step is supposed to preserve
    the shape conditions.
    """


class IndexNotLowered(RuntimeError):
    """A full-dimensional output cell failed the strict index decrease."""


BoxPoint = namedtuple("BoxPoint", ["element", "representative", "c_tuple"])
BoxPoint.__doc__ = """A nonzero torsion class of a simplex family.

element: coordinates of the class in the quotient's invariant-factor basis.
representative: the unique lattice point of the minimal dilated sum lying
in the class.  c_tuple: the minimal dilation tuple itself.
"""


class FmTag:
    """Verification record for the two matrix-shape conditions.

    Truthiness reports acceptance, so a tag can be used directly as a
    yes/no answer while keeping the computed c-tuple, the per-block
    support sets and the reasons for rejection available.
    """

    __slots__ = ("ok", "c_tuple", "supports", "failures")

    def __init__(self, ok, c_tuple, supports, failures):
        self.ok = ok
        self.c_tuple = c_tuple
        self.supports = supports
        self.failures = failures

    def __bool__(self):
        return self.ok

    def __repr__(self):
        state = "accepted" if self.ok else "rejected"
        return f"FmTag({state}, c={self.c_tuple}, J={self.supports})"


# ------------------------------------------------------- lattice of a family


def _factor_diffs(factors):
    out = []
    for f in factors:
        out.extend(vsub(v, f[0]) for v in f[1:])
    return out


def direction_lattice(factors):
    """Canonical basis of the lattice spanned by all factor differences."""
    return lattice_basis(tuple(_factor_diffs(factors)))


def array_index(factors):
    """Index of the difference lattice inside its saturation."""
    base = direction_lattice(factors)
    if not base:
        return 1
    sat = saturation(base)
    coeff = tuple(integer_coords(g, sat) for g in base)
    d, _, _ = snf(coeff)
    out = 1
    for i in range(len(d)):
        out *= d[i][i]
    return abs(out)


def _normalize_factors(factors):
    """Translate every factor so its first vertex is the origin."""
    moved = []
    bases = []
    for f in factors:
        b = f[0]
        bases.append(b)
        moved.append(tuple(vsub(v, b) for v in f))
    return tuple(moved), tuple(bases)


def _normalized_state(state):
    factors, bases = _normalize_factors(state.factors)
    if all(all(x == 0 for x in b) for b in bases):
        return state
    blocks = []
    for blk in state.blocks:
        rows = []
        for row in blk:
            extra = [0] * len(row.shift)
            for c, b in zip(row.coeffs, bases):
                if c:
                    for t, x in enumerate(b):
                        extra[t] += c * x
            rows.append(Row(row.coeffs, vadd(row.shift, tuple(extra)), row.slab))
        blocks.append(tuple(rows))
    return State(factors, tuple(blocks), state.n_slabs)


def _int_inverse(mat):
    """Inverse of a unimodular integer matrix, as integer rows."""
    n = len(mat)
    rows = []
    for i in range(n):
        e = tuple(1 if t == i else 0 for t in range(n))
        sol = rational_solve(transpose(mat), e)
        rows.append(tuple(int(x) for x in sol))
    return tuple(rows)


# --------------------------------------------------------------- enumeration


@lru_cache(maxsize=None)
def _dilated_points(factors, c):
    """Integer points of the dilated sum of an origin-based family.

    Affine independence makes the decomposition over the edge vectors
    unique, so membership is a single rational solve per candidate with
    per-factor weight checks, no optimization needed.
    """
    d = len(factors[0][0])
    blocks = []
    cols = []
    for f in factors:
        blocks.append((len(cols), len(f) - 1))
        cols.extend(f[1:])
    if not cols:
        return ((0,) * d,)
    mat = tuple(tuple(v[t] for v in cols) for t in range(d))
    lo = [sum(c[j] * min(v[t] for v in f) for j, f in enumerate(factors)) for t in range(d)]
    hi = [sum(c[j] * max(v[t] for v in f) for j, f in enumerate(factors)) for t in range(d)]
    out = []
    for p in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        lam = rational_solve(mat, p)
        if lam is None:
            continue
        good = True
        for (start, width), cj in zip(blocks, c):
            w = lam[start : start + width]
            if any(x < 0 for x in w) or sum(w) > cj:
                good = False
                break
        if good:
            out.append(p)
    return tuple(out)


@lru_cache(maxsize=None)
def _minimal_dilation(factors, lat, rep0):
    """Minimal dilation tuple whose sum meets the class of rep0, plus the point.

    Scans the whole product range bounded by the factor dimensions and
    insists on a unique minimal tuple and a unique representative inside
    it; either failure raises MinimalityViolation.  The factors must be
    based at the origin for the class geometry to be meaningful.
    """
    dims = [len(f) - 1 for f in factors]
    hits = []
    for c in itertools.product(*(range(k + 1) for k in dims)):
        reps = [
            p
            for p in _dilated_points(factors, c)
            if in_lattice(vsub(p, rep0), lat)
        ]
        if reps:
            hits.append((c, reps))
    if not hits:
        raise MinimalityViolation("no dilation tuple contains a representative")
    mins = [
        c
        for c, _ in hits
        for _ in [0]
        if not any(
            o != c and all(a <= b for a, b in zip(o, c)) for o, _ in hits
        )
    ]
    if len(mins) != 1:
        raise MinimalityViolation(f"minimal dilation tuple is ambiguous: {mins}")
    c = mins[0]
    reps = dict(hits)[c]
    if len(reps) != 1:
        raise MinimalityViolation(f"representative is not unique in {c}: {reps}")
    return c, reps[0]


def box_points(factors):
    """All nonzero torsion classes of the family, canonically ordered.

    The order is by total dilation weight, then lexicographic c-tuple,
    then lexicographic representative, so equal families always list
    their classes the same way.
    """
    factors = tuple(tuple(tuple(v) for v in f) for f in factors)
    validate_factors(factors)
    factors, _ = _normalize_factors(factors)
    base = direction_lattice(factors)
    if not base:
        return []
    sat = saturation(base)
    coeff = tuple(integer_coords(g, sat) for g in base)
    d, _, v = snf(coeff)
    inv = [d[i][i] for i in range(len(d))]
    if all(f == 1 for f in inv):
        return []
    vinv = _int_inverse(v)
    smith_basis = tuple(
        tuple(sum(vinv[i][k] * sat[k][t] for k in range(len(sat))) for t in range(len(sat[0])))
        for i in range(len(sat))
    )
    out = []
    for element in itertools.product(*(range(f) for f in inv)):
        if all(r == 0 for r in element):
            continue
        rep0 = tuple(
            sum(r * smith_basis[i][t] for i, r in enumerate(element))
            for t in range(len(smith_basis[0]))
        )
        c, rep = _minimal_dilation(factors, base, rep0)
        out.append(BoxPoint(element, rep, c))
    out.sort(key=lambda bp: (sum(bp.c_tuple), bp.c_tuple, bp.representative))
    return out


def c_tuple(factors, m):
    """Minimal dilation tuple for the class of m, the zero vector if m is trivial.

    m must be an integer point of the span of the factor differences; a
    point outside the span has no class and raises ValueError.  A family
    whose factors are not based at the origin is translated there first,
    and m is read against the translated family.
    """
    m = tuple(getattr(m, "representative", m))
    factors = tuple(tuple(tuple(v) for v in f) for f in factors)
    if factors and len(m) != len(factors[0][0]):
        raise ValueError("point length does not match the ambient dimension")
    factors, _ = _normalize_factors(factors)
    base = direction_lattice(factors)
    n = len(factors)
    if not base:
        if any(x != 0 for x in m):
            raise ValueError("point is outside the span of the family")
        return (0,) * n
    if not in_lattice(m, saturation(base)):
        raise ValueError("point is outside the span of the family")
    if in_lattice(m, base):
        return (0,) * n
    return _minimal_dilation(factors, base, m)[0]


def _carried_class(m, factors, old_lattice):
    """Representative of m's class inside the span of a smaller family.

    Returns an integer point z of the saturated span of `factors` with
    z congruent to m modulo `old_lattice`, or None when the class does
    not survive the restriction.
    """
    base = direction_lattice(factors)
    sat = saturation(base) if base else ()
    if not sat:
        if not old_lattice:
            return m if all(x == 0 for x in m) else None
        return tuple(0 for _ in m) if in_lattice(m, old_lattice) else None
    stack = tuple(sat) + tuple(old_lattice)
    h, u = hnf(stack, transform=True)
    y = integer_coords(m, h)
    if y is None:
        return None
    coeffs = [
        sum(y[r] * u[r][s] for r in range(len(y))) for s in range(len(stack))
    ]
    z = [0] * len(m)
    for s in range(len(sat)):
        for t in range(len(m)):
            z[t] += coeffs[s] * sat[s][t]
    return tuple(z)


# ------------------------------------------------------------ the conditions


def _blocks_matrix(state):
    return [row.coeffs for blk in state.blocks for row in blk]


def _shape_tag(factors, blocks, m):
    """The two shape conditions for a block matrix against the class of m."""
    base = direction_lattice(factors)
    n = len(factors)
    sat = saturation(base) if base else ()
    if sat:
        carried = in_lattice(m, sat)
    else:
        carried = all(x == 0 for x in m)
    if not carried:
        return FmTag(False, None, (), ("class is not carried by the family's span",))
    if not base or in_lattice(m, base):
        c = (0,) * n
    else:
        c = _minimal_dilation(factors, base, m)[0]
    failures = []
    supp_c = frozenset(j for j, x in enumerate(c) if x)
    for blk in blocks:
        for row in blk:
            for j, a in enumerate(row.coeffs):
                if 0 < a < c[j]:
                    failures.append(
                        f"entry {a} in column {j} is below the floor {c[j]}"
                    )
    supports = []
    for k, blk in enumerate(blocks):
        js = {
            frozenset(j for j, a in enumerate(row.coeffs) if a) & supp_c
            for row in blk
        }
        if len(js) != 1:
            failures.append(f"block {k} mixes support patterns")
            supports.append(tuple(sorted(min(js, key=sorted))))
        else:
            supports.append(tuple(sorted(next(iter(js)))))
    for k in range(1, len(supports)):
        if not set(supports[k]) <= set(supports[k - 1]):
            failures.append(f"block {k} support is not nested in block {k - 1}")
    return FmTag(not failures, c, tuple(supports), tuple(failures))


def in_Fm(factors, matrix, m, partition=None):
    """Check the matrix-shape conditions for the class of m.

    Returns an FmTag; its truthiness is the verdict.  Condition one
    forbids entries strictly between zero and the class's dilation floor,
    condition two requires each block to meet the floor's support in one
    fixed set, nested downward from block to block.
    """
    m = tuple(getattr(m, "representative", m))
    state = initial_state(factors, matrix, partition)
    if len(m) != len(state.factors[0][0]):
        raise ValueError("point length does not match the ambient dimension")
    state = _normalized_state(state)
    return _shape_tag(state.factors, state.blocks, m)


# ----------------------------------------------------------- the triangulation


def sigma_m(factors, matrix, m, partition=None, fuel=200000):
    """Triangulation of the dilated family that lowers its lattice index.

    When the class of m survives on the supported factors, every
    full-dimensional output cell has strictly smaller index than the
    supported family, and that is verified level by level.  Otherwise the
    stratified canonical triangulation is returned and each cell's vertex
    lattice is certified to split as the family's difference lattice times
    the unimodular slab directions.  Cells come out embedded exactly as
    the plain triangulation would embed them.
    """
    m = tuple(getattr(m, "representative", m))
    state = initial_state(factors, matrix, partition)
    if len(m) != len(state.factors[0][0]):
        raise ValueError("point length does not match the ambient dimension")
    norm = _normalized_state(state)
    tag = _shape_tag(norm.factors, norm.blocks, m)
    if not tag:
        raise CategoryViolation("; ".join(tag.failures))
    budget = [fuel]
    cells = _reduce(state, m, {}, budget)
    _certify_top(state, m, cells)
    return cells


def _certify_top(state, m, cells):
    """Lattice-splitting certificate for the delegating branch."""
    norm = _normalized_state(state)
    sup = sorted(
        {j for blk in norm.blocks for row in blk for j, a in enumerate(row.coeffs) if a}
    )
    sub = tuple(norm.factors[j] for j in sup)
    old = direction_lattice(norm.factors)
    z = _carried_class(m, sub, old) if sub else None
    if z is not None and sub and not in_lattice(z, direction_lattice(sub)):
        return  # the lowering branch certifies itself level by level
    d = len(norm.factors[0][0]) if norm.factors else len(m)
    ns = state.n_slabs
    ref = [row + (0,) * ns for row in (direction_lattice(sub) if sub else ())]
    for l in range(ns - 1):
        ref.append(
            (0,) * d
            + tuple(
                1 if t == l else (-1 if t == l + 1 else 0) for t in range(ns)
            )
        )
    ref_h = hnf(tuple(ref)) if ref else ()
    rank = len(ref_h)
    for cell in cells:
        if len(cell) - 1 != rank:
            continue
        diffs = tuple(vsub(v, cell[0]) for v in cell[1:])
        if hnf(diffs) != ref_h:
            raise AssertionError(
                f"cell lattice does not split off the slab directions: {cell}"
            )


def _reduce(state, m, memo, budget):
    state = _normalized_state(state)
    key = (state, m)
    if key in memo:
        return memo[key]
    budget[0] -= 1
    if budget[0] < 0:
        raise RuntimeError("index reduction failed to terminate")
    tag = _shape_tag(state.factors, state.blocks, m)
    if not tag:
        raise CategoryViolation(
            "shape conditions broke mid-recursion: " + "; ".join(tag.failures)
        )
    sup = sorted(
        {j for blk in state.blocks for row in blk for j, a in enumerate(row.coeffs) if a}
    )
    sub_factors = tuple(state.factors[j] for j in sup)
    old = direction_lattice(state.factors)
    z = _carried_class(m, sub_factors, old) if sub_factors else None
    if z is None or in_lattice(z, direction_lattice(sub_factors)):
        cells = tuple(triangulate_state(state))
        memo[key] = cells
        return cells

    pruned = _restrict_columns(state, sup)
    ptag = _shape_tag(pruned.factors, pruned.blocks, z)
    if not ptag:
        raise CategoryViolation(
            "zero-column pruning left the shape class: " + "; ".join(ptag.failures)
        )
    c, mpoint = _minimal_dilation(pruned.factors, direction_lattice(pruned.factors), z)
    block1 = pruned.blocks[0]
    over = [
        j
        for j in range(len(c))
        if any(row.coeffs[j] > c[j] for row in block1)
    ]
    if over:
        j = over[0]
        succs = move_successors(pruned, j)
        if len(succs) == 1:
            nxt = succs[0]
            z1 = z if nxt.factors == pruned.factors else _carried_class(
                z, nxt.factors, direction_lattice(pruned.factors)
            )
            if z1 is None:
                raise CategoryViolation("class lost under a forced move")
            cells = _reduce(nxt, z1, memo, budget)
        else:
            keep, wedge = succs
            part1 = _reduce(keep, z, memo, budget)
            z2 = _carried_class(z, wedge.factors, direction_lattice(pruned.factors))
            if z2 is not None and not in_lattice(
                z2, direction_lattice(wedge.factors)
            ):
                part2 = _reduce(wedge, z2, memo, budget)
            else:
                part2 = _facet_wedges(pruned, j, c, mpoint, z)
            cells = tuple(part1) + tuple(part2)
    else:
        cells = _apex_cells(pruned, c, mpoint, z, memo, budget)

    _check_lowered(pruned, cells)
    memo[key] = cells
    return cells


def _restrict_columns(state, cols):
    factors = tuple(state.factors[j] for j in cols)
    blocks = tuple(
        tuple(
            Row(tuple(row.coeffs[j] for j in cols), row.shift, row.slab)
            for row in blk
        )
        for blk in state.blocks
    )
    return State(factors, blocks, state.n_slabs)


def _reference_index(state):
    """Index of the state's region lattice inside its saturation.

    The region's vertex differences are spanned by the factor differences
    together with the shift and slab offsets between rows; for the
    initial state with its zero shifts and one row per slab this is the
    family index, while merged slabs deeper in the recursion contribute
    their shift differences as extra directions.
    """
    ns = state.n_slabs
    rows = []
    for f in state.factors:
        for v in f[1:]:
            rows.append(tuple(vsub(v, f[0])) + (0,) * ns)
    flat = [row for blk in state.blocks for row in blk]
    for a, b in zip(flat, flat[1:]):
        slab = tuple(
            (1 if t == a.slab else 0) - (1 if t == b.slab else 0)
            for t in range(ns)
        )
        rows.append(tuple(vsub(a.shift, b.shift)) + slab)
    base = lattice_basis(tuple(rows))
    if not base:
        return 1
    return lattice_index(base, saturation(base))


def _check_lowered(state, cells):
    full = affine_dim(state_vertex_candidates(state))
    bound = _reference_index(state)
    for cell in cells:
        if len(cell) - 1 != full:
            continue
        got = polytope_index(cell)
        if got >= bound:
            raise IndexNotLowered(
                f"cell index {got} did not drop below {bound}: {cell}"
            )


def _row_position(block, j):
    best = max(row.coeffs[j] for row in block)
    return next(i for i, row in enumerate(block) if row.coeffs[j] == best)


def _facet_wedges(state, j, c, mpoint, z):
    """Pieces covering the facet side of a split when the class dies there.

    The replaced slab is stretched by an extra sheet through the class
    representative; the resulting prisms, and boundary wedges over the
    facet families that also drop the class, triangulate by the ordinary
    stratified moves since the inserted rows come with explicit shifts.

    The new rows take the replaced row's position inside the leading
    block, stretched sheet first, then the decremented copy, then the
    surviving original.  Any slot within the leading block would do; this
    one is fixed so that equal inputs always produce equal output.
    """
    block = state.blocks[0]
    i = _row_position(block, j)
    row = block[i]
    v = state.factors[j][0]
    facet = state.factors[j][1:]
    f_factors = state.factors[:j] + (facet,) + state.factors[j + 1 :]
    dec = row.coeffs[:j] + (row.coeffs[j] - 1,) + row.coeffs[j + 1 :]
    r_plus = Row(
        tuple(a - b for a, b in zip(row.coeffs, c)),
        vadd(row.shift, mpoint),
        row.slab,
    )
    r_dec = Row(dec, vadd(row.shift, v), row.slab)

    def with_rows(factors, rows):
        blk = block[:i] + tuple(rows) + block[i + 1 :]
        return State(factors, (blk,) + state.blocks[1:], state.n_slabs)

    cells = []
    cells.extend(triangulate_state(with_rows(f_factors, (r_plus, row))))
    cells.extend(triangulate_state(with_rows(f_factors, (r_plus, r_dec))))
    for g_factors in _shared_boundaries(state.factors, f_factors, z):
        cells.extend(
            triangulate_state(with_rows(g_factors, (r_plus, r_dec, row)))
        )
    return tuple(cells)


def _avoiding_facets(factors, z):
    """Facet families of the product on which the class of z dies."""
    base = direction_lattice(factors)
    out = []
    for k, f in enumerate(factors):
        if len(f) == 1:
            continue
        for drop in range(len(f)):
            fk = f[:drop] + f[drop + 1 :]
            cand = factors[:k] + (fk,) + factors[k + 1 :]
            if _carried_class(z, cand, base) is None:
                out.append(cand)
    return tuple(out)


def _shared_boundaries(factors, f_factors, z):
    """Componentwise meets of the facet family with every class-dropping one."""
    fdim = sum(len(f) - 1 for f in f_factors)
    seen = []
    for other in _avoiding_facets(factors, z):
        meet = []
        ok = True
        for fk, ok_k in zip(f_factors, other):
            keep = tuple(v for v in fk if v in set(ok_k))
            if not keep:
                ok = False
                break
            meet.append(keep)
        if not ok:
            continue
        meet = tuple(meet)
        if sum(len(g) - 1 for g in meet) != fdim - 1:
            continue
        if meet not in seen:
            seen.append(meet)
    return tuple(seen)


def _apex_cells(state, c, mpoint, z, memo, budget):
    """Cells coned from the class representative when every lead row equals c.

    The lead slab collapses to the representative point; each facet family
    that drops the class contributes the cone over its stratified
    triangulation, and the remaining rows contribute the cone over their
    own recursive reduction whenever that piece is full-dimensional.
    """
    block1 = state.blocks[0]
    for row in block1:
        if row.coeffs != c:
            raise CategoryViolation("lead block is neither above nor at the floor")
    row = block1[0]
    apex = vadd(row.shift, mpoint) + tuple(
        1 if t == row.slab else 0 for t in range(state.n_slabs)
    )
    cells = []
    for f_factors in _avoiding_facets(state.factors, z):
        base = triangulate_state(State(f_factors, state.blocks, state.n_slabs))
        for cell in base:
            cells.append(_cone(cell, apex))
    rest_blocks = (block1[1:],) + state.blocks[1:] if len(block1) > 1 else state.blocks[1:]
    rest_blocks = tuple(blk for blk in rest_blocks if blk)
    if rest_blocks:
        rest = State(state.factors, rest_blocks, state.n_slabs)
        shadow = (apex,) + state_vertex_candidates(rest)
        if affine_dim(shadow) == affine_dim(state_vertex_candidates(state)):
            for cell in _reduce(rest, z, memo, budget):
                cells.append(_cone(cell, apex))
    return tuple(cells)


def _cone(cell, apex):
    if apex in cell:
        raise CategoryViolation("cone apex already lies in the base cell")
    joined = tuple(cell) + (apex,)
    if affine_dim(joined) != len(joined) - 1:
        raise CategoryViolation("cone over a cell is not a simplex")
    return joined
