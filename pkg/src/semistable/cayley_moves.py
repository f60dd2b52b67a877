"""Slab moves and canonical triangulations of Cayley-type polytopes.

The central object is a state: a tuple of simplex factors together with an
ordered block partition of rows.  Each row carries nonnegative integer
dilation coefficients (one per factor), an integer translation, and the
index of the slab it will finally land in.  Row l describes the polytope
sum_j coeffs[j] * P_j + shift placed at slab height e_slab; a state with
all coefficients zero is terminal and its rows read off one simplex cell.

Moves shrink one coefficient at a time and either translate (point factor),
split off a facet (column sum > 1), or fan a slab out over the vertices of
a factor (column sum 1).  Exhausting them depth-first triangulates the
whole polytope; the column choice is canonical (smallest legal) unless a
chooser is supplied, which is how the confluence probe randomizes order.
"""

import itertools
from collections import namedtuple
from fractions import Fraction

from .polytope import (
    affine_dim,
    check_simplicial_cover,
    extreme_points,
    in_hull,
    lp_solve,
    simplex_normalized_volume,
)

Row = namedtuple("Row", ["coeffs", "shift", "slab"])
State = namedtuple("State", ["factors", "blocks", "n_slabs"])


def validate_factors(factors):
    """Require simplices whose direction spaces form a direct sum.

    The move system is only correct on such families: every slab is then a
    product of dilated simplices, which is what makes the fan-out move an
    affine isomorphism.
    """
    diffs = []
    total = 0
    for f in factors:
        k = affine_dim(f)
        if k != len(f) - 1:
            raise ValueError("factor is not a simplex")
        total += k
        diffs.extend(tuple(a - b for a, b in zip(v, f[0])) for v in f[1:])
    if diffs and affine_dim([tuple(0 for _ in diffs[0])] + diffs) != total:
        raise ValueError("factors are not affinely independent")


def initial_state(factors, matrix, partition=None):
    """Set up the state for the polytope with the given dilation matrix.

    factors: an affinely independent family of simplices, each a tuple of
    integer points.  matrix: rows of nonnegative dilation coefficients, one
    column per factor.  partition: ordered list of row-index groups; the
    default is a single block, which gives the plain canonical order.
    """
    factors = tuple(tuple(tuple(v) for v in f) for f in factors)
    validate_factors(factors)
    m = len(matrix)
    d = len(factors[0][0])
    rows = [Row(tuple(int(x) for x in r), (0,) * d, l) for l, r in enumerate(matrix)]
    if any(c < 0 for row in rows for c in row.coeffs):
        raise ValueError("dilation coefficients must be nonnegative")
    if partition is None:
        partition = [list(range(m))]
    blocks = tuple(tuple(rows[i] for i in grp) for grp in partition)
    return State(factors, blocks, m)


def is_terminal(state):
    return all(all(c == 0 for c in row.coeffs) for b in state.blocks for row in b)


def first_active_block(state):
    for k, b in enumerate(state.blocks):
        if any(any(c != 0 for c in row.coeffs) for row in b):
            return k
    return None


def legal_columns(state):
    k = first_active_block(state)
    if k is None:
        return ()
    cols = set()
    for row in state.blocks[k]:
        for j, c in enumerate(row.coeffs):
            if c > 0:
                cols.add(j)
    return tuple(sorted(cols))


def _dec(coeffs, j):
    return coeffs[:j] + (coeffs[j] - 1,) + coeffs[j + 1 :]


def move_successors(state, col):
    """Apply the move in the given column; one or two successor states."""
    k = first_active_block(state)
    block = state.blocks[k]
    j = col
    best = max(row.coeffs[j] for row in block)
    i = next(idx for idx, row in enumerate(block) if row.coeffs[j] == best)
    row = block[i]
    pj = state.factors[j]
    vadd = lambda a, b: tuple(x + y for x, y in zip(a, b))

    if len(pj) == 1:
        v = pj[0]
        new_row = Row(_dec(row.coeffs, j), vadd(row.shift, v), row.slab)
        blocks = _replace_row(state.blocks, k, i, (new_row,))
        return (State(state.factors, blocks, state.n_slabs),)

    total = sum(r.coeffs[j] for b in state.blocks for r in b)
    v = pj[0]
    if total > 1:
        # keep the factor, pay one dilation step into the shift
        row1 = Row(_dec(row.coeffs, j), vadd(row.shift, v), row.slab)
        blocks1 = _replace_row(state.blocks, k, i, (row1,))
        succ1 = State(state.factors, blocks1, state.n_slabs)
        # or drop the first vertex from the factor everywhere and wedge a
        # new slab directly above row i
        facet = pj[1:]
        factors2 = state.factors[:j] + (facet,) + state.factors[j + 1 :]
        inserted = Row(_dec(row.coeffs, j), vadd(row.shift, v), row.slab)
        blocks2 = _replace_row(state.blocks, k, i, (inserted, row))
        succ2 = State(factors2, blocks2, state.n_slabs)
        return (succ1, succ2)

    # column sum exactly one: fan row i out over the factor's vertices
    point = (pj[0],)
    factors2 = state.factors[:j] + (point,) + state.factors[j + 1 :]
    copies = tuple(
        Row(_dec(row.coeffs, j), vadd(row.shift, w), row.slab) for w in pj
    )
    blocks2 = _replace_row(state.blocks, k, i, copies)
    return (State(factors2, blocks2, state.n_slabs),)


def _replace_row(blocks, k, i, replacement):
    block = blocks[k]
    new_block = block[:i] + tuple(replacement) + block[i + 1 :]
    return blocks[:k] + (new_block,) + blocks[k + 1 :]


def terminal_cell(state):
    """Vertices of the finished cell, embedded in Z^d x Z^n_slabs."""
    out = []
    seen = set()
    for b in state.blocks:
        for row in b:
            v = row.shift + tuple(
                1 if t == row.slab else 0 for t in range(state.n_slabs)
            )
            if v not in seen:
                seen.add(v)
                out.append(v)
    return tuple(out)


def triangulate_state(state, choose=None, fuel=1000000):
    """All terminal cells reachable by exhausting moves, depth first.

    choose, if given, picks the move column from the sorted legal columns;
    by default the smallest one is taken, which is the canonical order.
    """
    cells = []
    stack = [state]
    while stack:
        fuel -= 1
        if fuel < 0:
            raise RuntimeError("move system failed to terminate")
        st = stack.pop()
        if is_terminal(st):
            cells.append(terminal_cell(st))
            continue
        cols = legal_columns(st)
        col = cols[0] if choose is None else choose(cols)
        succ = move_successors(st, col)
        # push in reverse so the first successor is processed first
        for s in reversed(succ):
            stack.append(s)
    return tuple(cells)


def triangulate_cayley(factors, matrix, partition=None, choose=None):
    return triangulate_state(initial_state(factors, matrix, partition), choose)


def confluence_probe(factors, matrix, trials=20, seed=0, partition=None):
    """Compare the canonical run against randomized move orders.

    Returns True when every randomized run produces the same set of cells.
    """
    import random

    canonical = {frozenset(c) for c in triangulate_cayley(factors, matrix, partition)}
    rng = random.Random(seed)
    for _ in range(trials):
        chooser = lambda cols: cols[rng.randrange(len(cols))]
        got = {
            frozenset(c)
            for c in triangulate_cayley(factors, matrix, partition, choose=chooser)
        }
        if got != canonical:
            return False
    return True


# ----------------------------------------------------------- membership


def slab_vertex_candidates(factors, matrix):
    """Per slab, points spanning coeffs . P + e_slab; extremes per slab only."""
    d = len(factors[0][0])
    rows = tuple(
        Row(tuple(int(x) for x in r), (0,) * d, l) for l, r in enumerate(matrix)
    )
    return state_vertex_candidates(State(tuple(factors), (rows,), len(matrix)))


def state_vertex_candidates(state):
    """Candidate vertices of the embedded polytope described by a state.

    Several rows may share an output slab (moves merge them affinely), so
    each slab's region is the hull of the union of its rows' dilated sums.
    """
    pts_by_slab = {}
    for b in state.blocks:
        for row in b:
            pts = {row.shift}
            for j, c in enumerate(row.coeffs):
                if c == 0:
                    continue
                pts = {
                    tuple(a + c * b_ for a, b_ in zip(p, v))
                    for p in pts
                    for v in state.factors[j]
                }
            pts_by_slab.setdefault(row.slab, set()).update(pts)
    out = []
    for l in sorted(pts_by_slab):
        for p in extreme_points(sorted(pts_by_slab[l])):
            out.append(
                tuple(int(x) for x in p)
                + tuple(1 if t == l else 0 for t in range(state.n_slabs))
            )
    return tuple(out)


def in_dilated_sum(factors, coeffs, x):
    """Exact test x in sum_j coeffs[j] * P_j for rational coeffs >= 0."""
    d = len(x)
    cols = []
    lhs = [[] for _ in range(d)]
    eqs = []
    for j, f in enumerate(factors):
        sel = []
        for v in f:
            for i in range(d):
                lhs[i].append(Fraction(v[i]))
            sel.append(len(cols))
            cols.append(None)
        eqs.append(sel)
    rows = [list(r) for r in lhs]
    rhs = [Fraction(xi) for xi in x]
    for j, sel in enumerate(eqs):
        row = [Fraction(0)] * len(cols)
        for s in sel:
            row[s] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(coeffs[j]))
    status, _, _ = lp_solve([0] * len(cols), rows, rhs)
    return status == "optimal"


def in_cayley(factors, matrix, point):
    """Membership of (x, mu) in the Cayley polytope of the dilated slabs."""
    d = len(factors[0][0])
    x, mu = point[:d], point[d:]
    if len(mu) != len(matrix):
        raise ValueError("slab part has the wrong length")
    if any(Fraction(t) < 0 for t in mu) or sum(Fraction(t) for t in mu) != 1:
        return False
    coeffs = [
        sum(Fraction(mu[l]) * matrix[l][j] for l in range(len(matrix)))
        for j in range(len(matrix[0]))
    ]
    return in_dilated_sum(factors, coeffs, x)


# ------------------------------------------------------------ the checker


def check_triangulation(factors, matrix, cells):
    """Certify that cells triangulate the Cayley polytope of (factors, matrix).

    Membership of every cell vertex is verified against its own slab, then
    the generic simplicial-cover certificate (volumes and wall conditions)
    runs against the hull of the slab vertex candidates.  Raises
    AssertionError with a reason on failure.
    """
    cand = slab_vertex_candidates(factors, matrix)
    d = len(factors[0][0])
    for v in sorted({v for c in cells for v in c}):
        x, mu = v[:d], v[d:]
        if sum(mu) == 1 and all(t in (0, 1) for t in mu):
            ok = in_dilated_sum(factors, matrix[mu.index(1)], x)
        else:
            ok = in_hull(v, cand)
        assert ok, f"cell vertex {v} outside the polytope"
    return check_simplicial_cover(cells, cand)


def cells_unimodular(cells, lattice):
    """Whether every cell is unimodular for the given reference lattice."""
    return all(simplex_normalized_volume(c, lattice) == 1 for c in cells)


# ------------------------------------------------- canonical dilations


def stcan(simplex, c):
    """Canonical triangulation of the c-fold dilation of a unimodular simplex.

    One move state per flag of faces: the state's single factor is the
    smallest face, and each larger face contributes a slab whose dilation
    coefficient drops with the face dimension.  Vertices of every output
    cell are ordered from the interior out (largest face first).
    """
    verts = tuple(tuple(v) for v in simplex)
    d = len(verts) - 1
    if c < d + 1:
        raise ValueError("dilation factor must exceed the dimension")
    idx = tuple(range(d + 1))
    cells = []
    for r in range(d + 1):
        for base in itertools.combinations(idx, r + 1):
            rest = [i for i in idx if i not in base]
            for order in itertools.permutations(rest):
                sets = [tuple(sorted(base))]
                cur = list(base)
                for nxt in order:
                    cur.append(nxt)
                    sets.append(tuple(sorted(cur)))
                cells.extend(_flag_cells(verts, sets, c, r, d))
    return tuple(cells)


def _flag_cells(verts, sets, c, r, d):
    factor = tuple(verts[i] for i in sets[0])
    rows = []
    for i, face in enumerate(sets):
        coeff = c - (r + i) - 1
        shift = tuple(sum(verts[k][t] for k in face) for t in range(len(verts[0])))
        rows.append((coeff, shift))
    matrix_rows = [
        Row((coeff,), shift, slab) for slab, (coeff, shift) in enumerate(rows)
    ]
    state = State((factor,), (tuple(matrix_rows),), len(rows))
    out = []
    for cell in triangulate_state(state):
        pts = []
        for v in cell:
            x, mu = v[: len(verts[0])], v[len(verts[0]) :]
            pts.append((-mu.index(1), x))
        pts.sort()
        proj = tuple(x for _, x in pts)
        uniq = tuple(dict.fromkeys(proj))
        if affine_dim(uniq) == d:
            out.append(uniq)
    return out
