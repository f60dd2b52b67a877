"""Exact integer lattice linear algebra.

Vectors are tuples of ints, matrices are tuples of row tuples.  A lattice is
given by a tuple of generating rows; `hnf` puts such a generating set into
row-style Hermite normal form, which is canonical, so two lattices are equal
iff their `hnf` bases are equal as tuples.  Everything here is exact; the
only number types that appear are int and fractions.Fraction.
"""

from fractions import Fraction


def xgcd(a, b):
    """Return (g, s, t) with g = gcd(a, b) = s*a + t*b and g >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def vadd(u, v):
    return tuple(a + b for a, b in zip(u, v))


def vsub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def vscale(c, v):
    return tuple(c * a for a in v)


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def matvec(mat, v):
    return tuple(dot(row, v) for row in mat)


def matmul(a, b):
    bt = transpose(b)
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def transpose(mat):
    return tuple(zip(*mat)) if mat else ()


def identity(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def hnf(rows, transform=False):
    """Row-style Hermite normal form of the lattice generated by `rows`.

    Returns the canonical basis as a tuple of nonzero rows: row echelon
    shape, positive pivots, entries above each pivot reduced into
    [0, pivot).  With transform=True also returns a unimodular U (size =
    len(rows)) with U * rows equal to the HNF padded by zero rows.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    work = [list(r) for r in rows]
    u = [list(r) for r in identity(m)]
    rank = 0
    for col in range(n):
        piv = None
        for i in range(rank, m):
            if work[i][col]:
                piv = i
                break
        if piv is None:
            continue
        work[rank], work[piv] = work[piv], work[rank]
        u[rank], u[piv] = u[piv], u[rank]
        for i in range(rank + 1, m):
            if not work[i][col]:
                continue
            g, s, t = xgcd(work[rank][col], work[i][col])
            p, q = work[rank][col] // g, work[i][col] // g
            row_r, row_i = work[rank], work[i]
            urow_r, urow_i = u[rank], u[i]
            work[rank] = [s * x + t * y for x, y in zip(row_r, row_i)]
            work[i] = [p * y - q * x for x, y in zip(row_r, row_i)]
            u[rank] = [s * x + t * y for x, y in zip(urow_r, urow_i)]
            u[i] = [p * y - q * x for x, y in zip(urow_r, urow_i)]
        if work[rank][col] < 0:
            work[rank] = [-x for x in work[rank]]
            u[rank] = [-x for x in u[rank]]
        for j in range(rank):
            q = work[j][col] // work[rank][col]
            if q:
                work[j] = [x - q * y for x, y in zip(work[j], work[rank])]
                u[j] = [x - q * y for x, y in zip(u[j], u[rank])]
        rank += 1
    basis = tuple(tuple(r) for r in work[:rank])
    if transform:
        return basis, tuple(tuple(r) for r in u)
    return basis


def lattice_basis(vectors):
    """Canonical basis of the lattice generated by `vectors` (may be empty)."""
    vectors = tuple(tuple(v) for v in vectors)
    if not vectors:
        return ()
    return hnf(vectors)


def snf(mat):
    """Smith normal form.  Returns (D, U, V) with U*mat*V = D, U and V
    unimodular, D diagonal with d1 | d2 | ... and nonnegative entries."""
    m = len(mat)
    n = len(mat[0]) if m else 0
    a = [list(r) for r in mat]
    u = [list(r) for r in identity(m)]
    v = [list(r) for r in identity(n)]

    def row_op(i, j, s, t, p, q):
        # (row i, row j) <- (s*ri + t*rj, p*ri + q*rj), det = sq - tp = +-1
        a[i], a[j] = (
            [s * x + t * y for x, y in zip(a[i], a[j])],
            [p * x + q * y for x, y in zip(a[i], a[j])],
        )
        u[i], u[j] = (
            [s * x + t * y for x, y in zip(u[i], u[j])],
            [p * x + q * y for x, y in zip(u[i], u[j])],
        )

    def col_op(i, j, s, t, p, q):
        for row in (a, v):
            for r in row:
                r[i], r[j] = s * r[i] + t * r[j], p * r[i] + q * r[j]

    def clear_at(k):
        while True:
            # kill column k below the pivot; plain elimination when the pivot
            # divides (a gcd rotation there would swap rows forever)
            for i in range(k + 1, m):
                if a[i][k]:
                    if a[i][k] % a[k][k] == 0:
                        q = a[i][k] // a[k][k]
                        a[i] = [x - q * y for x, y in zip(a[i], a[k])]
                        u[i] = [x - q * y for x, y in zip(u[i], u[k])]
                    else:
                        g, s, t = xgcd(a[k][k], a[i][k])
                        row_op(k, i, s, t, -(a[i][k] // g), a[k][k] // g)
            # kill row k right of the pivot
            for j in range(k + 1, n):
                if a[k][j]:
                    if a[k][j] % a[k][k] == 0:
                        q = a[k][j] // a[k][k]
                        for row in (a, v):
                            for r in row:
                                r[j] -= q * r[k]
                    else:
                        g, s, t = xgcd(a[k][k], a[k][j])
                        col_op(k, j, s, t, -(a[k][j] // g), a[k][k] // g)
            if all(a[i][k] == 0 for i in range(k + 1, m)) and all(
                a[k][j] == 0 for j in range(k + 1, n)
            ):
                return

    for k in range(min(m, n)):
        piv = None
        for j in range(k, n):
            for i in range(k, m):
                if a[i][j]:
                    piv = (i, j)
                    break
            if piv:
                break
        if piv is None:
            break
        i0, j0 = piv
        if i0 != k:
            row_op(k, i0, 0, 1, 1, 0)
        if j0 != k:
            col_op(k, j0, 0, 1, 1, 0)
        clear_at(k)
        # enforce divisibility d_k | everything in the remaining block
        while True:
            bad = None
            for i in range(k + 1, m):
                for j in range(k + 1, n):
                    if a[i][j] % a[k][k]:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            # fold the offending row into row k and re-clear
            a[k] = [x + y for x, y in zip(a[k], a[bad])]
            u[k] = [x + y for x, y in zip(u[k], u[bad])]
            clear_at(k)
        if a[k][k] < 0:
            a[k] = [-x for x in a[k]]
            u[k] = [-x for x in u[k]]
    d = tuple(tuple(a[i][j] if i == j else 0 for j in range(n)) for i in range(m))
    return d, tuple(tuple(r) for r in u), tuple(tuple(r) for r in v)


def det(mat):
    """Exact determinant of a square integer (or Fraction) matrix."""
    n = len(mat)
    if n == 0:
        return 1
    a = [[Fraction(x) for x in row] for row in mat]
    sign = 1
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k]), None)
        if piv is None:
            return 0
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            a[i] = [x - f * y for x, y in zip(a[i], a[k])]
    out = Fraction(sign)
    for k in range(n):
        out *= a[k][k]
    return int(out) if out.denominator == 1 else out


def rational_solve(mat, rhs):
    """One solution x of mat * x = rhs over the rationals, or None.

    mat is m x n (rows), rhs has length m; x comes back as a tuple of
    Fractions of length n.
    """
    m = len(mat)
    n = len(mat[0]) if m else 0
    a = [[Fraction(x) for x in row] + [Fraction(b)] for row, b in zip(mat, rhs)]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        a[r] = [x / a[r][c] for x in a[r]]
        for i in range(m):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if a[i][n]:
            return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = a[i][n]
    return tuple(x)


def rational_kernel(mat):
    """Basis of the right kernel {x : mat * x = 0}, cleared to integer rows."""
    m = len(mat)
    n = len(mat[0]) if m else 0
    a = [[Fraction(x) for x in row] for row in mat]
    pivots = {}
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        a[r] = [x / a[r][c] for x in a[r]]
        for i in range(m):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots[c] = r
        r += 1
    out = []
    free = [c for c in range(n) if c not in pivots]
    for c in free:
        vec = [Fraction(0)] * n
        vec[c] = Fraction(1)
        for pc, pr in pivots.items():
            vec[pc] = -a[pr][c]
        denom = 1
        for x in vec:
            denom = denom * x.denominator // _gcd(denom, x.denominator)
        out.append(tuple(int(x * denom) for x in vec))
    return tuple(out)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def in_lattice(v, basis):
    """Is v an integer combination of the basis rows?"""
    coeffs = integer_coords(v, basis)
    return coeffs is not None


def integer_coords(v, basis):
    """Coefficients expressing v over the basis rows, or None.

    The basis need not be square; the coefficients are unique when the rows
    are independent (which `hnf` output always is).
    """
    if not basis:
        return () if all(x == 0 for x in v) else None
    sol = rational_solve(transpose(basis), v)
    if sol is None:
        return None
    if any(x.denominator != 1 for x in sol):
        return None
    return tuple(int(x) for x in sol)


def kernel_basis(mat):
    """Canonical basis of the integer kernel {x in Z^n : mat * x = 0}."""
    m = len(mat)
    n = len(mat[0]) if m else 0
    if n == 0:
        return ()
    if m == 0:
        return identity(n)
    h, u = hnf(transpose(mat), transform=True)
    rank = len(h)
    return lattice_basis(u[rank:]) if rank < n else ()


def saturation(basis):
    """Canonical basis of (Q-span of the rows) intersected with Z^d."""
    basis = lattice_basis(basis)
    if not basis:
        return ()
    d = len(basis[0])
    perp = rational_kernel(basis)
    if not perp:
        return identity(d)
    return kernel_basis(perp)


def lattice_index(sub, sup):
    """Index [sup : sub] of one lattice in another (both given by rows).

    Raises ValueError when sub is not a finite-index sublattice of sup.
    """
    sub_b = lattice_basis(sub)
    sup_b = lattice_basis(sup)
    if len(sub_b) != len(sup_b):
        raise ValueError("sublattice has smaller rank, index is infinite")
    coeff = []
    for g in sub_b:
        c = integer_coords(g, sup_b)
        if c is None:
            raise ValueError("not a sublattice")
        coeff.append(c)
    d = det(coeff)
    if d == 0:
        raise ValueError("degenerate sublattice")
    return abs(d)


def quotient_group(sub, sup):
    """Invariant factors (> 1) of sup / sub, smallest first."""
    sub_b = lattice_basis(sub)
    sup_b = lattice_basis(sup)
    coeff = []
    for g in sub_b:
        c = integer_coords(g, sup_b)
        if c is None:
            raise ValueError("not a sublattice")
        coeff.append(c)
    if not coeff:
        return ()
    d, _, _ = snf(coeff)
    k = min(len(d), len(d[0]) if d else 0)
    factors = [d[i][i] for i in range(k)]
    if any(f == 0 for f in factors) or len(sub_b) < len(sup_b):
        raise ValueError("quotient is infinite")
    return tuple(sorted(f for f in factors if f > 1))


def image_basis(mat, domain_basis=None):
    """Canonical basis of mat applied to Z^n (or to the given row lattice)."""
    n = len(mat[0]) if mat else 0
    gens = domain_basis if domain_basis is not None else identity(n)
    return lattice_basis(tuple(matvec(mat, g) for g in gens))


def preimage_basis(mat, target_basis):
    """Canonical basis of {x in Z^n : mat * x in the target row lattice}."""
    m = len(mat)
    n = len(mat[0]) if mat else 0
    tgt = lattice_basis(target_basis)
    if not tgt:
        return kernel_basis(mat)
    # solve mat*x - sum y_i g_i = 0 in integers, project onto x
    cols = [[mat[i][j] for i in range(m)] for j in range(n)]
    cols += [[-g[i] for i in range(m)] for g in tgt]
    stacked = transpose(tuple(tuple(c) for c in cols))
    ker = kernel_basis(stacked)
    return lattice_basis(tuple(k[:n] for k in ker))
