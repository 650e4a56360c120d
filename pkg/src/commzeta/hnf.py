"""Integer/rational lattice utilities: Hermite forms and intersections.

Row convention matches the rest of the engine: a full-rank lattice in Q^d
is given by d rows, row i having its pivot (last nonzero entry) at
column i, so bases are lower triangular.  Used for the abelian fast paths
and as an independent counting oracle for subgroup growth of Z^d.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Iterator, Sequence


def hnf(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row-style Hermite normal form of an integer row lattice.

    Returns lower-triangular rows sorted by pivot column, with positive
    pivots and entries below a pivot reduced into [0, pivot).  Zero rows
    are dropped; the input need not be full rank.
    """
    pivots: dict[int, list[int]] = {}
    stack = [list(r) for r in rows]
    while stack:
        v = stack.pop()
        while True:
            top = _top_index(v)
            if top is None:
                break
            if top not in pivots:
                pivots[top] = v
                break
            w = pivots[top]
            a, b = w[top], v[top]
            if b % a == 0:
                q = b // a
                v = [x - q * y for x, y in zip(v, w)]
                continue
            g, x, y = _xgcd(a, b)
            new = [x * s + y * t for s, t in zip(w, v)]
            stack.append([s - (a // g) * t for s, t in zip(w, new)])
            pivots[top] = new
            v = [s - (b // g) * t for s, t in zip(v, new)]
    out = []
    for j in sorted(pivots):
        row = pivots[j]
        if row[j] < 0:
            row = [-x for x in row]
        out.append(row)
    # reduce below-pivot entries
    for i, row in enumerate(out):
        for krow in reversed(out[:i]):
            j = _top_index(krow)
            q = row[j] // krow[j]
            if q:
                out[i] = row = [x - q * y for x, y in zip(row, krow)]
    return out


def _top_index(v: Sequence[int]) -> int | None:
    for j in range(len(v) - 1, -1, -1):
        if v[j]:
            return j
    return None


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


def hnf_rational(rows: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Hermite-reduced basis of the lattice spanned by rational rows."""
    den = 1
    for r in rows:
        for x in r:
            den = lcm(den, Fraction(x).denominator)
    ints = [[int(Fraction(x) * den) for x in r] for r in rows]
    return [[Fraction(x, den) for x in r] for r in hnf(ints)]


def mat_inv(m: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Exact inverse of a square rational matrix by Gaussian elimination."""
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        inv_p = 1 / a[col][col]
        a[col] = [x * inv_p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def dual_basis(rows: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Rows of the dual lattice: columns of the inverse matrix."""
    inv = mat_inv(rows)
    n = len(inv)
    return [[inv[i][j] for i in range(n)] for j in range(n)]


def lattice_intersection(
    b1: Sequence[Sequence[Fraction]], b2: Sequence[Sequence[Fraction]]
) -> list[list[Fraction]]:
    """Basis of the intersection of two full-rank lattices in Q^d.

    Uses (L1 cap L2)* = L1* + L2*: dualize, sum via Hermite reduction,
    dualize back.
    """
    d1 = dual_basis(b1)
    d2 = dual_basis(b2)
    s = hnf_rational(list(d1) + list(d2))
    if len(s) != len(d1):
        raise ValueError("lattices are not full rank")
    return hnf_rational(dual_basis(s))


def enumerate_hnf(d: int, n: int) -> Iterator[list[list[int]]]:
    """All lower-triangular Hermite bases of sublattices of Z^d of index n.

    Explicit enumeration (not a closed formula) so it can serve as an
    independent counting oracle.
    """
    def diagonals(dim, rem):
        if dim == 1:
            yield [rem]
            return
        for q in _divisors(rem):
            for rest in diagonals(dim - 1, rem // q):
                yield [q] + rest

    def fill(diag):
        # row i has free entries at columns j < i, each in [0, diag[j])
        free = [(i, j) for i in range(d) for j in range(i)]
        def rec(idx, m):
            if idx == len(free):
                yield [row.copy() for row in m]
                return
            i, j = free[idx]
            for v in range(diag[j]):
                m[i][j] = v
                yield from rec(idx + 1, m)
            m[i][j] = 0
        base = [[diag[i] if i == j else 0 for j in range(d)] for i in range(d)]
        yield from rec(0, base)

    for diag in diagonals(d, n):
        yield from fill(diag)


def hnf_sublattice_count(d: int, n: int) -> int:
    """Number of index-n sublattices of Z^d, counted by enumeration."""
    return sum(1 for _ in enumerate_hnf(d, n))


def _divisors(n: int) -> list[int]:
    out = [k for k in range(1, n + 1) if n % k == 0]
    return out
