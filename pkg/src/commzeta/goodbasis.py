"""Triangular good-basis algebra for lattices in the rational points.

A lattice commensurable with the integer points is represented by a
lower-triangular basis: row i generates, together with rows 1..i-1, the
intersection of the lattice with the i-th term of the central series.
Canonical forms make such bases unique per lattice, which is what the
whole enumeration's deduplication rests on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

from . import hnf as _hnf
from .malcev import Element, GroupSpec, comm, element, identity, inv, mul, pow_
from .padic import is_p_power, vp

SERIAL_VERSION = 1

#: iteration guard for the Euclidean sifting loop
_SIFT_CAP = 10_000


class LatticeError(ValueError):
    pass


class RankDeficientError(LatticeError):
    pass


@dataclass(frozen=True)
class GoodBasis:
    group: GroupSpec = field(repr=False)
    rows: tuple[Element, ...]
    prime: int | None = None

    def __post_init__(self):
        d = self.group.d
        if len(self.rows) != d:
            raise LatticeError(f"need {d} rows, got {len(self.rows)}")
        for i, r in enumerate(self.rows):
            if any(r.coords[j] != 0 for j in range(i + 1, d)):
                raise LatticeError(f"row {i + 1} has support above its pivot")
            if r.coords[i] == 0:
                raise LatticeError(f"row {i + 1} has zero diagonal")
            if self.prime is not None and not r.is_p_local(self.prime):
                raise LatticeError(
                    f"row {i + 1} is not {self.prime}-local: {r.coords}"
                )

    def diag(self, i: int) -> Fraction:
        return self.rows[i].coords[i]

    def e_vector(self) -> tuple[int, ...]:
        """Diagonal p-valuations; requires p-local mode and p-power diagonals."""
        if self.prime is None:
            raise LatticeError("e-vector requires an active prime")
        es = []
        for i in range(self.group.d):
            q = self.diag(i)
            if not is_p_power(q, self.prime):
                raise LatticeError(
                    f"diagonal {q} is not a signed power of {self.prime}"
                )
            es.append(int(vp(q, self.prime)))
        return tuple(es)

    def det(self) -> Fraction:
        q = Fraction(1)
        for i in range(self.group.d):
            q *= self.diag(i)
        return q

    def key(self) -> str:
        """Canonical serialization; stable deduplication key.

        Only meaningful on canonical-form bases.
        """
        parts = [f"v{SERIAL_VERSION}", self.group.gid, str(self.prime)]
        if self.prime is not None:
            parts.append(",".join(str(e) for e in self.e_vector()))
        else:
            parts.append(",".join(str(self.diag(i)) for i in range(self.group.d)))
        off = []
        for i, r in enumerate(self.rows):
            for j in range(i):
                off.append(str(r.coords[j]))
        parts.append(",".join(off))
        return ";".join(parts)


def basis_from_coords(
    G: GroupSpec, rows: Sequence[Sequence], prime: int | None = None
) -> GoodBasis:
    return GoodBasis(G, tuple(element(G, r) for r in rows), prime)


def standard_lattice(G: GroupSpec, prime: int | None = None) -> GoodBasis:
    rows = []
    for i in range(G.d):
        coords = [Fraction(0)] * G.d
        coords[i] = Fraction(1)
        rows.append(element(G, coords))
    return GoodBasis(G, tuple(rows), prime)


def _top_index(g: Element) -> int | None:
    for j in range(g.group.d - 1, -1, -1):
        if g.coords[j] != 0:
            return j
    return None


def member(g: Element, B: GoodBasis) -> tuple[int, ...] | None:
    """Integer exponents m with g = row_1^m1 * ... * row_d^md, or None.

    Coordinate j of a product of rows with support <= j is additive, so
    the exponents peel off uniquely from the top coordinate downward.
    """
    d = B.group.d
    m = [0] * d
    cur = g
    for j in range(d - 1, -1, -1):
        q = cur.coords[j] / B.diag(j)
        if q.denominator != 1:
            return None
        m[j] = int(q)
        if m[j]:
            cur = mul(cur, inv(pow_(B.rows[j], m[j])))
    if any(c != 0 for c in cur.coords):
        raise LatticeError("peeling did not terminate at the identity")
    return tuple(m)


def from_exponents(B: GoodBasis, m: Sequence[int]) -> Element:
    out = identity(B.group)
    for r, k in zip(B.rows, m):
        if k:
            out = mul(out, pow_(r, k))
    return out


def complete_basis(
    gens: Iterable[Element], G: GroupSpec, prime: int | None = None
) -> GoodBasis:
    """Good basis of the subgroup generated by gens.

    Triangular Euclidean insertion on top coordinates, then commutator
    closure until stable.  The generators must span full Hirsch length;
    in p-local mode every resulting diagonal must be a signed p-power.
    """
    gens = list(gens)
    pivots: dict[int, Element] = {}
    steps = 0

    def sift(g: Element) -> bool:
        nonlocal steps
        changed = False
        while True:
            steps += 1
            if steps > _SIFT_CAP:
                raise LatticeError("sifting did not stabilize (non-lattice input?)")
            j = _top_index(g)
            if j is None:
                return changed
            if j not in pivots:
                pivots[j] = g
                return True
            h = pivots[j]
            a, b = h.coords[j], g.coords[j]
            den = lcm(a.denominator, b.denominator)
            na, nb = int(a * den), int(b * den)
            if nb % na == 0:
                g = mul(g, inv(pow_(h, nb // na)))
                continue
            gg, x, y = _hnf._xgcd(na, nb)
            new = mul(pow_(h, x), pow_(g, y))
            pivots[j] = new
            changed = True
            stack.append(mul(h, inv(pow_(new, na // gg))))
            g = mul(g, inv(pow_(new, nb // gg)))

    stack = list(gens)
    while stack:
        sift(stack.pop())

    # commutator closure: a good basis must satisfy
    # [row_i, row_j] in <rows below i>, which holds once the pivot set is
    # closed under pairwise commutators.
    if not G.is_abelian:
        for _ in range(_SIFT_CAP):
            changed = False
            items = sorted(pivots.items())
            for _, hi in items:
                for _, hj in items:
                    c = comm(hi, hj)
                    if _top_index(c) is None:
                        continue
                    stack = [c]
                    while stack:
                        if sift(stack.pop()):
                            changed = True
            if not changed:
                break
        else:
            raise LatticeError("commutator closure did not stabilize")

    if len(pivots) != G.d:
        raise RankDeficientError(
            f"generators span rank {len(pivots)} < {G.d}"
        )
    B = GoodBasis(G, tuple(pivots[j] for j in range(G.d)), prime)
    B = canonical_form(B)
    for g in gens:
        if member(g, B) is None:
            raise LatticeError("completion lost a generator (non-lattice input?)")
    return B


def canonical_form(B: GoodBasis) -> GoodBasis:
    """Unique representative of the lattice spanned by B.

    Diagonals are sign-normalized (to plain p-powers in p-local mode) and
    each off-diagonal coordinate j of row i is brought into [0, diag_j)
    by left-multiplying with powers of row j.  Left multiplication by an
    element supported on coordinates <= j shifts coordinate j additively
    and leaves higher coordinates alone, so the reduction is exact.
    """
    d = B.group.d
    rows = list(B.rows)
    for i in range(d):
        if rows[i].coords[i] < 0:
            rows[i] = inv(rows[i])
    if B.prime is not None:
        for i in range(d):
            if not is_p_power(rows[i].coords[i], B.prime):
                raise LatticeError(
                    f"diagonal {rows[i].coords[i]} is not a power of {B.prime}: "
                    "non-p commensurability factor"
                )
    for i in range(1, d):
        r = rows[i]
        for j in range(i - 1, -1, -1):
            dj = rows[j].coords[j]
            t = (r.coords[j] / dj).__floor__()
            if t:
                r = mul(pow_(rows[j], -t), r)
        rows[i] = r
    return GoodBasis(B.group, tuple(rows), B.prime)


def det_index(H: GoodBasis, K: GoodBasis) -> int:
    """log_p [K : H] via the determinant formula, with containment check."""
    if H.group.gid != K.group.gid or H.prime != K.prime:
        raise LatticeError("det_index needs bases of the same group and prime")
    if H.prime is None:
        raise LatticeError("det_index requires an active prime")
    for r in H.rows:
        if member(r, K) is None:
            raise LatticeError("containment violated: H is not a sublattice of K")
    return sum(H.e_vector()) - sum(K.e_vector())


def same_lattice(A: GoodBasis, B: GoodBasis) -> bool:
    return all(member(r, B) is not None for r in A.rows) and all(
        member(r, A) is not None for r in B.rows
    )


# ---------------------------------------------------------------------------
# intersections and the commensurability index


def intersect(H: GoodBasis, K: GoodBasis, max_quotient: int = 65536) -> GoodBasis:
    """Canonical basis of the intersection of two commensurable lattices.

    Abelian groups go through exact lattice intersection; the general
    p-local case uses the certified-floor construction (enumerate both
    quotients modulo a common normal floor and intersect coset sets).
    Both routes agree on the abelian test suite.
    """
    if H.group.gid != K.group.gid or H.prime != K.prime:
        raise LatticeError("intersect needs bases of the same group and prime")
    if H.group.is_abelian:
        rows = _hnf.lattice_intersection(
            [list(r.coords) for r in H.rows], [list(r.coords) for r in K.rows]
        )
        return canonical_form(basis_from_coords(H.group, rows, H.prime))
    from .floors import intersect_via_floor

    return intersect_via_floor(H, K, max_quotient=max_quotient)


def intersect_normative(H: GoodBasis, K: GoodBasis, max_quotient: int = 65536) -> GoodBasis:
    """Floor-based intersection regardless of group shape (for cross-checks)."""
    from .floors import intersect_via_floor

    return intersect_via_floor(H, K, max_quotient=max_quotient)


def comm_index(H: GoodBasis, K: GoodBasis) -> tuple[int, int]:
    """(a, b) with a = log_p [K : H cap K], b = log_p [H : H cap K].

    When K is the standard lattice the determinant identity
    a + b = 2*sum(e(HcapK)) - sum(e(H)) is asserted.
    """
    D = intersect(H, K)
    a = det_index(D, K)
    b = det_index(D, H)
    if K.prime is not None and all(
        K.diag(i) == 1 for i in range(K.group.d)
    ) and all(all(r.coords[j] == 0 for j in range(i)) for i, r in enumerate(K.rows)):
        assert a + b == 2 * sum(D.e_vector()) - sum(H.e_vector()), (
            "determinant index identity violated"
        )
    return a, b


def comm_index_global(H: GoodBasis, K: GoodBasis) -> tuple[int, int]:
    """Plain integer indices ([K : H cap K], [H : H cap K]); abelian only.

    Cross-checked against the determinant formula: the commensurability
    index equals numerator*denominator of det(H cap K)^2 / (det H det K)
    ... in reduced form.
    """
    if not H.group.is_abelian:
        raise LatticeError("global commensurability index implemented for abelian groups")
    rows = _hnf.lattice_intersection(
        [list(r.coords) for r in H.rows], [list(r.coords) for r in K.rows]
    )
    D = canonical_form(basis_from_coords(H.group, rows, None))
    ia = abs(D.det() / K.det())
    ib = abs(D.det() / H.det())
    if ia.denominator != 1 or ib.denominator != 1:
        raise LatticeError("containment violated in global intersection")
    return int(ia), int(ib)
