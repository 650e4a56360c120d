"""Certified grid subgroups: valuation certificates, floors, intersections.

A *grid* with exponent vector u is the set of elements whose coordinate j
has p-valuation >= u_j.  Monomial-by-monomial valuation checks on the
term lists of the group laws certify that a grid is a subgroup, that it
is normalized by a larger grid, and that a p^k-th root maps it into the
integral points.  A *floor* is a grid subgroup proven to lie inside every
lattice under consideration; quotients by a floor are finite, which is
what the intersection routine and the brute-force oracle run on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import inf

from . import polynomials as P
from .goodbasis import (
    GoodBasis,
    LatticeError,
    complete_basis,
    from_exponents,
    member,
)
from .malcev import Element, GroupSpec, element, mul, pow_
from .padic import p_power, vp

_CLOSURE_CAP = 200
_FLOOR_SUM_CAP = 80


class CapExceeded(LatticeError):
    """A configured resource cap was hit; the result is unavailable, not wrong."""


def _term_bound(coeff: Fraction, mono, p: int, a_bounds, b_bounds, k_bound) -> float:
    """Valuation lower bound of one monomial under per-variable bounds."""
    total = vp(coeff, p)
    for var, e in mono:
        if var == "k":
            total += e * k_bound
            continue
        idx = P.coord_index(var) - 1
        bd = a_bounds[idx] if var[0] == "a" else b_bounds[idx]
        if bd == inf:
            return inf
        total += e * bd
    return total


def _poly_bound(poly: P.Poly, p: int, a_bounds, b_bounds=None, k_bound=0.0) -> float:
    return min(
        (_term_bound(c, m, p, a_bounds, b_bounds, k_bound) for c, m in poly),
        default=inf,
    )


def grid_closed(G: GroupSpec, p: int, u) -> bool:
    """Is the grid with exponents u closed under the product law?

    Closure under mu implies closure under inverses (they are solved
    top-down through mu) and hence under all integer powers, so no
    separate power-law certificate is needed.
    """
    return all(_poly_bound(G.mu[j], p, u, u) >= u[j] for j in range(G.d))


def normalizes(G: GroupSpec, p: int, u, w) -> bool:
    """Does the u-grid normalize the w-grid?  (checked via kap both ways)"""
    for j in range(G.d):
        if _poly_bound(G.kap[j], p, u, w) < w[j]:
            return False
        if _poly_bound(G.kap[j], p, w, u) < w[j]:
            return False
    return True


def maps_into_integers(G: GroupSpec, p: int, w, k0: int) -> bool:
    """Does the power law at k = p^-k0 map the w-grid into integral points?"""
    for j in range(G.d):
        if _poly_bound(G.lam[j], p, w, None, -k0) < 0:
            return False
    return True


def grid_bounds(B: GoodBasis) -> tuple[int, ...]:
    """Grid exponents u with the lattice of B inside the u-grid, certified.

    Starts from the rowwise coordinate valuations and propagates through
    the mu/lam monomials until the grid is closed.
    """
    G, p = B.group, B.prime
    u = [inf] * G.d
    for r in B.rows:
        for j, q in enumerate(r.coords):
            if q != 0:
                u[j] = min(u[j], vp(q, p))
    for _ in range(_CLOSURE_CAP):
        changed = False
        for j in range(G.d):
            bd = _poly_bound(G.mu[j], p, u, u)
            if bd < u[j]:
                u[j] = bd
                changed = True
        if not changed:
            return tuple(int(x) for x in u)
    raise LatticeError("grid closure did not stabilize")


def _diag_element(G: GroupSpec, p: int, j: int, w: int) -> Element:
    coords = [Fraction(0)] * G.d
    coords[j] = p_power(p, w)
    return element(G, coords)


def _membership_base(B: GoodBasis, j: int, start: int) -> int:
    """Least w >= start with p^w e_j a member of B (monotone upward)."""
    p = B.prime
    for w in range(start, start + 60):
        if member(_diag_element(B.group, p, j, w), B) is not None:
            return w
    raise LatticeError(f"no diagonal p-power member found at coordinate {j + 1}")


@dataclass(frozen=True)
class CertifiedFloor:
    group: GroupSpec
    prime: int
    weights: tuple[int, ...]
    basis: GoodBasis
    certificate: dict


def floor_weights(
    G: GroupSpec,
    p: int,
    contained_in: list[GoodBasis],
    ambient_u,
    root_k: int | None = None,
    nonnegative: bool = False,
) -> tuple[int, ...]:
    """Smallest weight vector (by total sum, then lexicographically) whose
    diagonal grid passes all certificates:

      - subgroup closure of the W-grid,
      - the ambient grid normalizes the W-grid,
      - membership of each diagonal generator in every lattice of
        `contained_in`,
      - optionally, the p^-root_k power maps the W-grid into the integral
        points (which pins the grid inside every lattice of bounded
        commensurability index).
    """
    base = []
    for j in range(G.d):
        lo = 0 if nonnegative else min(int(b.e_vector()[j]) for b in contained_in)
        w = lo
        for B in contained_in:
            w = max(w, _membership_base(B, j, w))
        base.append(w)
    for extra in range(_FLOOR_SUM_CAP):
        for offs in _compositions(extra, G.d):
            W = tuple(b + o for b, o in zip(base, offs))
            if not grid_closed(G, p, W):
                continue
            if not normalizes(G, p, ambient_u, W):
                continue
            if root_k is not None and not maps_into_integers(G, p, W, root_k):
                continue
            return W
    raise CapExceeded("floor weight search exceeded the sum cap")


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of given length and sum, lex order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def certified_floor(
    G: GroupSpec, p: int, k: int, envelope: GoodBasis
) -> CertifiedFloor:
    """Diagonal grid subgroup contained in every lattice with
    commensurability valuation <= k, normal in the envelope.

    Every element of the W-grid is a p^k-th power of an integral element;
    a subgroup at index valuation <= k contains those, so the grid sits
    inside every enumerated lattice.
    """
    u = grid_bounds(envelope)
    gamma = _standard(G, p)
    W = floor_weights(G, p, [gamma], u, root_k=k, nonnegative=True)
    rows = tuple(_diag_element(G, p, j, W[j]) for j in range(G.d))
    basis = GoodBasis(G, rows, p)
    cert = {
        "weights": list(W),
        "envelope_grid": [int(x) for x in u],
        "root_exponent": k,
        "checks": ["subgroup", "normal_in_envelope", "p^k-power containment"],
    }
    return CertifiedFloor(G, p, W, basis, cert)


def _standard(G: GroupSpec, p: int) -> GoodBasis:
    from .goodbasis import standard_lattice

    return standard_lattice(G, p)


def reduce_mod_grid(x: Element, p: int, W) -> Element:
    """Canonical representative of the coset x * (W-grid).

    Right multiplication by a diagonal grid generator shifts exactly one
    coordinate, so peeling from the top coordinate down lands every
    coordinate in [0, p^W_j).
    """
    G = x.group
    for j in range(G.d - 1, -1, -1):
        step = p_power(p, W[j])
        t = (x.coords[j] / step).__floor__()
        if t:
            x = mul(x, pow_(_diag_element(G, p, j, W[j]), -t))
    return x


def coset_reps_mod_grid(B: GoodBasis, W, cap: int) -> dict[tuple, Element]:
    """Canonical representatives of B / (W-grid), keyed by coordinates."""
    G, p = B.group, B.prime
    e = B.e_vector()
    ranges = []
    for j in range(G.d):
        if W[j] < e[j]:
            raise LatticeError("floor is not inside the lattice")
        ranges.append(p ** (W[j] - e[j]))
    total = 1
    for r in ranges:
        total *= r
    if total > cap:
        raise CapExceeded(f"coset enumeration of size {total} exceeds cap {cap}")
    reps: dict[tuple, Element] = {}
    for m in itertools.product(*(range(r) for r in ranges)):
        el = reduce_mod_grid(from_exponents(B, m), p, W)
        reps[el.coords] = el
    if len(reps) != total:
        raise LatticeError("coset representatives are not distinct")
    return reps


def intersect_via_floor(H: GoodBasis, K: GoodBasis, max_quotient: int = 65536) -> GoodBasis:
    """Normative intersection: common certified floor, finite coset sets.

    The floor F is a grid subgroup inside both lattices and normal in
    their join, so both quotients are finite coset sets with canonical
    representatives; the intersection is generated by F together with the
    common representatives.
    """
    G, p = H.group, H.prime
    if p is None:
        raise LatticeError("floor intersection requires an active prime")
    join = complete_basis(list(H.rows) + list(K.rows), G, p)
    u = grid_bounds(join)
    W = floor_weights(G, p, [H, K], u)
    reps_h = coset_reps_mod_grid(H, W, max_quotient)
    reps_k = coset_reps_mod_grid(K, W, max_quotient)
    common = [reps_h[c] for c in reps_h.keys() & reps_k.keys()]
    floor_rows = [_diag_element(G, p, j, W[j]) for j in range(G.d)]
    return complete_basis(floor_rows + common, G, p)


# ---------------------------------------------------------------------------
# valuation bounds for p-th root solutions


def root_solution_bounds(H: GoodBasis, p: int) -> tuple[int, ...]:
    """Grid exponents s with every p-th root of an element of H inside
    the s-grid (hence the one-step root group too, once closed).

    Follows the membership peeling of g^p in H symbolically: coordinate j
    of the power law is p*a_j plus terms in higher coordinates, so the
    divisibility constraint at each level bounds vp(a_j) from below given
    the bounds already derived for the higher coordinates.  All estimates
    are conservative minima over the monomial term lists.
    """
    G = H.group
    d = G.d
    e = H.e_vector()
    # wb[i][j]: valuation bound of coordinate j of an arbitrary integer
    # power of row i.
    wb = []
    for i in range(d):
        row_bounds = [vp(q, p) for q in H.rows[i].coords]
        wb_i = [
            _poly_bound(G.lam[j], p, row_bounds, None, 0) for j in range(d)
        ]
        wb.append(wb_i)

    s = [0.0] * d
    xf = [0.0] * d  # bound of coordinate j of the evolving word
    curq = [0.0] * d
    corr = [inf] * d
    for j in range(d - 1, -1, -1):
        # lam_j contributions other than the leading p*a_j term
        lead = P.poly([(1, {"k": 1, f"a{j + 1}": 1})])
        qpart = P.sub(G.lam[j], lead)
        curq[j] = _poly_bound(qpart, p, s, None, 1)
        # corrections from peeling rows i > j
        c = inf
        for i in range(j + 1, d):
            c = min(c, wb[i][j])
            mu_corr = P.sub(
                G.mu[j], P.poly([(1, {f"a{j + 1}": 1}), (1, {f"b{j + 1}": 1})])
            )
            c = min(c, _poly_bound(mu_corr, p, xf, wb[i]))
        corr[j] = c
        other = min(curq[j], corr[j])
        s[j] = min(e[j], other) - 1
        xf[j] = min(1 + s[j], other)

    # make the grid a certified subgroup and a superset of H
    u_h = grid_bounds(H)
    s = [min(a, b) for a, b in zip(s, u_h)]
    for _ in range(_CLOSURE_CAP):
        changed = False
        for j in range(d):
            bd = _poly_bound(G.mu[j], p, s, s)
            if bd < s[j]:
                s[j] = bd
                changed = True
        if not changed:
            break
    else:
        raise LatticeError("root grid closure did not stabilize")
    return tuple(int(x) for x in s)
