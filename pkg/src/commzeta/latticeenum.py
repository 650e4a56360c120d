"""Enumeration of lattices commensurable with the integer points.

Two independent routes to the commensurability growth coefficients:

* the *search* route walks the commensurability graph (maximal subgroups
  down, minimal overgroups up inside the one-step root envelope) with
  canonical-form deduplication, and

* the *oracle* route brute-forces every subgroup of a finite quotient
  (ambient grid modulo a certified floor) and tallies indices by set
  intersection, sharing no graph logic with the search.

Agreement of the two is the main correctness gate of the engine.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .floors import (
    CapExceeded,
    certified_floor,
    coset_reps_mod_grid,
    floor_weights,
    root_solution_bounds,
)
from .goodbasis import (
    GoodBasis,
    LatticeError,
    basis_from_coords,
    comm_index,
    complete_basis,
    det_index,
    from_exponents,
    member,
    standard_lattice,
)
from .gridquotient import GridQuotient
from .malcev import GroupSpec, comm, element, load_group, mul, pow_
from .padic import p_power


# ---------------------------------------------------------------------------
# index-p neighbors


def maximal_subgroups_p(H: GoodBasis) -> list[GoodBasis]:
    """All index-p subgroups of H, via hyperplanes of H/(H^p [H,H]).

    Index-p subgroups are kernels of nonzero homomorphisms H -> Z/p up to
    scalar; a hom is any assignment on the basis rows that kills the
    exponent vectors of the pairwise row commutators.
    """
    G, p = H.group, H.prime
    if p is None:
        raise LatticeError("maximal subgroups need an active prime")
    d = G.d
    rel = []
    if not G.is_abelian:
        for i in range(d):
            for j in range(i + 1, d):
                m = member(comm(H.rows[i], H.rows[j]), H)
                if m is None:
                    raise LatticeError("basis is not commutator-closed")
                rel.append([x % p for x in m])
    null = _nullspace_mod_p(rel, d, p)
    out = []
    for v in _projective_points(null, p):
        t = next(i for i in range(d) if v[i] % p != 0)
        inv_t = pow(v[t], -1, p)
        v = [(x * inv_t) % p for x in v]
        gens = [pow_(H.rows[t], p)]
        for i in range(d):
            if i != t:
                gens.append(mul(H.rows[i], pow_(H.rows[t], -v[i])))
        K = complete_basis(gens, G, p)
        assert det_index(K, H) == 1, "hyperplane kernel has wrong index"
        out.append(K)
    assert len(out) == (p ** _rank(null, p) - 1) // (p - 1)
    return out


def _nullspace_mod_p(rows: list[list[int]], d: int, p: int) -> list[list[int]]:
    """Basis of the mod-p nullspace of the given constraint rows."""
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(d):
        piv = next((i for i in range(r, len(m)) if m[i][c] % p), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv_ = pow(m[r][c], -1, p)
        m[r] = [(x * inv_) % p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] % p:
                f = m[i][c]
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    basis = []
    free = [c for c in range(d) if c not in pivots]
    for fc in free:
        v = [0] * d
        v[fc] = 1
        for i, pc in enumerate(pivots):
            v[pc] = (-m[i][fc]) % p
        basis.append(v)
    return basis


def _rank(basis: list[list[int]], p: int) -> int:
    return len(basis)


def _projective_points(basis: list[list[int]], p: int):
    """One representative per line of the span of the basis vectors."""
    r = len(basis)
    seen = set()
    for coeffs in itertools.product(range(p), repeat=r):
        if all(c == 0 for c in coeffs):
            continue
        v = [sum(c * basis[i][j] for i, c in enumerate(coeffs)) % p
             for j in range(len(basis[0]))]
        t = next(i for i, x in enumerate(v) if x)
        inv_t = pow(v[t], -1, p)
        key = tuple((x * inv_t) % p for x in v)
        if key not in seen:
            seen.add(key)
            yield list(key)


def root_envelope(H: GoodBasis, max_quotient: int = 65536) -> GoodBasis:
    """The group generated by all p-th roots of elements of H.

    Roots of g^p in H live inside a certified solution grid; the root set
    is a union of cosets of a floor normal in that grid, so scanning the
    finite quotient for points whose p-th power lands in H finds a full
    generating set.
    """
    G, p = H.group, H.prime
    if p is None:
        raise LatticeError("root envelope needs an active prime")
    s = root_solution_bounds(H, p)
    W = floor_weights(G, p, [H], s)
    Q = GridQuotient(G, p, s, W, max_size=max_quotient)
    h_img = np.zeros(Q.size, dtype=bool)
    for c in coset_reps_mod_grid(H, W, max_quotient):
        h_img[Q.index_of_coords(c)] = True
    powp = Q.pow_all(p)
    cand = np.nonzero(h_img[powp] & ~h_img)[0]
    B = H
    for idx in cand:
        el = element(G, Q.coords_of(int(idx)))
        if member(el, B) is None:
            B = complete_basis(list(B.rows) + [el], G, p)
    bound = G.d * G.c * (G.c + 1) // 2
    if det_index(H, B) > bound:
        raise LatticeError("root envelope exceeds the index bound d*c*(c+1)/2")
    return B


def minimal_overgroups_p(H: GoodBasis, max_quotient: int = 65536) -> list[GoodBasis]:
    """All overgroups K > H of index p.

    Any such K is generated by H and a single coset of the one-step root
    envelope: g must normalize H and have g^p in H.
    """
    G, p = H.group, H.prime
    E = root_envelope(H, max_quotient)
    ranges = [p_power(p, he - ee) for he, ee in zip(H.e_vector(), E.e_vector())]
    ranges = [int(r) for r in ranges]
    out: dict[str, GoodBasis] = {}
    for m in itertools.product(*(range(r) for r in ranges)):
        if all(x == 0 for x in m):
            continue
        g = from_exponents(E, m)
        if member(g, H) is not None:
            continue
        if member(pow_(g, p), H) is None:
            continue
        if any(member(comm(g, r), H) is None for r in H.rows):
            continue
        K = complete_basis(list(H.rows) + [g], G, p)
        if det_index(H, K) != 1:
            continue
        out.setdefault(K.key(), K)
    return list(out.values())


# ---------------------------------------------------------------------------
# the commensurability ball


@dataclass(frozen=True)
class LatticeRecord:
    key: str
    rows: tuple[tuple[Fraction, ...], ...]
    a: int  # log_p [Gamma : Delta cap Gamma]
    b: int  # log_p [Delta : Delta cap Gamma]
    depth: int

    @property
    def valuation(self) -> int:
        return self.a + self.b

    def to_json(self) -> dict:
        return {
            "key": self.key,
            "rows": [[str(q) for q in r] for r in self.rows],
            "a": self.a,
            "b": self.b,
            "depth": self.depth,
        }


def _neighbors(B: GoodBasis, max_quotient: int) -> list[GoodBasis]:
    down = maximal_subgroups_p(B)
    up = minimal_overgroups_p(B, max_quotient)
    return sorted(down + up, key=lambda x: x.key())


def _expand_worker(payload):
    gid, p, rows, max_quotient = payload
    G = load_group(gid)
    B = basis_from_coords(G, [[Fraction(q) for q in r] for r in rows], p)
    return [
        [[str(q) for q in r.coords] for r in nb.rows]
        for nb in _neighbors(B, max_quotient)
    ]


def lattice_ball(
    G: GroupSpec,
    p: int,
    K: int,
    jobs: int = 1,
    prune: bool = True,
    max_nodes: int = 200_000,
    max_quotient: int = 65536,
) -> list[LatticeRecord]:
    """All lattices at commensurability valuation <= K, by graph search.

    Breadth-first over index-p moves starting at the integer points.  Any
    lattice at valuation v is reachable in exactly v moves through
    intermediates of strictly smaller valuation (descend to the
    intersection with the integer points, then ascend), so pruning nodes
    at valuation >= K from expansion loses nothing; `prune=False` expands
    everything to depth K, which must give the same ball.
    """
    gamma = standard_lattice(G, p)
    records: dict[str, LatticeRecord] = {}

    def admit(B: GoodBasis, depth: int) -> LatticeRecord | None:
        key = B.key()
        if key in records:
            return None
        a, b = comm_index(B, gamma)
        rec = LatticeRecord(key, tuple(r.coords for r in B.rows), a, b, depth)
        records[key] = rec
        if len(records) > max_nodes:
            raise CapExceeded(f"lattice ball exceeded {max_nodes} nodes")
        return rec

    frontier: list[GoodBasis] = []
    admit(gamma, 0)
    frontier.append(gamma)
    for depth in range(1, K + 1):
        to_expand = [
            B for B in frontier
            if not prune or records[B.key()].valuation < K
        ]
        if jobs > 1 and len(to_expand) > 1:
            payloads = [
                (G.gid, p, [[str(q) for q in r.coords] for r in B.rows],
                 max_quotient)
                for B in to_expand
            ]
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                children_lists = list(ex.map(_expand_worker, payloads))
            batches = [
                [basis_from_coords(G, [[Fraction(q) for q in r] for r in rows], p)
                 for rows in lst]
                for lst in children_lists
            ]
        else:
            batches = [_neighbors(B, max_quotient) for B in to_expand]
        next_frontier = []
        for batch in batches:
            for child in batch:
                if admit(child, depth) is not None:
                    next_frontier.append(child)
        frontier = sorted(next_frontier, key=lambda b: b.key())
        if not frontier:
            break
    return sorted(
        (r for r in records.values() if r.valuation <= K),
        key=lambda r: (r.valuation, r.key),
    )


# ---------------------------------------------------------------------------
# coefficient tables


@dataclass
class CoefficientTable:
    gid: str
    prime: int
    kmax: int
    counts: list[int]  # counts[k] = number of lattices at valuation k
    method: str
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "group": self.gid,
            "prime": self.prime,
            "kmax": self.kmax,
            "counts": self.counts,
            "method": self.method,
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CoefficientTable":
        return cls(doc["group"], doc["prime"], doc["kmax"], list(doc["counts"]),
                   doc["method"], dict(doc.get("meta", {})))


def count_coefficients(
    G: GroupSpec, p: int, K: int, jobs: int = 1, prune: bool = True,
    max_nodes: int = 200_000, max_quotient: int = 65536,
) -> CoefficientTable:
    """Growth coefficients c_{p^k}, k <= K, via the graph search."""
    ball = lattice_ball(G, p, K, jobs=jobs, prune=prune,
                        max_nodes=max_nodes, max_quotient=max_quotient)
    counts = [0] * (K + 1)
    for r in ball:
        counts[r.valuation] += 1
    return CoefficientTable(G.gid, p, K, counts, "search",
                            {"nodes": len(ball), "jobs": jobs, "prune": prune})


# ---------------------------------------------------------------------------
# brute-force oracle


def _ambient_grid(G: GroupSpec, p: int, K: int) -> tuple[int, ...]:
    """Certified grid containing every lattice at valuation <= K.

    Every element of such a lattice has its p^K-th power in the integer
    points (refine the intersection into a subnormal chain and push the
    element down step by step), so K rounds of root-solution bounds give
    a containing grid.
    """
    B = standard_lattice(G, p)
    s = (0,) * G.d
    for _ in range(K):
        s = root_solution_bounds(B, p)
        rows = []
        for j in range(G.d):
            coords = [Fraction(0)] * G.d
            coords[j] = p_power(p, s[j])
            rows.append(coords)
        B = basis_from_coords(G, rows, p)
    return s


def all_subgroups(Q: GridQuotient):
    """Yield every subgroup of the quotient as a sorted index array.

    Layered closure: a subgroup of order p^(t+1) is built from a maximal
    subgroup (order p^t) and one element g with g^p inside it that
    normalizes it.  Every coset of the new subgroup consists of candidates
    generating the same subgroup, so whole cosets are discarded at once.
    """
    p = Q.p
    e0 = int(Q.index_of_coords((Fraction(0),) * Q.G.d))
    powp = Q.pow_all(p)
    invall = Q.inv_all()
    arange = np.arange(Q.size, dtype=np.int64)
    abelian = Q.G.is_abelian
    conj_cols: dict[int, np.ndarray] = {}

    def conj_col(s: int) -> np.ndarray:
        col = conj_cols.get(s)
        if col is None:
            t1 = Q.mul_idx(invall, np.full(Q.size, s, dtype=np.int64))
            col = Q.mul_idx(t1, arange)
            conj_cols[s] = col
        return col

    trivial = np.array([e0], dtype=np.int64)
    level: dict[bytes, tuple[np.ndarray, list[int]]] = {
        trivial.tobytes(): (trivial, [])
    }
    while level:
        nxt: dict[bytes, tuple[np.ndarray, list[int]]] = {}
        for elems, gens in level.values():
            yield elems
            memb = np.zeros(Q.size, dtype=bool)
            memb[elems] = True
            cand = memb[powp] & ~memb
            if not abelian:
                for s in gens:
                    cand &= memb[conj_col(s)]
            cand_idx = np.nonzero(cand)[0]
            taken = np.zeros(Q.size, dtype=bool)
            for g in cand_idx:
                if taken[g]:
                    continue
                pieces = [elems]
                gi = int(g)
                for _ in range(p - 1):
                    pieces.append(
                        Q.mul_idx(np.full(len(elems), gi, dtype=np.int64), elems)
                    )
                    gi = int(Q.mul_idx(
                        np.array([gi], dtype=np.int64),
                        np.array([int(g)], dtype=np.int64))[0])
                T = np.unique(np.concatenate(pieces))
                if len(T) != p * len(elems):
                    raise LatticeError("coset union is not a subgroup")
                taken[T] = True
                nxt.setdefault(T.tobytes(), (T, gens + [int(g)]))
        level = nxt


def oracle_count(
    G: GroupSpec, p: int, K: int, max_quotient: int = 65536,
    extra_floor_depth: int = 0,
) -> CoefficientTable:
    """Growth coefficients by exhaustive subgroup enumeration of a finite
    quotient; shares no graph logic with the search route.

    `extra_floor_depth` deepens the floor uniformly (the counts must not
    change, which is a stability check on the construction).
    """
    u = _ambient_grid(G, p, K)
    env_rows = []
    for j in range(G.d):
        coords = [Fraction(0)] * G.d
        coords[j] = p_power(p, u[j])
        env_rows.append(coords)
    env = basis_from_coords(G, env_rows, p)
    cf = certified_floor(G, p, K, env)
    W = tuple(w + extra_floor_depth for w in cf.weights)
    if extra_floor_depth:
        from .floors import grid_closed, maps_into_integers, normalizes
        if not (grid_closed(G, p, W) and normalizes(G, p, u, W)
                and maps_into_integers(G, p, W, K)):
            raise LatticeError("deepened floor lost its certificates")
    Q = GridQuotient(G, p, u, W, max_size=max_quotient)

    # image of the integer points: the grid elements with integral
    # coordinates, which are already canonical representatives.
    mask = np.ones(Q.size, dtype=bool)
    for j in range(G.d):
        if Q.u[j] < 0:
            mask &= Q.E[:, j] % p_power(p, -Q.u[j]).numerator == 0
    gamma_bar = np.nonzero(mask)[0].astype(np.int64)

    counts = [0] * (K + 1)
    total = 0
    for S in all_subgroups(Q):
        total += 1
        inter = np.intersect1d(S, gamma_bar, assume_unique=True)
        a = _plog(len(gamma_bar) // len(inter), p)
        b = _plog(len(S) // len(inter), p)
        if a + b <= K:
            counts[a + b] += 1
    return CoefficientTable(
        G.gid, p, K, counts, "oracle",
        {"quotient_size": Q.size, "subgroups": total,
         "floor": list(W), "grid": list(u)},
    )


def _plog(n: int, p: int) -> int:
    k = 0
    while n > 1:
        if n % p:
            raise LatticeError(f"{n} is not a power of {p}")
        n //= p
        k += 1
    return k


# ---------------------------------------------------------------------------
# classical (downward-only) subgroup growth, as a cross-check


def down_only_count(G: GroupSpec, p: int, K: int) -> list[int]:
    """a_{p^k}: number of index-p^k subgroups of the integer points,
    counted by descending through maximal subgroups only."""
    level = {b.key(): b for b in [standard_lattice(G, p)]}
    out = [1]
    for _ in range(K):
        nxt: dict[str, GoodBasis] = {}
        for B in level.values():
            for M in maximal_subgroups_p(B):
                nxt.setdefault(M.key(), M)
        out.append(len(nxt))
        level = nxt
    return out
