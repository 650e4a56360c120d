"""Mal'cev-coordinate arithmetic for a catalog of unipotent groups.

A group is given by its Hirsch length d, nilpotency class c, and explicit
polynomial laws on coordinate vectors: a binary product law mu, a power
law lam (polynomial in the exponent), and a commutator law kap.  Each
group also carries a unitriangular matrix template which serves as an
independent oracle: coordinates multiply correctly iff the corresponding
matrices do.

Convention: coordinate 1 is the most central coordinate, so product and
power corrections to coordinate j only involve coordinates of index > j.
Bases of sublattices are then lower triangular.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Sequence

from . import polynomials as P
from .padic import is_p_local

SCHEMA_VERSION = 1


class GroupLawError(ValueError):
    """A structural or arithmetic violation of the group laws."""


@dataclass(frozen=True)
class GroupSpec:
    gid: str
    d: int
    c: int
    mu: tuple[P.Poly, ...]
    lam: tuple[P.Poly, ...]
    kap: tuple[P.Poly, ...]
    embed_n: int
    embed_entries: tuple[tuple[int, int, P.Poly], ...]  # (row, col, poly in a-vars)

    def __post_init__(self):
        check_structure(self)

    @property
    def is_abelian(self) -> bool:
        return all(not k for k in self.kap)

    def __repr__(self):
        return f"GroupSpec({self.gid!r}, d={self.d}, c={self.c})"


@dataclass(frozen=True)
class Element:
    coords: tuple[Fraction, ...]
    group: GroupSpec = field(repr=False)

    def __post_init__(self):
        if len(self.coords) != self.group.d:
            raise GroupLawError(
                f"expected {self.group.d} coordinates, got {len(self.coords)}"
            )

    def __eq__(self, other):
        return (
            isinstance(other, Element)
            and self.group.gid == other.group.gid
            and self.coords == other.coords
        )

    def __hash__(self):
        return hash((self.group.gid, self.coords))

    def is_p_local(self, p: int) -> bool:
        return all(is_p_local(q, p) for q in self.coords)

    def is_integral(self) -> bool:
        return all(q.denominator == 1 for q in self.coords)


def element(group: GroupSpec, coords: Sequence[Fraction | int | str]) -> Element:
    return Element(tuple(Fraction(q) for q in coords), group)


def identity(group: GroupSpec) -> Element:
    return element(group, [0] * group.d)


def _mu_env(a: Sequence[Fraction], b: Sequence[Fraction]) -> dict[str, Fraction]:
    env = {f"a{i + 1}": a[i] for i in range(len(a))}
    env.update({f"b{i + 1}": b[i] for i in range(len(b))})
    return env


def mul(g: Element, h: Element) -> Element:
    if g.group.gid != h.group.gid:
        raise GroupLawError("cannot multiply elements of different groups")
    env = _mu_env(g.coords, h.coords)
    return Element(tuple(P.evaluate(m, env) for m in g.group.mu), g.group)


def inv(g: Element) -> Element:
    """Group inverse, solved top-down from mu(g, x) = identity.

    mu_j = a_j + b_j + (terms in coordinates of index > j), so coordinate
    d is solved first and each lower coordinate follows by substitution.
    """
    G = g.group
    x = [Fraction(0)] * G.d
    for j in range(G.d - 1, -1, -1):
        env = _mu_env(g.coords, x)
        env[f"b{j + 1}"] = Fraction(0)
        x[j] = -P.evaluate(G.mu[j], env)
    return Element(tuple(x), G)


def pow_(g: Element, k: Fraction | int) -> Element:
    """g**k via the power law; rational k is verified by powering back.

    The power law is only postulated for integer exponents; at k = n/m the
    result r is accepted only if r**m == g**n, which certifies r as the
    m-th root in the radicable hull.
    """
    G = g.group
    k = Fraction(k)
    env = {f"a{i + 1}": g.coords[i] for i in range(G.d)}
    env["k"] = k
    r = Element(tuple(P.evaluate(l, env) for l in G.lam), G)
    if k.denominator != 1:
        if pow_(r, k.denominator) != pow_(g, k.numerator):
            raise GroupLawError(
                f"root verification failed for {G.gid}: ({g.coords})^{k}"
            )
    return r


def comm(g: Element, h: Element) -> Element:
    """Commutator [g, h] = g^-1 h^-1 g h, computed via the kap law."""
    if g.group.gid != h.group.gid:
        raise GroupLawError("cannot commutate elements of different groups")
    env = _mu_env(g.coords, h.coords)
    return Element(tuple(P.evaluate(kp, env) for kp in g.group.kap), g.group)


def comm_via_mul(g: Element, h: Element) -> Element:
    return mul(mul(inv(g), inv(h)), mul(g, h))


def embed_matrix(g: Element) -> list[list[Fraction]]:
    """Unitriangular matrix image of g under the group's matrix template."""
    G = g.group
    n = G.embed_n
    m = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    env = {f"a{i + 1}": g.coords[i] for i in range(G.d)}
    for i, j, pol in G.embed_entries:
        m[i - 1][j - 1] = P.evaluate(pol, env)
    return m


def mat_mul(a: list[list[Fraction]], b: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(a)
    return [
        [sum((a[i][t] * b[t][j] for t in range(n)), Fraction(0)) for j in range(n)]
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# structural (syntactic) checks on the law data


def check_structure(G: GroupSpec) -> None:
    """Syntactic invariants of the term lists; raises GroupLawError."""
    if len(G.mu) != G.d or len(G.lam) != G.d or len(G.kap) != G.d:
        raise GroupLawError(f"{G.gid}: law lists must have length d={G.d}")
    for j in range(G.d):
        # mu_j = a_j + b_j + P_j, P_j only in coordinates of index > j,
        # every P_j term mixing at least one a- and one b-variable.
        rest = P.sub(G.mu[j], P.poly([(1, {f"a{j + 1}": 1}), (1, {f"b{j + 1}": 1})]))
        for coeff, mono in rest:
            idxs = [P.coord_index(v) for v, _ in mono]
            if any(i is None or i <= j + 1 for i in idxs):
                raise GroupLawError(
                    f"{G.gid}: mu_{j + 1} term {mono} uses a coordinate of "
                    f"index <= {j + 1}"
                )
            vars_ = {v[0] for v, _ in mono}
            if vars_ != {"a", "b"}:
                raise GroupLawError(
                    f"{G.gid}: mu_{j + 1} correction term {mono} must mix a- "
                    "and b-variables (mu(a,0)=a and mu(0,b)=b)"
                )
        # lam_j = k*a_j + Q_j with Q_j in k and a-coordinates of index > j.
        rest = P.sub(G.lam[j], P.poly([(1, {"k": 1, f"a{j + 1}": 1})]))
        for coeff, mono in rest:
            for v, _ in mono:
                if v == "k":
                    continue
                i = P.coord_index(v)
                if i is None or i <= j + 1 or v[0] != "a":
                    raise GroupLawError(
                        f"{G.gid}: lam_{j + 1} term {mono} uses a bad variable"
                    )
            if not any(v == "k" for v, _ in mono):
                raise GroupLawError(
                    f"{G.gid}: lam_{j + 1} term {mono} lacks the exponent "
                    "variable, so lam(a, 0) != 0"
                )
    # Coefficient denominators must divide a class-bounded factorial; this
    # is what keeps p-local coordinates p-local under roots by 1/p.
    bound = math.factorial(G.c + 1)
    den = P.max_coeff_denominator(list(G.mu) + list(G.lam) + list(G.kap))
    if bound % den != 0:
        raise GroupLawError(
            f"{G.gid}: coefficient denominator {den} does not divide ({G.c}+1)!"
        )


# ---------------------------------------------------------------------------
# randomized self-check of the catalog data


@dataclass
class SelfCheckReport:
    gid: str
    samples: int
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def _random_element(G: GroupSpec, rng: random.Random) -> Element:
    coords = []
    for _ in range(G.d):
        num = rng.randint(-6, 6)
        den = rng.choice([1, 1, 2, 3, 4])
        coords.append(Fraction(num, den))
    return element(G, coords)


def spec_selfcheck(G: GroupSpec, sample_count: int = 50, seed: int = 0) -> SelfCheckReport:
    """Verify the group laws on random rational samples.

    Checks associativity, identity and inverse laws, the one-parameter law
    lam(a, s+t) = mu(lam(a,s), lam(a,t)) at rational s and t, consistency
    of kap with the mu-expression of the commutator, root extraction, and
    the homomorphism property of the matrix embedding.
    """
    rng = random.Random(seed)
    failures: list[str] = []
    e = identity(G)

    def report(name, *elts):
        failures.append(f"{name}: inputs {[tuple(map(str, x.coords)) for x in elts]}")

    for _ in range(sample_count):
        g = _random_element(G, rng)
        h = _random_element(G, rng)
        f = _random_element(G, rng)
        if mul(mul(g, h), f) != mul(g, mul(h, f)):
            report("associativity", g, h, f)
            break
        if mul(g, e) != g or mul(e, g) != g:
            report("identity law", g)
            break
        if mul(g, inv(g)) != e or mul(inv(g), g) != e:
            report("inverse law", g)
            break
        if comm(g, h) != comm_via_mul(g, h):
            report("kap consistency", g, h)
            break
        s = Fraction(rng.randint(-4, 4), rng.choice([1, 2, 3]))
        t = Fraction(rng.randint(-4, 4), rng.choice([1, 2, 3]))
        if pow_(g, s + t) != mul(pow_(g, s), pow_(g, t)):
            report(f"one-parameter law at s={s}, t={t}", g)
            break
        k = rng.randint(-8, 8)
        acc = e
        for _ in range(abs(k)):
            acc = mul(acc, g)
        if k < 0:
            acc = inv(acc)
        if pow_(g, k) != acc:
            report(f"integer power law at k={k}", g)
            break
        for m in (2, 3, 4):
            try:
                r = pow_(g, Fraction(1, m))
            except GroupLawError:
                report(f"root extraction 1/{m}", g)
                break
            if pow_(r, m) != g:
                report(f"root identity 1/{m}", g)
                break
        if failures:
            break
        if embed_matrix(mul(g, h)) != mat_mul(embed_matrix(g), embed_matrix(h)):
            report("embedding homomorphism", g, h)
            break
    return SelfCheckReport(G.gid, sample_count, failures)


# ---------------------------------------------------------------------------
# catalog

_CACHE: dict[str, GroupSpec] = {}


def _parse_group(doc: dict) -> GroupSpec:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise GroupLawError(
            f"unsupported catalog schema version {doc.get('schema_version')}"
        )
    return GroupSpec(
        gid=doc["id"],
        d=doc["d"],
        c=doc["c"],
        mu=tuple(P.parse_poly(t) for t in doc["mu"]),
        lam=tuple(P.parse_poly(t) for t in doc["lam"]),
        kap=tuple(P.parse_poly(t) for t in doc["kap"]),
        embed_n=doc["embed"]["n"],
        embed_entries=tuple(
            (i, j, P.parse_poly(t)) for i, j, t in doc["embed"]["entries"]
        ),
    )


def list_groups() -> list[str]:
    files = resources.files(__package__) / "catalog"
    return sorted(f.name[: -len(".json")] for f in files.iterdir() if f.name.endswith(".json"))


def load_group(gid: str) -> GroupSpec:
    """Load a catalog group by id; structure checks run at parse time."""
    if gid in _CACHE:
        return _CACHE[gid]
    path = resources.files(__package__) / "catalog" / f"{gid}.json"
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise KeyError(f"no catalog group named {gid!r}; have {list_groups()}")
    G = _parse_group(doc)
    _CACHE[gid] = G
    return G
