"""Sparse polynomials over Q, stored as explicit monomial term lists.

Variables are named strings: ``a1..ad`` and ``b1..bd`` for the two
arguments of a product law, plus ``k`` for the exponent variable of a
power law.  Term lists keep the data syntactically inspectable, which the
structure checks and valuation certificates rely on.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

# A monomial maps variable name -> positive integer exponent.
# A term is (coefficient, monomial); a polynomial is a tuple of terms.
Monomial = tuple[tuple[str, int], ...]
Term = tuple[Fraction, Monomial]
Poly = tuple[Term, ...]

ZERO: Poly = ()


def _norm_mono(mono: Mapping[str, int] | Iterable[tuple[str, int]]) -> Monomial:
    items = dict(mono)
    return tuple(sorted((v, e) for v, e in items.items() if e != 0))


def poly(terms: Iterable[tuple[Fraction | int | str, Mapping[str, int]]]) -> Poly:
    """Build a normalized polynomial from (coeff, monomial) pairs."""
    acc: dict[Monomial, Fraction] = {}
    for c, m in terms:
        c = Fraction(c)
        key = _norm_mono(m)
        acc[key] = acc.get(key, Fraction(0)) + c
    return tuple((c, m) for m, c in sorted(acc.items()) if c != 0)


def evaluate(p: Poly, env: Mapping[str, Fraction]) -> Fraction:
    total = Fraction(0)
    for c, mono in p:
        v = c
        for var, e in mono:
            v *= env[var] ** e
        total += v
    return total


def variables(p: Poly) -> set[str]:
    return {var for _, mono in p for var, _ in mono}


def add(p: Poly, q: Poly) -> Poly:
    return poly(list(p) + list(q))


def sub(p: Poly, q: Poly) -> Poly:
    return poly(list(p) + [(-c, dict(m)) for c, m in q])


def coord_index(var: str) -> int | None:
    """Coordinate index of an a/b variable, None for other variables."""
    if var[0] in ("a", "b") and var[1:].isdigit():
        return int(var[1:])
    return None


def max_coeff_denominator(polys: Iterable[Poly]) -> int:
    d = 1
    for p in polys:
        for c, _ in p:
            d = max(d, c.denominator)
    return d


def parse_poly(data: list) -> Poly:
    """Parse the JSON term-list encoding: [{"c": "num/den", "m": {var: exp}}]."""
    return poly([(Fraction(t["c"]), t.get("m", {})) for t in data])


def dump_poly(p: Poly) -> list:
    return [{"c": str(c), "m": {v: e for v, e in mono}} for c, mono in p]
