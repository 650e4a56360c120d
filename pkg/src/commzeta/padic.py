"""p-adic valuation helpers on exact rationals.

The engine never uses floating point; the only notion of size anywhere is
the exponent of p in a rational number.
"""

from __future__ import annotations

import math
from fractions import Fraction

#: Sentinel for vp(0); compares greater than every finite valuation.
INF = math.inf


def vp(q: Fraction | int, p: int) -> float:
    """p-adic valuation of a rational; +inf for 0."""
    q = Fraction(q)
    if q == 0:
        return INF
    v = 0
    n = q.numerator
    while n % p == 0:
        n //= p
        v += 1
    d = q.denominator
    while d % p == 0:
        d //= p
        v -= 1
    return v


def is_p_power(q: Fraction, p: int) -> bool:
    """True if |q| is exactly a (possibly negative) power of p."""
    if q == 0:
        return False
    n, d = abs(q.numerator), q.denominator
    return _is_pure_power(n, p) and _is_pure_power(d, p)


def _is_pure_power(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def is_p_local(q: Fraction, p: int) -> bool:
    """True if the denominator of q is a power of p."""
    return _is_pure_power(q.denominator, p)


def p_power(p: int, e: int) -> Fraction:
    return Fraction(p) ** e


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def primes_upto(n: int) -> list[int]:
    return [p for p in range(2, n + 1) if is_prime(p)]


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization as (p, e) pairs, ascending."""
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out
