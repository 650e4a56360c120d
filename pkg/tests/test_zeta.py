"""Series machinery: recurrences, rational forms, global assembly."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commzeta import zeta as Z


def test_fit_abelian_series():
    fit = Z.fit_recurrence([1, 2, 2, 2, 2])
    assert fit is not None
    assert fit.order == 1 and fit.q == (Fraction(1),)
    assert fit.integral
    N, D = Z.to_rational_function([1, 2, 2, 2, 2], fit)
    assert N == [1, 1] and D == [1, -1]


def test_fit_requires_validation_window():
    # three terms fit any order-1 recurrence trivially; the window rule
    # must refuse to "fit" noise
    assert Z.fit_recurrence([1, 4, 44]) is None


def test_fit_geometric():
    coeffs = [3 * 2**k for k in range(8)]
    fit = Z.fit_recurrence(coeffs)
    assert fit.order == 1 and fit.q == (Fraction(2),)
    N, D = Z.to_rational_function(coeffs, fit)
    assert N == [3] and D == [1, -2]


def test_fit_order_two():
    # c_n = 3 c_{n-1} - 2 c_{n-2}  (i.e. 2^n + 1)
    coeffs = [2**n + 1 for n in range(10)]
    fit = Z.fit_recurrence(coeffs)
    assert fit.order == 2 and fit.q == (Fraction(3), Fraction(-2))
    N, D = Z.to_rational_function(coeffs, fit)
    assert Z.expand_rational(N, D, 10) == coeffs


def test_no_fit_for_factorials():
    assert Z.fit_recurrence([1, 1, 2, 6, 24, 120, 720, 5040, 40320]) is None


@settings(max_examples=25, deadline=None)
@given(num=st.lists(st.integers(-4, 4), min_size=1, max_size=3),
       roots=st.lists(st.sampled_from([1, -1, 2, 3]), min_size=1, max_size=2))
def test_rational_series_roundtrip(num, roots):
    # build D from its roots, expand, re-fit, re-expand
    D = [Fraction(1)]
    for r in roots:
        D = Z._poly_mul(D, [Fraction(1), Fraction(-r)])
    N = [Fraction(x) for x in num]
    coeffs = Z.expand_rational(N, D, len(N) + 4 * len(D) + 6)
    fit = Z.fit_recurrence(coeffs)
    assert fit is not None and fit.order <= len(roots)
    N2, D2 = Z.to_rational_function(coeffs, fit)
    assert Z.expand_rational(N2, D2, len(coeffs)) == coeffs


def test_expand_rational_rejects_bad_denominator():
    with pytest.raises(ValueError):
        Z.expand_rational([1], [0, 1], 3)


def test_global_assembly_multiplicative():
    locs = {p: Z.abelian_local(p, 8)
            for p in range(2, 101) if all(p % q for q in range(2, p))}
    cs = Z.global_coefficients(locs, 100)
    assert cs[0] == 1
    from math import gcd
    for m in range(1, 11):
        for n in range(1, 11):
            if gcd(m, n) == 1 and m * n <= 100:
                assert cs[m * n - 1] == cs[m - 1] * cs[n - 1]


def test_global_reference():
    locs = {p: Z.abelian_local(p, 8)
            for p in range(2, 201) if all(p % q for q in range(2, p))}
    cs = Z.global_coefficients(locs, 200)
    assert cs == [Z.abelian_reference(n) for n in range(1, 201)]


def test_global_missing_prime_rejected():
    with pytest.raises(ValueError):
        Z.global_coefficients({2: Z.abelian_local(2, 3)}, 6)


def test_local_series_json_roundtrip():
    s = Z.LocalSeries("Z2", 3, (1, 8, 38))
    assert Z.LocalSeries.from_json(s.to_json()) == s


def test_poly_str():
    assert Z.poly_str([Fraction(1), Fraction(1)]) == "1 + t"
    assert Z.poly_str([Fraction(1), Fraction(-1)]) == "1 - t"
    assert Z.poly_str([Fraction(0), Fraction(2), Fraction(1)]) == "2*t + t^2"
