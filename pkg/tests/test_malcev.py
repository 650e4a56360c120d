"""Group-law tests: matrix oracle, algebraic identities, structure checks."""

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commzeta import polynomials as P
from commzeta.malcev import (
    GroupLawError,
    GroupSpec,
    comm,
    comm_via_mul,
    element,
    embed_matrix,
    identity,
    inv,
    list_groups,
    load_group,
    mat_mul,
    mul,
    pow_,
    spec_selfcheck,
)

GROUPS = list_groups()


@pytest.fixture(scope="module")
def heis3():
    return load_group("heis3")


def frac(num, den):
    return Fraction(num, den)


rationals = st.builds(
    frac, st.integers(-9, 9), st.sampled_from([1, 1, 1, 2, 3, 4, 6])
)


def elements_of(G):
    return st.builds(lambda cs: element(G, cs),
                     st.lists(rationals, min_size=G.d, max_size=G.d))


# --- worked heis3 values, independently derivable by 3x3 matrix products ---

def test_heis3_product_matches_matrix_oracle(heis3):
    g = element(heis3, [1, 2, 3])
    h = element(heis3, [frac(1, 2), -1, 4])
    prod = mul(g, h)
    assert mat_mul(embed_matrix(g), embed_matrix(h)) == embed_matrix(prod)
    # coordinate 1 picks up the a2*b3 cross term: 1 + 1/2 + 2*4
    assert prod.coords == (frac(19, 2), Fraction(1), Fraction(7))


def test_heis3_commutator(heis3):
    g = element(heis3, [0, 1, 0])
    h = element(heis3, [0, 0, 1])
    c = comm(g, h)
    assert c.coords == (Fraction(1), Fraction(0), Fraction(0))
    assert comm_via_mul(g, h) == c


def test_heis3_half_power(heis3):
    g = element(heis3, [0, 1, 1])
    r = pow_(g, frac(1, 2))
    assert pow_(r, 2) == g
    # central correction (k^2 - k)/2 * a2*a3 at k = 1/2 gives -1/8
    assert r.coords == (frac(-1, 8), frac(1, 2), frac(1, 2))


def test_integer_power_matches_iteration(heis3):
    g = element(heis3, [frac(1, 2), 3, -2])
    acc = identity(heis3)
    for _ in range(5):
        acc = mul(acc, g)
    assert pow_(g, 5) == acc
    assert pow_(g, -5) == inv(acc)


# --- property tests over the whole catalog ---

@pytest.mark.parametrize("gid", GROUPS)
def test_selfcheck_clean(gid):
    rep = spec_selfcheck(load_group(gid), sample_count=30, seed=11)
    assert rep.ok, rep.failures


@pytest.mark.parametrize("gid", GROUPS)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_associativity_and_inverse(gid, data):
    G = load_group(gid)
    g = data.draw(elements_of(G))
    h = data.draw(elements_of(G))
    f = data.draw(elements_of(G))
    assert mul(mul(g, h), f) == mul(g, mul(h, f))
    assert mul(g, inv(g)) == identity(G)


@pytest.mark.parametrize("gid", GROUPS)
@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_embedding_is_homomorphism(gid, data):
    G = load_group(gid)
    g = data.draw(elements_of(G))
    h = data.draw(elements_of(G))
    assert embed_matrix(mul(g, h)) == mat_mul(embed_matrix(g), embed_matrix(h))


@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_one_parameter_subgroup(data):
    G = load_group("heis3")
    g = data.draw(elements_of(G))
    s = data.draw(rationals)
    t = data.draw(rationals)
    assert pow_(g, s + t) == mul(pow_(g, s), pow_(g, t))


# --- structural mutation: dropping a law term must be caught ---

def _heis3_doc():
    from importlib import resources
    return json.loads(
        (resources.files("commzeta") / "catalog" / "heis3.json").read_text()
    )


def test_dropped_product_term_fails_selfcheck():
    doc = _heis3_doc()
    # remove the cross term from the central product coordinate
    doc["mu"][0] = [t for t in doc["mu"][0] if set(t["m"]) <= {"a1", "b1"}]
    from commzeta.malcev import _parse_group
    G = _parse_group(doc)
    rep = spec_selfcheck(G, sample_count=30, seed=2)
    assert not rep.ok


def test_bad_structure_rejected():
    doc = _heis3_doc()
    # a power-law term without the exponent variable breaks lam(a, 0) = 0
    doc["lam"][0].append({"c": "1", "m": {"a2": 1, "a3": 1}})
    from commzeta.malcev import _parse_group
    with pytest.raises(GroupLawError):
        _parse_group(doc)


def test_root_verification_guards_power_law(heis3):
    g = element(heis3, [1, 0, 0])
    r = pow_(g, frac(1, 3))
    assert r.coords == (frac(1, 3), 0, 0)
    assert pow_(r, 3) == g
