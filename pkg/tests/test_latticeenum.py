"""Enumeration: envelopes, neighbors, the ball, and oracle agreement."""

import pytest

from commzeta.floors import CapExceeded
from commzeta.goodbasis import (
    complete_basis,
    det_index,
    member,
    same_lattice,
    standard_lattice,
)
from commzeta.latticeenum import (
    count_coefficients,
    down_only_count,
    lattice_ball,
    maximal_subgroups_p,
    minimal_overgroups_p,
    oracle_count,
    root_envelope,
)
from commzeta.malcev import element, load_group, pow_

Z1 = load_group("Z1")
Z2 = load_group("Z2")
Z3 = load_group("Z3")
H3 = load_group("heis3")


# --- maximal subgroups ---

@pytest.mark.parametrize("p", [2, 3, 5])
def test_maximal_count_abelian(p):
    # index-p subgroups of Z^2: one line mod p each, (p^2-1)/(p-1) = p+1
    assert len(maximal_subgroups_p(standard_lattice(Z2, p))) == p + 1


@pytest.mark.parametrize("p", [2, 3, 5])
def test_maximal_count_heis3(p):
    # the commutator kills the central direction: p+1 hyperplanes remain
    ms = maximal_subgroups_p(standard_lattice(H3, p))
    assert len(ms) == p + 1
    gamma = standard_lattice(H3, p)
    for M in ms:
        assert det_index(M, gamma) == 1


def test_maximal_subgroups_distinct():
    ms = maximal_subgroups_p(standard_lattice(Z3, 2))
    keys = {m.key() for m in ms}
    assert len(keys) == len(ms) == 7


# --- root envelopes ---

def test_envelope_abelian_is_p_fraction():
    E = root_envelope(standard_lattice(Z2, 3))
    assert E.e_vector() == (-1, -1)


@pytest.mark.parametrize("p,e", [(2, (-3, -1, -1)), (3, (-2, -1, -1)),
                                 (5, (-2, -1, -1))])
def test_envelope_heis3(p, e):
    gamma = standard_lattice(H3, p)
    E = root_envelope(gamma)
    assert E.e_vector() == e
    # the envelope contains the group it was grown from
    for r in gamma.rows:
        assert member(r, E) is not None


def test_envelope_index_bound():
    for G, p in [(Z2, 2), (Z3, 2), (H3, 2), (H3, 3)]:
        gamma = standard_lattice(G, p)
        E = root_envelope(gamma)
        assert det_index(gamma, E) <= G.d * G.c * (G.c + 1) // 2


def test_envelope_deep_central_root():
    # the central valuation of the 2-envelope exceeds the naive rowwise
    # roots: (-1/8, 1/2, 1/2) squares into the integer points
    g = element(H3, ["-1/8", "1/2", "1/2"])
    assert pow_(g, 2).is_integral()
    E = root_envelope(standard_lattice(H3, 2))
    assert member(g, E) is not None


# --- minimal overgroups ---

@pytest.mark.parametrize("p", [2, 3])
def test_minimal_overgroups_abelian(p):
    ov = minimal_overgroups_p(standard_lattice(Z2, p))
    assert len(ov) == p + 1
    for K in ov:
        assert det_index(standard_lattice(Z2, p), K) == 1


def test_minimal_overgroups_heis3():
    ov = minimal_overgroups_p(standard_lattice(H3, 2))
    # only the central root extends the integer points by index 2
    assert len(ov) == 1
    assert ov[0].e_vector() == (-1, 0, 0)


def test_up_down_duality():
    # K is a minimal overgroup of H iff H is a maximal subgroup of K
    gamma = standard_lattice(H3, 2)
    for K in minimal_overgroups_p(gamma):
        assert any(same_lattice(M, gamma) for M in maximal_subgroups_p(K))


# --- the ball and coefficient counts ---

def test_ball_counts_z1():
    for p in (2, 3, 5):
        assert count_coefficients(Z1, p, 4).counts == [1, 2, 2, 2, 2]


@pytest.mark.parametrize("p", [2, 3])
def test_ball_counts_z2_first_shell(p):
    assert count_coefficients(Z2, p, 1).counts == [1, 2 * (p + 1)]


def test_ball_records_are_sorted_and_consistent():
    ball = lattice_ball(Z2, 2, 2)
    assert ball == sorted(ball, key=lambda r: (r.valuation, r.key))
    assert ball[0].key == standard_lattice(Z2, 2).key()
    for r in ball:
        assert r.valuation <= 2 and r.depth <= 2


def test_pruned_equals_unpruned():
    for G, p, K in [(Z2, 2, 2), (H3, 2, 2)]:
        pruned = [r.to_json() for r in lattice_ball(G, p, K, prune=True)]
        full = [r.to_json() for r in lattice_ball(G, p, K, prune=False)]
        assert pruned == full


def test_parallel_determinism():
    b1 = lattice_ball(H3, 2, 2, jobs=1)
    b4 = lattice_ball(H3, 2, 2, jobs=4)
    assert [r.to_json() for r in b1] == [r.to_json() for r in b4]


def test_node_cap():
    with pytest.raises(CapExceeded):
        lattice_ball(Z2, 2, 3, max_nodes=10)


# --- oracle ---

@pytest.mark.parametrize("p,K", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_oracle_matches_search_z2(p, K):
    assert oracle_count(Z2, p, K).counts == count_coefficients(Z2, p, K).counts


def test_oracle_matches_search_heis3():
    o = oracle_count(H3, 2, 1)
    s = count_coefficients(H3, 2, 1)
    assert o.counts == s.counts == [1, 4]
    assert o.meta["quotient_size"] <= 2**10


def test_oracle_floor_deepening_stable():
    base = oracle_count(Z2, 2, 1)
    deeper = oracle_count(Z2, 2, 1, extra_floor_depth=1)
    assert base.counts == deeper.counts
    assert deeper.meta["quotient_size"] > base.meta["quotient_size"]


def test_oracle_cap_is_reported_not_wrong():
    with pytest.raises(CapExceeded):
        oracle_count(H3, 2, 1, max_quotient=100)


# --- downward-only counts ---

def test_down_only_z2_sigma():
    from commzeta.hnf import hnf_sublattice_count
    got = down_only_count(Z2, 2, 4)
    assert got == [hnf_sublattice_count(2, 2**k) for k in range(5)]
    assert got == [1, 3, 7, 15, 31]


@pytest.mark.parametrize("p", [2, 3, 5])
def test_down_only_heis3(p):
    assert down_only_count(H3, p, 1) == [1, p + 1]
