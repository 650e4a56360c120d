"""Acceptance gate: the end-to-end claims the engine must reproduce.

Every check is exact (tolerance zero).  Each test prints a single
PASS-style summary line on success so the acceptance record reads as a
checklist.
"""

import time

from commzeta import zeta as Z
from commzeta.goodbasis import comm_index, intersect, standard_lattice
from commzeta.hnf import hnf_sublattice_count
from commzeta.latticeenum import (
    count_coefficients,
    down_only_count,
    lattice_ball,
    oracle_count,
    root_envelope,
)
from commzeta.malcev import load_group

Z1 = load_group("Z1")
Z2 = load_group("Z2")
Z3 = load_group("Z3")
H3 = load_group("heis3")


def test_01_abelian_rank_one_local_coefficients():
    for p in (2, 3, 5):
        counts = count_coefficients(Z1, p, 4).counts
        assert counts == [1, 2, 2, 2, 2], (p, counts)
    print("criterion 1: Z1 local coefficients (1,2,2,2,2) at p=2,3,5")


def test_02_abelian_rational_form():
    counts = count_coefficients(Z1, 2, 4).counts
    fit = Z.fit_recurrence(counts)
    assert fit is not None
    N, D = Z.to_rational_function(counts, fit)
    assert N == [1, 1] and D == [1, -1]
    print("criterion 2: Z1 local series equals (1+t)/(1-t)")


def test_03_global_equals_two_to_omega():
    locs = {}
    for p in [p for p in range(2, 201) if all(p % q for q in range(2, p))]:
        kmax = 1
        while p ** (kmax + 1) <= 200:
            kmax += 1
        locs[p] = Z.LocalSeries("Z1", p, tuple(count_coefficients(Z1, p, kmax).counts))
    cs = Z.global_coefficients(locs, 200)
    assert cs == [Z.abelian_reference(n) for n in range(1, 201)]
    print("criterion 3: global c_n = 2^omega(n) for n <= 200")


def test_04_z2_first_shell_and_oracle():
    t0 = time.monotonic()
    for p in (2, 3):
        search1 = count_coefficients(Z2, p, 1).counts
        assert search1 == [1, 2 * (p + 1)], (p, search1)
        for K in (1, 2):
            s = count_coefficients(Z2, p, K).counts
            o = oracle_count(Z2, p, K).counts
            assert s == o, (p, K, s, o)
    dt = time.monotonic() - t0
    assert dt < 120, f"took {dt:.1f}s"
    print(f"criterion 4: Z2 c_p = 2(p+1), search == oracle (p=2,3; K<=2) "
          f"in {dt:.1f}s")


def test_05_heis3_first_shell_and_oracle():
    t0 = time.monotonic()
    s = count_coefficients(H3, 2, 1).counts
    o = oracle_count(H3, 2, 1)
    assert s == o.counts == [1, 4]
    assert o.meta["quotient_size"] <= 2**10
    dt = time.monotonic() - t0
    assert dt < 300, f"took {dt:.1f}s"
    print(f"criterion 5: heis3 c_2 = 4, search == oracle, quotient "
          f"{o.meta['quotient_size']} <= 2^10, in {dt:.1f}s")


def test_06_determinant_index_identity_everywhere():
    checked = 0
    for G, p, K in [(Z2, 2, 2), (Z2, 3, 2), (H3, 2, 2)]:
        gamma = standard_lattice(G, p)
        from commzeta.goodbasis import basis_from_coords
        from fractions import Fraction
        for rec in lattice_ball(G, p, K):
            H = basis_from_coords(
                G, [[Fraction(q) for q in r] for r in rec.rows], p)
            D = intersect(H, gamma)
            assert rec.a + rec.b == 2 * sum(D.e_vector()) - sum(H.e_vector())
            checked += 1
    assert checked > 100
    print(f"criterion 6: determinant index identity on {checked}/{checked} "
          "ball members")


def test_07_down_only_counts():
    got = down_only_count(Z2, 2, 4)
    assert got == [hnf_sublattice_count(2, 2**k) for k in range(5)]
    assert got == [1, 3, 7, 15, 31]
    for p in (2, 3, 5):
        assert down_only_count(H3, p, 1) == [1, p + 1]
    print("criterion 7: down-only Z2 sigma(2^k) vs HNF oracle; heis3 a_p = p+1")


def test_08_envelope_index_bound():
    results = []
    for G, p in [(Z1, 2), (Z2, 2), (Z2, 3), (Z3, 2), (H3, 2), (H3, 3), (H3, 5)]:
        gamma = standard_lattice(G, p)
        E = root_envelope(gamma)
        idx = -sum(E.e_vector())
        bound = G.d * G.c * (G.c + 1) // 2
        assert 0 <= idx <= bound, (G.gid, p, idx, bound)
        results.append(f"{G.gid}/p={p}:{idx}<={bound}")
    print("criterion 8: envelope index bound d*c*(c+1)/2 -- " + ", ".join(results))


def test_09_recurrence_fit_or_absent():
    outcomes = []
    for G, p, K in [(H3, 2, 3), (Z2, 2, 4)]:
        counts = count_coefficients(G, p, K).counts
        fit = Z.fit_recurrence(counts)
        if fit is None:
            outcomes.append(f"{G.gid}: no recurrence within window {counts}")
        else:
            N, D = Z.to_rational_function(counts, fit)
            assert Z.expand_rational(N, D, len(counts)) == [
                *map(int, counts)], (N, D)
            outcomes.append(
                f"{G.gid}: order {fit.order} verified, window {fit.window}")
    print("criterion 9: " + "; ".join(outcomes))


def test_10_worker_determinism():
    for G, p, K in [(Z2, 3, 2), (H3, 2, 2)]:
        b1 = [r.to_json() for r in lattice_ball(G, p, K, jobs=1)]
        b8 = [r.to_json() for r in lattice_ball(G, p, K, jobs=8)]
        assert b1 == b8, (G.gid, p, K)
    print("criterion 10: identical balls with 1 and 8 workers")
