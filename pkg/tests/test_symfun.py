import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from szfluct import symfun
from szfluct.coeffs import CoefficientDistribution, sample
from szfluct.trigpoly import TrigPoly, summand_grid
from szfluct.symfun import (
    elementary_from_power_sums,
    elementary_partition_sum,
    hermite_over_factorial,
    magic_rhs,
    main_part,
    partitions,
    power_sums,
    remainder_decomposition,
    script_remainder,
    split_MR,
    sup_second_newton_deviation,
    verify_identities_suite,
    verify_magic,
)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)


def subset_elementary(x, p):
    """e_p by summing products over all p-subsets."""
    return sum((math.prod(c, start=Fraction(1)) for c in itertools.combinations(x, p)), Fraction(0))


def hermite_explicit(p, x):
    """H_p(x)/p! from the explicit monomial expansion, in exact arithmetic."""
    total = Fraction(0)
    for m in range(p // 2 + 1):
        total += Fraction((-1) ** m, math.factorial(m) * math.factorial(p - 2 * m) * 2**m) * Fraction(x) ** (p - 2 * m)
    return total


def test_elementary_examples():
    N = power_sums([1, 2, 3], 3)
    assert N == [6, 14, 36]
    assert elementary_from_power_sums(N, 3) == [1, 6, 11, 6]
    assert elementary_from_power_sums([Fraction(0)] * 4, 4) == [1, 0, 0, 0, 0]
    assert elementary_partition_sum(N, 3) == 6
    assert elementary_partition_sum(N, 1) == 6
    assert elementary_partition_sum([Fraction(6), Fraction(14)], 2) == 11


def test_partition_counts():
    assert [len(partitions(p)) for p in range(1, 11)] == [1, 2, 3, 5, 7, 11, 15, 22, 30, 42]
    with pytest.raises(ValueError):
        partitions(21)


def test_recurrence_equals_partition_sum_on_random_rationals():
    rng = random.Random(0)
    for _ in range(200):
        x = symfun.random_rational_vector(rng.randint(1, 6), rng)
        N = power_sums(x, 8)
        e = elementary_from_power_sums(N, 8)
        for p in range(9):
            assert e[p] == elementary_partition_sum(N, p)


@given(st.lists(rationals, min_size=1, max_size=8))
@settings(max_examples=60, deadline=None)
def test_recurrence_equals_subset_enumeration(x):
    e = elementary_from_power_sums(power_sums(x, 8), 8)
    for p in range(9):
        assert e[p] == subset_elementary(x, p)


@given(st.lists(rationals, min_size=1, max_size=6))
@settings(max_examples=60, deadline=None)
def test_split_is_exact(x):
    N = power_sums(x, 8)
    sp = split_MR(N, 8)
    assert sp.e[0] == sp.M[0] == 1
    assert sp.R[0] == sp.R[1] == sp.R[2] == 0
    for p in range(9):
        assert sp.e[p] == sp.M[p] + sp.R[p]


def test_split_small_orders():
    N = power_sums([Fraction(v) for v in (1, 2, 3, 4)], 4)
    sp = split_MR(N, 4)
    assert sp.R[3] == N[2] / 3
    # partitions of 4 with a part >= 3: (3,1) and (4)
    assert sp.R[4] == N[0] * N[2] / 3 - N[3] / 4
    assert sp.R[4] == sp.e[4] - main_part(N, 4)


def test_split_detects_inconsistency(monkeypatch):
    monkeypatch.setattr(symfun, "remainder_partition_sum", lambda N, p: Fraction(0))
    with pytest.raises(ArithmeticError):
        split_MR(power_sums([Fraction(1), Fraction(2), Fraction(5)], 4), 4)


def test_hermite_over_factorial_matches_explicit():
    for p in range(12):
        for x in (Fraction(0), Fraction(3, 2), Fraction(-7, 3), Fraction(6)):
            assert hermite_over_factorial(p, x) == hermite_explicit(p, x)


def test_magic_examples():
    N = power_sums([Fraction(v) for v in (1, 2, 3)], 3)
    assert magic_rhs(N, 3) == 33 == hermite_explicit(3, 6)
    assert magic_rhs(N, 1) == N[0]
    assert magic_rhs(N, 2) == (N[0] ** 2 - 1) / 2


@given(st.lists(rationals, min_size=1, max_size=6), st.integers(1, 8))
@settings(max_examples=80, deadline=None)
def test_magic_formula_against_explicit_hermite(x, p):
    N = power_sums(x, max(p, 2))
    assert magic_rhs(N, p) == hermite_explicit(p, N[0])


def test_verify_magic_examples():
    assert verify_magic([1, -1, 2, -2], 8, exact=True)
    rade = CoefficientDistribution.rademacher()
    n = 6
    a, b = sample(rade, n, 31), sample(rade, n, 32)
    k = np.arange(1, n + 1)
    x = (a * np.cos(0.7 * k) + b * np.sin(0.7 * k)) / math.sqrt(n)
    rep = verify_magic(x, 6, exact=False)
    assert rep.ok and rep.worst_residual <= 1e-9


def test_verify_magic_at_zero():
    rep = verify_magic([0, 0, 0], 8, exact=True)
    assert rep.ok
    for p in range(1, 9):
        expected = Fraction((-1) ** (p // 2), 2 ** (p // 2) * math.factorial(p // 2)) if p % 2 == 0 else 0
        assert hermite_over_factorial(p, Fraction(0)) == expected


def test_verify_magic_catches_a_broken_remainder(monkeypatch):
    # dropping the remainder must break the identity from p = 3 on
    monkeypatch.setattr(symfun, "remainder_partition_sum", lambda N, p: 0 * N[0])
    rep = verify_magic([1, 2, 3], 4, exact=True)
    assert not rep.ok
    assert {f[1] for f in rep.failures} == {3, 4}


def test_identity_suite_passes():
    rep = verify_identities_suite(n_max=6, p_max=8, trials=20, seed=5)
    assert rep.ok and rep.checks == 6 * 20 * 8 * 2


def gaussian_poly(n, seed):
    g = CoefficientDistribution.gaussian()
    return TrigPoly(n, sample(g, n, 2 * seed), sample(g, n, 2 * seed + 1))


def test_elementary_mean_against_subsets():
    p = gaussian_poly(5, 3)
    m = 21
    u = summand_grid(p, m)
    for order in (3, 4):
        dec = remainder_decomposition(p, order, m)
        brute = np.mean([sum(math.prod(row[list(c)]) for c in itertools.combinations(range(5), order)) for row in u])
        assert dec.elementary_mean == pytest.approx(brute, abs=1e-13)


def test_remainder_identity_rademacher():
    rade = CoefficientDistribution.rademacher()
    p = TrigPoly(4, sample(rade, 4, 1), sample(rade, 4, 2))
    dec = remainder_decomposition(p, 3, 13)
    assert abs(dec.residual) <= 1e-9


@pytest.mark.parametrize("n", [1, 4, 13, 32])
@pytest.mark.parametrize("order", [3, 4, 5, 6])
def test_remainder_identity_gaussian(n, order):
    p = gaussian_poly(n, 100 * n + order)
    dec = remainder_decomposition(p, order, order * n + 1)
    assert abs(dec.residual) <= 1e-9 * (1 + abs(dec.hermite_mean))


def test_remainder_preconditions():
    p = gaussian_poly(4, 1)
    with pytest.raises(ValueError):
        script_remainder(p, 2, 100)
    with pytest.raises(ValueError):
        script_remainder(p, 3, 12)


def test_remainder_shrinks_with_n():
    def avg(n):
        return np.mean([math.sqrt(n) * abs(script_remainder(gaussian_poly(n, s), 3, 3 * n + 1)) for s in range(20)])

    assert avg(16) > avg(256)


def test_sup_second_newton_examples():
    assert sup_second_newton_deviation(TrigPoly(1, [1.0], [1.0]), 5) == pytest.approx(1.0, abs=1e-12)
    assert sup_second_newton_deviation(TrigPoly(3, np.zeros(3), np.zeros(3)), 13) == 1.0
    with pytest.raises(ValueError):
        sup_second_newton_deviation(TrigPoly(3, np.ones(3), np.ones(3)), 12)


def test_sup_second_newton_dominates_dense_scan():
    p = gaussian_poly(20, 9)
    dev = sup_second_newton_deviation(p, 81)
    dense = np.max(np.abs(1 - np.sum(summand_grid(p, 20000) ** 2, axis=1)))
    assert dev >= dense - 1e-9
    assert dev <= dense + 1e-3


def test_sup_second_newton_ratio_reported():
    rade = CoefficientDistribution.rademacher()
    ratios = []
    for n in (64, 256, 1024):
        p = TrigPoly(n, sample(rade, n, n), sample(rade, n, n + 1))
        ratios.append(sup_second_newton_deviation(p, 4 * n + 1) / math.sqrt(math.log(n) / n))
    assert all(0 < r < 50 for r in ratios)
