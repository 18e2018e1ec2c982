import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cueinterf.cue import SeedSpec
from cueinterf.weingarten import (
    DIAGRAMS,
    Permutation,
    brute_mean,
    brute_second_moment,
    cycle_types,
    diagram_value,
    enumerate_permutations,
    exact_pinv,
    gram_matrix,
    mc_monomial_average,
    monomial_average,
    weingarten,
    weingarten_exact,
)


def test_s4_census():
    perms = enumerate_permutations(4)
    assert len(perms) == 24
    counts = {}
    for p in perms:
        counts[p.cycle_type()] = counts.get(p.cycle_type(), 0) + 1
    assert counts == {(1, 1, 1, 1): 1, (2, 1, 1): 6, (2, 2): 3, (3, 1): 8, (4,): 6}
    assert len(cycle_types(4)) == 5


def test_order_range():
    assert len(enumerate_permutations(1)) == 1
    for k in (0, 5):
        with pytest.raises(ValueError):
            enumerate_permutations(k)


def test_permutation_algebra():
    p = Permutation((1, 2, 0, 3))
    assert p.compose(p.inverse()) == Permutation((0, 1, 2, 3))
    assert p.cycle_type() == (3, 1)
    assert p.num_cycles() == 2


def test_degree_one_and_two_values():
    assert weingarten(1, 5).class_value((1,)) == pytest.approx(0.2)
    w = weingarten(2, 2)
    assert w.class_value((1, 1)) == pytest.approx(1 / 3)
    assert w.class_value((2,)) == pytest.approx(-1 / 6)
    ex = weingarten_exact(2, 7)
    assert ex[(1, 1)] == Fraction(1, 48) and ex[(2,)] == Fraction(-1, 336)


def test_f11_for_any_dimension():
    for N in range(2, 20):
        assert monomial_average((1, 1), (1, 2), (1, 1), (1, 2), N) == pytest.approx(1 / (N * (N + 1)), rel=1e-12)


def test_refuses_singular_gram():
    with pytest.raises(ValueError):
        weingarten(4, 3)
    with pytest.raises(ValueError):
        weingarten(3, 2)


def test_inverse_residual_small():
    for N in range(4, 17):
        w = weingarten(4, N)
        assert w.residual < 1e-10
        g = gram_matrix(4, N)
        assert np.max(np.abs(g @ w.values - np.eye(24))) < 1e-10


@settings(max_examples=30, deadline=None)
@given(N=st.integers(4, 12), i=st.integers(0, 23), j=st.integers(0, 23), c=st.integers(0, 23))
def test_class_function_and_symmetry(N, i, j, c):
    w = weingarten(4, N)
    perms = w.perms
    assert w.values[i, j] == pytest.approx(w.values[j, i], abs=1e-15)
    # Wg(sigma tau^-1) depends only on the conjugacy class
    s, t, g = perms[i], perms[j], perms[c]
    k = perms.index(g.compose(s).compose(g.inverse()))
    l = perms.index(g.compose(t).compose(g.inverse()))
    assert w.values[k, l] == pytest.approx(w.values[i, j], abs=1e-15)


def test_relabeling_invariance():
    base = monomial_average((1, 2, 3, 3), (1, 2, 3, 4), (1, 2, 3, 3), (3, 4, 1, 2), 6, exact=True)
    for pr in itertools.permutations(range(1, 7), 3):
        rmap = dict(zip((1, 2, 3), pr))
        rows = tuple(rmap[v] for v in (1, 2, 3, 3))
        assert monomial_average(rows, (1, 2, 3, 4), rows, (3, 4, 1, 2), 6, exact=True) == base
    # column relabeling
    cols, ccols = (5, 2, 6, 1), (6, 1, 5, 2)
    assert monomial_average((1, 2, 3, 3), cols, (1, 2, 3, 3), ccols, 6, exact=True) == base


def test_unbalanced_monomial_vanishes():
    assert monomial_average((1, 1), (1, 1), (1, 1), (1, 2), 5) == 0.0
    assert monomial_average((1, 1), (1, 1), (1, 1), (1, 2), 5, exact=True) == 0
    # U11 U22 conj(U11 U22) is balanced; U11 U21 conj(U12 U22) is not
    assert monomial_average((1, 2), (1, 2), (1, 2), (1, 2), 3) != 0
    assert monomial_average((1, 2), (1, 1), (1, 2), (2, 2), 3) == 0.0


def test_literal_four_entry_example_is_unbalanced():
    # U11 conj(U12) U21 conj(U22): columns {1,1} versus {2,2}
    assert monomial_average((1, 2), (1, 1), (1, 2), (2, 2), 3, exact=True) == 0


def test_cross_pairing_is_negative():
    # U11 U22 conj(U12 U21)
    assert monomial_average((1, 2), (1, 2), (1, 2), (2, 1), 3, exact=True) == Fraction(-1, 24)
    assert diagram_value("E2", 3, exact=True) == Fraction(-1, 24)


def test_exact_matches_float():
    for k in (2, 3, 4):
        for N in range(k, 10):
            ex = weingarten_exact(k, N)
            fl = weingarten(k, N)
            for t in cycle_types(k):
                assert float(ex[t]) == pytest.approx(fl.class_value(t), rel=1e-10, abs=1e-15)


def test_small_dimension_uses_pseudo_inverse():
    # for N < k the permutation operators are dependent; averages still come out right
    assert monomial_average((1, 2), (1, 2), (1, 2), (1, 2), 2, exact=True) == Fraction(1, 3)
    assert monomial_average((1, 1, 1), (1, 1, 1), (1, 1, 1), (1, 1, 1), 2, exact=True) == Fraction(1, 4)
    assert monomial_average((1, 1, 1, 1), (1, 1, 1, 1), (1, 1, 1, 1), (1, 1, 1, 1), 1, exact=True) == 1


def test_exact_pinv_penrose_conditions():
    a = [[Fraction(v) for v in row] for row in gram_matrix(3, 2).astype(int)]
    p = exact_pinv(a)
    mul = lambda x, y: [[sum(x[i][k] * y[k][j] for k in range(len(y))) for j in range(len(y[0]))] for i in range(len(x))]  # noqa: E731
    tr = lambda x: [list(r) for r in zip(*x)]  # noqa: E731
    assert mul(mul(a, p), a) == a
    assert mul(mul(p, a), p) == p
    assert mul(a, p) == tr(mul(a, p))
    assert mul(p, a) == tr(mul(p, a))


def test_diagram_examples():
    assert diagram_value("F11", 4) == pytest.approx(0.05, rel=1e-12)
    assert diagram_value("D14", 4, exact=True) == Fraction(1, 840)
    with pytest.raises(KeyError):
        diagram_value("D99", 4)
    assert len([k for k in DIAGRAMS if k != "D12"]) == 23


def test_input_validation():
    with pytest.raises(ValueError):
        monomial_average((1,), (1, 2), (1,), (1,), 3)
    with pytest.raises(ValueError):
        monomial_average((4,), (1,), (4,), (1,), 3)
    with pytest.raises(ValueError):
        monomial_average((1,) * 5, (1,) * 5, (1,) * 5, (1,) * 5, 6)


def test_brute_mean_examples():
    assert brute_mean(2, 1) == pytest.approx(2 / 3, rel=1e-12)
    assert brute_mean(2, 2, 0.0) == pytest.approx(2 / 15, rel=1e-12)
    assert brute_mean(1, 3) == 0.0


def test_brute_mean_matches_closed_form_grid():
    from cueinterf.moments import mean_interference

    for n in (2, 3, 4):
        for m in (1, 2, 3, 4):
            for x in (0.0, 0.5, 5.0):
                assert brute_mean(n, m, x) == pytest.approx(mean_interference(n, m, 1, x), rel=1e-12)


def test_brute_second_moment_unitary():
    # n=2, m=1: <I^2> from the closed unitary formula at N=2
    N = 2
    exact = (N * (N**3 - 5 * N + 8) - 4) / ((N + 1) * (N + 3))
    assert brute_second_moment(2, 1) == pytest.approx(exact, rel=1e-12)


def test_brute_caps():
    with pytest.raises(ValueError):
        brute_mean(9, 8)
    with pytest.raises(ValueError):
        brute_second_moment(7, 6)


def test_monte_carlo_cross_checks():
    f11 = ((1, 1), (1, 2), (1, 1), (1, 2))
    mean, se = mc_monomial_average(*f11, 4, 100_000, SeedSpec(21))
    assert abs(mean.real - 0.05) < 4 * se
    zero = ((1, 1), (1, 1), (1, 1), (1, 2))
    mean, se = mc_monomial_average(*zero, 4, 100_000, SeedSpec(22))
    assert abs(mean) < 4 * se


@pytest.mark.slow
def test_cross_pairing_by_sampling():
    mean, se = mc_monomial_average((1, 2), (1, 2), (1, 2), (2, 1), 3, 1_000_000, SeedSpec(23))
    assert abs(mean.real + 1 / 24) < 4 * se
    assert abs(mean.imag) < 4 * se


def test_mc_needs_samples():
    with pytest.raises(ValueError):
        mc_monomial_average((1,), (1,), (1,), (1,), 2, 100, SeedSpec(1))
