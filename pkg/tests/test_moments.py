import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cueinterf.moments import (
    ASYMPTOTIC_REGIMES,
    DIAGRAM_TABLE,
    _fall,
    a11,
    a12,
    a13,
    counting_identities_check,
    diagram,
    environment_sum,
    falling_product,
    mean_from_diagrams,
    mean_interference,
    mean_limits,
    moment_report,
    moment_terms,
    second_moment,
    std_dev,
    variance,
    variance_asymptotics,
)
from cueinterf.weingarten import brute_second_moment, diagram_value

INF = math.inf


def test_falling_product():
    assert falling_product(5, 0) == 5
    assert falling_product(5, 2) == 60
    assert falling_product(3, 3) == 0
    assert falling_product(2, 4) == 0
    with pytest.raises(ValueError):
        falling_product(-1, 1)


@pytest.mark.parametrize("n", range(1, 9))
@pytest.mark.parametrize("m", range(1, 9))
def test_counting_identities(n, m):
    assert counting_identities_check(n, m)


@pytest.mark.parametrize("N", [4, 5, 6, 8])
def test_table_matches_oracle_exactly(N):
    for name in DIAGRAM_TABLE:
        assert diagram(name, N, exact=True) == diagram_value(name, N, exact=True), name


def test_closed_forms_hold_beyond_the_checked_sizes():
    for N in (7, 9, 10, 13):
        for name in DIAGRAM_TABLE:
            assert diagram(name, N) == pytest.approx(diagram_value(name, N), rel=1e-12), name


def test_mean_examples():
    assert mean_interference(2, 1, 1, 0) == pytest.approx(2 / 3, rel=1e-15)
    assert mean_interference(2, 2, 1, 0) == pytest.approx(2 / 15, rel=1e-15)
    assert mean_interference(2, 2, 1, INF) == pytest.approx(4 / 15, rel=1e-15)
    assert mean_interference(1, 5, 1, 0.3) == 0.0
    assert mean_interference(3, 2, 1, INF, exact=True) == Fraction(24, 35)


def test_mean_limits():
    for n in (2, 4, 7):
        for m in (2, 3, 9):
            lo, hi = mean_limits(n, m)
            assert mean_interference(n, m, 1, 0) == pytest.approx(lo, rel=1e-14)
            assert mean_interference(n, m, 1, INF) == pytest.approx(hi, rel=1e-14)
            assert mean_interference(n, m, 1, 60.0) == pytest.approx(hi, rel=1e-12)


def test_mean_matches_diagram_assembly():
    from cueinterf.thermal import h_factor

    for n in range(1, 17):
        for m in range(1, 17):
            for x in (0.0, 0.3, 2.0, INF):
                h = h_factor(m, x)
                assert mean_from_diagrams(n, m, h) == pytest.approx(mean_interference(n, m, 1, x), rel=1e-12, abs=1e-15)


def test_mean_increases_with_inverse_temperature():
    for n, m in ((2, 2), (4, 3), (6, 8)):
        vals = [mean_interference(n, m, 1, x) for x in np.linspace(0, 10, 101)]
        assert np.all(np.diff(vals) >= -1e-15)


def test_second_moment_examples():
    assert second_moment(2, 1, 1, 0) == pytest.approx(8 / 15, rel=1e-14)
    assert second_moment(2, 1, 1, 0, exact=True) == Fraction(8, 15)
    assert second_moment(1, 4, 1, 0.2) == 0.0


@pytest.mark.parametrize("N", range(2, 13))
def test_unitary_limit_exact(N):
    mean = mean_interference(N, 1, 1, 0, exact=True)
    assert mean == Fraction(N * (N - 1), N + 1)
    m2 = second_moment(N, 1, 1, 0, exact=True)
    assert m2 == Fraction(N * (N**3 - 5 * N + 8) - 4, (N + 1) * (N + 3))
    sigma = 2 / (N + 1) * math.sqrt((N - 1) / (N + 3))
    assert std_dev(N, 1) == pytest.approx(sigma, rel=1e-12)


@pytest.mark.parametrize("n,m", [(2, 2), (2, 3), (3, 2)])
@pytest.mark.parametrize("x", [0.0, 0.5, 5.0])
def test_second_moment_matches_brute_force(n, m, x):
    assert second_moment(n, m, 1, x) == pytest.approx(brute_second_moment(n, m, x), rel=1e-10)


def test_single_b_coefficient_is_wrong():
    worst = max(
        abs(second_moment(n, m, 1, x, c_b=1) / brute_second_moment(n, m, x) - 1)
        for n, m in ((2, 2), (2, 3), (3, 2))
        for x in (0.0, 0.5, 5.0)
    )
    assert worst > 0.01


def test_table_values():
    expected = {(4, 2): (0.5728547652733899, 0.11718753), (4, 4): (0.14293, 0.03255),
                (4, 8): (0.03702, 0.00864), (8, 2): (1.54109, 0.09409), (8, 4): (0.38796, 0.02666)}
    for (n, m), (mu, sd) in expected.items():
        r = moment_report(n, m, 1, 0.1)
        assert r.mean == pytest.approx(mu, abs=5e-6)
        assert r.std_dev == pytest.approx(sd, abs=5e-6)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 9), m=st.integers(1, 9), x=st.sampled_from([0.0, 0.01, 0.1, 1.0, 10.0, INF]))
def test_variance_nonnegative(n, m, x):
    v = variance(n, m, 1, x)
    assert v >= 0
    r = moment_report(n, m, 1, x)
    assert r.second_moment == pytest.approx(r.variance + r.mean**2, rel=1e-10, abs=1e-14)


def test_exact_variance_in_limits():
    for n, m in ((3, 2), (4, 4)):
        for x in (0.0, INF):
            v = variance(n, m, 1, x, exact=True)
            assert isinstance(v, Fraction)
            mean = mean_interference(n, m, 1, x, exact=True)
            assert v == second_moment(n, m, 1, x, exact=True) - mean**2


def test_multi_spin_coincidence():
    for x in (0.0, INF):
        a = moment_report(3, 2, 2, x)
        b = moment_report(3, 4, 1, x)
        assert a.mean == pytest.approx(b.mean, rel=1e-12)
        assert a.variance == pytest.approx(b.variance, rel=1e-12)
    a, b = moment_report(3, 2, 2, 1.0), moment_report(3, 4, 1, 1.0)
    assert abs(a.mean / b.mean - 1) > 1e-3


def test_identified_expansions_of_environment_sums():
    D = lambda k, N: diagram(k, N, exact=True)  # noqa: E731
    for m in (1, 2, 3, 5):
        for N in (4, 6, 12):
            f = lambda b: _fall(m, b)  # noqa: E731
            x12 = (f(4) * D("D43", N) + 2 * f(3) * (D("Da33", N) + D("Db33", N) + D("Dc33", N))
                   + f(2) * (D("Da23", N) + D("Db32", N) + D("Dc23", N)) + 4 * f(2) * D("Db23", N)
                   + m * D("D13", N))
            x13 = (f(4) * D("D42", N) + f(3) * (4 * D("Da32", N) + 2 * D("Db32", N))
                   + f(2) * (2 * D("Da22", N) + D("Db22", N) + 4 * D("Dc22", N))
                   + m * diagram_value("D12", N, exact=True))
            assert a12(m, N) == x12
            assert a13(m, N) == x13
            assert environment_sum(((1, 2, 3, 4), (3, 4, 1, 2)), m, N) == a11(m, N)


def test_moment_terms_reject_bad_sizes():
    with pytest.raises(ValueError):
        moment_terms(0, 2)
    with pytest.raises(ValueError):
        mean_interference(2, 0)


def test_asymptotic_form_values():
    assert variance_asymptotics(4, 256, "m_large_x_inf") == 2 * 9 / (64 * 256**2)
    assert variance_asymptotics(4, 256, "m_large_x_0") == 9 / (64 * 256**4)
    assert variance_asymptotics(256, 2, "n_large_x_inf") == pytest.approx(2 / (256 * 16) + 4 * 3 / (64 * 256**2))
    with pytest.raises(ValueError):
        variance_asymptotics(4, 4, "bogus")
    assert len(ASYMPTOTIC_REGIMES) == 4


def test_large_m_high_temperature_leading_term():
    # the exact variance approaches 2 (n-1)^2 / (n^3 m^4), twice the m_large_x_0 truncation
    n = 4
    for m in (64, 256, 1024):
        v = variance(n, m, 1, 0.0, exact=True)
        ratio = v * n**3 * m**4 / (n - 1) ** 2
        assert abs(float(ratio) - 2) < 40 / m


def test_three_of_four_truncations_are_close():
    cases = {
        "n_large_x_inf": (256, 2, INF),
        "n_large_x_0": (256, 2, 0.0),
        "m_large_x_inf": (4, 256, INF),
    }
    for regime, (n, m, x) in cases.items():
        exact = float(variance(n, m, 1, x, exact=True))
        assert variance_asymptotics(n, m, regime) == pytest.approx(exact, rel=0.05), regime
