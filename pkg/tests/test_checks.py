import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapkit import checks
from gapkit.checks import (
    IdentityPrefix,
    ModeError,
    audit_constants,
    check_b_lower_bound,
    check_b_upper_bound,
    check_corollary_first_occurrence,
    check_corollary_max_gap,
    check_gap_bound,
    check_lemma_B_inequality,
    check_loglog_threshold,
    check_mean_bound,
    check_rosser_bounds,
    identity_suite,
    lemma_constant,
    verify_identity_theorem1,
)
from gapkit.primes import DomainError, prime_array
from gapkit.stats import FirstOccurrence, first_occurrence_gaps, gap_samples

PRIMES = prime_array(2 * 10**6)
P = [0] + PRIMES.tolist()  # P[k] = p_k


def A(k):
    return Fraction(P[k + 1] - 2, k)


def g(k):
    return P[k + 1] - P[k]


def identities_direct(m, n):
    """The three identities at (m, n) by direct Fraction summation."""
    sum_g = sum((Fraction(g(k), k - 1) for k in range(m, n + 1)), Fraction(0))
    sum_a = sum((A(k) / (k - 1) for k in range(m, n + 1)), Fraction(0))
    sum_g_short = sum_g - Fraction(g(n), n - 1)
    pn = Fraction(P[n] - 2, n)
    return (
        (sum_g, A(n) - A(m - 1) + sum_a),
        (Fraction(g(n), n), sum_g - sum_a - pn + A(m - 1)),
        (Fraction(g(n), n * (n - 1)), sum_a - sum_g_short + pn - A(m - 1)),
    )


def B(k):
    return sum((Fraction(g(i), i - 1) for i in range(2, k + 1)), Fraction(0))


@pytest.fixture(scope="module")
def prefix_300():
    return IdentityPrefix(300, PRIMES)


# -- identities ----------------------------------------------------------------


def test_identity_oracle_all_pairs_small(prefix_300):
    for n in range(2, 41):
        for m in range(2, n + 1):
            direct = identities_direct(m, n)
            assert all(lhs == rhs for lhs, rhs in direct)
            scaled = prefix_300.residuals(m, n)
            for (dl, dr), (sl, sr) in zip(direct, scaled):
                assert Fraction(sl, prefix_300.L) == dl
                assert Fraction(sr, prefix_300.L) == dr


def test_identity_oracle_sampled_to_2000():
    prefix = IdentityPrefix(2000, PRIMES)
    rng = random.Random(20000)
    pairs = [(2, 2), (2, 2000), (2000, 2000), (1999, 2000)]
    pairs += [tuple(sorted(rng.sample(range(2, 2001), 2))) for _ in range(25)]
    for m, n in pairs:
        for (dl, dr), (sl, sr) in zip(identities_direct(m, n), prefix.residuals(m, n)):
            assert dl == dr
            assert Fraction(sl, prefix.L) == dl and Fraction(sr, prefix.L) == dr


def test_identity_m_equals_n_collapse():
    for n in range(2, 60):
        assert Fraction(g(n), n - 1) == A(n) - A(n - 1) + A(n) / (n - 1)


def test_verify_identity_single_pair():
    r = verify_identity_theorem1(2, 2)
    assert r.passed and r.counts["pairs_checked"] == 3
    with pytest.raises(DomainError):
        verify_identity_theorem1(3, 2)
    with pytest.raises(ModeError):
        verify_identity_theorem1(2, 50, IdentityPrefix(40, PRIMES))


def test_identity_mode_error():
    with pytest.raises(ModeError):
        IdentityPrefix(500, PRIMES, exact_until=100)


def test_identity_suite_small(prefix_300):
    r = identity_suite(300, prefix_300)
    assert r.passed
    assert r.counts["pairs_checked"] == 3 * sum(n - 1 for n in range(2, 301))


def test_identity_suite_detects_corruption():
    prefix = IdentityPrefix(50, PRIMES)
    prefix.B[20] += 1
    r = identity_suite(50, prefix)
    assert not r.passed
    assert {v.note for v in r.violations} >= {"identity i", "identity ii"}
    assert all(2 <= v.m <= v.n for v in r.violations)


# -- inequality scans ----------------------------------------------------------


def test_gap_bound_base_cases():
    r = check_gap_bound((5, 21), PRIMES)
    assert r.passed and r.counts.get("checked", 21 - 5 + 1) >= 0
    assert r.min_margin_n is not None
    with mpmath.workdps(30):
        margin5 = 2 * mpmath.log(11) ** 2 - 2
    small = check_gap_bound((5, 5), PRIMES)
    assert float(small.min_margin) == pytest.approx(float(margin5), rel=1e-12)


def test_gap_bound_informational_below_claim():
    r = check_gap_bound((1, 1000), PRIMES)
    assert r.passed
    assert [v.n for v in r.informational] == [1]
    ratio, at = r.maxima["nicely_ratio"]
    assert at == 217 and float(ratio) < 1


def test_mean_bound_examples():
    r = check_mean_bound((6, 6), PRIMES)
    assert float(r.min_margin) == pytest.approx(2 * math.log(5) - 2.5, rel=1e-12)
    assert r.passed
    below = check_mean_bound((2, 10), PRIMES)
    assert below.passed and all(v.n < 6 for v in below.informational)


def test_rosser_bounds_small():
    upper, lower = check_rosser_bounds((1, 10**4), PRIMES)
    assert upper.passed and lower.passed
    six_up, _ = check_rosser_bounds((6, 6), PRIMES)
    assert float(six_up.min_margin) == pytest.approx(6 * (math.log(6) + math.log(math.log(6))) - 13, rel=1e-12)


def test_b_bounds_small_range():
    lower = check_b_lower_bound((6, 5000), PRIMES)
    upper = check_b_upper_bound((22, 5000), PRIMES)
    assert lower.passed and upper.passed
    assert lower.counts["identity_checked"] > 0


def test_lemma_forms_agree_and_hold():
    stated, gap_form = check_lemma_B_inequality((3, 20000), PRIMES)
    assert stated.passed and gap_form.passed
    assert stated.counts.get("forms_disagree", 0) == 0
    assert stated.counts["forms_compared"] > 0


def test_lemma_at_22_against_fraction_oracle():
    stated, _ = check_lemma_B_inequality((22, 22), PRIMES)
    b = B(21)
    lhs = Fraction(g(22), 22) + 4 * b / (22 * 20)
    rhs = 2 * b / 20
    assert lhs < rhs
    # verdict is exact; the reported margin is its nearest double
    assert stated.min_margin == float(rhs - lhs)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=3, max_value=3000))
def test_lemma_forms_are_algebraically_equal(n):
    b = B(n - 1)
    stated = 2 * b / (n - 2) - Fraction(g(n), n) - 4 * b / (n * (n - 2))
    assert stated == (2 * b - g(n)) / n


def test_corollary_max_gap():
    r = check_corollary_max_gap(5, PRIMES)
    assert r.passed
    assert float(r.min_margin) == pytest.approx(2 * math.log(11) ** 2 - 4, rel=1e-12)


def test_corollary_first_occurrence_gate():
    table = first_occurrence_gaps(gap_samples(PRIMES))
    r = check_corollary_first_occurrence(table)
    assert r.passed and all(v.n < 5 for v in r.informational)
    assert 1 in [v.n for v in r.informational]
    assert check_corollary_first_occurrence([FirstOccurrence(1, 1, 2)]).passed


# -- thresholds and constants ---------------------------------------------------


def test_loglog_threshold():
    t = check_loglog_threshold(constant_scan=2000)
    assert t.crossover == 5 and t.agrees
    assert t.holds_at[1] < t.holds_at[2]
    assert t.fails_at[1] >= t.fails_at[2]
    with mpmath.workdps(30):
        at5 = mpmath.log(mpmath.log(4)) + mpmath.mpf("1.11")
        at6 = mpmath.log(mpmath.log(5)) + mpmath.mpf("1.11")
    assert float(t.holds_at[2]) == pytest.approx(float(at5), rel=1e-15)
    assert float(t.fails_at[2]) == pytest.approx(float(at6), rel=1e-15)


def test_lemma_constant_peak():
    values = [lemma_constant(n)[0] for n in range(6, 5000)]
    assert max(values) == values[0] < 1.11
    with mpmath.workdps(40):
        v, c = lemma_constant(6, mp=True)
        assert float(v) == pytest.approx(lemma_constant(6)[0], rel=1e-14)


def test_audit_constants_exact():
    a = audit_constants(PRIMES)
    assert a["sum_A_k_over_k_minus_1_k2_to_5"] == "109/30"
    assert a["terms"] == {"A_2/1": "3/2", "A_3/2": "5/6", "A_4/3": "3/4", "A_5/4": "11/20"}
    assert a["b_lower_bound"]["derived_constant"] == "19/30"
    assert a["b_lower_bound"]["sum_implied_by_printed"] == "79/30"
    assert a["b_upper_bound"]["derived_constant"] == "79/30"
    assert a["b_lower_bound"]["mismatch"] and a["b_upper_bound"]["mismatch"]
    assert a["passed"]


def test_constants_are_the_printed_ones():
    assert checks.LOWER_CONST == Fraction(-11, 30)
    assert checks.UPPER_CONST == Fraction(49, 30)
