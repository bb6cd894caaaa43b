import math

import mpmath
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from gapkit.intervals import (
    IntervalResult,
    andrica_check,
    andrica_samples,
    find_oppermann_threshold,
    find_sqrt_threshold,
    oppermann_check,
    oppermann_scan,
    sqrt_gap_check,
    witnesses_csv,
)
from gapkit.primes import CapacityError, DomainError, prime_array

PRIMES = prime_array(10**6)


def test_oppermann_small():
    assert oppermann_check(2) == IntervalResult(2, 3, 5)
    assert oppermann_check(10) == IntervalResult(10, 97, 101)


def test_oppermann_errors():
    with pytest.raises(DomainError):
        oppermann_check(1)
    with pytest.raises(CapacityError):
        oppermann_check(2**32)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=10**9))
def test_oppermann_witnesses_are_first_primes(a):
    res = oppermann_check(a)
    sq = a * a
    for lo, hi, w in ((sq - a, sq, res.lower_witness), (sq, sq + a, res.upper_witness)):
        first = sympy.nextprime(lo)
        assert w == (first if first < hi else None)


def test_oppermann_scan_base_range():
    report, results = oppermann_scan(2, 240)
    assert report.passed and len(results) == 239
    assert report.counts["intervals_checked"] == 2 * 239
    assert all(sympy.isprime(r.lower_witness) and sympy.isprime(r.upper_witness) for r in results)


def test_oppermann_scan_singleton_matches_check():
    report, results = oppermann_scan(240, 240)
    assert results == [oppermann_check(240)]
    assert report.lo == report.hi == 240


def test_oppermann_scan_threads_identical():
    one = oppermann_scan(2, 5000, threads=1, chunk=512)
    four = oppermann_scan(2, 5000, threads=4, chunk=512)
    assert one[1] == four[1]
    assert one[0].to_json() == four[0].to_json()


def test_witnesses_csv():
    _, results = oppermann_scan(2, 4)
    assert witnesses_csv(results) == "a,lower_witness,upper_witness\n2,3,5\n3,7,11\n4,13,17\n"


def test_oppermann_threshold():
    t = find_oppermann_threshold()
    assert t.crossover == 240 and t.agrees
    assert 240 < 8 * math.log(240) ** 2
    assert 241 >= 8 * math.log(241) ** 2


def test_andrica_boundary():
    r = andrica_check((1, 200), PRIMES)
    assert r.passed
    assert 30 in [v.n for v in r.informational]
    assert max(v.n for v in r.informational) == 30
    s30, s31 = andrica_samples((30, 31), PRIMES)
    assert (s30.p_n, s30.p_next) == (113, 127) and s30.sqrt_diff == pytest.approx(0.639, abs=1e-3)
    assert (s31.p_n, s31.p_next) == (127, 131) and s31.sqrt_diff == pytest.approx(0.176, abs=1e-3)
    assert not s30.sqrt_gap_ok and s31.sqrt_gap_ok


def test_andrica_float_and_exact_agree():
    r = andrica_check((1, len(PRIMES) - 1), PRIMES)
    assert r.passed
    assert r.counts["exact_compared"] == len(PRIMES) - 1
    assert r.counts.get("exact_disagree", 0) == 0
    with mpmath.workdps(40):
        expected = mpmath.mpf(1) / 2 - (mpmath.sqrt(131) - mpmath.sqrt(127))
    # margins are a float evaluation; recheck only kicks in near zero
    assert float(r.min_margin) < float(expected)


def test_sqrt_gap():
    r = sqrt_gap_check((1, 5858), PRIMES)
    assert r.passed
    informational = {v.n: v for v in r.informational}
    assert 30 in informational and informational[30].lhs == 196 and informational[30].rhs == 113
    assert max(informational) == 30


def test_sqrt_threshold():
    t = find_sqrt_threshold(PRIMES)
    assert (t.crossover, t.index) == (57809, 5858)
    assert t.agrees and t.crossover < 57827
    assert math.sqrt(57809) <= 2 * math.log(57809) ** 2
    assert math.sqrt(57829) > 2 * math.log(57829) ** 2
    assert 1000 > 2 * math.log(10**6) ** 2
