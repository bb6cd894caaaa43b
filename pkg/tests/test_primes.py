import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from gapkit.primes import (
    CapacityError,
    DomainError,
    PrimeIndexEntry,
    SieveConfig,
    is_prime_64,
    next_prime,
    nth_prime,
    prev_prime,
    prime_array,
    prime_segments,
    primes_up_to,
    read_segment_cache,
    write_segment_cache,
)


def trial_division_primes(limit):
    """Independent oracle: plain trial division by earlier primes."""
    found = []
    for x in range(2, limit + 1):
        r = int(x**0.5)
        if all(x % q for q in found if q <= r):
            found.append(x)
    return found


@pytest.fixture(scope="module")
def oracle_1e5():
    return trial_division_primes(10**5)


def test_small_sieve():
    assert prime_array(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert prime_array(2).tolist() == [2]
    assert prime_array(3).tolist() == [2, 3]


def test_sieve_matches_trial_division(oracle_1e5):
    assert prime_array(10**5, segment_size=1 << 10).tolist() == oracle_1e5


@pytest.mark.parametrize("limit", [1000, 1024, 2047, 2048, 2049, 65536, 99991])
@pytest.mark.parametrize("segment_size", [1 << 10, 1 << 12])
def test_segment_boundaries(limit, segment_size, oracle_1e5):
    expected = [p for p in oracle_1e5 if p <= limit]
    assert prime_array(limit, segment_size).tolist() == expected


def test_parallel_segments_identical():
    serial = prime_array(3 * 10**6, 1 << 14)
    threaded = prime_array(3 * 10**6, 1 << 14, parallel_segments=4)
    assert np.array_equal(serial, threaded)


def test_segments_resume_from_start():
    cfg = SieveConfig(10**5, 1 << 10)
    tail = np.concatenate(list(prime_segments(cfg, start=50000)))
    full = prime_array(10**5)
    assert tail.tolist() == full[full >= 50000].tolist()


def test_primes_up_to_indexes_from_one():
    entries = list(primes_up_to(SieveConfig(13)))
    assert entries[0] == PrimeIndexEntry(1, 2)
    assert entries[-1] == PrimeIndexEntry(6, 13)


def test_sieve_config_validation():
    with pytest.raises(DomainError):
        SieveConfig(1)
    with pytest.raises(CapacityError):
        SieveConfig(1 << 63)


@pytest.mark.parametrize("n,p", [(1, 2), (6, 13), (10, 29), (31, 127), (5858, 57809), (10**6, 15485863)])
def test_nth_prime(n, p):
    assert nth_prime(n) == PrimeIndexEntry(n, p)


def test_nth_prime_domain():
    with pytest.raises(DomainError):
        nth_prime(0)
    with pytest.raises(CapacityError):
        nth_prime(10**9, capacity=10**6)


def test_is_prime_against_oracle(oracle_1e5):
    flags = [is_prime_64(x) for x in range(10**5 + 1)]
    assert [x for x, f in enumerate(flags) if f] == oracle_1e5


@pytest.mark.parametrize(
    "x,expected",
    [
        (2**61 - 1, True),
        (2**64 - 59, True),
        (2**64 - 1, False),
        (3215031751, False),  # strong pseudoprime to bases 2, 3, 5, 7
        (3825123056546413051, False),  # strong pseudoprime to the first nine prime bases
        (318665857834031151167461, None),
    ],
)
def test_is_prime_known_values(x, expected):
    if expected is None:
        with pytest.raises(CapacityError):
            is_prime_64(x)
    else:
        assert is_prime_64(x) is expected


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_is_prime_matches_sympy(x):
    assert is_prime_64(x) == sympy.isprime(x)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**63))
def test_next_prime_properties(x):
    q = next_prime(x)
    assert q > x and is_prime_64(q)
    assert q == sympy.nextprime(x)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=3, max_value=2**63))
def test_prev_prime_properties(x):
    q = prev_prime(x)
    assert q < x and is_prime_64(q)
    assert q == sympy.prevprime(x)


def test_next_prev_edges():
    assert next_prime(0) == 2 and next_prime(2) == 3 and next_prime(13) == 17
    assert prev_prime(3) == 2 and prev_prime(17) == 13
    with pytest.raises(DomainError):
        prev_prime(2)
    with pytest.raises(CapacityError):
        next_prime(2**64 - 59)


def test_segment_cache_round_trip(tmp_path):
    primes = prime_array(10**4)
    sel = primes[(primes >= 1001) & (primes < 1001 + 2 * 2048)]
    path = tmp_path / "seg.bin"
    write_segment_cache(path, 1001, 2048, sel)
    base, back = read_segment_cache(path)
    assert base == 1001
    assert back.tolist() == sel.tolist()
