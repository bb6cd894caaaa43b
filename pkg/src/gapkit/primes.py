"""Prime generation and point primality.

The segmented sieve works on odd numbers only: a segment starting at the odd
value ``low`` holds ``segment_size`` flags for ``low, low+2, low+4, ...``.
Segments are marked independently and delivered strictly in ascending order,
so the stream is identical for any worker count.
"""
from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

__all__ = [
    "CapacityError",
    "DomainError",
    "PrimeIndexEntry",
    "SieveConfig",
    "base_primes",
    "is_prime_64",
    "next_prime",
    "nth_prime",
    "prev_prime",
    "prime_array",
    "prime_segments",
    "primes_up_to",
    "read_segment_cache",
    "write_segment_cache",
]

U64_MAX = (1 << 64) - 1
# Largest prime below 2**64.
LARGEST_U64_PRIME = U64_MAX - 58
# Sieve values are held in int64 arrays.
SIEVE_MAX = (1 << 63) - 1
DEFAULT_SEGMENT_SIZE = 1 << 20
MIN_SEGMENT_SIZE = 1 << 10
NTH_PRIME_CAPACITY = 10**8

# Deterministic for every n < 2**64 (Sinclair's seven-base set).
_MR_BASES = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)
_SMALL_PRIMES = (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97)


class CapacityError(ValueError):
    """Request exceeds the supported numeric range or configured capacity."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of the operation."""


class PrimeIndexEntry(NamedTuple):
    n: int
    p: int


@dataclass(frozen=True)
class SieveConfig:
    limit: int
    segment_size: int = DEFAULT_SEGMENT_SIZE
    parallel_segments: int = 1

    def __post_init__(self):
        if self.limit < 2:
            raise DomainError(f"limit must be >= 2, got {self.limit}")
        if self.limit > SIEVE_MAX:
            raise CapacityError(f"limit {self.limit} exceeds sieve capacity {SIEVE_MAX}")
        if self.segment_size < MIN_SEGMENT_SIZE:
            raise DomainError(f"segment_size must be >= {MIN_SEGMENT_SIZE}")
        if self.parallel_segments < 1:
            raise DomainError("parallel_segments must be >= 1")


def base_primes(limit: int) -> np.ndarray:
    """All primes <= limit by a plain (non-segmented) odd-only sieve."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    flags = np.ones((limit + 1) // 2, dtype=bool)  # flags[i] <-> 2i+1
    flags[0] = False
    for i in range(1, (math.isqrt(limit) - 1) // 2 + 1):
        if flags[i]:
            p = 2 * i + 1
            flags[p * p // 2 :: p] = False
    odd = 2 * np.flatnonzero(flags).astype(np.int64) + 1
    return np.concatenate((np.array([2], dtype=np.int64), odd))


def _mark_segment(low: int, count: int, odd_base: np.ndarray) -> np.ndarray:
    """Primes among the odd values low, low+2, ..., low+2(count-1)."""
    flags = np.ones(count, dtype=bool)
    high = low + 2 * count  # exclusive
    if low == 1:
        flags[0] = False
    ps = odd_base[odd_base * odd_base < high]
    if ps.size:
        starts = np.maximum(ps * ps, ((low + ps - 1) // ps) * ps)
        starts += np.where(starts % 2 == 0, ps, 0)
        offsets = (starts - low) // 2
        for off, p in zip(offsets.tolist(), ps.tolist()):
            flags[off::p] = False
    return low + 2 * np.flatnonzero(flags).astype(np.int64)


def prime_segments(config: SieveConfig, start: int = 0) -> Iterator[np.ndarray]:
    """Yield arrays of the primes in ``[start, config.limit]``, one per segment.

    Segment boundaries depend only on ``segment_size``, never on the worker
    count.  Empty segments are skipped.
    """
    limit = config.limit
    if start <= 2 <= limit:
        yield np.array([2], dtype=np.int64)
    span = 2 * config.segment_size
    odd_base = base_primes(math.isqrt(limit))[1:]

    # Segments are aligned to multiples of span starting at 1.
    first = 1 + (max(start, 1) - 1) // span * span
    lows = range(first, limit + 1, span)

    def work(low: int) -> np.ndarray:
        count = min(config.segment_size, (limit - low) // 2 + 1)
        primes = _mark_segment(low, count, odd_base)
        if low < start:
            primes = primes[primes >= start]
        return primes

    if config.parallel_segments == 1:
        for low in lows:
            seg = work(low)
            if seg.size:
                yield seg
        return
    with ThreadPoolExecutor(config.parallel_segments) as pool:
        batch = config.parallel_segments
        for i in range(0, len(lows), batch):
            for seg in pool.map(work, lows[i : i + batch]):
                if seg.size:
                    yield seg


def primes_up_to(config: SieveConfig) -> Iterator[PrimeIndexEntry]:
    """Stream ``(n, p_n)`` for every prime ``p_n <= config.limit``."""
    n = 0
    for seg in prime_segments(config):
        for p in seg.tolist():
            n += 1
            yield PrimeIndexEntry(n, p)


def prime_array(limit: int, segment_size: int = DEFAULT_SEGMENT_SIZE, parallel_segments: int = 1) -> np.ndarray:
    """All primes <= limit as one int64 array."""
    config = SieveConfig(limit, segment_size, parallel_segments)
    segs = list(prime_segments(config))
    return np.concatenate(segs) if segs else np.empty(0, dtype=np.int64)


def _nth_prime_upper(n: int) -> int:
    if n < 6:
        return 13
    return int(n * (math.log(n) + math.log(math.log(n)))) + 1


def nth_prime(n: int, capacity: int = NTH_PRIME_CAPACITY) -> PrimeIndexEntry:
    if n < 1:
        raise DomainError(f"prime index must be >= 1, got {n}")
    if n > capacity:
        raise CapacityError(f"index {n} exceeds capacity {capacity}")
    seen = 0
    for seg in prime_segments(SieveConfig(_nth_prime_upper(n))):
        if seen + seg.size >= n:
            return PrimeIndexEntry(n, int(seg[n - seen - 1]))
        seen += seg.size
    raise AssertionError("upper bound for p_n was too small")  # pragma: no cover


def is_prime_64(x: int) -> bool:
    """Exact primality for 0 <= x < 2**64 (deterministic Miller-Rabin)."""
    if x > U64_MAX:
        raise CapacityError(f"{x} is outside the unsigned 64-bit range")
    if x < 2:
        return False
    if x % 2 == 0:
        return x == 2
    for p in _SMALL_PRIMES:
        if x % p == 0:
            return x == p
    if x < 97 * 97:
        return True
    d, s = x - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        a %= x
        if a == 0:
            continue
        y = pow(a, d, x)
        if y == 1 or y == x - 1:
            continue
        for _ in range(s - 1):
            y = y * y % x
            if y == x - 1:
                break
        else:
            return False
    return True


def next_prime(x: int) -> int:
    """Smallest prime strictly greater than x."""
    if x >= LARGEST_U64_PRIME:
        raise CapacityError(f"no 64-bit prime exceeds {x}")
    if x < 2:
        return 2
    c = x + 1 if x % 2 == 0 else x + 2
    while not is_prime_64(c):
        c += 2
    return c


def prev_prime(x: int) -> int:
    """Largest prime strictly less than x."""
    if x < 3:
        raise DomainError(f"no prime below {x}")
    if x > U64_MAX + 1:
        raise CapacityError(f"{x} is outside the unsigned 64-bit range")
    if x == 3:
        return 2
    c = x - 1 if x % 2 == 0 else x - 2
    while not is_prime_64(c):
        c -= 2
    return c


# On-disk segment cache: 8-byte little-endian segment base (the odd value of
# bit 0), followed by a little-endian bitset where bit i is set iff base + 2i
# is prime.

_HEADER = struct.Struct("<Q")


def write_segment_cache(path: str | Path, low: int, count: int, primes: np.ndarray) -> None:
    if low % 2 == 0:
        raise DomainError("segment base must be odd")
    bits = np.zeros(count, dtype=np.uint8)
    bits[(primes[primes > 2] - low) // 2] = 1
    Path(path).write_bytes(_HEADER.pack(low) + np.packbits(bits, bitorder="little").tobytes())


def read_segment_cache(path: str | Path) -> tuple[int, np.ndarray]:
    """Return ``(low, primes)`` from a cache file written by write_segment_cache."""
    raw = Path(path).read_bytes()
    (low,) = _HEADER.unpack_from(raw)
    bits = np.unpackbits(np.frombuffer(raw[_HEADER.size :], dtype=np.uint8), bitorder="little")
    return low, low + 2 * np.flatnonzero(bits).astype(np.int64)
