"""Primes in Oppermann intervals and the square-root gap bounds.

sqrt(p_{n+1}) - sqrt(p_n) < 1/2 is equivalent to the integer test
(4 g_n - 1)^2 < 16 p_n, which the Andrica scan uses to cross-check its
floating-point verdicts at every index.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import mpmath
import numpy as np

from .blocks import GapBlock
from .engine import Family, mp_ctx, primes_for_index, run_families, scan_less
from .primes import U64_MAX, CapacityError, DomainError, next_prime, prime_array
from .report import CheckReport, ThresholdResult, Violation

__all__ = [
    "AndricaSample",
    "IntervalResult",
    "andrica_check",
    "andrica_samples",
    "find_oppermann_threshold",
    "find_sqrt_threshold",
    "oppermann_check",
    "oppermann_scan",
    "read_witnesses_csv",
    "sqrt_gap_check",
    "witnesses_csv",
]

ANDRICA_FROM = 31
OPPERMANN_BASE = 240
SQRT_PRIME_BOUND = 57827
SQRT_INDEX_BOUND = 5858


class IntervalResult(NamedTuple):
    a: int
    lower_witness: int | None
    upper_witness: int | None


class AndricaSample(NamedTuple):
    n: int
    p_n: int
    p_next: int
    sqrt_diff: float
    sqrt_gap_ok: bool


def oppermann_check(a: int) -> IntervalResult:
    """Smallest primes in (a(a-1), a^2) and (a^2, a(a+1)), or None."""
    if a < 2:
        raise DomainError(f"a must be >= 2, got {a}")
    if a * (a + 1) > U64_MAX:
        raise CapacityError(f"a(a+1) exceeds 64 bits for a = {a}")
    sq = a * a
    lo = next_prime(a * (a - 1))
    hi = next_prime(sq)
    return IntervalResult(a, lo if lo < sq else None, hi if hi < sq + a else None)


def _scan_chunk(a0: int, a1: int) -> tuple[CheckReport, list[IntervalResult]]:
    r = CheckReport("oppermann", a0, a1, 2)
    results = []
    for a in range(a0, a1 + 1):
        res = oppermann_check(a)
        results.append(res)
        sq = a * a
        # margin: distance from the first prime past the interval start to its end
        for side, start, end, w in (("lower", sq - a, sq, res.lower_witness), ("upper", sq, sq + a, res.upper_witness)):
            first = w if w is not None else next_prime(start)
            margin = end - first
            r.note_margin(margin, a)
            if w is None:
                r.add(Violation(a, first, end, margin, note=side))
        r.bump("intervals_checked", 2)
    return r, results


def oppermann_scan(a_min: int, a_max: int, threads: int = 1, chunk: int = 4096) -> tuple[CheckReport, list[IntervalResult]]:
    """Witness search for every a in [a_min, a_max]; the report lists any gaps."""
    if not 2 <= a_min <= a_max:
        raise DomainError(f"need 2 <= a_min <= a_max, got [{a_min}, {a_max}]")
    if a_max * (a_max + 1) > U64_MAX:
        raise CapacityError(f"a(a+1) exceeds 64 bits for a = {a_max}")
    bounds = [(lo, min(lo + chunk - 1, a_max)) for lo in range(a_min, a_max + 1, chunk)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda b: _scan_chunk(*b), bounds))
    else:
        parts = [_scan_chunk(*b) for b in bounds]
    report, results = parts[0]
    for r, res in parts[1:]:
        report = report.merge(r)
        results = results + res
    return report, results


def witnesses_csv(results: list[IntervalResult]) -> str:
    lines = ["a,lower_witness,upper_witness"]
    for r in results:
        lines.append(f"{r.a},{'' if r.lower_witness is None else r.lower_witness},{'' if r.upper_witness is None else r.upper_witness}")
    return "\n".join(lines) + "\n"


def read_witnesses_csv(text: str) -> list[IntervalResult]:
    out = []
    for line in text.splitlines()[1:]:
        a, lo, hi = line.split(",")
        out.append(IntervalResult(int(a), int(lo) if lo else None, int(hi) if hi else None))
    return out


def find_oppermann_threshold(cap: int = 10**7) -> ThresholdResult:
    """Largest a >= 2 with a < 8 log^2 a (the bound closing the Oppermann argument)."""
    a = 2
    while a < 8 * math.log(a) ** 2 or _opp_mp(a)[2] > 0:
        a += 1
        if a > cap:
            raise RuntimeError(f"no crossover below {cap}")
    crossover = a - 1
    hold, fail = _opp_mp(crossover), _opp_mp(crossover + 1)
    if not (hold[2] > 0 and fail[2] <= 0):
        raise RuntimeError("extended-precision confirmation of the crossover failed")
    return ThresholdResult(
        "oppermann_threshold",
        crossover,
        None,
        (crossover, hold[0], hold[1]),
        (crossover + 1, fail[0], fail[1]),
        OPPERMANN_BASE,
        crossover == OPPERMANN_BASE,
    )


def _opp_mp(a: int):
    with mp_ctx():
        lhs, rhs = mpmath.mpf(a), 8 * mpmath.log(a) ** 2
        return lhs, rhs, rhs - lhs


# -- square-root gap bounds --------------------------------------------------


def _k_andrica(block: GapBlock, a: int, b: int, reports: dict) -> None:
    r = reports["andrica"]
    n, p, q, g = block.n[a:b], block.p_n[a:b], block.p_next[a:b], block.g[a:b]
    # g / (sqrt q + sqrt p) avoids the cancellation in sqrt q - sqrt p
    diff = g / (np.sqrt(q.astype(np.float64)) + np.sqrt(p.astype(np.float64)))

    def recheck(i):
        with mp_ctx():
            d = mpmath.sqrt(int(q[i])) - mpmath.sqrt(int(p[i]))
            half = mpmath.mpf(1) / 2
            return d, half, half - d

    bad = scan_less(r, n, diff, np.full(len(n), 0.5), recheck)
    exact_ok = (4 * g - 1) ** 2 < 16 * p
    r.bump("exact_compared", len(n))
    mismatch = int(np.count_nonzero(bad == exact_ok))
    if mismatch:
        r.bump("exact_disagree", mismatch)
        for i in np.flatnonzero(bad == exact_ok).tolist():
            r.add(Violation(int(n[i]), float(diff[i]), 0.5, -1.0, note="float and exact verdicts disagree"))


def _k_sqrt_gap(block: GapBlock, a: int, b: int, reports: dict) -> None:
    n, p, g = block.n[a:b], block.p_n[a:b], block.g[a:b]
    g2 = g * g
    margin = p - g2
    scan_less(reports["sqrt_gap"], n, g2, p, exact=(margin <= 0, margin.astype(np.float64)))


ANDRICA = Family("andrica", {"andrica": ANDRICA_FROM}, 1, False, _k_andrica)
SQRT_GAP = Family("sqrt_gap", {"sqrt_gap": ANDRICA_FROM}, 1, False, _k_sqrt_gap)

FAMILIES = (ANDRICA, SQRT_GAP)


def andrica_check(n_range, primes=None) -> CheckReport:
    """sqrt(p_{n+1}) - sqrt(p_n) < 1/2; below n = 31 failures are informational."""
    return run_families([ANDRICA], n_range, primes)["andrica"]


def sqrt_gap_check(n_range, primes=None) -> CheckReport:
    """g_n^2 < p_n by integer comparison."""
    return run_families([SQRT_GAP], n_range, primes)["sqrt_gap"]


def andrica_samples(n_range, primes=None) -> list[AndricaSample]:
    lo, hi = n_range
    if primes is None:
        primes = primes_for_index(hi + 1)
    out = []
    for n in range(lo, hi + 1):
        p, q = int(primes[n - 1]), int(primes[n])
        out.append(AndricaSample(n, p, q, math.sqrt(q) - math.sqrt(p), (q - p) ** 2 < p))
    return out


def find_sqrt_threshold(primes: np.ndarray | None = None, scan_to: int = 10**6) -> ThresholdResult:
    """Largest prime p with sqrt(p) <= 2 log^2 p, and its index."""
    if primes is None:
        primes = prime_array(scan_to)
    pf = primes.astype(np.float64)
    lp = np.log(pf)
    holds = np.sqrt(pf) <= 2 * lp * lp
    idx = np.flatnonzero(holds)
    if not idx.size or idx[-1] + 1 >= len(primes):
        raise RuntimeError("scan range too short to bracket the crossover")
    i = int(idx[-1])
    with mp_ctx():
        def sides(p):
            return mpmath.sqrt(p), 2 * mpmath.log(p) ** 2

        # float verdicts near the flip are re-decided here
        while i + 1 < len(primes) and (lambda s: s[0] <= s[1])(sides(int(primes[i + 1]))):
            i += 1
        while i >= 0 and not (lambda s: s[0] <= s[1])(sides(int(primes[i]))):
            i -= 1
        p, q = int(primes[i]), int(primes[i + 1])
        hl, hr = sides(p)
        fl, fr = sides(q)
        root = mpmath.findroot(lambda x: mpmath.sqrt(x) - 2 * mpmath.log(x) ** 2, p)
    return ThresholdResult(
        "sqrt_threshold",
        p,
        i + 1,
        (p, hl, hr),
        (q, fl, fr),
        SQRT_PRIME_BOUND,
        p < SQRT_PRIME_BOUND and i + 1 <= SQRT_INDEX_BOUND,
        {"real_root": root, "expected_index_bound": SQRT_INDEX_BOUND, "scan_to": int(primes[-1])},
    )
