"""Streaming prime-gap statistics.

For the n-th gap ``g_n = p_{n+1} - p_n`` the aggregate tracks

* ``A_n = (p_{n+1} - 2) / n`` -- the mean of the first n gaps, always exact;
* ``B_n = sum_{i=2}^{n} g_i / (i - 1)`` -- exact while ``n <= exact_until``
  and as a compensated double with a running error bound throughout.

The exact B is kept over a common denominator (the lcm of the indices seen so
far) so each fold is a handful of big-integer operations and never a gcd of
two huge numbers.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .primes import DomainError

__all__ = [
    "CompensatedSum",
    "FirstOccurrence",
    "GapSample",
    "RecordEntry",
    "RecordTracker",
    "RunningAggregate",
    "ScaledRational",
    "SequencingError",
    "cramer_ratio",
    "first_occurrence_gaps",
    "fold_gap",
    "gap_samples",
    "max_gap_records",
    "read_first_occurrence_csv",
    "read_records_csv",
    "t_value",
    "write_first_occurrence_csv",
    "write_records_csv",
]

UNIT_ROUNDOFF = 2.0**-53
DEFAULT_EXACT_UNTIL = 20000


class SequencingError(ValueError):
    """A gap sample arrived out of order."""


class GapSample(NamedTuple):
    n: int
    p_n: int
    p_next: int

    @property
    def g(self) -> int:
        return self.p_next - self.p_n


def gap_samples(primes: Iterable[int], first_index: int = 1) -> Iterator[GapSample]:
    """Consecutive-prime pairs from an ordered prime sequence."""
    it = iter(primes)
    try:
        prev = int(next(it))
    except StopIteration:
        return
    n = first_index
    for p in it:
        p = int(p)
        yield GapSample(n, prev, p)
        prev = p
        n += 1


@dataclass(frozen=True)
class ScaledRational:
    """A non-negative rational held as ``num / den`` without reduction."""

    num: int = 0
    den: int = 1

    def add(self, num: int, den: int) -> ScaledRational:
        big = self.den
        if big % den:
            f = den // math.gcd(big, den)
            return ScaledRational(self.num * f + num * (big * f // den), big * f)
        return ScaledRational(self.num + num * (big // den), big)

    def fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __float__(self) -> float:
        # int / int is correctly rounded regardless of size
        return self.num / self.den


@dataclass(frozen=True)
class CompensatedSum:
    """Neumaier-compensated running sum of non-negative terms.

    ``err`` bounds ``|value - exact|`` where exact is the sum of the true
    (unrounded) quotients fed to :meth:`add_quotient`.
    """

    s: float = 0.0
    c: float = 0.0
    terms: int = 0

    @property
    def value(self) -> float:
        return self.s + self.c

    @property
    def err(self) -> float:
        u = UNIT_ROUNDOFF
        return (5 * u + 4 * self.terms * u * u) * abs(self.value)

    def add(self, x: float) -> CompensatedSum:
        s, c = self.s, self.c
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        return CompensatedSum(t, c, self.terms + 1)

    def add_quotient(self, num: int, den: int) -> CompensatedSum:
        return self.add(num / den)


@dataclass(frozen=True)
class RunningAggregate:
    """State after folding gaps 1..n.  ``n == 0`` is the empty fold at p_1 = 2."""

    n: int = 0
    p_next: int = 2
    b_exact: ScaledRational | None = field(default_factory=ScaledRational)
    b_float: CompensatedSum = field(default_factory=CompensatedSum)
    exact_until: int = DEFAULT_EXACT_UNTIL

    @property
    def A(self) -> Fraction:
        if self.n == 0:
            raise DomainError("A_0 is undefined")
        return Fraction(self.p_next - 2, self.n)

    @property
    def B(self) -> Fraction | float:
        """Exact B_n when available, else the compensated float."""
        return self.b_exact.fraction() if self.b_exact is not None else self.b_float.value


def fold_gap(agg: RunningAggregate, s: GapSample) -> RunningAggregate:
    if s.n != agg.n + 1 or s.p_n != agg.p_next:
        raise SequencingError(f"expected gap {agg.n + 1} starting at {agg.p_next}, got {s}")
    if s.p_next <= s.p_n:
        raise SequencingError(f"non-increasing primes in {s}")
    n, g = s.n, s.g
    if n == 1:
        return replace(agg, n=1, p_next=s.p_next)
    b_exact = agg.b_exact
    if b_exact is not None:
        b_exact = b_exact.add(g, n - 1) if n <= agg.exact_until else None
    return replace(agg, n=n, p_next=s.p_next, b_exact=b_exact, b_float=agg.b_float.add_quotient(g, n - 1))


def t_value(b_prev: Fraction, g: int, n: int) -> Fraction:
    """T_n with anchor m = 2, via T_n = B_{n-1} + g_n / (n (n-1))."""
    return b_prev + Fraction(g, n * (n - 1))


def _log(p: int) -> float:
    return math.log(p)


def cramer_ratio(s: GapSample) -> float:
    if s.p_n < 3:
        raise DomainError("Cramer ratio is reported only for p_n >= 3")
    return s.g / _log(s.p_n) ** 2


class RecordEntry(NamedTuple):
    n: int
    p_n: int
    g: int
    merit: float
    cramer_ratio: float

    @classmethod
    def from_gap(cls, n: int, p: int, g: int) -> RecordEntry:
        lp = _log(p)
        return cls(n, p, g, g / lp, g / (lp * lp))


class FirstOccurrence(NamedTuple):
    g: int
    n: int
    p_n: int


class RecordTracker:
    """Incremental maximal-gap records and first occurrences over gap blocks."""

    def __init__(self):
        self.records: list[RecordEntry] = []
        self.first: dict[int, FirstOccurrence] = {}

    @property
    def max_gap(self) -> int:
        return self.records[-1].g if self.records else 0

    def update(self, n: np.ndarray, p: np.ndarray, g: np.ndarray) -> None:
        if not len(g):
            return
        running = np.maximum.accumulate(g)
        prior = np.concatenate(([self.max_gap], running[:-1]))
        for i in np.flatnonzero(g > prior).tolist():
            self.records.append(RecordEntry.from_gap(int(n[i]), int(p[i]), int(g[i])))
        values, idx = np.unique(g, return_index=True)
        for v, i in zip(values.tolist(), idx.tolist()):
            if v not in self.first:
                self.first[v] = FirstOccurrence(v, int(n[i]), int(p[i]))

    def first_occurrences(self) -> list[FirstOccurrence]:
        return [self.first[g] for g in sorted(self.first)]


def _columns(samples: Iterable[GapSample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = list(samples)
    n = np.array([s.n for s in rows], dtype=np.int64)
    p = np.array([s.p_n for s in rows], dtype=np.int64)
    g = np.array([s.g for s in rows], dtype=np.int64)
    return n, p, g


def max_gap_records(samples: Iterable[GapSample]) -> list[RecordEntry]:
    tracker = RecordTracker()
    tracker.update(*_columns(samples))
    return tracker.records


def first_occurrence_gaps(samples: Iterable[GapSample]) -> list[FirstOccurrence]:
    tracker = RecordTracker()
    tracker.update(*_columns(samples))
    return tracker.first_occurrences()


def _fmt_float(x: float) -> str:
    # shortest string that parses back to the same double
    return repr(float(x))


def write_records_csv(records: Iterable[RecordEntry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "p_n", "g", "merit", "cramer_ratio"])
    for r in records:
        w.writerow([r.n, r.p_n, r.g, _fmt_float(r.merit), _fmt_float(r.cramer_ratio)])
    return buf.getvalue()


def read_records_csv(text: str) -> list[RecordEntry]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        RecordEntry(int(r["n"]), int(r["p_n"]), int(r["g"]), float(r["merit"]), float(r["cramer_ratio"]))
        for r in rows
    ]


def write_first_occurrence_csv(entries: Iterable[FirstOccurrence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["g", "n", "p_n"])
    w.writerows(entries)
    return buf.getvalue()


def read_first_occurrence_csv(text: str) -> list[FirstOccurrence]:
    return [FirstOccurrence(int(r["g"]), int(r["n"]), int(r["p_n"])) for r in csv.DictReader(io.StringIO(text))]
