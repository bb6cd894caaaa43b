"""Check reports, margin bookkeeping and their JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Any, NamedTuple

import mpmath

__all__ = [
    "CheckReport",
    "ThresholdResult",
    "Violation",
    "dec20",
    "dumps",
    "REL_RECHECK",
    "RECHECK_DPS",
]

# |margin| below this fraction of the compared magnitudes forces a recheck
REL_RECHECK = 1e-9
RECHECK_DPS = 40


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Decimal)):
        return Fraction(x)
    if isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    return Fraction(float(x))


def dec20(x) -> str | None:
    """Decimal string with 20 significant digits (trailing zeros dropped)."""
    if x is None:
        return None
    f = _to_fraction(x)
    with localcontext() as ctx:
        ctx.prec = 20
        d = Decimal(f.numerator) / Decimal(f.denominator)
    if not d:
        return "0"
    mant, e, exp = format(d, ".20g").partition("e")
    if "." in mant:
        mant = mant.rstrip("0").rstrip(".")
    return mant + e + exp


class Violation(NamedTuple):
    n: int
    lhs: Any
    rhs: Any
    margin: Any
    m: int | None = None
    note: str | None = None

    def to_json(self) -> dict:
        out = {"n": self.n, "lhs": dec20(self.lhs), "rhs": dec20(self.rhs), "margin": dec20(self.margin)}
        if self.m is not None:
            out["m"] = self.m
        if self.note is not None:
            out["note"] = self.note
        return out

    @classmethod
    def from_json(cls, d: dict) -> Violation:
        return cls(d["n"], Decimal(d["lhs"]), Decimal(d["rhs"]), Decimal(d["margin"]), d.get("m"), d.get("note"))


def _lt(a, b) -> bool:
    return _to_fraction(a) < _to_fraction(b)


@dataclass
class CheckReport:
    """Outcome of one scan.

    ``claimed_from`` is the first index the claim covers; failures below it
    go to ``informational`` and never affect ``passed``.  ``min_margin`` is
    taken over claimed indices only.
    """

    check_id: str
    lo: int
    hi: int
    claimed_from: int = 1
    violations: list[Violation] = field(default_factory=list)
    informational: list[Violation] = field(default_factory=list)
    min_margin: Any = None
    min_margin_n: int | None = None
    recheck_count: int = 0
    maxima: dict[str, tuple[Any, int]] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def note_margin(self, margin, n: int) -> None:
        if self.min_margin is None or _lt(margin, self.min_margin) or (
            margin == self.min_margin and n < self.min_margin_n
        ):
            self.min_margin, self.min_margin_n = margin, n

    def note_max(self, name: str, value, n: int) -> None:
        cur = self.maxima.get(name)
        if cur is None or _lt(cur[0], value) or (value == cur[0] and n < cur[1]):
            self.maxima[name] = (value, n)

    def bump(self, name: str, k: int = 1) -> None:
        self.counts[name] = self.counts.get(name, 0) + k

    def add(self, v: Violation) -> None:
        (self.violations if v.n >= self.claimed_from else self.informational).append(v)

    def merge(self, other: CheckReport) -> CheckReport:
        """Combine reports over adjacent or disjoint index ranges."""
        if other.check_id != self.check_id:
            raise ValueError("cannot merge reports of different checks")
        out = CheckReport(
            self.check_id,
            min(self.lo, other.lo),
            max(self.hi, other.hi),
            self.claimed_from,
            sorted(self.violations + other.violations, key=_order),
            sorted(self.informational + other.informational, key=_order),
            recheck_count=self.recheck_count + other.recheck_count,
            maxima=dict(self.maxima),
            counts=dict(self.counts),
        )
        for r in (self, other):
            if r.min_margin is not None:
                out.note_margin(r.min_margin, r.min_margin_n)
        for name, (v, n) in other.maxima.items():
            out.note_max(name, v, n)
        for name, k in other.counts.items():
            out.bump(name, k)
        return out

    def to_json(self) -> dict:
        return {
            "check_id": self.check_id,
            "range": [self.lo, self.hi],
            "claimed_from": self.claimed_from,
            "passed": self.passed,
            "violations": [v.to_json() for v in self.violations],
            "informational": [v.to_json() for v in self.informational],
            "min_margin": dec20(self.min_margin),
            "min_margin_n": self.min_margin_n,
            "recheck_count": self.recheck_count,
            "maxima": {k: {"value": dec20(v), "n": n} for k, (v, n) in sorted(self.maxima.items())},
            "counts": dict(sorted(self.counts.items())),
        }

    @classmethod
    def from_json(cls, d: dict) -> CheckReport:
        """Rebuild a report; numbers come back as Decimals at 20 digits."""
        return cls(
            d["check_id"],
            d["range"][0],
            d["range"][1],
            d["claimed_from"],
            [Violation.from_json(v) for v in d["violations"]],
            [Violation.from_json(v) for v in d["informational"]],
            None if d["min_margin"] is None else Decimal(d["min_margin"]),
            d["min_margin_n"],
            d["recheck_count"],
            {k: (Decimal(v["value"]), v["n"]) for k, v in d["maxima"].items()},
            dict(d["counts"]),
        )


def _order(v: Violation):
    return (v.n, v.m if v.m is not None else 0, v.note or "")


@dataclass
class ThresholdResult:
    """Crossover of a bounded threshold search.

    ``crossover`` is the last admissible point where the inequality holds;
    ``holds_at`` / ``fails_at`` carry ``(point, lhs, rhs)`` on either side.
    """

    check_id: str
    crossover: int
    index: int | None
    holds_at: tuple
    fails_at: tuple
    expected: int | None
    agrees: bool
    constants: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.agrees

    def to_json(self) -> dict:
        def side(t):
            return {"at": t[0], "lhs": dec20(t[1]), "rhs": dec20(t[2])}

        return {
            "check_id": self.check_id,
            "crossover": self.crossover,
            "index": self.index,
            "holds_at": side(self.holds_at),
            "fails_at": side(self.fails_at),
            "expected": self.expected,
            "agrees": self.agrees,
            "passed": self.passed,
            "constants": {k: v if isinstance(v, (bool, int, str)) else dec20(v) for k, v in sorted(self.constants.items())},
        }


def dumps(payload: dict) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
