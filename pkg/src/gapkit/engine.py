"""Run vectorized check kernels over gap blocks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np

from .blocks import GapBlock, gap_blocks
from .primes import DomainError, prime_array
from .report import RECHECK_DPS, REL_RECHECK, CheckReport, Violation
from .stats import DEFAULT_EXACT_UNTIL

Kernel = Callable[[GapBlock, int, int, dict], None]


@dataclass(frozen=True)
class Family:
    """Check kernels sharing one pass.

    ``claimed`` maps each produced check id to the first index its claim
    covers; ``start`` is the first index where the quantities are defined.
    """

    name: str
    claimed: dict
    start: int
    needs_b: bool
    kernel: Kernel

    def new_reports(self, lo: int, hi: int) -> dict[str, CheckReport]:
        return {cid: CheckReport(cid, lo, hi, c) for cid, c in self.claimed.items()}


def primes_for_index(n: int) -> np.ndarray:
    """A prime array reaching at least p_n."""
    bound = 13 if n < 6 else int(n * (math.log(n) + math.log(math.log(n)))) + 1
    return prime_array(bound)


def run_families(
    families: list[Family],
    n_range: tuple[int, int],
    primes: np.ndarray | None = None,
    exact_until: int = DEFAULT_EXACT_UNTIL,
    clip: bool = False,
) -> dict[str, CheckReport]:
    """Scan ``n_range`` with every family in one pass over the gaps.

    With ``clip`` a family whose quantities start later than ``n_range``
    scans from its own start instead of raising.
    """
    lo, hi = n_range
    if hi < lo:
        raise DomainError(f"empty range {n_range}")
    starts = {}
    for fam in families:
        if lo < fam.start and not clip:
            raise DomainError(f"{fam.name} is defined from n = {fam.start}, got start {lo}")
        starts[fam.name] = max(lo, fam.start)
    if primes is None:
        primes = primes_for_index(hi + 1)
    if len(primes) < hi + 1:
        raise DomainError(f"need p_{hi + 1}, have {len(primes)} primes")
    reports: dict[str, CheckReport] = {}
    for fam in families:
        reports.update(fam.new_reports(starts[fam.name], hi))
    with_b = any(f.needs_b for f in families)
    for block in gap_blocks(primes, with_b=with_b, exact_until=exact_until, upto=hi):
        apply_block(families, block, starts, hi, reports)
    return reports


def apply_block(families: list[Family], block: GapBlock, starts: dict, hi: int, reports: dict) -> None:
    for fam in families:
        a, b = block.select(starts[fam.name], hi)
        if a < b:
            fam.kernel(block, a, b, reports)


def scan_less(
    report: CheckReport,
    n: np.ndarray,
    lhs: np.ndarray,
    rhs: np.ndarray,
    recheck: Callable[[int], tuple] | None = None,
    exact: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Record ``lhs < rhs`` over positions of a selection.

    Float margins within REL_RECHECK of zero are handed to ``recheck(i)``,
    which returns ``(lhs, rhs, rhs - lhs)`` at extended precision; its
    verdict replaces the float one.  ``exact`` = ``(bad, margin)`` supplies
    verdicts already decided exactly and skips the float path.
    """
    lhs = np.asarray(lhs, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if exact is not None:
        bad, margin = exact
    else:
        margin = rhs - lhs
        bad = ~(margin > 0)
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
        near = np.flatnonzero(np.abs(margin) < REL_RECHECK * scale)
        if near.size:
            margin = margin.copy()
            for i in near.tolist():
                _, _, m = recheck(i)
                margin[i] = float(m)
                bad[i] = not (m > 0)
                report.recheck_count += 1
    claimed = n >= report.claimed_from
    if claimed.any():
        idx = np.flatnonzero(claimed)
        j = int(idx[np.argmin(margin[idx])])
        report.note_margin(float(margin[j]), int(n[j]))
    for i in np.flatnonzero(bad).tolist():
        report.add(Violation(int(n[i]), float(lhs[i]), float(rhs[i]), float(margin[i])))
    return bad


def mp_ctx():
    return mpmath.workdps(RECHECK_DPS)


def mp_b(block: GapBlock, pos: int, worst: str):
    """B at block position ``pos`` at extended precision.

    Exact when the block carries exact prefixes; otherwise the end of the
    float error interval that is least favourable (``worst`` = "low"/"high").
    """
    if block.b_exact is not None:
        b = block.b_exact[pos]
        return mpmath.mpf(b.num) / b.den
    v, e = mpmath.mpf(float(block.bf[pos])), mpmath.mpf(float(block.bf_err[pos]))
    return v - e if worst == "low" else v + e
