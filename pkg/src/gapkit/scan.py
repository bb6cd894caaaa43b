"""Checkpointable streaming pass: sieve -> gap blocks -> check kernels."""
from __future__ import annotations

import contextlib
import hashlib
import json
import sys
from fractions import Fraction
from typing import Callable

from . import checks, intervals
from .blocks import BlockFolder
from .engine import Family, apply_block
from .primes import DEFAULT_SEGMENT_SIZE, SieveConfig, prime_segments
from .report import CheckReport, Violation
from .stats import CompensatedSum, FirstOccurrence, RecordEntry, RecordTracker, RunningAggregate, ScaledRational

SCHEMA_VERSION = 1
OPEN_END = 1 << 62

FAMILIES: dict[str, Family] = {f.name: f for f in checks.FAMILIES + intervals.FAMILIES}


class CheckpointError(ValueError):
    """Checkpoint is unreadable, tampered with, or from another schema."""


def digest(payload: dict) -> str:
    body = {k: v for k, v in payload.items() if k != "digest"}
    return hashlib.sha256(json.dumps(body, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _report_state(r: CheckReport) -> dict:
    return {
        "check_id": r.check_id,
        "lo": r.lo,
        "hi": r.hi,
        "claimed_from": r.claimed_from,
        "violations": [list(v) for v in r.violations],
        "informational": [list(v) for v in r.informational],
        "min_margin": r.min_margin,
        "min_margin_n": r.min_margin_n,
        "recheck_count": r.recheck_count,
        "maxima": {k: list(v) for k, v in r.maxima.items()},
        "counts": r.counts,
    }


def _report_from_state(d: dict) -> CheckReport:
    return CheckReport(
        d["check_id"], d["lo"], d["hi"], d["claimed_from"],
        [Violation(*v) for v in d["violations"]],
        [Violation(*v) for v in d["informational"]],
        d["min_margin"], d["min_margin_n"], d["recheck_count"],
        {k: tuple(v) for k, v in d["maxima"].items()},
        dict(d["counts"]),
    )


@contextlib.contextmanager
def _long_int_strings():
    # exact prefixes run to tens of thousands of digits, past the default
    # int <-> str conversion limit
    get = getattr(sys, "get_int_max_str_digits", None)
    if get is None:
        yield
        return
    old = get()
    sys.set_int_max_str_digits(0)
    try:
        yield
    finally:
        sys.set_int_max_str_digits(old)


def _rational(x: ScaledRational | None):
    if x is None:
        return None
    with _long_int_strings():
        return [str(x.num), str(x.den)]


def _unrational(x) -> ScaledRational | None:
    if x is None:
        return None
    with _long_int_strings():
        return ScaledRational(int(x[0]), int(x[1]))


def _state_digest(state: dict) -> str:
    return hashlib.sha256(json.dumps(state, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


class StreamScan:
    """One ordered pass over the primes up to ``limit``.

    Reports cover gap indices from each family's start to the last gap below
    ``limit``.  State is captured only between sieve segments.
    """

    def __init__(
        self,
        family_names: list[str],
        limit: int,
        exact_until: int,
        segment_size: int = DEFAULT_SEGMENT_SIZE,
        track_records: bool = True,
    ):
        self.family_names = list(family_names)
        self.families = [FAMILIES[name] for name in family_names]
        self.config = SieveConfig(limit, segment_size)
        needs_b = any(f.needs_b for f in self.families)
        self.folder = BlockFolder(with_b=needs_b, exact_until=exact_until)
        self.track_records = track_records
        self.tracker = RecordTracker()
        self.starts = {f.name: f.start for f in self.families}
        self.reports: dict[str, CheckReport] = {}
        for f in self.families:
            self.reports.update(f.new_reports(f.start, OPEN_END))
        self.segments_done = 0

    def run(
        self,
        threads: int = 1,
        checkpoint_every: int = 0,
        on_checkpoint: Callable[[dict], None] | None = None,
        stop_after: int | None = None,
    ) -> bool:
        """Advance to the end (True) or until ``stop_after`` more segments (False)."""
        agg = self.folder.agg
        start = 0 if agg.n == 0 else agg.p_next + 1
        config = SieveConfig(self.config.limit, self.config.segment_size, threads)
        done_here = 0
        for seg in prime_segments(config, start=start):
            for block in self.folder.feed(seg):
                apply_block(self.families, block, self.starts, OPEN_END, self.reports)
                if self.track_records:
                    self.tracker.update(block.n, block.p_n, block.g)
            self.segments_done += 1
            done_here += 1
            if stop_after is not None and done_here >= stop_after:
                if on_checkpoint:
                    on_checkpoint(self.snapshot())
                return False
            if checkpoint_every and on_checkpoint and self.segments_done % checkpoint_every == 0:
                on_checkpoint(self.snapshot())
        return True

    def finish(self) -> dict[str, CheckReport]:
        last = self.folder.agg.n
        out = {}
        for cid, r in self.reports.items():
            r = _report_from_state(_report_state(r))
            r.hi = last
            out[cid] = r
        if self.track_records:
            out["corollary_first_occurrence"] = checks.check_corollary_first_occurrence(self.tracker.first_occurrences())
        return out

    # -- persistence --

    def snapshot(self) -> dict:
        agg = self.folder.agg
        reports = {cid: _report_state(r) for cid, r in self.reports.items()}
        return {
            "families": self.family_names,
            "limit": self.config.limit,
            "segment_size": self.config.segment_size,
            "exact_until": agg.exact_until,
            "track_records": self.track_records,
            "segments_done": self.segments_done,
            "last_completed_index": agg.n,
            "aggregate": {
                "n": agg.n,
                "p_next": agg.p_next,
                "A": None if agg.n == 0 else [str(agg.A.numerator), str(agg.A.denominator)],
                                "B_exact": _rational(agg.b_exact),
                "B_float": {
                    "s": agg.b_float.s,
                    "c": agg.b_float.c,
                    "terms": agg.b_float.terms,
                    "err": agg.b_float.err,
                },
                "S_exact": _rational(self.folder.s_exact),
                "with_b": self.folder.with_b,
                "max_gap": self.folder.max_gap,
            },
            "tracker": {
                "records": [[r.n, r.p_n, r.g] for r in self.tracker.records],
                "first": [list(e) for e in self.tracker.first_occurrences()],
            },
            "reports": reports,
            "report_digests": {cid: _state_digest(state) for cid, state in reports.items()},
        }

    @classmethod
    def restore(cls, snap: dict) -> StreamScan:
        try:
            scan = cls(snap["families"], snap["limit"], snap["exact_until"], snap["segment_size"], snap["track_records"])
            a = snap["aggregate"]
            if a["A"] is not None and Fraction(int(a["A"][0]), int(a["A"][1])) != Fraction(a["p_next"] - 2, a["n"]):
                raise CheckpointError("aggregate mean is inconsistent with n and p_next")
            for cid, state in snap["reports"].items():
                if snap["report_digests"][cid] != _state_digest(state):
                    raise CheckpointError(f"partial report {cid} does not match its digest")
            bf = a["B_float"]
            scan.folder.agg = RunningAggregate(
                n=a["n"],
                p_next=a["p_next"],
                b_exact=_unrational(a["B_exact"]),
                b_float=CompensatedSum(bf["s"], bf["c"], bf["terms"]),
                exact_until=snap["exact_until"],
            )
            scan.folder.s_exact = _unrational(a["S_exact"]) or ScaledRational()
            scan.folder.with_b = a["with_b"]
            scan.folder.max_gap = a["max_gap"]
            scan.segments_done = snap["segments_done"]
            scan.tracker.records = [RecordEntry.from_gap(*r) for r in snap["tracker"]["records"]]
            scan.tracker.first = {e[0]: FirstOccurrence(*e) for e in snap["tracker"]["first"]}
            scan.reports = {cid: _report_from_state(d) for cid, d in snap["reports"].items()}
        except CheckpointError:
            raise
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise CheckpointError(f"malformed scan state: {exc}") from exc
        return scan
