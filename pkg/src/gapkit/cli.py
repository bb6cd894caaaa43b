"""gapkit command line.

Exit codes: 0 every check passed, 1 some check reported a violation,
2 usage, capacity, output or checkpoint error.  An interrupted run exits
130 after leaving its last checkpoint in place.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import checks, intervals
from .primes import DEFAULT_SEGMENT_SIZE, CapacityError, DomainError
from .report import CheckReport, ThresholdResult, dec20, dumps
from .scan import SCHEMA_VERSION, CheckpointError, StreamScan, digest
from .stats import DEFAULT_EXACT_UNTIL, write_first_occurrence_csv, write_records_csv

EXIT_OK, EXIT_VIOLATION, EXIT_ERROR, EXIT_INTERRUPTED = 0, 1, 2, 130

SUBCOMMANDS = ("scan", "identities", "bounds", "oppermann", "andrica", "records", "audit", "all")

STREAM_FAMILIES = {
    "scan": [f.name for f in checks.FAMILIES + intervals.FAMILIES],
    "bounds": [f.name for f in checks.FAMILIES],
    "andrica": [f.name for f in intervals.FAMILIES],
    "records": [checks.COROLLARY_MAX.name],
}
STREAM_FAMILIES["all"] = STREAM_FAMILIES["scan"]

DEFAULT_LIMITS = {"identities": 2000, "oppermann": 10**5}
DEFAULT_STREAM_LIMIT = 10**8


@dataclass
class RunConfig:
    subcommand: str
    limit: int
    output_dir: str
    format: str = "both"
    checkpoint_every: int = 64
    threads: int = 1
    exact_until: int = DEFAULT_EXACT_UNTIL
    identities_n: int = 2000
    a_max: int = 10**5
    segment_size: int = DEFAULT_SEGMENT_SIZE

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise DomainError(f"unknown subcommand {self.subcommand}")
        if self.limit < 2:
            raise DomainError(f"limit must be >= 2, got {self.limit}")
        if self.exact_until < 0:
            raise DomainError("exact_until must be >= 0")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")
        if self.format not in ("csv", "json", "both"):
            raise DomainError(f"unknown format {self.format}")


class UsageError(Exception):
    pass


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Outputs:
    """Files written under the output directory, with their digests."""

    def __init__(self, root: Path, fmt: str):
        self.root, self.fmt = root, fmt
        self.digests: dict[str, str] = {}

    def write(self, rel: str, text: str, kind: str) -> None:
        if self.fmt != "both" and kind != self.fmt:
            return
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.digests[rel] = _sha(data)


def _prepare_dir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".gapkit-write-test"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"output directory {path} is not writable: {exc}") from exc


def _write_checkpoint(root: Path, payload: dict) -> None:
    payload = dict(payload, schema_version=SCHEMA_VERSION)
    payload["digest"] = digest(payload)
    tmp = root / "checkpoint.json.tmp"
    tmp.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    tmp.replace(root / "checkpoint.json")


def _summary_line(cid: str, passed: bool, detail: str) -> str:
    return f"{'PASS' if passed else 'FAIL'}  {cid:<28} {detail}"


def execute(config: RunConfig, scan: StreamScan | None = None, stop_after: int | None = None) -> int:
    config.validate()
    root = Path(config.output_dir)
    _prepare_dir(root)
    out = Outputs(root, config.format)
    base = {"subcommand": config.subcommand, "config": asdict(config), "completed": False}
    results: dict[str, CheckReport | ThresholdResult | dict] = {}
    t0 = time.perf_counter()

    fams = STREAM_FAMILIES.get(config.subcommand)
    if fams is not None:
        if scan is None:
            track = config.subcommand in ("scan", "bounds", "records", "all")
            scan = StreamScan(fams, config.limit, config.exact_until, config.segment_size, track)

        def save(snap: dict) -> None:
            _write_checkpoint(root, dict(base, last_completed_index=snap["last_completed_index"], scan=snap))

        if not scan.run(config.threads, config.checkpoint_every, save, stop_after):
            return EXIT_INTERRUPTED
        results.update(scan.finish())
        if scan.track_records:
            out.write("records.csv", write_records_csv(scan.tracker.records), "csv")
            out.write("first_occurrence.csv", write_first_occurrence_csv(scan.tracker.first_occurrences()), "csv")
        last_index = scan.folder.agg.n
    else:
        last_index = None

    sub = config.subcommand
    if sub in ("identities", "all"):
        n = config.limit if sub == "identities" else config.identities_n
        results["theorem1_identities"] = checks.identity_suite(n, checks.IdentityPrefix(n, exact_until=max(n, config.exact_until)))
    if sub in ("oppermann", "all"):
        a_max = config.limit if sub == "oppermann" else config.a_max
        report, witnesses = intervals.oppermann_scan(2, a_max, threads=config.threads)
        results["oppermann"] = report
        out.write("witnesses.csv", intervals.witnesses_csv(witnesses), "csv")
        results["oppermann_threshold"] = intervals.find_oppermann_threshold()
    if sub in ("bounds", "audit", "all"):
        results["loglog_threshold"] = checks.check_loglog_threshold()
    if sub in ("andrica", "audit", "all"):
        results["sqrt_threshold"] = intervals.find_sqrt_threshold()
    if sub in ("audit", "all"):
        results["constant_audit"] = checks.audit_constants()

    failed = False
    lines = []
    for cid in sorted(results):
        res = results[cid]
        payload = res if isinstance(res, dict) else res.to_json()
        passed = bool(payload["passed"])
        failed |= not passed
        out.write(f"checks/{cid}.json", dumps(payload), "json")
        if isinstance(res, CheckReport):
            detail = f"[{res.lo}, {res.hi}] violations={len(res.violations)} min_margin={dec20(res.min_margin)}"
        elif isinstance(res, ThresholdResult):
            detail = f"crossover={res.crossover} expected={res.expected}"
        else:
            detail = "exact sum " + payload["sum_A_k_over_k_minus_1_k2_to_5"]
        lines.append(_summary_line(cid, passed, detail))
    code = EXIT_VIOLATION if failed else EXIT_OK
    final = dict(base, completed=True, exit_code=code, outputs=dict(sorted(out.digests.items())))
    if last_index is not None:
        final["last_completed_index"] = last_index
    _write_checkpoint(root, final)
    print("\n".join(lines))
    print(f"elapsed {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return code


def load_checkpoint(path: str | Path) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("schema_version") != SCHEMA_VERSION:
        raise CheckpointError(f"unsupported checkpoint schema {payload.get('schema_version') if isinstance(payload, dict) else None}")
    if payload.get("digest") != digest(payload):
        raise CheckpointError("checkpoint digest mismatch")
    return payload


def resume(path: str | Path, stop_after: int | None = None) -> int:
    payload = load_checkpoint(path)
    if payload.get("completed"):
        return int(payload["exit_code"])
    try:
        config = RunConfig(**payload["config"])
    except TypeError as exc:
        raise CheckpointError(f"bad config in checkpoint: {exc}") from exc
    scan = StreamScan.restore(payload["scan"]) if "scan" in payload else None
    return execute(config, scan, stop_after)


def parse_count(text: str) -> int:
    """Integer argument that also accepts forms like ``1e6``."""
    try:
        d = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text}")
    if not d.is_finite() or d != d.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text}")
    return int(d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapkit", description="Prime-gap statistics and bound verification.")
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = subs.add_parser(name)
        sp.add_argument("--limit", type=parse_count, default=None,
                        help="prime bound (stream scans), largest n (identities) or largest a (oppermann)")
        if name == "identities":
            sp.add_argument("--n", type=parse_count, dest="limit_n", default=None, help="alias of --limit")
        if name == "all":
            sp.add_argument("--n", type=parse_count, dest="identities_n", default=2000)
            sp.add_argument("--a-max", type=parse_count, default=10**5)
        sp.add_argument("--output-dir", default="gapkit-out")
        sp.add_argument("--format", choices=("csv", "json", "both"), default="both")
        sp.add_argument("--checkpoint-every", type=parse_count, default=64, help="segments between checkpoints")
        sp.add_argument("--threads", type=parse_count, default=1)
        sp.add_argument("--exact-until", type=parse_count, default=DEFAULT_EXACT_UNTIL)
        sp.add_argument("--segment-size", type=parse_count, default=DEFAULT_SEGMENT_SIZE)
        sp.add_argument("--stop-after", type=parse_count, default=None, help=argparse.SUPPRESS)
    rp = subs.add_parser("resume")
    rp.add_argument("checkpoint")
    rp.add_argument("--stop-after", type=parse_count, default=None, help=argparse.SUPPRESS)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    limit = args.limit
    if getattr(args, "limit_n", None) is not None:
        limit = args.limit_n
    if limit is None:
        limit = DEFAULT_LIMITS.get(args.subcommand, DEFAULT_STREAM_LIMIT)
    output_dir = os.environ.get("GAPKIT_OUT") or args.output_dir
    return RunConfig(
        subcommand=args.subcommand,
        limit=limit,
        output_dir=output_dir,
        format=args.format,
        checkpoint_every=args.checkpoint_every,
        threads=args.threads,
        exact_until=args.exact_until,
        identities_n=getattr(args, "identities_n", 2000),
        a_max=getattr(args, "a_max", 10**5),
        segment_size=args.segment_size,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "resume":
            return resume(args.checkpoint, args.stop_after)
        return execute(config_from_args(args), stop_after=args.stop_after)
    except (UsageError, DomainError, CapacityError, CheckpointError, checks.ModeError) as exc:
        print(f"gapkit: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        print("gapkit: interrupted; resume from the last checkpoint", file=sys.stderr)
        return EXIT_INTERRUPTED


if __name__ == "__main__":
    sys.exit(main())
