"""Command-line entry point.

Exit codes: 0 success, 1 usage or parse error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import analyzer
from .errors import InvalidValue, InvariantViolation, ParseError
from .harness import FuzzConfig, fuzz, run_scenario
from .scenario import load_scenario

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uat20", description="UAT20 protocol simulator and log analyzer")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario")
    run.add_argument("--dump-state", action="store_true", help="print the final state dump")
    run.add_argument("--trace", action="store_true", help="print per-replica SYNC lines")
    run.add_argument(
        "--permutations", action="store_true", help="also run the arbitration-permutation oracle"
    )
    run.add_argument("--summary-json", metavar="PATH", help="write a JSON summary to PATH")

    fz = sub.add_parser("fuzz", help="run a seeded fuzz campaign")
    fz.add_argument("--seed", type=_non_negative, default=42)
    fz.add_argument("--rollups", type=_positive, default=3)
    fz.add_argument("--users", type=_positive, default=5)
    fz.add_argument("--epochs", type=_positive, default=10)
    fz.add_argument("--txs", type=_positive, default=8)
    fz.add_argument("--max-amount", type=_non_negative, default=100)
    fz.add_argument("--overdraft-rate", type=float, default=0.25)
    fz.add_argument("--runs", type=_positive, default=1)
    fz.add_argument("--permutations", action="store_true")

    an = sub.add_parser("analyze", help="analyze a transfer log")
    an.add_argument("log")
    an.add_argument("--window-seconds", type=_positive, default=analyzer.DEFAULT_WINDOW)
    an.add_argument("--stats", action="store_true", help="print fragmentation statistics")
    return parser


def cmd_run(args, out) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except FileNotFoundError:
        print(f"error: file not found: {args.scenario}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"error: {args.scenario}:{exc.lineno}: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run_scenario(scenario, permutation_oracle=args.permutations)
        code = EXIT_OK
    except InvariantViolation as exc:
        report = exc.report
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_VIOLATION
    out.write(report.to_text(dump_state=args.dump_state, trace=args.trace))
    if args.summary_json:
        Path(args.summary_json).write_text(json.dumps(report.summary_dict(), indent=2) + "\n")
    return code


def cmd_fuzz(args, out) -> int:
    try:
        cfg = FuzzConfig(
            n=args.rollups,
            users=args.users,
            epochs=args.epochs,
            txs_per_epoch=args.txs,
            max_amount=args.max_amount,
            overdraft_rate=args.overdraft_rate,
        ).validate()
    except InvalidValue as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    violations = []
    for seed in range(args.seed, args.seed + args.runs):
        try:
            report = fuzz(seed, cfg, permutation_oracle=args.permutations)
        except InvariantViolation as exc:
            violations.append(seed)
            out.write(f"RUN seed={seed} VIOLATION {exc.name} epoch={exc.epoch}\n")
            out.write(
                f"  replay: uat20 fuzz --seed {seed} --runs 1 --rollups {cfg.n} "
                f"--users {cfg.users} --epochs {cfg.epochs} --txs {cfg.txs_per_epoch} "
                f"--max-amount {cfg.max_amount} --overdraft-rate {cfg.overdraft_rate}\n"
            )
            continue
        c = report.counts()
        out.write(
            f"RUN seed={seed} committed={c['committed']} failed={c['failed']} "
            f"rejected={c['rejected']} digest={report.digest[:16]} OK\n"
        )
    failing = ",".join(map(str, violations)) or "-"
    out.write(f"FUZZ runs={args.runs} violations={len(violations)} failing_seeds={failing}\n")
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_analyze(args, out) -> int:
    try:
        records = analyzer.load_log(args.log)
    except FileNotFoundError:
        print(f"error: file not found: {args.log}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"error: {args.log}:{exc.lineno}: {exc.code}: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    events = analyzer.detect_unification(records, args.window_seconds)
    for event in events:
        out.write(event.to_line() + "\n")
    fraction = analyzer.unification_fraction(records, events)
    out.write(f"EVENTS {len(events)} RECORDS {len(records)} FRACTION {fraction}\n")
    if args.stats:
        stats = analyzer.fragmentation_stats(analyzer.snapshot_from_log(records))
        for (token, k), count in stats.items():
            out.write(f"STATS {token} k={k} {count}\n")
        for token, total in analyzer.multi_chain_totals(stats).items():
            out.write(f"STATS {token} k>=2 {total}\n")
    return EXIT_OK


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    handler = {"run": cmd_run, "fuzz": cmd_fuzz, "analyze": cmd_analyze}[args.command]
    return handler(args, out)


if __name__ == "__main__":
    sys.exit(main())
