"""Command line entry point.

Exit codes: 0 pass, 1 assertion failure or divergence, 2 usage/parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from dlmcare.audit import dump_audit, parse_audit
from dlmcare.errors import CorruptSnapshot, FormatVersionMismatch, ParseError
from dlmcare.harness import snapshot
from dlmcare.harness.fuzz import run_fuzz
from dlmcare.harness.invariants import check_invariants
from dlmcare.harness.replay import ReplayError, replay
from dlmcare.harness.runner import EXIT_FAIL, EXIT_OK, EXIT_USAGE, Options, run_scenario


def _write_outputs(state, args) -> None:
    if args.snapshot:
        snapshot.snapshot_save(state, args.snapshot)
    if args.audit:
        Path(args.audit).write_text(dump_audit(state.audit), encoding="utf-8")


def cmd_run(args) -> int:
    try:
        text = Path(args.script).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    options = Options(
        diff=args.diff,
        strict_delete=args.strict_delete,
        sweep_every=args.sweep_every,
        seed=args.seed,
        check=args.check,
    )
    try:
        result = run_scenario(text, options)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(result.trace_text())
    if result.report is not None:
        print(result.report)
    _write_outputs(result.state, args)
    if result.failure is not None:
        print(f"FAIL: {result.failure}", file=sys.stderr)
        witness = getattr(result.failure, "witness", None)
        if witness is not None:
            print(f"witness: {witness}", file=sys.stderr)
    return result.exit_code


def cmd_fuzz(args) -> int:
    code = EXIT_OK
    for i in range(args.traces):
        seed = args.seed + i
        result = run_fuzz(seed, args.steps, sweep_every=args.sweep_every or None, diff=args.diff,
                          strict_delete=args.strict_delete)
        summary = " ".join(f"{k}={v}" for k, v in sorted(result.outcomes.items()))
        print(f"seed {seed}: {'PASS' if result.ok else 'FAIL'} {len(result.commands)} commands {summary}")
        if not result.ok:
            print(f"  {result.failure}")
            code = EXIT_FAIL
        if args.script:
            Path(args.script).write_text(result.script(), encoding="utf-8")
        _write_outputs(result.runner.state, args)
    return code


def cmd_check(args) -> int:
    try:
        state = snapshot.snapshot_load(args.snapshot)
    except (OSError, CorruptSnapshot, FormatVersionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = check_invariants(state)
    print(report)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_replay(args) -> int:
    try:
        records = parse_audit(Path(args.audit).read_text(encoding="utf-8"))
        state = replay(records)
    except (OSError, ValueError, ReplayError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rebuilt = snapshot.dumps(state)
    if args.against is None:
        sys.stdout.write(rebuilt)
        return EXIT_OK
    expected = Path(args.against).read_text(encoding="utf-8")
    if rebuilt == expected:
        print(f"replay of {len(records)} records matches {args.against}")
        return EXIT_OK
    print(f"replay of {len(records)} records differs from {args.against}", file=sys.stderr)
    return EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dlmcare", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario script")
    run.add_argument("script")
    run.add_argument("--diff", action="store_true", help="mirror every command on the reference model")
    run.add_argument("--strict-delete", action="store_true")
    run.add_argument("--sweep-every", type=int, metavar="N", help="sweep whenever the clock crosses a multiple of N")
    run.add_argument("--seed", type=int)
    run.add_argument("--snapshot", metavar="PATH")
    run.add_argument("--audit", metavar="PATH")
    run.add_argument("--check", action=argparse.BooleanOptionalAction, default=True,
                     help="run the invariant suite at the end (default: on)")
    run.set_defaults(func=cmd_run)

    fuzz = sub.add_parser("fuzz", help="run seeded random traces")
    fuzz.add_argument("--seed", type=int, required=True)
    fuzz.add_argument("--steps", type=int, default=1000)
    fuzz.add_argument("--traces", type=int, default=1)
    fuzz.add_argument("--sweep-every", type=int, default=10, metavar="N")
    fuzz.add_argument("--strict-delete", action="store_true")
    fuzz.add_argument("--diff", action=argparse.BooleanOptionalAction, default=True)
    fuzz.add_argument("--snapshot", metavar="PATH")
    fuzz.add_argument("--audit", metavar="PATH")
    fuzz.add_argument("--script", metavar="PATH", help="write the generated commands as a scenario")
    fuzz.set_defaults(func=cmd_fuzz)

    check = sub.add_parser("check", help="run the invariant suite on a snapshot")
    check.add_argument("snapshot")
    check.set_defaults(func=cmd_check)

    rep = sub.add_parser("replay", help="rebuild a state from an audit dump")
    rep.add_argument("audit")
    rep.add_argument("--against", metavar="SNAPSHOT")
    rep.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
