"""
Command line entry point.

    python -m src.cli analyze  data/models/agc.json --format json
    python -m src.cli simulate data/models/agc.json --duration 1800 --phasing critical --jitter max
    python -m src.cli check    data/models/agc.json --runs 50
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from src.analysis import analyze_system
from src.config import CHECK_RUNS, DEFAULT_SEED, JOBS, TRACES_DIR, check_env
from src.errors import AnalysisOverflow, ConfigError, ModelError, UnknownAction
from src.model import with_priority
from src.model_io import parse_model
from src.oracle import check_model
from src.report import FORMATS, check_frame, render_report, write_text, write_trace_csv
from src.sim import JitterMode, Phasing, SimConfig, observed_table, simulate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_VIOLATION = 3
EXIT_USAGE = 64
EXIT_INPUT = 66

PHASINGS = {"critical": Phasing.CRITICAL, "random": Phasing.RANDOM}
JITTERS = {"max": JitterMode.MAX, "random": JitterMode.RANDOM}


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"❌ {self.prog}: {message}\n")


def _positive_int(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {raw!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _non_negative_int(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {raw!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _priority_change(raw: str) -> tuple[str, int]:
    action, sep, value = raw.partition("=")
    if not sep or not action:
        raise argparse.ArgumentTypeError(f"expected ACTION=PRIORITY, got {raw!r}")
    return action, _positive_int(value)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rta", description="Response-time analysis and simulation of event-driven control models")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="worst-case response time of every action")
    p.add_argument("model", type=Path)
    p.add_argument("--format", choices=FORMATS, default="text")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--set-priority", type=_priority_change, action="append", default=[], metavar="ACTION=PRIORITY")
    p.add_argument("--printed-window", action="store_true",
                   help="count later own-transaction releases without release jitter")
    p.add_argument("--jobs", type=_positive_int, default=JOBS)

    p = sub.add_parser("simulate", help="discrete-event run of the model")
    p.add_argument("model", type=Path)
    p.add_argument("--duration", type=_positive_int, required=True)
    p.add_argument("--seed", type=_non_negative_int, default=DEFAULT_SEED)
    p.add_argument("--phasing", choices=sorted(PHASINGS), default="critical")
    p.add_argument("--jitter", choices=sorted(JITTERS), default="max")
    p.add_argument("--trace", type=Path, default=None)
    p.add_argument("--summary", type=Path, default=None)

    p = sub.add_parser("check", help="compare analysed bounds against simulated responses")
    p.add_argument("model", type=Path)
    p.add_argument("--runs", type=_positive_int, default=CHECK_RUNS)
    p.add_argument("--duration", type=_positive_int, default=None)
    p.add_argument("--seed", type=_non_negative_int, default=DEFAULT_SEED)
    p.add_argument("--jobs", type=_positive_int, default=JOBS)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    return parser


def _load(path: Path):
    try:
        return parse_model(path)
    except OSError as e:
        raise _Exit(EXIT_INPUT, f"cannot read {path}: {e.strerror or e}") from None


# ===========================
# COMMANDS
# ===========================
def cmd_analyze(args) -> int:
    model = _load(args.model)
    for action, priority in args.set_priority:
        try:
            model = with_priority(model, action, priority)
        except UnknownAction as e:
            raise _Exit(EXIT_USAGE, f"--set-priority: {e}") from None
        print(f"⚠️ {action} group moved to priority {priority}", file=sys.stderr)
    if args.printed_window:
        model = replace(model, config=replace(model.config, own_jitter_window=False))

    report = analyze_system(model, jobs=args.jobs)
    text = render_report(report, args.format)

    # machine formats on stdout stay clean; status goes to stderr then
    status = sys.stdout if (args.out or args.format == "text") else sys.stderr
    if args.out:
        write_text(text, args.out)
        print(f"💾 Saved {args.format} report → {args.out}", file=status)
    else:
        sys.stdout.write(text)

    for d in report.diagnostics:
        print(f"⚠️ {d}", file=status)

    if not report.results:
        print("✅ no actions", file=status)
        return EXIT_OK
    if report.system_feasible:
        print(f"✅ System feasible ({len(report.results)} actions)", file=status)
        return EXIT_OK

    missed = [r.action_id for r in report.results if not r.feasible]
    print(f"❌ System NOT feasible: {', '.join(missed)}", file=status)
    return EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    model = _load(args.model)
    cfg = SimConfig(
        duration=args.duration,
        seed=args.seed,
        phasing=PHASINGS[args.phasing],
        jitter_mode=JITTERS[args.jitter],
    )
    trace = simulate(model, cfg)

    trace_path = args.trace or TRACES_DIR / f"{args.model.stem}_seed{args.seed}.csv"
    write_trace_csv(trace, trace_path)
    print(f"💾 Saved trace ({len(trace.records)} records) → {trace_path}")

    summary = observed_table(trace)
    if summary.empty:
        print("⚠️ no responses recorded")
    else:
        print(summary.to_string(index=False))

    if args.summary:
        write_text(summary.to_csv(index=False, lineterminator="\n"), args.summary)
        print(f"💾 Saved summary → {args.summary}")
    return EXIT_OK


def cmd_check(args) -> int:
    model = _load(args.model)
    if not model.actions:
        print("✅ no actions")
        return EXIT_OK

    result = check_model(
        model,
        runs=args.runs,
        duration=args.duration,
        seed=args.seed,
        jobs=args.jobs,
        inject_fault=args.inject_fault,
        progress=True,
    )
    print(check_frame(result).to_string(index=False))

    if not result.report.system_feasible:
        print("⚠️ analysis reports the system NOT feasible")

    if result.passed:
        print(f"✅ {result.runs} runs: every observed response within its bound")
        return EXIT_OK

    for c in result.counterexamples:
        print(f"❌ counterexample: {c}")
    return EXIT_VIOLATION


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "check": cmd_check}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        check_env()
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_ERROR
    except _Exit as e:
        print(f"❌ {e}", file=sys.stderr)
        return e.code
    except (ModelError, AnalysisOverflow) as e:
        print(f"❌ {args.model}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
