"""Command-line entry point: ``varpot {test,sweep,synth}``.

Exit codes: 0 for a significant or not-significant verdict, 2 when the
budget ran out with the verdict still UNDECIDED, 1 for any input or usage
error.  Progress goes to stderr; tables, CSV and reports go to stdout or
``--out``.
"""

from __future__ import annotations

import argparse
import os
import re
import sys

from . import io as vio
from .errors import VarPotError
from .experiment import DEFAULT_RATES, default_jobs, run_experiment, sweep, sweep_rows
from .model import SimConfig, Verdict
from .sequences import parse_synth

EXIT_OK, EXIT_INPUT, EXIT_UNDECIDED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for UNDECIDED
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _min_grid(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[x×X]\s*(\d+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected NxM, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _rates(text: str) -> list[float]:
    try:
        rates = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"rates must be comma-separated numbers, got {text!r}") from None
    if not rates:
        raise argparse.ArgumentTypeError("no rates given")
    return rates


def _add_input_flags(p: argparse.ArgumentParser):
    src = p.add_argument_group("input (exactly one)")
    src.add_argument("log", nargs="?", help="event log CSV with header state,start,end")
    src.add_argument("--synth", metavar="SPEC",
                     help="synthetic sequence, e.g. periodic:168:8:exp0.5:0.02, "
                          "iid:exp:50:lognorm:2:1, autocorr:exp:20:lognorm:1:1.2:8")
    p.add_argument("--horizon", type=float, default=8760.0, help="horizon of --synth sequences, hours (default 8760)")
    p.add_argument("--coalesce", action="store_true", help="merge consecutive same-state log rows instead of failing")
    p.add_argument("--utilization", type=float, default=0.8, help="target utilization in (0,1) (default 0.8)")
    p.add_argument("--process-time", type=float, default=1.0, help="constant process time, hours (default 1)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--min-grid", type=_min_grid, default=(20, 20), metavar="NxM",
                   help="minimum shuffled sequences x arrival scenarios (default 20x20)")
    p.add_argument("--max-budget", type=int, default=10_000, help="maximum simulation runs (default 10000)")
    p.add_argument("--paired-shuffle", action="store_true",
                   help="permute (up, down) pairs jointly instead of UP and DOWN spans independently")
    p.add_argument("--utilization-basis", choices=("uptime", "wallclock"), default="uptime",
                   help="utilization relative to UP capacity (default) or to wall-clock time")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default $VARPOT_JOBS or 1); results do not depend on it")
    p.add_argument("--quiet", action="store_true", help="no progress on stderr")
    p.add_argument("--out", help="output path (default: stdout where applicable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="varpot", description="Variability potential of up/down event orderings.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="test one sequence; prints a results-table row")
    _add_input_flags(t)
    t.add_argument("--label", default="S0", help="row label (default S0)")

    s = sub.add_parser("sweep", help="run the test over several utilization rates; emits CSV")
    _add_input_flags(s)
    s.add_argument("--rates", type=_rates, default=list(DEFAULT_RATES),
                   help="comma-separated utilization rates (default 0.1,...,0.9)")

    g = sub.add_parser("synth", help="write a synthetic sequence as an event log")
    g.add_argument("spec", help="synthetic spec, see `varpot test --help`")
    g.add_argument("--horizon", type=float, default=8760.0, help="hours (default 8760)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output path (default stdout)")
    return parser


def _load_sequence(args):
    if (args.log is None) == (args.synth is None):
        raise UsageError("give exactly one input: an event log path or --synth SPEC")
    if args.synth is not None:
        return parse_synth(args.synth, args.horizon, args.seed)
    if not os.path.isfile(args.log):
        raise UsageError(f"no such input: {args.log}")
    with open(args.log, encoding="utf-8", newline="") as fh:
        return vio.parse_event_log(fh, coalesce=args.coalesce)


def _config(args, utilization=None) -> SimConfig:
    n, m = args.min_grid
    return SimConfig(
        process_time=args.process_time,
        utilization=args.utilization if utilization is None else utilization,
        max_budget=args.max_budget,
        min_sequences=n,
        min_scenarios=m,
        paired_shuffle=args.paired_shuffle,
        utilization_basis=args.utilization_basis,
    )


def _progress(args):
    if args.quiet:
        return None

    def report(done, budget):
        print(f"runs {done}/{budget}", file=sys.stderr, flush=True)

    return report


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_test(args) -> int:
    seq = _load_sequence(args)
    jobs = args.jobs or default_jobs()
    report = run_experiment(seq, _config(args), args.seed, jobs=jobs, progress=_progress(args))
    if args.out:
        _emit(vio.write_report(report), args.out)
    print(vio.table_row(report, args.label))
    return EXIT_UNDECIDED if report.verdict is Verdict.UNDECIDED else EXIT_OK


def cmd_sweep(args) -> int:
    seq = _load_sequence(args)
    for u in args.rates:
        if not 0.0 < u < 1.0:
            raise UsageError(f"utilization rate must lie in (0, 1), got {u}")
    jobs = args.jobs or default_jobs()
    reports = sweep(seq, args.rates, _config(args, utilization=args.rates[0]), args.seed,
                    jobs=jobs, progress=_progress(args))
    _emit(vio.write_sweep(sweep_rows(reports)), args.out)
    if any(r.verdict is Verdict.UNDECIDED for r in reports):
        return EXIT_UNDECIDED
    return EXIT_OK


def cmd_synth(args) -> int:
    seq = parse_synth(args.spec, args.horizon, args.seed)
    _emit(vio.write_event_log(seq), args.out)
    return EXIT_OK


COMMANDS = {"test": cmd_test, "sweep": cmd_sweep, "synth": cmd_synth}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, VarPotError, OSError) as exc:
        print(f"varpot {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
