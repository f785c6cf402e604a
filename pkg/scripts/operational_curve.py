"""Cycle time against utilization for one sequence, as sweep CSV.

    python scripts/operational_curve.py --synth autocorr:exp:20:lognorm:1:1.2:8 --out curve.csv
    python scripts/operational_curve.py --log tool.csv

Columns: utilization, mu, i95_lo, i95_hi, ct0, ct0_lo, ct0_hi, verdict.
Plot mu with its band against ct0 with its interval to see where the
historical ordering departs from the shuffled population.
"""

import argparse
import sys

from varpot import SimConfig
from varpot.experiment import DEFAULT_RATES, sweep, sweep_rows
from varpot.io import parse_event_log, write_sweep
from varpot.sequences import parse_synth


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--synth")
    src.add_argument("--log")
    ap.add_argument("--horizon", type=float, default=8760.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    if args.synth:
        s0 = parse_synth(args.synth, args.horizon, args.seed)
    else:
        with open(args.log, encoding="utf-8", newline="") as fh:
            s0 = parse_event_log(fh)

    def progress(done, budget):
        print(f"\rruns {done}/{budget}   ", end="", file=sys.stderr, flush=True)

    reports = sweep(s0, DEFAULT_RATES, SimConfig(), args.seed, jobs=args.jobs, progress=progress)
    print(file=sys.stderr)
    text = write_sweep(sweep_rows(reports))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
