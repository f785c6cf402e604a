"""False-positive rate of the full test on truly i.i.d. sequences.

    python scripts/calibration.py [--count 40] [--utilization 0.8]

Each sequence is generated i.i.d., so any significant verdict is a false
positive.  Also prints the binomial probability of seeing at least that
many false positives if each test errs with probability 0.05.
"""

import argparse
from collections import Counter

from varpot import SimConfig, run_experiment
from varpot.sequences import gen_iid
from varpot.stats import family_false_positive


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--up", default="exp:50")
    ap.add_argument("--down", default="lognorm:2:1")
    ap.add_argument("--horizon", type=float, default=8760.0)
    ap.add_argument("--utilization", type=float, default=0.8)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = SimConfig(utilization=args.utilization)
    counts = Counter()
    for k in range(args.count):
        s0 = gen_iid(args.up, args.down, args.horizon, 1000 + k)
        r = run_experiment(s0, cfg, k, jobs=args.jobs)
        counts[r.verdict.value] += 1
        print(f"{k:3d}  {r.verdict.value:22s} ct0 {r.normalized.ct0:6.1f}  runs {r.runs_used}", flush=True)

    hits = counts["SIGNIFICANT_POSITIVE"] + counts["SIGNIFICANT_NEGATIVE"]
    print()
    for v, c in sorted(counts.items()):
        print(f"{v:22s} {c}")
    print(f"significant fraction  {hits / args.count:.3f}")
    print(f"P(>= {hits} of {args.count} at 5%)  {family_false_positive(args.count, hits, 0.05):.3g}")


if __name__ == "__main__":
    main()
