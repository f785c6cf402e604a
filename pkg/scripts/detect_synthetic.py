"""Results table for the three synthetic fixtures at u = 0.8.

    python scripts/detect_synthetic.py [--seeds 3] [--horizon 8760]

Prints one tab-separated row per (fixture, seed): label, ct0, delta %,
I95*, [ct0], significance, t-test triplet, verdict, runs.
"""

import argparse
import time

from varpot import SimConfig, run_experiment
from varpot.io import table_row
from varpot.sequences import parse_synth

FIXTURES = {
    "clustered": "autocorr:exp:20:lognorm:1:1.2:8",
    "weekly-pm": "periodic:168:8:exp0.5:0.02",
    "iid": "iid:exp:50:lognorm:2:1",
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--horizon", type=float, default=8760.0)
    ap.add_argument("--utilization", type=float, default=0.8)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = SimConfig(utilization=args.utilization)
    print("label\tct0\tdelta\tI95*\t[ct0]\ts\ttriplet\tverdict\truns")
    for name, spec in FIXTURES.items():
        for seed in range(args.seeds):
            t0 = time.perf_counter()
            report = run_experiment(parse_synth(spec, args.horizon, seed), cfg, seed, jobs=args.jobs)
            print(table_row(report, f"{name}/{seed}") + f"\t{time.perf_counter() - t0:.1f}s", flush=True)


if __name__ == "__main__":
    main()
