#!/usr/bin/env python3
"""Run the full three-mission benchmark table and print a summary.

    python scripts/run_benchmark.py --trials 30 --seed 0 --out out/benchmark
"""

import argparse
import json
import os
import sys
import time

from barrier_mppi import cli
from barrier_mppi import config as cfgmod

CONTROLLERS = "vanilla,log,dbas-log"


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/benchmark")
    ap.add_argument("--missions", default="mission1,mission2,mission3")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)

    t0 = time.time()
    docs = {}
    for name in args.missions.split(","):
        resolved = cfgmod.resolve(cfgmod.load_mission_source(name), {
            "run.trials": args.trials,
            "run.seed": args.seed,
            "run.controllers": CONTROLLERS,
        })
        out_dir = os.path.join(args.out, name)
        docs[name] = cli.run_from_resolved(resolved, out_dir, workers=args.workers)
        print(f"{name} done ({time.time() - t0:.0f} s elapsed)")

    print(f"\n{'mission':10s} {'controller':10s} {'success':>8s} {'error':>8s} {'speed':>8s}")
    for name, doc in docs.items():
        for label in CONTROLLERS.split(","):
            block = doc["controllers"][label]
            err = f"{block['error']['mean']:.3f}" if block["error"] else "-"
            spd = f"{block['speed']['mean']:.3f}" if block["speed"] else "-"
            print(f"{name:10s} {label:10s} {block['success_rate']:7.1f}% {err:>8s} {spd:>8s}")
    print(f"\ntotal wall time: {time.time() - t0:.0f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
