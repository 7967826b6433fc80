#!/usr/bin/env python3
"""Paired-trial comparison of the three controllers on one mission.

Used to calibrate mission presets and controller defaults before freezing
them; prints success/error/speed per variant plus pairwise win counts.

    python scripts/tune_missions.py --mission mission2 --trials 10 \
        --set controller.q_weights="2 2 0.5 0.25"
"""

import argparse
import sys
import time

from barrier_mppi import config as cfgmod
from barrier_mppi import sim


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--mission", required=True)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--controllers", default="vanilla,log,dbas-log")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--set", dest="overrides", action="append", default=[])
    args = ap.parse_args(argv)

    overrides = {}
    for pair in args.overrides:
        key, val = pair.split("=", 1)
        overrides[key.strip()] = cfgmod.parse_value(val)
    resolved = cfgmod.resolve(cfgmod.load_mission_source(args.mission), overrides)
    mission = cfgmod.build_mission(resolved)
    labels = [s.strip() for s in args.controllers.split(",")]
    configs = {lab: cfgmod.build_controller_config(resolved, lab) for lab in labels}

    t0 = time.time()
    metrics = sim.run_mission(mission, configs, args.trials, args.seed, workers=args.workers)
    wall = time.time() - t0

    print(f"\n{mission.name}: {args.trials} paired trials, base seed {args.seed}, "
          f"{wall:.0f} s wall")
    for lab in labels:
        m = metrics[lab]
        err = f"{m.error_mean:.3f}" if m.error_mean is not None else "-"
        spd = f"{m.speed_mean:.3f}" if m.speed_mean is not None else "-"
        reasons = {}
        for row in m.per_trial:
            reasons[row["reason"]] = reasons.get(row["reason"], 0) + 1
        print(f"  {lab:9s} success {m.success_rate:5.1f}%  error {err:>7s}  "
              f"speed {spd:>7s}  {reasons}")

    if "dbas-log" in metrics and "log" in metrics:
        derr = serr = dspd = sspd = both = 0
        for a, b in zip(metrics["dbas-log"].per_trial, metrics["log"].per_trial):
            if a["success"] and b["success"]:
                both += 1
                derr += a["tracking_error"] < b["tracking_error"]
                dspd += a["avg_speed"] < b["avg_speed"]
        print(f"  pairs both-successful: {both}; dbas wins error {derr}, "
              f"dbas slower {dspd}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
