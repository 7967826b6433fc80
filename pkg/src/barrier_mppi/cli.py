"""Command-line entry point.

    barrier-mppi run --mission mission2 --controller vanilla,log,dbas-log \
        --trials 30 --seed 7 --out out/ --plot --set barrier.r_weight=2

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import config as cfgmod
from . import plots, sim
from .errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barrier-mppi",
                                     description="sampling-based MPC mission benchmark")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a mission benchmark")
    run.add_argument("--mission", required=True,
                     help="preset name (mission1|mission2|mission3) or config file path")
    run.add_argument("--controller", default=None,
                     help="comma-separated variants: vanilla,log,dbas-log")
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default="out")
    run.add_argument("--plot", action="store_true", help="emit SVG plots per controller")
    run.add_argument("--workers", type=int, default=None,
                     help="trial worker processes (also capped by BARRIER_MPPI_THREADS)")
    run.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="override any config key (repeatable)")
    return run and parser


def _parse_overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
        key, val = pair.split("=", 1)
        out[key.strip()] = cfgmod.parse_value(val)
    return out


def _resolve_run(args) -> dict:
    overrides = _parse_overrides(args.overrides)
    if args.controller is not None:
        overrides["run.controllers"] = args.controller
    if args.trials is not None:
        overrides["run.trials"] = args.trials
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    mission_cfg = cfgmod.load_mission_source(args.mission)
    return cfgmod.resolve(mission_cfg, overrides)


def run_from_resolved(resolved: dict, out_dir: str, plot: bool = False,
                      workers: int | None = None) -> dict:
    """Execute a resolved configuration and write outputs; returns the
    metrics document that was written to metrics.json."""
    mission = cfgmod.build_mission(resolved)
    labels = [s.strip() for s in str(resolved["run.controllers"]).split(",") if s.strip()]
    if not labels:
        raise ConfigError("run.controllers selects no controller")
    configs = {lab: cfgmod.build_controller_config(resolved, lab) for lab in labels}
    trials = int(resolved["run.trials"])
    base_seed = int(resolved["run.seed"])

    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".write-probe")
        with open(probe, "w") as fh:
            fh.write("")
        os.unlink(probe)
    except OSError as exc:
        raise OSError(f"output directory {out_dir!r} is not writable: {exc}") from exc

    plotted = set()

    def sink(label: str, trial: int, result: sim.EpisodeResult):
        csv_text = sim.episode_csv(result, mission.model.kind, mission.dt)
        from .fileio import atomic_write_text
        atomic_write_text(os.path.join(out_dir, f"{label}_trial{trial:03d}.csv"), csv_text)
        if plot and label not in plotted:
            plotted.add(label)
            plots.emit_plot(result, mission, os.path.join(out_dir, f"{label}_trajectory.svg"))
            plots.emit_series_plot(result.exploration, f"{label}: exploration rate",
                                   mission.dt, os.path.join(out_dir, f"{label}_exploration.svg"))

    metrics = sim.run_mission(mission, configs, trials, base_seed,
                              workers=workers, episode_sink=sink)
    doc = metrics_document(resolved, metrics, base_seed, trials)
    from .fileio import atomic_write_text
    atomic_write_text(os.path.join(out_dir, "metrics.json"),
                      json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def metrics_document(resolved: dict, metrics: dict[str, sim.MissionMetrics],
                     base_seed: int, trials: int) -> dict:
    doc = {
        "mission": resolved["mission.name"],
        "trials": trials,
        "base_seed": base_seed,
        "seeds": list(range(base_seed, base_seed + trials)),
        "config": resolved,
        "config_hash": cfgmod.config_hash(resolved),
        "controllers": {},
    }
    for label, m in metrics.items():
        doc["controllers"][label] = {
            "trials": m.trials,
            "successes": m.successes,
            "success_rate": m.success_rate,
            "error": None if m.error_mean is None else {"mean": m.error_mean, "std": m.error_std},
            "speed": None if m.speed_mean is None else {"mean": m.speed_mean, "std": m.speed_std},
            "per_trial": m.per_trial,
        }
    return doc


def rerun_from_metrics(metrics_path: str, out_dir: str, workers: int | None = None) -> dict:
    """Reproduce a run from the configuration embedded in a metrics.json."""
    with open(metrics_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return run_from_resolved(doc["config"], out_dir, workers=workers)


def parse_and_run(argv) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        resolved = _resolve_run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        doc = run_from_resolved(resolved, args.out, plot=args.plot, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    for label, block in doc["controllers"].items():
        err = block["error"]
        spd = block["speed"]
        err_s = f"{err['mean']:.3f}" if err else "-"
        spd_s = f"{spd['mean']:.3f}" if spd else "-"
        print(f"{doc['mission']} {label}: success {block['success_rate']:.0f}% "
              f"error {err_s} m speed {spd_s} m/s")
    return EXIT_OK


def main(argv=None) -> int:
    return parse_and_run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
