"""Command line entry points.

    beltline run --config cfg.json [--scenario A] [--objects N | --duration S]
                 [--seed N] [--headless] [--serve ADDR] [--log PATH]
    beltline replay --log PATH [--csv]
    beltline frame --case A [--defect SEVERITY] [--seed N] --out f.pgm
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .config import SimConfig, load_config
from .metrics import counts_from_events, parse_log, summarize, summary_csv
from .plant import Illumination
from .scenarios import ScenarioConfig, defect_inject, spawn_stream
from .vision import write_pgm


def _apply_run_overrides(cfg: SimConfig, args) -> SimConfig:
    scenario = cfg.scenario
    run = cfg.run
    if args.scenario:
        scenario = ScenarioConfig(case_kind=args.scenario,
                                  defect_fraction=scenario.defect_fraction,
                                  pitch=scenario.pitch,
                                  object_length=scenario.object_length,
                                  noise_sigma=scenario.noise_sigma,
                                  stratified=scenario.stratified,
                                  seed=scenario.seed)
    if args.objects is not None:
        run = replace(run, object_count=args.objects, duration_s=None)
    if args.duration is not None:
        run = replace(run, duration_s=args.duration, object_count=None)
    if args.seed is not None:
        run = replace(run, seed=args.seed)
        scenario = replace(scenario, seed=args.seed)
    if args.headless:
        run = replace(run, headless=True)
    if args.log:
        run = replace(run, log_path=args.log)
    cfg = replace(cfg, scenario=scenario, run=run)
    if args.serve:
        cfg = replace(cfg, server=replace(cfg.server, bind=args.serve))
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else SimConfig()
    cfg = _apply_run_overrides(cfg, args)
    if args.serve:
        from .server import serve
        print(f"serving on http://{cfg.server.bind}  "
              f"(case {cfg.scenario.case_kind}, seed {cfg.run.seed})",
              file=sys.stderr)
        serve(cfg)
        return 0
    from .service import run
    summary = run(cfg)
    print(json.dumps(summary.to_dict(), indent=2))
    return 0


def cmd_replay(args) -> int:
    with open(args.log, "r", encoding="utf-8") as f:
        events = parse_log(f)
    summary = summarize(events)
    if args.csv:
        case = events[0]["case"] if events else "?"
        print(summary_csv([(case, summary, counts_from_events(events))]),
              end="")
    else:
        print(json.dumps(summary.to_dict(), indent=2))
    return 0


def cmd_frame(args) -> int:
    scenario = ScenarioConfig(case_kind=args.case, seed=args.seed,
                              defect_fraction=1.0 if args.defect else 0.0,
                              stratified=True)
    obj = spawn_stream(scenario, 1)[0]
    if args.defect:
        # Re-inject at the requested severity on top of the same base.
        base = {k: v for k, v in obj.appearance.items()
                if k not in ("contrast_loss", "merged_gap", "deleted_bar",
                             "shift_px")}
        if args.case == "C":
            base["round_frac"] = [0.0, 0.0]
            base["defect_index"] = 0
        obj.appearance = defect_inject(args.case, args.defect, base)
    from .camera import render
    frame = render(obj, Illumination(255, 1.0),
                   np.random.SeedSequence([args.seed, 0xF7A3E, obj.id]))
    write_pgm(args.out, frame)
    print(f"wrote {args.out} ({obj.case_kind}, {obj.truth})")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="beltline")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation")
    p_run.add_argument("--config", help="JSON config file")
    p_run.add_argument("--scenario", choices=("A", "B", "C"))
    p_run.add_argument("--objects", type=int)
    p_run.add_argument("--duration", type=float, help="seconds")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--headless", action="store_true")
    p_run.add_argument("--serve", metavar="ADDR", help="HOST:PORT")
    p_run.add_argument("--log", help="JSONL event log path")
    p_run.set_defaults(func=cmd_run)

    p_replay = sub.add_parser("replay", help="recompute a summary from a log")
    p_replay.add_argument("--log", required=True)
    p_replay.add_argument("--csv", action="store_true")
    p_replay.set_defaults(func=cmd_replay)

    p_frame = sub.add_parser("frame", help="render one frame to a PGM file")
    p_frame.add_argument("--case", required=True, choices=("A", "B", "C"))
    p_frame.add_argument("--defect", type=float, default=0.0,
                         help="defect severity in (0, 1]; 0 renders a good object")
    p_frame.add_argument("--seed", type=int, default=1)
    p_frame.add_argument("--out", required=True)
    p_frame.set_defaults(func=cmd_frame)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
