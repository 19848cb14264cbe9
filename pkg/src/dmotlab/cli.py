"""Command-line entry point: ``dmotlab {run,sweep,validate,presets}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from dmotlab.results import emit_results, summarize
from dmotlab.scenario import FUSION_METHODS, PRESETS, ConfigError, load_scenario, preset, to_dict
from dmotlab.simulation import run_monte_carlo, with_overrides

SWEEP_PARAMS = {"epsilon": float, "bandwidth": float, "w_max": int, "nodes": int, "method": str}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="scenario JSON file or preset name")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--runs", type=int, help="Monte-Carlo runs (overrides the config)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--method", choices=FUSION_METHODS, help="fusion method")
    p.add_argument("--nodes", type=int, help="number of connected nodes (lowest ids first)")
    p.add_argument("--eval-node", type=int, help="node whose fused output is scored")
    p.add_argument("--threads", type=int, default=1, help="worker processes for Monte-Carlo runs")


def _configure(args):
    cfg = load_scenario(args.config)
    return with_overrides(cfg, mc_runs=args.runs, seed=args.seed, fusion=args.method, n_nodes=args.nodes,
                          eval_node=args.eval_node)


def _print_summary(summary: dict) -> None:
    for method, row in summary.items():
        print(f"{method}: runs={row['runs']} ospa={row['mean_ospa']:.2f} ospa2={row['mean_ospa2']:.2f} "
              f"fuse_ms={row['mean_fuse_ms']:.3f} card_err={row['mean_card_error']:.2f}")


def cmd_run(args) -> int:
    cfg = _configure(args)
    records = run_monte_carlo(cfg, threads=args.threads)
    paths = emit_results(records, args.out)
    _print_summary(summarize(records))
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _configure(args)
    cast = SWEEP_PARAMS[args.param]
    values = [cast(v) for v in args.values.split(",") if v.strip()]
    out = Path(args.out)
    rows = []
    for v in values:
        field = {"nodes": "n_nodes", "method": "fusion"}.get(args.param, args.param)
        sub = with_overrides(cfg, **{field: v})
        records = run_monte_carlo(sub, threads=args.threads)
        emit_results(records, out / f"{args.param}={v}")
        for method, row in summarize(records).items():
            rows.append({"param": args.param, "value": v, "method": method, "runs": row["runs"],
                         **{k: row[k] for k in row if k.startswith("mean_")}})
            print(f"{args.param}={v} {method}: ospa={row['mean_ospa']:.2f} ospa2={row['mean_ospa2']:.2f} "
                  f"fuse_ms={row['mean_fuse_ms']:.3f}")
    out.mkdir(parents=True, exist_ok=True)
    if rows:
        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def cmd_validate(args) -> int:
    cfg = load_scenario(args.config)
    print(f"ok: {cfg.name} ({len(cfg.sensors)} sensors, {len(cfg.objects)} objects, "
          f"{cfg.duration} steps, {cfg.dynamics.upper()}, {cfg.fusion})")
    return 0


def cmd_presets(args) -> int:
    if args.dump:
        print(json.dumps(to_dict(preset(args.dump)), indent=2))
        return 0
    for name in PRESETS:
        cfg = preset(name)
        print(f"{name:14s} {len(cfg.sensors):3d} sensors {len(cfg.objects):3d} objects "
              f"{cfg.duration:3d} steps {cfg.dynamics.upper()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmotlab", description="Distributed multi-object tracking lab")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="Monte-Carlo run of one scenario")
    _common(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="repeat a run over values of one parameter")
    _common(s)
    s.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    s.add_argument("--values", required=True, help="comma-separated values")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    ps = sub.add_parser("presets", help="list built-in presets")
    ps.add_argument("--dump", metavar="NAME", help="print a preset as JSON")
    ps.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
