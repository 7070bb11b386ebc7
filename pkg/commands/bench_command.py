import logging
import os

import tacts
from commands import drop_unset, parse_bool, parse_cells, parse_list, parse_units
from config.series_io import write_bench_report, write_manifest
from config.settings import BenchConfig, build_config
from tacts.logistic_bench import BenchmarkReport, run_benchmark

logger = logging.getLogger("tacts.bench")


def run_logistic_bench(cfg: BenchConfig) -> BenchmarkReport:
    os.makedirs(cfg.out_dir, exist_ok=True)
    grid = cfg.to_grid()
    logger.info(f"Benchmark: {len(grid.cells)} cells x {len(grid.frames)} frames, seed={grid.seed}")
    report = run_benchmark(grid)
    write_bench_report(report, cfg.out_dir)
    entries = [("version", tacts.__version__)]
    for key, value in cfg.model_dump(exclude={"workers", "out_dir"}).items():
        if key == "omega_policy":
            entries += [(f"config.omega_policy.{k}", v) for k, v in value.items()]
        elif key == "cells":
            entries.append(("config.cells", "none" if value is None else ";".join(f"{r:g}/{k:g}" for r, k in value)))
        else:
            entries.append((f"config.{key}", value))
    entries += [(f"failed.cell{i}", message) for i, message in sorted(report.failures.items())]
    for row in report.mean_errors().itertuples(index=False):
        entries.append((f"mean_E.{row.method}.L{row.L:g}", row.mean_E))
    write_manifest(entries, cfg.out_dir)
    return report


def handle(args) -> int:
    values = drop_unset({
        "r_start": args.r_start,
        "r_end": args.r_end,
        "n_steps": args.n_steps,
        "cells": parse_cells(args.cells) if args.cells else None,
        "frames": list(args.frames) if args.frames else None,
        "rec_step": args.rec_step,
        "lambda_grid_size": args.lambda_grid_size,
        "lambda_fit_points": args.lambda_fit_points,
        "eps_fraction": args.eps_frac,
        "l_min": args.lmin,
        "include_loi": args.include_loi,
        "per_omega": args.per_omega,
        "seed": args.seed,
        "workers": args.workers,
        "out_dir": args.out_dir,
    })
    if args.omega_units:
        lo, hi, step = args.omega_units
        values["omega_policy"] = {"units_min": lo, "units_max": hi, "units_step": step}
    cfg = build_config(BenchConfig, **values)
    run_logistic_bench(cfg)
    return 0


def register(subparsers):
    parser = subparsers.add_parser("bench", help="drifting logistic map benchmark: TACTS SDET vs interpolation DET")
    parser.add_argument("--r-start", type=float)
    parser.add_argument("--r-end", type=float)
    parser.add_argument("--n-steps", type=int)
    parser.add_argument("--cells", action="append", metavar="removal=R,K=K",
                        help="distortion cell; repeat for several (default 3x3 grid)")
    parser.add_argument("--frames", type=parse_list, metavar="L1,L2,...", help="recurrence frame lengths")
    parser.add_argument("--rec-step", type=float)
    parser.add_argument("--omega-units", type=parse_units, metavar="MIN:MAX:STEP")
    parser.add_argument("--lambda-grid-size", type=int)
    parser.add_argument("--fit-points", type=int, dest="lambda_fit_points",
                        help="cost points used to score each lambda candidate (default 2000)")
    parser.add_argument("--eps-frac", type=float)
    parser.add_argument("--lmin", type=int)
    parser.add_argument("--include-loi", type=parse_bool, metavar="BOOL")
    parser.add_argument("--per-omega", type=parse_bool, metavar="BOOL", help="also score each omega's DET")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out-dir")
    parser.set_defaults(handler=handle)
