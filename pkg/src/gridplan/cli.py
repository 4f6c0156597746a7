"""Command-line interface.

Subcommands: plan, plan-multi, gen-samples, oracle-region, dump-actions,
bench.  Scenarios come from a key=value file (--scenario) or inline flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .actions import build_action_set, dump_actions_csv
from .bench import BenchSuite, dump_search_space, run_suite
from .datagen import (
    ScenarioSpec,
    build_scenario_full,
    generate_samples,
    parse_scenario_file,
)
from .grid import RegionMask, inflate, read_raster
from .multi import TargetSamplerConfig, plan_all, sample_targets
from .region import FileSource, NullSource, OracleSource, export_oracle_masks
from .search import SearchConfig, plan


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", type=Path, help="scenario key=value file")
    p.add_argument("--seed", type=int, default=0, help="scenario seed (inline mode)")
    p.add_argument("--template", default="corridor", choices=("corridor", "s_curve", "lot"))
    p.add_argument("--obstacles", type=int, nargs=2, metavar=("MIN", "MAX"), default=(3, 8))
    p.add_argument("--shift", type=float, nargs=2, metavar=("MIN", "MAX"), default=(-8.0, 8.0))
    p.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="template parameter, repeatable",
    )
    p.add_argument("--vehicle-radius", type=int, default=5, help="obstacle inflation radius, cells")


def _add_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--speed", type=float, default=0.0, help="vehicle speed, m/s")
    p.add_argument("--w", type=float, default=0.15, help="region weight in (0, 1]")
    p.add_argument("--dang-weight", type=float, default=3.0, help="cost cells per radian of turn")
    p.add_argument("--theta-bins", type=int, default=72)
    p.add_argument("--time-limit", type=float, default=100.0, help="per-target limit, ms")
    p.add_argument("--goal-tol", type=float, default=1.0, help="goal tolerance, cells")
    p.add_argument("--mode", default="coprime", choices=("coprime", "all-offsets"))


def _add_sampler_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--step", type=int, default=25, help="longitudinal station spacing, cells")
    p.add_argument("--offsets", default="-10,-5,0,5,10", help="lateral offsets, comma-separated")
    p.add_argument("--max-targets", type=int, default=10)


def _scenario_from(args) -> ScenarioSpec:
    if args.scenario is not None:
        return parse_scenario_file(args.scenario)
    params = []
    for item in args.param:
        key, _, val = item.partition("=")
        if not key or not val:
            raise SystemExit(f"bad --param {item!r}, expected KEY=VALUE")
        params.append((key, float(val)))
    return ScenarioSpec(
        seed=args.seed,
        template=args.template,
        params=tuple(params),
        vehicle_obstacles=tuple(args.obstacles),
        refpath_shift=tuple(args.shift),
    )


def _config_from(args) -> SearchConfig:
    return SearchConfig(
        w=args.w,
        delta_ang_weight=args.dang_weight,
        theta_bins=args.theta_bins,
        time_limit=args.time_limit,
        goal_tolerance=args.goal_tol,
    )


def _sampler_from(args) -> TargetSamplerConfig:
    offsets = tuple(int(x) for x in args.offsets.split(",") if x.strip() != "")
    return TargetSamplerConfig(
        longitudinal_step=args.step,
        lateral_offsets=offsets,
        max_targets=args.max_targets,
    )


def _cmd_plan(args) -> int:
    spec = _scenario_from(args)
    scenario = build_scenario_full(spec)
    grid = inflate(scenario.grid, args.vehicle_radius)
    cfg = _config_from(args)
    actions = build_action_set(args.mode)
    region = None
    if args.region is not None:
        mask = read_raster(args.region)
        if not isinstance(mask, RegionMask):
            raise SystemExit(f"{args.region} is not a grayscale mask")
        region = mask
    result = plan(
        grid,
        scenario.start,
        tuple(args.target),
        args.speed,
        region,
        cfg,
        actions,
        record_trace=args.dump_search_space is not None,
    )
    if args.dump_search_space is not None:
        dump_search_space(result, args.dump_search_space)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["col", "row", "heading"])
    for col, row, heading in result.path:
        writer.writerow([col, row, repr(heading)])
    record = {
        "status": result.status,
        "cost": result.cost,
        "target": list(args.target),
        **asdict(result.stats),
    }
    print(json.dumps(record))
    return 0 if result.reached else 1


def _cmd_plan_multi(args) -> int:
    spec = _scenario_from(args)
    scenario = build_scenario_full(spec)
    grid = inflate(scenario.grid, args.vehicle_radius)
    cfg = _config_from(args)
    actions = build_action_set(args.mode)
    tcfg = _sampler_from(args)
    if args.source == "null":
        source = NullSource()
    elif args.source == "oracle":
        source = OracleSource(radius=args.oracle_radius, cfg=cfg)
    else:
        if args.mask_dir is None:
            raise SystemExit("--source file requires --mask-dir")
        scenario_id = args.scenario_id if args.scenario_id else str(spec.seed)
        source = FileSource(directory=args.mask_dir, scenario_id=scenario_id)
    report = plan_all(
        grid,
        scenario.refpath,
        scenario.start,
        args.speed,
        source,
        cfg,
        tcfg,
        actions=actions,
        workers=args.workers,
    )
    for idx, outcome in enumerate(report.per_target):
        rec = {
            "index": idx,
            "target": list(outcome.target),
            "source": report.source_kind,
            "predict_ms": round(outcome.predict_ms, 3),
            "plan_ms": round(outcome.plan_ms, 3),
        }
        if outcome.error is not None:
            rec["error"] = outcome.error
        else:
            rec["status"] = outcome.result.status
            rec["cost"] = outcome.result.cost
            rec["expanded"] = outcome.result.stats.expanded
            rec["region_hits"] = outcome.result.stats.region_hits
        print(json.dumps(rec))
        if args.paths_dir is not None and outcome.result is not None and outcome.result.reached:
            paths_dir = Path(args.paths_dir)
            paths_dir.mkdir(parents=True, exist_ok=True)
            with open(paths_dir / f"path_{idx:03d}.csv", "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["col", "row", "heading"])
                for col, row, heading in outcome.result.path:
                    writer.writerow([col, row, repr(heading)])
    totals = {
        "targets": report.totals.targets,
        "successes": report.totals.successes,
        "plan_ms": round(report.totals.plan_ms, 3),
        "predict_ms": round(report.totals.predict_ms, 3),
    }
    print(json.dumps({"totals": totals}))
    return 0


def _cmd_gen_samples(args) -> int:
    spec = _scenario_from(args)
    tcfg = _sampler_from(args)
    cfg = SearchConfig(time_limit=args.time_limit)
    report = generate_samples(
        spec,
        tcfg,
        args.per_target,
        args.out_dir,
        speed=args.speed,
        vehicle_radius=args.vehicle_radius,
        label_radius=args.label_radius,
        cfg=cfg,
    )
    print(
        json.dumps(
            {
                "samples": len(report.rows),
                "skipped": report.skipped,
                "manifest": str(report.manifest_path),
            }
        )
    )
    return 0


def _cmd_oracle_region(args) -> int:
    spec = _scenario_from(args)
    scenario = build_scenario_full(spec)
    grid = inflate(scenario.grid, args.vehicle_radius)
    cfg = _config_from(args)
    tcfg = _sampler_from(args)
    targets = sample_targets(grid, scenario.base_refpath, tcfg)
    if not targets:
        raise SystemExit("no reachable targets sampled")
    scenario_id = args.scenario_id if args.scenario_id else str(spec.seed)
    written, skipped = export_oracle_masks(
        grid,
        scenario.start,
        args.speed,
        targets,
        args.out_dir,
        scenario_id,
        refpath=scenario.refpath,
        radius=args.oracle_radius,
        cfg=cfg,
        export_inputs=args.export_inputs,
    )
    print(
        json.dumps(
            {
                "scenario_id": scenario_id,
                "targets": len(targets),
                "masks": written,
                "skipped": skipped,
                "inputs": len(targets) if args.export_inputs else 0,
            }
        )
    )
    return 0


def _cmd_dump_actions(args) -> int:
    dump_actions_csv(build_action_set(args.mode), sys.stdout)
    return 0


def _cmd_bench(args) -> int:
    seeds = [int(s) for s in args.seeds.split(",") if s.strip() != ""]
    scenarios = tuple(
        ScenarioSpec(
            seed=seed,
            template=args.template,
            vehicle_obstacles=tuple(args.obstacles),
            refpath_shift=(0.0, 0.0),  # benchmarks plan against the true lane
        )
        for seed in seeds
    )
    counts = tuple(int(c) for c in args.counts.split(",") if c.strip() != "")
    suite = BenchSuite(
        scenarios=scenarios,
        target_counts=counts,
        repetitions=args.reps,
        sources=tuple(args.sources.split(",")),
    )
    cfg = _config_from(args)
    tcfg = _sampler_from(args)
    rows, ratios = run_suite(
        suite,
        scfg=cfg,
        tcfg=tcfg,
        speed=args.speed,
        vehicle_radius=args.vehicle_radius,
        oracle_radius=args.oracle_radius,
        out_dir=args.out_dir,
        throughput_workers=args.throughput_workers,
    )
    for row in rows:
        print(
            f"targets={row.targets:3d} source={row.source:9s} "
            f"plan={row.plan_ms:9.3f}ms predict={row.predict_ms:9.3f}ms "
            f"expanded={row.expanded:10.1f} success={row.success}/{row.targets * row.reps}"
        )
    if ratios:
        med = sorted(r.ratio for r in ratios)[len(ratios) // 2]
        print(f"median null/oracle plan-time ratio: {med:.2f}")
    print(f"csv written under {args.out_dir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gridplan",
        description="Grid path planning with a lookup-table action set and "
        "soft region constraints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan to a single target")
    _add_scenario_args(p)
    _add_search_args(p)
    p.add_argument("--target", type=int, nargs=2, metavar=("COL", "ROW"), required=True)
    p.add_argument("--region", type=Path, help="region mask PGM")
    p.add_argument("--dump-search-space", type=Path, help="write popped-cell footprint PGM")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("plan-multi", help="sample targets and plan to each")
    _add_scenario_args(p)
    _add_search_args(p)
    _add_sampler_args(p)
    p.add_argument("--source", default="null", choices=("null", "oracle", "file"))
    p.add_argument("--oracle-radius", type=int, default=5)
    p.add_argument("--mask-dir", type=Path, help="directory of mask_{id}_{index}.pgm files")
    p.add_argument("--scenario-id", help="id used in mask file names (default: seed)")
    p.add_argument("--workers", type=int, default=0, help="concurrent target plans (0 = sequential)")
    p.add_argument("--paths-dir", type=Path, help="write per-target path CSVs here")
    p.set_defaults(func=_cmd_plan_multi)

    p = sub.add_parser("gen-samples", help="emit training input/label pairs")
    _add_scenario_args(p)
    _add_sampler_args(p)
    p.add_argument("--per-target", type=int, default=5)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--speed", type=float, default=0.0)
    p.add_argument("--label-radius", type=int, default=5)
    p.add_argument("--time-limit", type=float, default=2000.0, help="per-plan limit, ms")
    p.set_defaults(func=_cmd_gen_samples)

    p = sub.add_parser("oracle-region", help="export oracle masks (and inputs) per target")
    _add_scenario_args(p)
    _add_search_args(p)
    _add_sampler_args(p)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--oracle-radius", type=int, default=5)
    p.add_argument("--scenario-id", help="id used in output file names (default: seed)")
    p.add_argument("--export-inputs", action="store_true", help="also write input_{id}_{index}.ppm")
    p.set_defaults(func=_cmd_oracle_region)

    p = sub.add_parser("dump-actions", help="print the action table as CSV")
    p.add_argument("--mode", default="coprime", choices=("coprime", "all-offsets"))
    p.set_defaults(func=_cmd_dump_actions)

    p = sub.add_parser("bench", help="run the comparison suite")
    _add_search_args(p)
    _add_sampler_args(p)
    p.add_argument("--seeds", default="1,2,3", help="scenario seeds, comma-separated")
    p.add_argument("--template", default="corridor", choices=("corridor", "s_curve", "lot"))
    p.add_argument("--obstacles", type=int, nargs=2, metavar=("MIN", "MAX"), default=(3, 8))
    p.add_argument("--counts", default="1,3,7,10,15,20,30,40,50")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--sources", default="null,oracle")
    p.add_argument("--oracle-radius", type=int, default=5)
    p.add_argument("--vehicle-radius", type=int, default=5)
    p.add_argument("--out-dir", type=Path, default=Path("bench_out"))
    p.add_argument("--throughput-workers", type=int, default=0)
    p.set_defaults(func=_cmd_bench)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
