"""Command-line entry point: ``mesh-hydro bench`` and ``mesh-hydro dispatch``.

Exit codes: 0 success, 1 runtime or data error, 2 usage or configuration
error. Result files are byte-identical for identical arguments; wall-clock
times are only reported on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .benchmarks import PROBLEM_NAMES, make_problem
from .config import Config, ConfigError, load_config, packaged_path
from .hydro import HourContext
from .mesh import run
from .pareto import hypervolume_2d
from .simulator import DailyReport, SimulationConfig, load_hourly_data, run_day

REF_POINT = (11.0, 11.0)
log = logging.getLogger("mesh_hydro")


class UsageError(Exception):
    pass


def _num(x) -> str:
    # repr keeps every bit, so CSV values parse back to the same floats
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load(args, default_name: str) -> Config:
    path = Path(args.config) if args.config else packaged_path("configs", default_name)
    return load_config(path)


def _problems(text: str) -> list[str]:
    names = [n.strip().lower() for n in text.split(",") if n.strip()]
    if not names:
        raise UsageError("no problem given")
    for n in names:
        if n not in PROBLEM_NAMES:
            raise UsageError(f"unknown problem: {n!r} (known: {', '.join(PROBLEM_NAMES)})")
    return names


def bench_command(args) -> int:
    problems = _problems(args.problems)
    cfg = _load(args, "benchmark.cfg")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for name in problems:
        problem = make_problem(name)
        for k in range(args.runs):
            seed = args.seed + k
            t0 = time.perf_counter()
            res = run(problem, replace(cfg.mesh, seed=seed))
            elapsed = time.perf_counter() - t0
            X, F = res.front()
            hv = hypervolume_2d(F, REF_POINT)
            summary.append((name, seed, hv, res.evaluations))
            print(f"{name} seed {seed}: {elapsed:.2f} s", file=sys.stderr)
            header = ["f1", "f2"] + [f"x{i + 1}" for i in range(problem.n_var)]
            _write_csv(
                out / f"archive_{name}_seed{seed}.csv",
                header,
                [[_num(v) for v in np.concatenate([f, x])] for f, x in zip(F, X)],
            )
    _write_csv(
        out / "summary.csv",
        ["problem", "seed", "hypervolume", "evaluations"],
        [(p, s, _num(h), e) for p, s, h, e in summary],
    )
    stats = {}
    for name in problems:
        hv = np.array([h for p, _, h, _ in summary if p == name])
        std = float(hv.std(ddof=1)) if len(hv) > 1 else 0.0
        stats[name] = {"mean": float(hv.mean()), "std": std, "runs": len(hv)}
        print(f"{name}: hypervolume mean {hv.mean():.4f} std {std:.4f} over {len(hv)} run(s)")
    if args.json:
        _write_json(
            out / "summary.json",
            {
                "variant": cfg.mesh.variant,
                "reference_point": list(REF_POINT),
                "runs": [
                    {"problem": p, "seed": s, "hypervolume": h, "evaluations": e} for p, s, h, e in summary
                ],
                "statistics": stats,
            },
        )
    return 0


def _report_rows(report: DailyReport):
    for r in report.rows():
        yield [
            r.hour,
            r.plant,
            _num(r.demand_required),
            _num(r.demand_produced),
            _num(r.error),
            _num(r.usual_discharge),
            _num(r.optimized_discharge),
            _num(r.saved_water),
        ]


REPORT_HEADER = ["hour", "plant", "DR", "DP", "E", "UWD", "OWD", "SW"]


def dispatch_command(args) -> int:
    cfg = _load(args, "dispatch.cfg")
    entries = cfg.require_plants()
    sim = dict(cfg.simulation)
    if args.hours is not None:
        sim["hours"] = args.hours
    if args.runs is not None:
        sim["runs_per_hour"] = args.runs
    if sim["hours"] < 1 or sim["runs_per_hour"] < 1:
        raise UsageError("--hours and --runs must be ≥ 1")
    data_path = Path(args.data) if args.data else packaged_path("data", "test_day.csv")
    hourly = load_hourly_data(data_path, sim["tolerance"], hours=sim["hours"])
    if len(entries) != 2:
        raise ConfigError(f"{cfg.source}: the hourly data describes 2 plants, config has {len(entries)}")
    evap = tuple(e.evaporation for e in entries)
    area = tuple(e.area for e in entries)
    hourly = [HourContext(h.inflow, h.demand, h.tolerance, evap, area) for h in hourly]
    sim_cfg = SimulationConfig(
        plants=[e.params for e in entries],
        hourly_data=hourly,
        mesh=cfg.mesh,
        hours=sim["hours"],
        runs_per_hour=sim["runs_per_hour"],
        initial_volume_fraction=sim["initial_volume_fraction"],
        base_seed=args.seed,
        literal_penalty=sim["literal_penalty"],
    )
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    def progress(h):
        log.info("hour %d done: %d front members", h.hour, len(h.front_F))

    t0 = time.perf_counter()
    report = run_day(sim_cfg, progress)
    elapsed = time.perf_counter() - t0

    _write_csv(out / "report.csv", REPORT_HEADER, _report_rows(report))
    sw, liters = report.saved_water(), report.saved_liters()
    _write_csv(
        out / "totals.csv",
        ["plant", "SW_m3s", "SW_liters_per_day"],
        [(p, _num(sw[p]), _num(liters[p])) for p in report.plant_names],
    )
    fronts = [
        {
            "hour": h.hour,
            "chosen": h.chosen,
            "feasible": h.feasible,
            "baseline_used": h.baseline_used,
            "solutions": [
                {"F1": -float(f[0]), "F2": -float(f[1]), "decision": [float(v) for v in x]}
                for x, f in zip(h.front_X, h.front_F)
            ],
        }
        for h in report.hours
    ]
    _write_json(out / "fronts.json", fronts)
    print(f"dispatch: {elapsed:.1f} s", file=sys.stderr)
    if args.json:
        _write_json(
            out / "report.json",
            {
                "rows": [dict(zip(REPORT_HEADER, row)) for row in _report_rows(report)],
                "saved_water_m3s": sw,
                "saved_liters_per_day": liters,
                "infeasible_hours": report.infeasible_hours,
            },
        )
    for p in report.plant_names:
        print(f"{p}: saved water {sw[p]:.2f} m3/s, {liters[p] / 1e6:.1f} million liters/day")
    if report.infeasible_hours:
        print(f"infeasible hours (baseline substituted): {report.infeasible_hours}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mesh-hydro", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, runs_help):
        p.add_argument("--config", help="INI configuration file (defaults to the packaged one)")
        p.add_argument("--output", default="results", help="output directory (default: results)")
        p.add_argument("--seed", type=int, default=0, help="base seed (default: 0)")
        p.add_argument("--runs", type=int, help=runs_help)
        p.add_argument("--json", action="store_true", help="also write JSON mirrors of the tables")

    b = sub.add_parser("bench", help="run MESH on benchmark problems")
    common(b, "independent runs per problem (default: 1)")
    b.add_argument("--problems", default="zdt1", help=f"comma-separated names from: {', '.join(PROBLEM_NAMES)}")
    b.set_defaults(func=bench_command)

    d = sub.add_parser("dispatch", help="run the 24-hour cascade dispatch simulation")
    common(d, "MESH runs per hour (overrides the config)")
    d.add_argument("--data", help="hourly inflow/demand CSV (defaults to the packaged table)")
    d.add_argument("--hours", type=int, help="number of simulated hours (overrides the config)")
    d.set_defaults(func=dispatch_command)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "bench":
        if args.runs is None:
            args.runs = 1
        if args.runs < 1:
            print("mesh-hydro: error: --runs must be ≥ 1", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"mesh-hydro: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"mesh-hydro: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
