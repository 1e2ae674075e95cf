"""Acceptance criteria, each checked at its stated tolerance.

Every test appends one PASS/FAIL line that is echoed in the terminal summary.
The daily dispatch criteria use 5 MESH runs per hour instead of 30 to keep
the suite within a single-core time budget; seeds stay disjoint across the
three seed sets.
"""

import time
from dataclasses import replace

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from mesh_hydro.benchmarks import analytical_front, make_problem
from mesh_hydro.cli import main
from mesh_hydro.config import load_config, packaged_path
from mesh_hydro.hydro import C_HM3, InfeasibleDispatch, ReservoirState, literal_plants, ucdm_flows, water_balance
from mesh_hydro.mesh import run
from mesh_hydro.pareto import hypervolume_2d, non_dominated_sort
from mesh_hydro.simulator import LITERS_PER_M3S_DAY_UNIT, SimulationConfig, load_hourly_data, route, run_day

REF = (11.0, 11.0)
TABLE = packaged_path("data", "test_day.csv")
RUNS_PER_HOUR = 5
SEED_SETS = (0, 1_000_000, 2_000_000)


def record(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# 1 -------------------------------------------------------------------------

ZDT_TARGETS = {"zdt1": 120.5, "zdt3": 128.2, "zdt4": 120.3, "zdt6": 117.3}


@pytest.mark.slow
@pytest.mark.parametrize("name", list(ZDT_TARGETS))
def test_c01_zdt_hypervolume(name):
    cfg = load_config(packaged_path("configs", "benchmark.cfg")).mesh
    problem = make_problem(name)
    hvs, times = [], []
    for seed in range(10):
        t0 = time.perf_counter()
        res = run(problem, replace(cfg, seed=seed))
        times.append(time.perf_counter() - t0)
        hvs.append(hypervolume_2d(res.front()[1], REF))
    mean = float(np.mean(hvs))
    ok = mean >= ZDT_TARGETS[name] and max(times) <= 30.0
    record(
        1,
        f"{name.upper()} mean hypervolume",
        ok,
        f"{mean:.4f} (threshold {ZDT_TARGETS[name]}, min {min(hvs):.4f}, max {max(hvs):.4f}, "
        f"slowest run {max(times):.1f} s)",
    )


# 2 -------------------------------------------------------------------------

PUBLISHED_AN = {"zdt1": 120.657, "zdt2": 120.324, "zdt3": 128.773, "zdt4": 120.657, "zdt6": 117.511}


def test_c02_analytical_front_hypervolume():
    diffs = {k: hypervolume_2d(analytical_front(k, 10_000), REF) - v for k, v in PUBLISHED_AN.items()}
    worst = max(abs(d) for d in diffs.values())
    detail = ", ".join(f"{k} {d:+.4f}" for k, d in diffs.items())
    record(2, "analytical-front hypervolume within 0.01", worst <= 0.01, detail)


# 3 -------------------------------------------------------------------------


def peel(F):
    remaining = list(range(len(F)))
    fronts = []
    while remaining:
        front = [
            i
            for i in remaining
            if not any(np.all(F[j] <= F[i]) and np.any(F[j] < F[i]) for j in remaining if j != i)
        ]
        fronts.append(front)
        remaining = [i for i in remaining if i not in front]
    return fronts


def test_c03_sorting_equivalence():
    rng = np.random.default_rng(2024)
    mismatches = 0
    for k in range(200):
        n = int(rng.integers(1, 51))
        # every other population on a coarse grid, to exercise ties
        F = rng.integers(0, 6, (n, 2)).astype(float) if k % 2 else rng.random((n, 2))
        if [f.tolist() for f in non_dominated_sort(F)] != peel(F):
            mismatches += 1
    record(3, "non-dominated sort vs pairwise peeling", mismatches == 0, f"{mismatches} mismatches in 200 populations")


# 4 -------------------------------------------------------------------------


def monte_carlo_hv(P, ref, n, rng, chunk=2_500_000):
    lo = np.minimum(P.min(axis=0), 0.0)
    box = np.prod(ref - lo)
    order = np.lexsort((P[:, 1], P[:, 0]))
    f1 = P[order, 0]
    stair = np.minimum.accumulate(P[order, 1])
    hits = 0
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        u = lo[0] + rng.random(m) * (ref[0] - lo[0])
        v = lo[1] + rng.random(m) * (ref[1] - lo[1])
        k = np.searchsorted(f1, u, side="right") - 1
        hits += int(np.count_nonzero((k >= 0) & (v >= stair[np.maximum(k, 0)])))
    p = hits / n
    return box * p, box * np.sqrt(p * (1 - p) / n)


@pytest.mark.slow
def test_c04_hypervolume_vs_monte_carlo():
    rng = np.random.default_rng(77)
    ref = np.array(REF)
    z = []
    for _ in range(100):
        P = rng.random((int(rng.integers(1, 30)), 2)) * 10
        exact = hypervolume_2d(P, ref)
        est, se = monte_carlo_hv(P, ref, 10_000_000, rng)
        z.append(abs(exact - est) / se if se > 0 else (0.0 if exact == est else np.inf))
    worst = max(z)
    record(4, "exact hypervolume vs 1e7-sample Monte Carlo", worst <= 3.0, f"max |z| = {worst:.2f} over 100 fronts")


# 5 -------------------------------------------------------------------------


def test_c05_ucdm_hour_zero():
    hour0 = load_hourly_data(TABLE)[0]
    targets = {"U1": 705.81, "U2": 573.59}
    got = {}
    for plant, dm in zip(literal_plants(), hour0.demand):
        try:
            got[plant.name] = ucdm_flows(plant, dm, 0.8 * plant.reservoir_bounds[1])[1]
        except InfeasibleDispatch as exc:
            got[plant.name] = f"infeasible ({exc})"
    ok = all(isinstance(v, float) and abs(v - targets[k]) <= 0.5 for k, v in got.items())
    detail = "; ".join(f"{k} {v if isinstance(v, str) else f'{v:.2f}'} (target {targets[k]})" for k, v in got.items())
    record(5, "UCDm hour-0 discharge with the published coefficients", ok, detail)


# 6, 7, 10 ------------------------------------------------------------------


@pytest.fixture(scope="module")
def daily_reports():
    cfg = load_config(packaged_path("configs", "dispatch.cfg"))
    base = SimulationConfig(
        plants=[e.params for e in cfg.plants],
        hourly_data=load_hourly_data(TABLE, cfg.simulation["tolerance"]),
        mesh=cfg.mesh,
        runs_per_hour=RUNS_PER_HOUR,
    )
    return [run_day(replace(base, base_seed=s)) for s in SEED_SETS]


@pytest.mark.slow
def test_c06_dispatch_feasibility(daily_reports):
    worst_err, lo, hi, feasible = 0.0, np.inf, -np.inf, 0
    for report in daily_reports:
        for h in report.hours:
            lo = min(lo, h.volumes_after.min())
            hi = max(hi, h.volumes_after.max())
            if h.feasible:
                feasible += 1
                worst_err = max(worst_err, max(r.error / r.demand_required for r in h.rows if r.demand_required))
    ok = worst_err <= 0.005 + 1e-12 and lo >= 4250 and hi <= 19528
    record(
        6,
        "demand band and volume bounds",
        ok,
        f"{feasible}/72 feasible hours, worst |DP-DR|/DR {worst_err:.5f}, volumes in [{lo:.1f}, {hi:.1f}] hm3",
    )


@pytest.mark.slow
def test_c07_water_savings(daily_reports):
    targets = {"U1": 73.57, "U2": 19.24}
    parts, ok = [], True
    for s, report in zip(SEED_SETS, daily_reports):
        sw = report.saved_water()
        liters = report.saved_liters()
        ok &= all(liters[k] == sw[k] * LITERS_PER_M3S_DAY_UNIT for k in sw)
        ok &= all(abs(sw[k] - t) <= 0.15 * t for k, t in targets.items())
        parts.append(f"seed set {s}: U1 {sw['U1']:.2f}, U2 {sw['U2']:.2f}")
    record(7, "daily saved water within 15% of 73.57 / 19.24 m3/s", ok, "; ".join(parts))


@pytest.mark.slow
def test_c10_unit_efficiency_bracket(daily_reports):
    eff = np.concatenate([e for r in daily_reports for h in r.hours for e in h.efficiencies])
    ok = eff.min() >= 0.90 and eff.max() <= 0.94
    record(10, "implied unit efficiency in [0.90, 0.94]", ok, f"{len(eff)} unit-hours, range [{eff.min():.4f}, {eff.max():.4f}]")


# 8 -------------------------------------------------------------------------


def test_c08_conservation_and_delay():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        qa = rng.uniform(0, 3000, (24, 2))
        out = rng.uniform(0, 3000, (24, 2))
        v0 = rng.uniform(4250, 19528, 2)
        states = [ReservoirState(v) for v in v0]
        arrivals = np.zeros(24)
        for t in range(24):
            arrivals[t] = states[1].arrivals(t)
            after = [water_balance(s.volume, qa[t, u], out[t, u], s.arrivals(t)) for u, s in enumerate(states)]
            states = route(states, t, after, out[t])
        expected = v0 + C_HM3 * np.array(
            [(qa[:, 0] - out[:, 0]).sum(), (qa[:, 1] + arrivals - out[:, 1]).sum()]
        )
        worst = max(worst, float(np.max(np.abs([s.volume for s in states] - expected))))
        # arrivals are the upstream releases shifted by exactly two hours
        assert np.array_equal(arrivals[2:], out[:22, 0]) and not arrivals[:2].any()

    delays = set()
    for t0 in range(22):
        states = [ReservoirState(10_000.0), ReservoirState(10_000.0)]
        for t in range(24):
            if states[1].arrivals(t):
                delays.add(t - t0)
            release = [100.0 if t == t0 else 0.0, 0.0]
            states = route(states, t, [s.volume for s in states], release)
    ok = worst <= 1e-9 and delays == {2}
    record(8, "mass balance over 1000 traces and routing delay", ok, f"max error {worst:.2e} hm3, observed delays {sorted(delays)}")


# 9 -------------------------------------------------------------------------


def test_c09_cli_determinism(tmp_path):
    def snapshot(d):
        return {p.name: p.read_bytes() for p in sorted(d.iterdir())}

    commands = {
        "bench": ["bench", "--problems", "zdt1,dtlz2", "--runs", "2", "--seed", "3", "--json"],
        "dispatch": ["dispatch", "--hours", "2", "--runs", "1", "--seed", "4", "--json"],
    }
    same = {}
    for name, args in commands.items():
        a, b = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
        assert main(args + ["--output", str(a)]) == 0
        assert main(args + ["--output", str(b)]) == 0
        same[name] = snapshot(a) == snapshot(b) and len(snapshot(a)) > 0
    record(9, "byte-identical reruns", all(same.values()), ", ".join(f"{k}: {'identical' if v else 'differs'}" for k, v in same.items()))
