"""24-hour restarting dispatch of the two-plant cascade.

Every hour the dispatch problem is rebuilt from the current reservoir
states and optimized by several independently seeded MESH runs. Their fronts
are merged, the feasible non-dominated members form the combined front, and
the member closest to its normalized centroid is applied. The equal-split
baseline (UCDm) provides the reference discharge for the savings report.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .hydro import (
    ROUTING_DELAY,
    DispatchProblem,
    HourContext,
    InfeasibleDispatch,
    PlantParameters,
    ReservoirState,
    implied_efficiency,
    ucdm_flows,
)
from .mesh import MeshConfig, run
from .pareto import non_dominated_mask, unique_rows

log = logging.getLogger(__name__)

LITERS_PER_M3S_DAY_UNIT = 3.6e6  # m³/s summed over hourly rows -> litres
HOURLY_COLUMNS = ("hour", "Qa_u1", "Dm_u1", "Qa_u2", "Dm_u2")


@dataclass
class SimulationConfig:
    plants: list[PlantParameters]
    hourly_data: list[HourContext]
    mesh: MeshConfig = field(default_factory=MeshConfig)
    hours: int = 24
    runs_per_hour: int = 30
    initial_volume_fraction: float = 0.8
    base_seed: int = 0
    literal_penalty: bool = False

    def __post_init__(self):
        if self.hours < 1:
            raise ValueError("hours must be ≥ 1")
        if self.runs_per_hour < 1:
            raise ValueError("runs_per_hour must be ≥ 1")
        if not 0.0 < self.initial_volume_fraction <= 1.0:
            raise ValueError("initial_volume_fraction must be in (0, 1]")
        if len(self.hourly_data) < self.hours:
            raise ValueError(f"hourly data has {len(self.hourly_data)} rows, {self.hours} hours requested")


@dataclass(frozen=True)
class HourlyReportRow:
    hour: int
    plant: str
    demand_required: float
    demand_produced: float
    error: float
    usual_discharge: float
    optimized_discharge: float
    saved_water: float


@dataclass
class HourResult:
    hour: int
    front_X: np.ndarray
    front_F: np.ndarray
    chosen: int  # index into front_X / front_F
    decision: np.ndarray
    rows: list[HourlyReportRow]
    feasible: bool
    volumes_before: np.ndarray
    volumes_after: np.ndarray
    chosen_f2: float
    ucdm_f2: float
    efficiencies: list[np.ndarray]
    baseline_used: bool = False


@dataclass
class DailyReport:
    hours: list[HourResult]
    plant_names: list[str]

    def rows(self) -> list[HourlyReportRow]:
        return [r for h in self.hours for r in h.rows]

    def saved_water(self) -> dict[str, float]:
        return {
            name: float(sum(r.saved_water for r in self.rows() if r.plant == name))
            for name in self.plant_names
        }

    def saved_liters(self) -> dict[str, float]:
        return {k: v * LITERS_PER_M3S_DAY_UNIT for k, v in self.saved_water().items()}

    @property
    def infeasible_hours(self) -> list[int]:
        return [h.hour for h in self.hours if not h.feasible]


def central_solution(F) -> int:
    """Index of the member nearest the centroid of min-max normalized objectives."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if len(F) == 0:
        raise ValueError("central_solution needs a nonempty front")
    lo, hi = F.min(axis=0), F.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    N = (F - lo) / span
    d = np.linalg.norm(N - N.mean(axis=0), axis=1)
    return int(np.argmin(d))


def initial_states(cfg: SimulationConfig) -> list[ReservoirState]:
    return [ReservoirState(cfg.initial_volume_fraction * p.reservoir_bounds[1]) for p in cfg.plants]


def hour_seed(base: int, hour: int, run_index: int) -> int:
    return base + hour * 1000 + run_index


def combine_fronts(fronts: Sequence[tuple[np.ndarray, np.ndarray]], feasible_fn=None):
    """Merge run fronts into one non-dominated set (optionally feasible only)."""
    X = np.vstack([f[0] for f in fronts])
    F = np.vstack([f[1] for f in fronts])
    if feasible_fn is not None:
        ok = feasible_fn(X)
        X, F = X[ok], F[ok]
    if len(F) == 0:
        return X, F
    idx = unique_rows(F)
    X, F = X[idx], F[idx]
    nd = non_dominated_mask(F)
    return X[nd], F[nd]


def _baseline_discharge(plants, ctx: HourContext, volumes) -> list[float]:
    out = []
    for plant, dm, v in zip(plants, ctx.demand, volumes):
        try:
            out.append(ucdm_flows(plant, dm, v)[1])
        except InfeasibleDispatch as exc:
            log.warning("baseline unavailable: %s", exc)
            out.append(float("nan"))
    return out


def _eligible(problem: DispatchProblem, X, uwd, ucdm_f2) -> np.ndarray:
    # a member may spend more water than the baseline on some plant only if
    # it still keeps more water stored overall
    ev = problem.assess(X)
    saved = uwd[None, :] - ev.outflow
    with np.errstate(invalid="ignore"):
        return np.all(np.nan_to_num(saved, nan=0.0) >= 0, axis=1) | (ev.f2 > ucdm_f2)


def run_hour(t: int, states: list[ReservoirState], cfg: SimulationConfig) -> HourResult:
    ctx = cfg.hourly_data[t]
    volumes = np.array([s.volume for s in states])
    arrivals = np.array([s.arrivals(t) for s in states])
    problem = DispatchProblem(cfg.plants, volumes, arrivals, ctx, cfg.literal_penalty)
    U = len(cfg.plants)

    uwd = np.array(_baseline_discharge(cfg.plants, ctx, volumes))
    try:
        ucdm_x = problem.ucdm_decision()
        ucdm_f2 = float(problem.assess(ucdm_x).f2[0])
    except InfeasibleDispatch:
        ucdm_x, ucdm_f2 = None, float("nan")

    if all(d == 0 for d in ctx.demand):
        # every unit off: nothing to optimize
        x = np.zeros(problem.n_var)
        X, F = x[None, :], problem.evaluate(x)
        chosen, feasible, baseline_used = 0, True, False
    else:
        fronts = []
        for r in range(cfg.runs_per_hour):
            res = run(problem, replace(cfg.mesh, seed=hour_seed(cfg.base_seed, t, r)))
            fronts.append(res.front())
        X, F = combine_fronts(fronts, lambda Z: problem.assess(Z).feasible)
        eligible = _eligible(problem, X, uwd, ucdm_f2) if len(F) else np.zeros(0, dtype=bool)
        if eligible.any():
            idx = np.flatnonzero(eligible)
            chosen, feasible, baseline_used = int(idx[central_solution(F[idx])]), True, False
            x = X[chosen]
        else:
            if len(F):
                log.info("hour %d: every front member spends more water than the baseline", t)
            else:
                log.warning("hour %d: no feasible solution, using the baseline dispatch", t)
            feasible = len(F) > 0
            x = ucdm_x if ucdm_x is not None else np.concatenate([problem.lower[: problem.n_units], np.zeros(U)])
            X, F = x[None, :], problem.evaluate(x)
            chosen, baseline_used = 0, True

    ev = problem.assess(x)
    rows, effs = [], []
    for u, plant in enumerate(cfg.plants):
        dp = float(ev.plant_power[0, u])
        owd = float(ev.outflow[0, u])
        rows.append(
            HourlyReportRow(
                hour=t,
                plant=plant.name,
                demand_required=float(ctx.demand[u]),
                demand_produced=dp,
                error=abs(dp - ctx.demand[u]),
                usual_discharge=float(uwd[u]),
                optimized_discharge=owd,
                saved_water=float(uwd[u]) - owd,
            )
        )
        q = ev.qt[u][0]
        on = q > 0
        effs.append(implied_efficiency(ev.power[u][0][on], ev.head[0, u], q[on]))
    return HourResult(
        hour=t,
        front_X=X,
        front_F=F,
        chosen=chosen,
        decision=np.asarray(x, dtype=float),
        rows=rows,
        feasible=feasible,
        volumes_before=volumes,
        volumes_after=ev.volume[0].copy(),
        chosen_f2=float(ev.f2[0]),
        ucdm_f2=ucdm_f2,
        efficiencies=effs,
        baseline_used=baseline_used,
    )


def route(states: list[ReservoirState], hour: int, volumes_after, releases, delay: int = ROUTING_DELAY) -> list[ReservoirState]:
    """States for ``hour + 1``: new volumes, and each plant's release queued
    at the next plant downstream for ``hour + delay``."""
    new = []
    for u, s in enumerate(states):
        pending = {h: q for h, q in s.pending.items() if h > hour}
        new.append(ReservoirState(float(volumes_after[u]), pending, hour + 1))
    for u in range(len(states) - 1):
        nxt = new[u + 1].pending
        nxt[hour + delay] = nxt.get(hour + delay, 0.0) + float(releases[u])
    return new


def advance_state(states: list[ReservoirState], result: HourResult, delay: int = ROUTING_DELAY) -> list[ReservoirState]:
    """Apply the chosen dispatch of ``result`` and route the releases."""
    releases = [r.optimized_discharge for r in result.rows]
    return route(states, result.hour, result.volumes_after, releases, delay)


def run_day(cfg: SimulationConfig, progress=None) -> DailyReport:
    states = initial_states(cfg)
    results = []
    for t in range(cfg.hours):
        res = run_hour(t, states, cfg)
        states = advance_state(states, res)
        results.append(res)
        if progress is not None:
            progress(res)
    return DailyReport(results, [p.name for p in cfg.plants])


def load_hourly_data(path, tolerance: float = 0.005, hours: int | None = None) -> list[HourContext]:
    """Read the hourly inflow/demand table (header ``hour,Qa_u1,Dm_u1,Qa_u2,Dm_u2``).

    Raises:
        ValueError: naming the offending line for a malformed file, or the
            first missing row when fewer than ``hours`` rows exist.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected header {','.join(HOURLY_COLUMNS)}") from None
        if tuple(header) != HOURLY_COLUMNS:
            raise ValueError(f"{path}: line 1: header must be {','.join(HOURLY_COLUMNS)}")
        data = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(HOURLY_COLUMNS):
                raise ValueError(f"{path}: line {lineno}: expected {len(HOURLY_COLUMNS)} fields, got {len(row)}")
            try:
                hour = int(row[0])
                qa1, dm1, qa2, dm2 = (float(c) for c in row[1:])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric field") from None
            if hour != len(data):
                raise ValueError(f"{path}: line {lineno}: expected hour {len(data)}, got {hour}")
            try:
                data.append(HourContext((qa1, qa2), (dm1, dm2), tolerance))
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
    if hours is not None and len(data) < hours:
        raise ValueError(f"{path}: row {len(data) + 1} (hour {len(data)}) is missing; {hours} hours requested")
    return data
