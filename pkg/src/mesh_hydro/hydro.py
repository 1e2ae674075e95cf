"""Physics of a cascade of hydro plants and the dispatch problem built on it.

Units: volumes in hm³, flows in m³/s, levels and heads in metres, power in
MW, one-hour time steps. Every physics function broadcasts over numpy arrays.

The plant coefficients come in two presets. ``literal_plants`` uses the
published efficiency coefficients unchanged. ``calibrated_plants`` keeps the
level polynomials and the curvature terms of the efficiency hill but shifts
its peak to 0.93 at a 55 m design head, because the published constant and
linear terms give negative efficiency at every reachable operating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

G_K = 9.8e-3  # gravity times the MW conversion constant
C_HM3 = 0.0036  # hm³ per (m³/s over one hour)
EVAPORATION_HM3 = 1e-3  # hm³ per (mm over km²)
ROUTING_DELAY = 2  # hours from one plant to the next one downstream
PENALTY = 0.5
N_CONSTRAINTS = 9
CONSTRAINT_NAMES = (
    "water_balance",
    "demand",
    "volume",
    "defluent",
    "turbine_flow",
    "spill_cap",
    "forced_spill",
    "unit_power",
    "unit_status",
)

UPSTREAM_COEFFS = (5.30e02, 6.30e-03, -4.84e-07, 2.20e-11, -3.84e-16)
DOWNSTREAM_COEFFS = (5.15e02, 1.61e-03, -2.55e-07, 2.89e-11, -1.18e-15)
LITERAL_EFFICIENCY = (1.46e-01, 1.80e-02, 5.05e-03, -3.52e-05, -1.12e-03, -1.45e-05)


class InfeasibleDispatch(ValueError):
    """Raised when a demand cannot be met by the available units."""


@dataclass(frozen=True)
class PlantParameters:
    name: str
    unit_count: int
    upstream_coeffs: tuple[float, ...] = UPSTREAM_COEFFS
    downstream_coeffs: tuple[float, ...] = DOWNSTREAM_COEFFS
    efficiency_coeffs: tuple[float, ...] = LITERAL_EFFICIENCY
    turbine_flow_bounds: tuple[float, float] = (70.0, 140.0)
    unit_power_bounds: tuple[float, float] = (25.0, 66.0)
    defluent_bounds: tuple[float, float] = (400.0, 2500.0)
    spill_max: float = 2500.0
    reservoir_bounds: tuple[float, float] = (4250.0, 19528.0)
    penstock_loss: float = 0.0
    capacity: float = 528.0

    def __post_init__(self):
        if self.unit_count < 1:
            raise ValueError(f"{self.name}: unit_count must be ≥ 1")
        if len(self.upstream_coeffs) != 5 or len(self.downstream_coeffs) != 5:
            raise ValueError(f"{self.name}: level polynomials need 5 coefficients")
        if len(self.efficiency_coeffs) != 6:
            raise ValueError(f"{self.name}: efficiency_coeffs needs 6 coefficients")
        for key in ("turbine_flow_bounds", "unit_power_bounds", "defluent_bounds", "reservoir_bounds"):
            lo, hi = getattr(self, key)
            if not lo < hi:
                raise ValueError(f"{self.name}: {key} must satisfy lower < upper")
        if self.spill_max < 0:
            raise ValueError(f"{self.name}: spill_max must be ≥ 0")
        if self.capacity <= 0:
            raise ValueError(f"{self.name}: capacity must be > 0")


def _poly(coeffs, x):
    # Horner evaluation of sum(c_i * x**i)
    out = np.zeros_like(np.asarray(x, dtype=float)) + coeffs[-1]
    for c in reversed(coeffs[:-1]):
        out = out * x + c
    return out


def upstream_level(plant: PlantParameters, volume):
    return _poly(plant.upstream_coeffs, np.asarray(volume, dtype=float))


def downstream_level(plant: PlantParameters, outflow):
    return _poly(plant.downstream_coeffs, np.asarray(outflow, dtype=float))


def net_head(plant: PlantParameters, volume, outflow):
    """Gross head minus penstock loss. Nonpositive values mean no usable head."""
    return upstream_level(plant, volume) - downstream_level(plant, outflow) - plant.penstock_loss


def efficiency(plant: PlantParameters, head, qt):
    r0, r1, r2, r3, r4, r5 = plant.efficiency_coeffs
    return r0 + r1 * head + r2 * qt + r3 * head * qt + r4 * head**2 + r5 * qt**2


def unit_power(plant: PlantParameters, qt, volume, outflow):
    """Electrical power of one unit turbining ``qt`` (zero when ``qt`` is zero)."""
    qt = np.asarray(qt, dtype=float)
    head = net_head(plant, volume, outflow)
    return G_K * efficiency(plant, head, qt) * head * qt


def implied_efficiency(power, head, qt):
    """Efficiency that turns ``qt`` at ``head`` into ``power``."""
    return np.asarray(power, dtype=float) / (G_K * np.asarray(head) * np.asarray(qt))


def water_balance(volume, qa, outflow, arrivals=0.0, evaporation=0.0, area=0.0):
    """Volume at the end of one hour.

    ``outflow`` is turbined plus spilled flow and ``arrivals`` the upstream
    release reaching this reservoir during the hour.
    """
    return volume + C_HM3 * (qa + arrivals - outflow) - EVAPORATION_HM3 * evaporation * area


def calibrate_efficiency(coeffs, design_head: float = 55.0, peak: float = 0.93):
    """Efficiency coefficients whose hill peaks at ``peak`` for ``design_head``.

    The quadratic and cross terms (r2..r5) are kept. The best-efficiency flow
    at the design head follows from them, and r1 and r0 are chosen so that
    both partial derivatives vanish there with the requested peak value.
    """
    _, _, r2, r3, r4, r5 = coeffs
    q_star = -(r2 + r3 * design_head) / (2.0 * r5)
    r1 = -r3 * q_star - 2.0 * r4 * design_head
    rest = r1 * design_head + r2 * q_star + r3 * design_head * q_star + r4 * design_head**2 + r5 * q_star**2
    return (peak - rest, r1, r2, r3, r4, r5)


def literal_plants() -> list[PlantParameters]:
    """The two-plant cascade with the published coefficients."""
    return [
        PlantParameters("U1", 8, capacity=528.0),
        PlantParameters("U2", 6, capacity=396.0),
    ]


def calibrated_plants(design_head: float = 55.0, peak: float = 0.93) -> list[PlantParameters]:
    eff = calibrate_efficiency(LITERAL_EFFICIENCY, design_head, peak)
    return [replace(p, efficiency_coeffs=eff) for p in literal_plants()]


def ucdm_flows(plant: PlantParameters, demand: float, volume: float, spill: float = 0.0, tol_power=1e-6, tol_flow=1e-6):
    """Usual control dispatch: split ``demand`` equally over all units.

    The per-unit flow is found by bisection on the unit power curve. Since
    the downstream level depends on the plant's total outflow, the head and
    the flow are iterated to a fixed point.

    Returns:
        ``(per_unit_flows, total_turbined_flow)``.

    Raises:
        InfeasibleDispatch: the per-unit target lies outside the power range
            reachable within the turbine flow bounds.
    """
    J = plant.unit_count
    if demand <= 0.0:
        return np.zeros(J), 0.0
    target = demand / J
    q_lo, q_hi = plant.turbine_flow_bounds
    q = 0.5 * (q_lo + q_hi)
    for _ in range(200):
        outflow = J * q + spill
        p_lo = float(unit_power(plant, q_lo, volume, outflow))
        p_hi = float(unit_power(plant, q_hi, volume, outflow))
        if not p_lo <= target <= p_hi:
            raise InfeasibleDispatch(
                f"{plant.name}: {target:.3f} MW per unit is outside [{p_lo:.3f}, {p_hi:.3f}] MW"
            )
        a, b = q_lo, q_hi
        while True:
            mid = 0.5 * (a + b)
            err = float(unit_power(plant, mid, volume, outflow)) - target
            if abs(err) <= tol_power or b - a < 1e-13:
                break
            if err < 0:
                a = mid
            else:
                b = mid
        converged = abs(mid - q) * J <= tol_flow
        q = mid
        if converged:
            break
    else:
        raise InfeasibleDispatch(f"{plant.name}: head/flow fixed point did not converge")
    return np.full(J, q), J * q


@dataclass
class ReservoirState:
    """Volume of one reservoir plus upstream releases still in transit.

    ``pending`` maps an hour to the flow arriving during that hour.
    """

    volume: float
    pending: dict[int, float] = field(default_factory=dict)
    hour: int = 0

    def arrivals(self, hour: int) -> float:
        return self.pending.get(hour, 0.0)


@dataclass(frozen=True)
class HourContext:
    inflow: tuple[float, ...]
    demand: tuple[float, ...]
    tolerance: float = 0.005
    evaporation: tuple[float, ...] = (0.0, 0.0)
    area: tuple[float, ...] = (0.0, 0.0)

    def __post_init__(self):
        if any(v < 0 for v in self.inflow) or any(v < 0 for v in self.demand):
            raise ValueError("inflow and demand must be nonnegative")
        if self.tolerance < 0:
            raise ValueError("tolerance must be ≥ 0")


@dataclass
class DispatchEvaluation:
    """Everything the model derives from a batch of decision vectors."""

    qt: list[np.ndarray]  # per plant, (n, J_u)
    qv: np.ndarray  # (n, U)
    power: list[np.ndarray]  # per plant, (n, J_u)
    head: np.ndarray  # (n, U)
    outflow: np.ndarray  # (n, U)
    volume: np.ndarray  # end-of-hour volumes, (n, U)
    f1: np.ndarray
    f2: np.ndarray
    violations: np.ndarray  # (n, 9)

    @property
    def plant_power(self) -> np.ndarray:
        return np.column_stack([p.sum(axis=1) for p in self.power])

    @property
    def feasible(self) -> np.ndarray:
        return ~np.any(self.violations > 0, axis=1)


def objective_f1(power_per_plant: Sequence[np.ndarray], qt_per_plant: Sequence[np.ndarray]) -> np.ndarray:
    """Mean over plants of produced power per turbined flow; idle plants count 0."""
    ratios = []
    for p, q in zip(power_per_plant, qt_per_plant):
        p = np.atleast_2d(p)
        tot_q = np.atleast_2d(q).sum(axis=1)
        tot_p = p.sum(axis=1)
        ratios.append(np.divide(tot_p, tot_q, out=np.zeros_like(tot_p), where=tot_q > 0))
    return np.mean(ratios, axis=0)


def objective_f2(plants: Sequence[PlantParameters], volumes) -> np.ndarray:
    vmax = np.array([p.reservoir_bounds[1] for p in plants])
    return np.mean(np.atleast_2d(volumes) / vmax, axis=1)


def penalized_objectives(f1, f2, violations, literal: bool = False, p: float = PENALTY):
    """Minimization-sense fitness pair.

    Default: ``(-F1 + p*sum(v²), -F2 + p*sum(v²))``. With ``literal`` the
    printed fitness ``p*max(0, F)²`` is negated instead and constraint
    violations are ignored.
    """
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if literal:
        return np.stack([-p * np.maximum(0.0, f1) ** 2, -p * np.maximum(0.0, f2) ** 2], axis=-1)
    pen = p * np.sum(np.asarray(violations, dtype=float) ** 2, axis=-1)
    return np.stack([-f1 + pen, -f2 + pen], axis=-1)


class DispatchProblem:
    """One hour of cascade dispatch as a two-objective minimization problem.

    Decision vector: turbine flow of every unit, plant by plant, followed by
    one spill flow per plant. Units of a plant with zero demand are switched
    off (status 0) and their flow variables are ignored.
    """

    n_obj = 2

    def __init__(
        self,
        plants: Sequence[PlantParameters],
        volumes: Sequence[float],
        arrivals: Sequence[float],
        ctx: HourContext,
        literal_penalty: bool = False,
    ):
        self.plants = list(plants)
        self.volumes = np.asarray(volumes, dtype=float)
        self.arrivals = np.asarray(arrivals, dtype=float)
        self.ctx = ctx
        self.literal_penalty = literal_penalty
        U = len(self.plants)
        if not (len(self.volumes) == len(self.arrivals) == len(ctx.inflow) == len(ctx.demand) == U):
            raise ValueError("volumes, arrivals and hour data must have one entry per plant")
        self.status = [1.0 if d > 0 else 0.0 for d in ctx.demand]
        self.slices = []
        start = 0
        for p in self.plants:
            self.slices.append(slice(start, start + p.unit_count))
            start += p.unit_count
        self.n_units = start
        self.n_var = start + U
        lo, hi = [], []
        for p in self.plants:
            lo += [p.turbine_flow_bounds[0]] * p.unit_count
            hi += [p.turbine_flow_bounds[1]] * p.unit_count
        lo += [0.0] * U
        hi += [p.spill_max for p in self.plants]
        self.lower = np.array(lo)
        self.upper = np.array(hi)

    def split(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        qt = [X[:, s] * z for s, z in zip(self.slices, self.status)]
        qv = X[:, self.n_units :]
        return qt, qv

    def assess(self, X) -> DispatchEvaluation:
        qt, qv = self.split(X)
        n = len(qv)
        U = len(self.plants)
        ctx = self.ctx
        power, heads, outflows, volumes = [], [], [], []
        viol = np.zeros((n, N_CONSTRAINTS))
        for u, plant in enumerate(self.plants):
            q = qt[u]
            z = self.status[u]
            out = q.sum(axis=1) + qv[:, u]
            head = net_head(plant, self.volumes[u], out)
            ph = G_K * efficiency(plant, head[:, None], q) * head[:, None] * q
            vol = water_balance(
                self.volumes[u], ctx.inflow[u], out, self.arrivals[u],
                ctx.evaporation[u] if u < len(ctx.evaporation) else 0.0,
                ctx.area[u] if u < len(ctx.area) else 0.0,
            )
            dm = ctx.demand[u]
            total = ph.sum(axis=1)
            if dm > 0:
                # scaled by the band half-width so that leaving the band costs
                # more than the efficiency it can buy
                band = ctx.tolerance * dm if ctx.tolerance > 0 else dm
                viol[:, 1] += np.maximum(0.0, np.abs(total - dm) - ctx.tolerance * dm) / band
            else:
                viol[:, 1] += np.abs(total) / plant.capacity
            vlo, vhi = plant.reservoir_bounds
            viol[:, 2] += np.maximum(0.0, np.maximum(vlo - vol, vol - vhi)) / (vhi - vlo)
            dlo, dhi = plant.defluent_bounds
            viol[:, 3] += np.maximum(0.0, np.maximum(dlo - out, out - dhi)) / (dhi - dlo)
            qlo, qhi = plant.turbine_flow_bounds
            if z:
                viol[:, 4] += np.sum(np.maximum(0.0, np.maximum(qlo - q, q - qhi)), axis=1) / (qhi - qlo)
            scale = plant.spill_max if plant.spill_max > 0 else 1.0
            viol[:, 5] += np.maximum(0.0, qv[:, u] - plant.spill_max) / scale
            required = np.where(vol > vhi, (vol - vhi) / C_HM3, 0.0)
            viol[:, 6] += np.maximum(0.0, required - qv[:, u]) / scale
            plo, phi = plant.unit_power_bounds
            viol[:, 7] += np.sum(np.maximum(0.0, np.maximum(plo * z - ph, ph - phi * z)), axis=1) / (phi - plo)
            # status is fixed to {0, 1} and the balance is exact by construction:
            # entries 0 and 8 stay zero
            power.append(ph)
            heads.append(head)
            outflows.append(out)
            volumes.append(vol)
        volume = np.column_stack(volumes)
        f1 = objective_f1(power, qt)
        f2 = objective_f2(self.plants, volume)
        return DispatchEvaluation(
            qt, qv, power, np.column_stack(heads), np.column_stack(outflows), volume, f1, f2, viol
        )

    def evaluate(self, X) -> np.ndarray:
        ev = self.assess(X)
        return penalized_objectives(ev.f1, ev.f2, ev.violations, self.literal_penalty)

    def ucdm_decision(self) -> np.ndarray:
        """Decision vector of the equal-split baseline (no spill)."""
        x = np.zeros(self.n_var)
        for u, plant in enumerate(self.plants):
            flows, _ = ucdm_flows(plant, self.ctx.demand[u], self.volumes[u])
            x[self.slices[u]] = flows
        return x


def constraint_violations(problem: DispatchProblem, x) -> np.ndarray:
    """Normalized violation per constraint family for one decision vector."""
    return problem.assess(np.atleast_2d(x)).violations[0]
