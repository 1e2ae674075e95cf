"""MESH: multi-objective evolutionary swarm hybridization.

A swarm moves by the C-DEEPSO movement rule, where the attractor of every
particle is a differential-evolution trial vector and the social term pulls
towards a mutated swarm guide picked with the sigma method. A bounded archive
of non-dominated solutions (the memory) feeds guides and DE vectors.

Each generation costs ``3 * population_size`` evaluations: one batch of DE
trials, then the swarm and its copy after the movement rule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .pareto import (
    crowding_distance,
    non_dominated_mask,
    non_dominated_sort,
    ranks_from_fronts,
    select_best,
    truncate_by_crowding,
    unique_rows,
)

log = logging.getLogger(__name__)

GUIDE_TYPES = ("e1", "e2")
SAMPLING_SOURCES = ("v1", "v2", "v3")
DE_STRATEGIES = ("d1", "d2", "d3", "d4", "d5")
# difference vectors drawn from the sampling pool by each strategy
VECTORS_NEEDED = {"d1": 3, "d2": 5, "d3": 2, "d4": 2, "d5": 3}


class Problem(Protocol):
    n_var: int
    n_obj: int
    lower: np.ndarray
    upper: np.ndarray

    def evaluate(self, X: np.ndarray) -> np.ndarray: ...


@dataclass
class MeshConfig:
    """Run parameters. Defaults follow the benchmark setup (E1/V1/D1)."""

    population_size: int = 50
    mutation_rate: float = 0.9
    communication_rate: float = 0.5
    memory_size: int = 5
    guide_size: int = 3
    guide_type: str = "e1"
    sampling_source: str = "v1"
    de_strategy: str = "d1"
    crossover_rate: float = 0.7
    de_scale: float = 0.5
    eval_budget: int = 15000
    seed: int = 0
    e1_random: bool = False
    gb_per_dimension: bool = False

    def __post_init__(self):
        self.guide_type = str(self.guide_type).lower()
        self.sampling_source = str(self.sampling_source).lower()
        self.de_strategy = str(self.de_strategy).lower()
        checks = [
            (self.population_size >= 5, "population_size must be ≥ 5"),
            (0.0 < self.mutation_rate <= 1.0, "mutation_rate must be in (0, 1]"),
            (0.0 <= self.communication_rate <= 1.0, "communication_rate must be in [0, 1]"),
            (self.memory_size >= 1, "memory_size must be ≥ 1"),
            (self.guide_size >= 1, "guide_size must be ≥ 1"),
            (self.guide_type in GUIDE_TYPES, f"guide_type must be one of {GUIDE_TYPES}"),
            (self.sampling_source in SAMPLING_SOURCES, f"sampling_source must be one of {SAMPLING_SOURCES}"),
            (self.de_strategy in DE_STRATEGIES, f"de_strategy must be one of {DE_STRATEGIES}"),
            (0.0 <= self.crossover_rate <= 1.0, "crossover_rate must be in [0, 1]"),
            (self.de_scale >= 0.0, "de_scale must be ≥ 0"),
            (self.eval_budget >= self.population_size, "eval_budget must be ≥ population_size"),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(message)

    @property
    def variant(self) -> str:
        return f"{self.guide_type}{self.sampling_source}{self.de_strategy}".upper()


@dataclass
class Archive:
    """Bounded set of mutually non-dominated solutions."""

    X: np.ndarray
    F: np.ndarray
    capacity: int

    @classmethod
    def empty(cls, n_var: int, n_obj: int, capacity: int) -> "Archive":
        return cls(np.empty((0, n_var)), np.empty((0, n_obj)), capacity)

    def __len__(self) -> int:
        return len(self.F)


@dataclass
class MeshResult:
    memory: Archive
    X: np.ndarray
    F: np.ndarray
    evaluations: int
    log: list[dict] = field(default_factory=list)

    def front(self) -> tuple[np.ndarray, np.ndarray]:
        """Non-dominated union of the memory and the final swarm."""
        X = np.vstack([self.memory.X, self.X])
        F = np.vstack([self.memory.F, self.F])
        idx = unique_rows(F)
        X, F = X[idx], F[idx]
        nd = non_dominated_mask(F)
        return X[nd], F[nd]


# ---------------------------------------------------------------------------
# operators


def mutate_weight(w, tau: float, rng: np.random.Generator):
    """Additive Gaussian mutation of strategy weights, clamped to [0, 1]."""
    w = np.asarray(w, dtype=float)
    return np.clip(w + tau * rng.standard_normal(w.shape), 0.0, 1.0)


def mutate_global_best(x_gb, tau: float, rng, lower=None, upper=None, per_dimension: bool = False):
    """Multiplicative mutation ``x_gb * (1 + tau * N(0, 1))``.

    One draw is shared by all dimensions of a row unless ``per_dimension``.
    Rows of a 2-D input are mutated independently. The result is clipped to
    ``[lower, upper]`` when bounds are given.
    """
    x_gb = np.asarray(x_gb, dtype=float)
    if per_dimension:
        shape = x_gb.shape
    elif x_gb.ndim == 2:
        shape = (x_gb.shape[0], 1)
    else:
        shape = (1,)
    out = x_gb * (1.0 + tau * rng.standard_normal(shape))
    if lower is not None:
        out = np.clip(out, lower, upper)
    return out


def communication_matrix(D: int, P: float, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Diagonal of the stochastic-star matrix C: each entry is 1 with probability P."""
    shape = D if n is None else (n, D)
    return (rng.random(shape) <= P).astype(float)


def sigma_value(f) -> float:
    """Two-objective sigma coordinate ``(f1² - f2²) / (f1² + f2²)``."""
    f1, f2 = (float(v) for v in f)
    den = f1 * f1 + f2 * f2
    if den == 0.0:
        raise ValueError("sigma is undefined for the zero objective vector")
    return (f1 * f1 - f2 * f2) / den


def _sigmas(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F, dtype=float).reshape(-1, 2)
    sq = F**2
    den = sq.sum(axis=1)
    out = np.zeros(len(F))
    ok = den > 0
    out[ok] = (sq[ok, 0] - sq[ok, 1]) / den[ok]
    return out


def _nearest(query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    # argmin returns the first minimum, i.e. ties go to the smallest index
    return np.argmin(np.abs(query[:, None] - candidates[None, :]), axis=1)


def select_swarm_guides(ref_F, ranks, swarm_F, memory_F, guide_type="e1", rng=None, e1_random=False):
    """Vectorized guide selection for a whole swarm.

    Args:
        ref_F: ``(n, 2)`` objective vectors the particles are matched from.
        ranks: front index of every particle.
        swarm_F: ``(n, 2)`` objectives of the swarm (E2 candidates).
        memory_F: ``(k, 2)`` objectives of the memory, k >= 1.

    Returns:
        ``(from_memory, index)``: a boolean array telling whether each guide
        comes from the memory, and the index within memory or swarm.
    """
    ranks = np.asarray(ranks)
    n = len(ranks)
    k = len(memory_F)
    if k == 0:
        raise ValueError("guide selection needs a non-empty memory")
    s_ref = _sigmas(ref_F)
    s_mem = _sigmas(memory_F)
    from_memory = np.ones(n, dtype=bool)
    if guide_type == "e1" and e1_random:
        index = rng.integers(0, k, size=n)
    else:
        index = _nearest(s_ref, s_mem)
    if guide_type == "e2":
        s_swarm = _sigmas(swarm_F)
        for r in np.unique(ranks):
            if r == 0:
                continue
            members = np.flatnonzero(ranks == r)
            better = np.flatnonzero(ranks == r - 1)
            if len(better) == 0:
                continue
            index[members] = better[_nearest(s_ref[members], s_swarm[better])]
            from_memory[members] = False
    return from_memory, index


def select_swarm_guide(particle_f, particle_rank, swarm_F, swarm_ranks, memory_F, guide_type="e1", rng=None, e1_random=False):
    """Guide of one particle; returns ``("memory" | "swarm", index)``."""
    from_memory, index = select_swarm_guides(
        np.atleast_2d(particle_f), [particle_rank], swarm_F if len(swarm_F) else np.empty((0, 2)), memory_F,
        guide_type, rng, e1_random,
    )
    if guide_type == "e2" and particle_rank > 0:
        # single-particle call: match against the supplied swarm ranks
        better = np.flatnonzero(np.asarray(swarm_ranks) == particle_rank - 1)
        if len(better):
            j = better[_nearest(_sigmas(np.atleast_2d(particle_f)), _sigmas(np.asarray(swarm_F)[better]))[0]]
            return "swarm", int(j)
    return ("memory" if from_memory[0] else "swarm"), int(index[0])


def de_mutant(strategy: str, x, vectors, best=None, scale: float = 0.5, k: float = 0.0) -> np.ndarray:
    """Pre-crossover DE mutant.

    ``vectors`` holds the sampled vectors r1, r2, ... in order; ``best`` is
    required by d3/d4 and ``k`` is the current-to-rand coefficient of d5.
    """
    v = np.asarray(vectors, dtype=float)
    x = np.asarray(x, dtype=float)
    if strategy == "d1":
        return v[0] + scale * (v[1] - v[2])
    if strategy == "d2":
        return v[0] + scale * (v[1] - v[2]) + scale * (v[3] - v[4])
    if strategy == "d3":
        return best + scale * (v[0] - v[1])
    if strategy == "d4":
        return x + scale * (best - x) + scale * (v[0] - v[1])
    if strategy == "d5":
        return x + k * (v[0] - x) + scale * (v[1] - v[2])
    raise ValueError(f"unknown DE strategy {strategy!r}")


def binomial_crossover(x, mutant, cr: float, rng: np.random.Generator) -> np.ndarray:
    """Binomial crossover with one guaranteed dimension taken from the mutant."""
    x = np.asarray(x, dtype=float)
    mask = rng.random(x.shape[0]) < cr
    mask[rng.integers(x.shape[0])] = True
    return np.where(mask, mutant, x)


def sampling_pool(i: int, ranks, swarm_X, memory: Archive, source: str) -> tuple[np.ndarray, np.ndarray]:
    """Vectors the DE operator of particle ``i`` may sample.

    Returns the pool and, for each pool row, its swarm index (-1 for memory rows).
    """
    ranks = np.asarray(ranks)
    parts_X, parts_idx = [], []
    if source in ("v1", "v3"):
        members = np.flatnonzero(ranks <= ranks[i])
        members = members[members != i]
        parts_X.append(swarm_X[members])
        parts_idx.append(members)
    if source in ("v2", "v3"):
        parts_X.append(memory.X)
        parts_idx.append(np.full(len(memory), -1))
    return np.vstack(parts_X), np.concatenate(parts_idx)


def differential_mutation(i, swarm_X, ranks, memory: Archive, cfg: MeshConfig, rng, lower, upper, best=None):
    """DE trial vector (the attractor) for particle ``i``.

    Vectors come from the pool selected by ``cfg.sampling_source``; if it is
    too small the remainder is drawn from the whole swarm.
    """
    need = VECTORS_NEEDED[cfg.de_strategy]
    pool, pool_idx = sampling_pool(i, ranks, swarm_X, memory, cfg.sampling_source)
    take = min(need, len(pool))
    picked = rng.choice(len(pool), size=take, replace=False) if take else np.zeros(0, dtype=int)
    vectors = [pool[j] for j in picked]
    if take < need:
        used = set(pool_idx[picked][pool_idx[picked] >= 0].tolist()) | {i}
        others = np.array([j for j in range(len(swarm_X)) if j not in used])
        if len(others) < need - take:
            others = np.array([j for j in range(len(swarm_X)) if j != i])
        extra = rng.choice(others, size=need - take, replace=False)
        vectors.extend(swarm_X[j] for j in extra)
    x = swarm_X[i]
    k = rng.random() if cfg.de_strategy == "d5" else 0.0
    mutant = de_mutant(cfg.de_strategy, x, vectors, best, cfg.de_scale, k)
    trial = binomial_crossover(x, mutant, cfg.crossover_rate, rng)
    return np.clip(trial, lower, upper)


def movement_rule(x, v, w, x_sn, x_gb, c, lower, upper):
    """C-DEEPSO velocity and position update.

    ``w`` holds the (inertia, attractor, cooperation) weights, per particle
    when 2-D. Velocities are clamped to the box width; a position component
    clipped at a bound has its velocity zeroed.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    wi, wa, wc = (w[..., j : j + 1] for j in range(3)) if w.ndim == 2 else (w[0], w[1], w[2])
    width = np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float)
    v_new = wi * v + wa * (x_sn - x) + wc * c * (x_gb - x)
    v_new = np.clip(v_new, -width, width)
    x_new = x + v_new
    clipped = (x_new < lower) | (x_new > upper)
    x_new = np.clip(x_new, lower, upper)
    v_new = np.where(clipped, 0.0, v_new)
    return v_new, x_new


def _dominates_rows(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.all(A <= B, axis=-1) & np.any(A < B, axis=-1)


def update_individual_guide(guides: Archive, x, f) -> Archive:
    """Insert a candidate into a particle's individual-guide array.

    A candidate dominating every guide replaces the array; one that is
    mutually non-dominated with all guides is appended (lowest crowding
    evicted when over capacity). Anything else, including a duplicate
    objective vector, leaves the array unchanged.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if len(guides) == 0:
        return Archive(x[None, :].copy(), f[None, :].copy(), guides.capacity)
    le = guides.F <= f
    lt = guides.F < f
    le_all = le.all(axis=1)
    ge_all = ~lt.any(axis=1)
    beats = ge_all & ~le_all  # candidate dominates guide
    if beats.all():
        return Archive(x[None, :].copy(), f[None, :].copy(), guides.capacity)
    # any guide dominating or equal to the candidate, or partial domination
    if beats.any() or le_all.any():
        return guides
    X = np.vstack([guides.X, x])
    F = np.vstack([guides.F, f])
    if len(F) > guides.capacity:
        keep = truncate_by_crowding(F, guides.capacity)
        X, F = X[keep], F[keep]
    return Archive(X, F, guides.capacity)


def update_memory(memory: Archive, X, F) -> Archive:
    """Merge new non-dominated solutions into the memory archive.

    Duplicated objective vectors keep their first (older) copy. The merged
    non-dominated set is truncated to capacity by crowding distance.
    """
    allX = np.vstack([memory.X, np.asarray(X, dtype=float)])
    allF = np.vstack([memory.F, np.asarray(F, dtype=float)])
    idx = unique_rows(allF)
    allX, allF = allX[idx], allF[idx]
    nd = non_dominated_mask(allF)
    allX, allF = allX[nd], allF[nd]
    if len(allF) > memory.capacity:
        keep = truncate_by_crowding(allF, memory.capacity)
        allX, allF = allX[keep], allF[keep]
    return Archive(allX, allF, memory.capacity)


# ---------------------------------------------------------------------------
# main loop


class _Swarm:
    __slots__ = ("X", "V", "W", "F", "guides", "ranks")

    def __init__(self, X, V, W, F, guides):
        self.X, self.V, self.W, self.F, self.guides = X, V, W, F, guides
        self.ranks = ranks_from_fronts(non_dominated_sort(F), len(F))

    def front0(self):
        mask = self.ranks == 0
        return self.X[mask], self.F[mask]


def _reference_objectives(swarm: _Swarm, rng) -> np.ndarray:
    # each particle is matched through one randomly chosen individual guide
    ref = np.empty_like(swarm.F)
    for i, g in enumerate(swarm.guides):
        ref[i] = g.F[rng.integers(len(g))] if len(g) else swarm.F[i]
    return ref


def _guide_positions(swarm: _Swarm, memory: Archive, cfg: MeshConfig, rng) -> np.ndarray:
    ref = _reference_objectives(swarm, rng)
    from_memory, index = select_swarm_guides(
        ref, swarm.ranks, swarm.F, memory.F, cfg.guide_type, rng, cfg.e1_random
    )
    return np.where(from_memory[:, None], memory.X[np.minimum(index, len(memory) - 1)], swarm.X[index])


def run(problem: Problem, cfg: MeshConfig) -> MeshResult:
    """Optimize ``problem`` and return the final memory, swarm and evaluation log."""
    rng = np.random.default_rng(cfg.seed)
    NP, D = cfg.population_size, problem.n_var
    lower = np.asarray(problem.lower, dtype=float)
    upper = np.asarray(problem.upper, dtype=float)
    tau = cfg.mutation_rate

    X = lower + rng.random((NP, D)) * (upper - lower)
    F = np.asarray(problem.evaluate(X), dtype=float)
    evaluations = NP
    guides = [Archive(X[i : i + 1].copy(), F[i : i + 1].copy(), cfg.guide_size) for i in range(NP)]
    swarm = _Swarm(X, np.zeros((NP, D)), rng.random((NP, 3)), F, guides)
    memory = update_memory(Archive.empty(D, F.shape[1], cfg.memory_size), *swarm.front0())
    history = [{"generation": 0, "evaluations": evaluations, "memory_size": len(memory)}]

    generation = 0
    while evaluations + NP <= cfg.eval_budget:
        generation += 1
        best = _guide_positions(swarm, memory, cfg, rng) if cfg.de_strategy in ("d3", "d4") else None
        trials = np.empty((NP, D))
        for i in range(NP):
            trials[i] = differential_mutation(
                i, swarm.X, swarm.ranks, memory, cfg, rng, lower, upper,
                None if best is None else best[i],
            )
        FT = np.asarray(problem.evaluate(trials), dtype=float)
        evaluations += NP

        replaced = _dominates_rows(FT, swarm.F)
        if replaced.any():
            X = swarm.X.copy()
            F = swarm.F.copy()
            X[replaced] = trials[replaced]
            F[replaced] = FT[replaced]
            guides = list(swarm.guides)
            for i in np.flatnonzero(replaced):
                guides[i] = update_individual_guide(guides[i], X[i], F[i])
            swarm = _Swarm(X, swarm.V, swarm.W, F, guides)
            memory = update_memory(memory, *swarm.front0())

        gb = _guide_positions(swarm, memory, cfg, rng)
        moved = []
        for _ in range(2):  # the swarm and its copy
            W = mutate_weight(swarm.W, tau, rng)
            gb_star = mutate_global_best(gb, tau, rng, lower, upper, cfg.gb_per_dimension)
            C = communication_matrix(D, cfg.communication_rate, rng, n=NP)
            V, Xn = movement_rule(swarm.X, swarm.V, W, trials, gb_star, C, lower, upper)
            moved.append((Xn, V, W))
        Xall = np.vstack([m[0] for m in moved])
        Fall = np.asarray(problem.evaluate(Xall), dtype=float)
        evaluations += 2 * NP
        Vall = np.vstack([m[1] for m in moved])
        Wall = np.vstack([m[2] for m in moved])
        gall = [
            update_individual_guide(swarm.guides[i % NP], Xall[i], Fall[i]) for i in range(2 * NP)
        ]

        keep = select_best(Fall, NP)
        swarm = _Swarm(Xall[keep], Vall[keep], Wall[keep], Fall[keep], [gall[j] for j in keep])
        memory = update_memory(memory, *swarm.front0())
        history.append({"generation": generation, "evaluations": evaluations, "memory_size": len(memory)})

    log.debug("mesh %s finished: %d generations, %d evaluations", cfg.variant, generation, evaluations)
    return MeshResult(memory, swarm.X, swarm.F, evaluations, history)


def check_budget(cfg: MeshConfig) -> None:
    if cfg.eval_budget < cfg.population_size:
        raise ValueError("eval_budget is smaller than one evaluation of the population")


__all__ = [
    "Archive",
    "MeshConfig",
    "MeshResult",
    "binomial_crossover",
    "communication_matrix",
    "crowding_distance",
    "de_mutant",
    "differential_mutation",
    "movement_rule",
    "mutate_global_best",
    "mutate_weight",
    "run",
    "sampling_pool",
    "select_swarm_guide",
    "select_swarm_guides",
    "sigma_value",
    "update_individual_guide",
    "update_memory",
]
