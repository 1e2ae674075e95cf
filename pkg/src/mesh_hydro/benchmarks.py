"""ZDT and two-objective DTLZ test problems with analytical Pareto fronts.

Problems are vectorized: ``problem.evaluate(X)`` takes an ``(n, n_var)``
array and returns ``(n, 2)`` objectives. ZDT problems default to 5 decision
variables and DTLZ problems to 10.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .pareto import non_dominated_mask

# f1 intervals of the five disconnected ZDT3 front pieces
ZDT3_SEGMENTS = (
    (0.0, 0.0830015349),
    (0.1822287280, 0.2577623634),
    (0.4093136748, 0.4538821041),
    (0.6183967944, 0.6525117038),
    (0.8233317983, 0.8518328654),
)
ZDT6_F1_MIN = 0.2807753191


@dataclass(frozen=True)
class BenchmarkProblem:
    name: str
    n_var: int
    lower: np.ndarray
    upper: np.ndarray
    func: Callable[[np.ndarray], np.ndarray]
    n_obj: int = 2

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Evaluate a batch of positions without bound checks."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.func(X)

    def check(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_var,):
            raise ValueError(f"{self.name} expects {self.n_var} variables, got shape {x.shape}")
        if np.any(x < self.lower) or np.any(x > self.upper):
            raise ValueError(f"{self.name}: position outside the box domain")


def _zdt_g(X):
    return 1.0 + 9.0 * X[:, 1:].sum(axis=1) / (X.shape[1] - 1)


def _zdt1(X):
    f1 = X[:, 0]
    g = _zdt_g(X)
    return np.column_stack([f1, g * (1.0 - np.sqrt(f1 / g))])


def _zdt2(X):
    f1 = X[:, 0]
    g = _zdt_g(X)
    return np.column_stack([f1, g * (1.0 - (f1 / g) ** 2)])


def _zdt3(X):
    f1 = X[:, 0]
    g = _zdt_g(X)
    r = f1 / g
    return np.column_stack([f1, g * (1.0 - np.sqrt(r) - r * np.sin(10.0 * np.pi * f1))])


def _zdt4(X):
    f1 = X[:, 0]
    tail = X[:, 1:]
    g = 1.0 + 10.0 * tail.shape[1] + np.sum(tail**2 - 10.0 * np.cos(4.0 * np.pi * tail), axis=1)
    return np.column_stack([f1, g * (1.0 - np.sqrt(f1 / g))])


def _zdt6(X):
    x1 = X[:, 0]
    f1 = 1.0 - np.exp(-4.0 * x1) * np.sin(6.0 * np.pi * x1) ** 6
    g = 1.0 + 9.0 * (X[:, 1:].sum(axis=1) / (X.shape[1] - 1)) ** 0.25
    return np.column_stack([f1, g * (1.0 - (f1 / g) ** 2)])


def _dtlz1(X):
    tail = X[:, 1:] - 0.5
    g = 100.0 * (tail.shape[1] + np.sum(tail**2 - np.cos(20.0 * np.pi * tail), axis=1))
    x1 = X[:, 0]
    return np.column_stack([0.5 * x1 * (1.0 + g), 0.5 * (1.0 - x1) * (1.0 + g)])


def _dtlz2_like(alpha):
    def func(X):
        g = np.sum((X[:, 1:] - 0.5) ** 2, axis=1)
        theta = X[:, 0] ** alpha * np.pi / 2.0
        return np.column_stack([(1.0 + g) * np.cos(theta), (1.0 + g) * np.sin(theta)])

    return func


def _dtlz7(X):
    f1 = X[:, 0]
    g = 1.0 + 9.0 * X[:, 1:].sum(axis=1) / (X.shape[1] - 1)
    h = 2.0 - f1 / (1.0 + g) * (1.0 + np.sin(3.0 * np.pi * f1))
    return np.column_stack([f1, (1.0 + g) * h])


def _box(n_var, lo=0.0, hi=1.0):
    return np.full(n_var, lo, dtype=float), np.full(n_var, hi, dtype=float)


def make_problem(name: str, n_var: int | None = None) -> BenchmarkProblem:
    """Build a registered problem by name (``zdt1`` ... ``dtlz7``)."""
    key = name.lower()
    if key not in _FUNCS:
        raise KeyError(f"unknown problem: {name!r}")
    func = _FUNCS[key]
    if n_var is None:
        n_var = 5 if key.startswith("zdt") else 10
    if n_var < 2:
        raise ValueError("benchmark problems need at least 2 variables")
    lower, upper = _box(n_var)
    if key == "zdt4":
        lower[1:] = -5.0
        upper[1:] = 5.0
    return BenchmarkProblem(key, n_var, lower, upper, func)


_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "zdt1": _zdt1,
    "zdt2": _zdt2,
    "zdt3": _zdt3,
    "zdt4": _zdt4,
    "zdt6": _zdt6,
    "dtlz1": _dtlz1,
    "dtlz2": _dtlz2_like(1.0),
    "dtlz4": _dtlz2_like(100.0),
    "dtlz7": _dtlz7,
}
PROBLEM_NAMES = tuple(_FUNCS)


def evaluate(name: str, x) -> np.ndarray:
    """Evaluate one position of a named problem, checking dimension and bounds."""
    x = np.asarray(x, dtype=float)
    problem = make_problem(name, n_var=x.shape[0] if x.ndim == 1 else None)
    problem.check(x)
    return problem.evaluate(x[None, :])[0]


def _nd_filter(F: np.ndarray) -> np.ndarray:
    # sweep-based filter: the fronts here are large, avoid the O(n^2) matrix
    order = np.lexsort((F[:, 1], F[:, 0]))
    F = F[order]
    best = np.minimum.accumulate(F[:, 1])
    keep = np.concatenate(([True], F[1:, 1] < best[:-1]))
    return F[keep]


def _spread(F: np.ndarray, n: int) -> np.ndarray:
    if len(F) <= n:
        return F
    return F[np.round(np.linspace(0, len(F) - 1, n)).astype(int)]


def analytical_front(name: str, n: int) -> np.ndarray:
    """Sample ``n`` points of the true Pareto front of a named problem.

    Disconnected fronts (ZDT3, DTLZ7) are filtered for dominance, so a few
    fewer than ``n`` points can come back for very small ``n``.
    """
    if n < 2:
        raise ValueError("analytical_front needs n >= 2")
    key = name.lower()
    if key in ("zdt1", "zdt4"):
        f1 = np.linspace(0.0, 1.0, n)
        return np.column_stack([f1, 1.0 - np.sqrt(f1)])
    if key == "zdt2":
        f1 = np.linspace(0.0, 1.0, n)
        return np.column_stack([f1, 1.0 - f1**2])
    if key == "zdt3":
        lengths = np.array([b - a for a, b in ZDT3_SEGMENTS])
        cum = np.concatenate(([0.0], np.cumsum(lengths)))
        t = np.linspace(0.0, cum[-1], n)
        seg = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(lengths) - 1)
        starts = np.array([a for a, _ in ZDT3_SEGMENTS])
        f1 = starts[seg] + (t - cum[seg])
        f2 = 1.0 - np.sqrt(f1) - f1 * np.sin(10.0 * np.pi * f1)
        return _nd_filter(np.column_stack([f1, f2]))
    if key == "zdt6":
        f1 = np.linspace(ZDT6_F1_MIN, 1.0, n)
        return np.column_stack([f1, 1.0 - f1**2])
    if key == "dtlz1":
        f1 = np.linspace(0.0, 0.5, n)
        return np.column_stack([f1, 0.5 - f1])
    if key in ("dtlz2", "dtlz4"):
        theta = np.linspace(0.0, np.pi / 2.0, n)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if key == "dtlz7":
        x1 = np.linspace(0.0, 1.0, max(20 * n, 2000))
        F = np.column_stack([x1, 4.0 - x1 * (1.0 + np.sin(3.0 * np.pi * x1))])
        return _spread(_nd_filter(F), n)
    raise KeyError(f"unknown problem: {name!r}")


def is_mutually_non_dominated(F: np.ndarray) -> bool:
    return bool(non_dominated_mask(F).all())
