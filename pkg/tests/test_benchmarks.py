import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mesh_hydro.benchmarks import (
    PROBLEM_NAMES,
    ZDT3_SEGMENTS,
    ZDT6_F1_MIN,
    analytical_front,
    evaluate,
    is_mutually_non_dominated,
    make_problem,
)
from mesh_hydro.pareto import hypervolume_2d, non_dominated_sort

REF = (11.0, 11.0)


def scalar_oracle(name, x):
    """Textbook definitions written with the math module, one point at a time."""
    x = [float(v) for v in x]
    n = len(x)
    f1 = x[0]
    if name.startswith("zdt"):
        if name == "zdt4":
            g = 1 + 10 * (n - 1) + sum(v * v - 10 * math.cos(4 * math.pi * v) for v in x[1:])
        elif name == "zdt6":
            f1 = 1 - math.exp(-4 * x[0]) * math.sin(6 * math.pi * x[0]) ** 6
            g = 1 + 9 * (sum(x[1:]) / (n - 1)) ** 0.25
        else:
            g = 1 + 9 * sum(x[1:]) / (n - 1)
        if name in ("zdt1", "zdt4"):
            h = 1 - math.sqrt(f1 / g)
        elif name in ("zdt2", "zdt6"):
            h = 1 - (f1 / g) ** 2
        else:
            h = 1 - math.sqrt(f1 / g) - f1 / g * math.sin(10 * math.pi * f1)
        return f1, g * h
    xm = x[1:]
    if name == "dtlz1":
        g = 100 * (len(xm) + sum((v - 0.5) ** 2 - math.cos(20 * math.pi * (v - 0.5)) for v in xm))
        return 0.5 * x[0] * (1 + g), 0.5 * (1 - x[0]) * (1 + g)
    if name in ("dtlz2", "dtlz4"):
        a = 1 if name == "dtlz2" else 100
        g = sum((v - 0.5) ** 2 for v in xm)
        t = x[0] ** a * math.pi / 2
        return (1 + g) * math.cos(t), (1 + g) * math.sin(t)
    g = 1 + 9 * sum(xm) / len(xm)
    h = 2 - f1 / (1 + g) * (1 + math.sin(3 * math.pi * f1))
    return f1, (1 + g) * h


@pytest.mark.parametrize("name", PROBLEM_NAMES)
def test_vectorized_matches_scalar_oracle(name):
    p = make_problem(name)
    rng = np.random.default_rng(11)
    X = p.lower + rng.random((200, p.n_var)) * (p.upper - p.lower)
    F = p.evaluate(X)
    expected = np.array([scalar_oracle(name, x) for x in X])
    np.testing.assert_allclose(F, expected, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("name", PROBLEM_NAMES)
def test_finite_on_the_box(name):
    p = make_problem(name)
    rng = np.random.default_rng(5)
    X = p.lower + rng.random((100_000, p.n_var)) * (p.upper - p.lower)
    X[:10] = p.lower
    X[10:20] = p.upper
    F = p.evaluate(X)
    assert F.shape == (100_000, 2)
    assert np.isfinite(F).all()


def test_dimensions_and_bounds():
    assert make_problem("zdt1").n_var == 5
    assert make_problem("dtlz2").n_var == 10
    z4 = make_problem("zdt4")
    assert z4.lower.tolist() == [0, -5, -5, -5, -5]
    assert z4.upper.tolist() == [1, 5, 5, 5, 5]
    assert make_problem("ZDT2", n_var=8).n_var == 8


def test_known_points():
    np.testing.assert_allclose(evaluate("zdt1", [0.25, 0, 0, 0, 0]), [0.25, 0.5])
    np.testing.assert_allclose(evaluate("zdt2", [0.5, 0, 0, 0, 0]), [0.5, 0.75])
    np.testing.assert_allclose(evaluate("dtlz2", [0.0] + [0.5] * 9), [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(evaluate("dtlz1", [0.5] * 10), [0.25, 0.25])


def test_errors():
    with pytest.raises(KeyError, match="unknown problem"):
        make_problem("zdt5")
    with pytest.raises(ValueError, match="outside"):
        evaluate("zdt1", [1.5, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        make_problem("zdt1", n_var=1)


@given(st.lists(st.floats(0, 1), min_size=5, max_size=5))
def test_deterministic(x):
    assert np.array_equal(evaluate("zdt3", x), evaluate("zdt3", x))


@pytest.mark.parametrize("name", PROBLEM_NAMES)
def test_analytical_front_is_single_front(name):
    F = analytical_front(name, 300)
    assert is_mutually_non_dominated(F)
    assert len(non_dominated_sort(F)) == 1


@pytest.mark.parametrize("name", ["zdt1", "zdt2", "zdt3", "dtlz2", "dtlz7"])
def test_analytical_front_lies_on_the_problem_front(name):
    # points obtained by putting the distance variables at their optimum
    p = make_problem(name)
    F = analytical_front(name, 50)
    if name == "dtlz2":
        theta = np.arctan2(F[:, 1], F[:, 0])
        x1 = theta / (np.pi / 2)
        rest = 0.5
    else:
        x1 = F[:, 0]
        rest = 0.0
    X = np.column_stack([x1] + [np.full(len(F), rest)] * (p.n_var - 1))
    np.testing.assert_allclose(p.evaluate(X), F, atol=1e-12)


def test_zdt3_segments_are_the_non_dominated_pieces():
    f1 = np.linspace(0, 1, 200_001)
    F = np.column_stack([f1, 1 - np.sqrt(f1) - f1 * np.sin(10 * np.pi * f1)])
    best = np.minimum.accumulate(F[:, 1])
    nd = np.concatenate(([True], F[1:, 1] < best[:-1]))
    inside = np.zeros_like(nd)
    for a, b in ZDT3_SEGMENTS:
        inside |= (f1 >= a - 1e-5) & (f1 <= b + 1e-5)
    assert np.all(inside[nd])


def test_zdt6_front_starts_at_global_minimum_of_f1():
    x = np.linspace(0, 1, 1_000_001)
    f1 = 1 - np.exp(-4 * x) * np.sin(6 * np.pi * x) ** 6
    assert f1.min() == pytest.approx(ZDT6_F1_MIN, abs=1e-8)


@pytest.mark.parametrize(
    "name, exact",
    [
        # 11*11 minus the area between the front and the axes, in closed form
        ("zdt1", 121 - 1 / 3),
        ("zdt2", 121 - 2 / 3),
        ("dtlz2", 121 - math.pi / 4),
        ("dtlz1", 121 - 0.125),
    ],
)
def test_sampled_front_converges_to_closed_form(name, exact):
    hv = [hypervolume_2d(analytical_front(name, n), REF) for n in (100, 1000, 10_000)]
    assert hv[0] < hv[1] < hv[2] <= exact
    assert exact - hv[2] < 1e-3


def test_invalid_sample_size():
    with pytest.raises(ValueError):
        analytical_front("zdt1", 1)
