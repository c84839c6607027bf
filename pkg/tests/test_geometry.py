import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otflow.exceptions import ResolutionError
from otflow.geometry import (
    PeriodicDensity,
    PeriodicField,
    TrigInterpolant,
    circle_distance,
    derivative,
    integrate,
    mollify,
    read_density_csv,
    rotate,
    sine_density,
    write_density_csv,
)
from otflow.convexity import counterexample
from otflow.energy import EnergySpec, evaluate


def nodes(n):
    return np.arange(n) / n


def test_derivative_of_sine_is_exact():
    x = nodes(64)
    d = derivative(np.sin(2 * np.pi * x), 1)
    assert np.max(np.abs(d - 2 * np.pi * np.cos(2 * np.pi * x))) <= 1e-12


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_derivative_of_constant_vanishes(order):
    assert np.max(np.abs(derivative(np.full(32, 3.0), order))) == 0.0


def test_second_derivative_matches_eighth_order_differences():
    n = 256
    x = nodes(n)
    u = 1 + 0.5 * np.sin(4 * np.pi * x)
    h = 1.0 / n
    c = [-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560]
    fd = sum(ck * np.roll(u, 4 - k) for k, ck in enumerate(c)) / h**2
    assert np.max(np.abs(derivative(u, 2) - fd)) <= 1e-8


def test_finite_difference_method_is_second_order():
    errs = []
    for n in (64, 128):
        x = nodes(n)
        exact = -4 * np.pi**2 * np.sin(2 * np.pi * x)
        errs.append(np.max(np.abs(derivative(np.sin(2 * np.pi * x), 2, "finite-diff") - exact)))
    assert 3.8 < errs[0] / errs[1] < 4.2


@pytest.mark.parametrize("order", [0, -1])
def test_derivative_rejects_nonpositive_order(order):
    with pytest.raises(ValueError):
        derivative(np.ones(8), order)


def test_integrate_examples():
    x = nodes(64)
    assert integrate(np.ones(64)) == 1.0
    assert abs(integrate(np.sin(2 * np.pi * x))) <= 1e-14
    assert abs(integrate(np.cos(2 * np.pi * x) ** 2) - 0.5) <= 1e-12


def test_density_rejects_negative_samples():
    with pytest.raises(ValueError):
        PeriodicDensity.from_samples(np.array([1.0, -0.1, 1.0, 1.1]))


def test_density_normalizes_mass():
    u = PeriodicDensity.from_samples(np.linspace(1, 3, 64))
    assert abs(integrate(u.values) - 1.0) <= 1e-12


def test_interpolant_reproduces_nodes_and_antiderivative():
    u = sine_density(64, 0.5, 2)
    t = TrigInterpolant(u.values)
    assert np.max(np.abs(t(u.x) - u.values)) <= 1e-13
    x = np.linspace(0, 1, 17)
    exact = x - 0.5 / (4 * np.pi) * (np.cos(4 * np.pi * x) - 1)
    assert np.max(np.abs(t.antiderivative(x) - exact)) <= 1e-13


@given(st.floats(-2.0, 2.0))
def test_rotation_is_a_shift(theta):
    x = nodes(64)
    w = np.sin(2 * np.pi * x) + 0.3 * np.cos(6 * np.pi * x)
    exact = np.sin(2 * np.pi * (x - theta)) + 0.3 * np.cos(6 * np.pi * (x - theta))
    assert np.max(np.abs(rotate(w, theta) - exact)) <= 1e-12


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_circle_distance_is_a_metric_on_short_arcs(a, b):
    d = circle_distance(a, b)
    assert 0 <= d <= 0.5
    assert d == pytest.approx(circle_distance(b, a))
    assert circle_distance(a, a + 1.0) <= 1e-12


@pytest.mark.parametrize("k", [4, 8, 16])
def test_mollify_uniform_and_mass(k):
    u = PeriodicDensity.uniform(128)
    assert np.max(np.abs(mollify(u, k).values - 1.0)) <= 1e-14
    v = mollify(sine_density(128, 0.7, 3), k)
    assert abs(integrate(v.values) - 1.0) <= 1e-12


def test_mollify_rejects_unresolved_width():
    with pytest.raises(ResolutionError):
        mollify(PeriodicDensity.uniform(64), 17)


def test_mollified_witness_energies_approach_the_limit():
    n = 4096
    u = counterexample(1.0, n).u_h
    spec = EnergySpec("dirichlet")
    energies = [evaluate(spec, mollify(u, k)) for k in (8, 16, 32)]
    assert all(np.isfinite(energies))
    assert energies[-1] > energies[0]


def test_csv_roundtrip(tmp_path):
    u = sine_density(64, 0.3, 2)
    path = tmp_path / "u.csv"
    write_density_csv(path, u, ["generated"])
    back = read_density_csv(path)
    assert np.max(np.abs(back.values - u.values)) <= 1e-15


def test_csv_rejects_negative(tmp_path):
    path = tmp_path / "bad.csv"
    rows = [f"{i / 8!r},{-0.5 if i == 3 else 1.0}" for i in range(8)]
    path.write_text("x,u\n" + "\n".join(rows) + "\n")
    with pytest.raises(ValueError, match="negative"):
        read_density_csv(path)


def test_field_is_immutable():
    f = PeriodicField(np.zeros(8))
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    assert math.isclose(f.x[1], 1 / 8)
