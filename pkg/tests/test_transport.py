import numpy as np
import pytest
from hypothesis import given, strategies as st

from otflow.exceptions import DegenerateDensityError, FoldError, MarginalError, ResolutionError
from otflow.geometry import PeriodicDensity, derivative, rotate, sine_density
from otflow.sampling import child_rng, random_density
from otflow.transport import (
    TrigInterpolant,
    atomize,
    brute_force_plan,
    geodesic,
    optimal_map,
    oracle_cost,
    pushforward,
    reference_quantile,
    read_map_csv,
    w2_distance,
    write_map_csv,
)


def test_identity_map_for_equal_measures(sine):
    tm = optimal_map(sine, sine)
    assert tm.cost <= 1e-20
    assert np.max(np.abs(tm.values - tm.x)) <= 1e-12


def test_from_uniform_map_is_shifted_quantile(uniform):
    nu = sine_density(256, 0.5, 1)
    tm = optimal_map(uniform, nu)
    # pushforward condition: G(T(x)) - G(T(0)) = x
    G = TrigInterpolant(nu.values).antiderivative
    assert np.max(np.abs(G(tm.values) - G(tm.values[0]) - tm.x)) <= 1e-10


def test_rotation_cost_matches_oracle(sine):
    nu = rotate(sine, 0.25)
    assert w2_distance(sine, nu) ** 2 == pytest.approx(oracle_cost(sine, nu), rel=1e-3)


def test_uniform_to_sine_matches_oracle(uniform, sine):
    assert w2_distance(uniform, sine) ** 2 == pytest.approx(oracle_cost(uniform, sine), rel=1e-3)


def _bump(n, width, floor):
    x = np.arange(n) / n
    r = np.minimum(x, 1 - x) / width
    inside = r < 1
    b = np.zeros(n)
    b[inside] = np.exp(-1 / (1 - r[inside] ** 2))
    return PeriodicDensity.from_samples(b + floor)


def test_concentrated_bumps_are_half_apart():
    a = _bump(8192, 0.01, 1e-6)
    assert 0.45 <= w2_distance(a, rotate(a, 0.5)) <= 0.5


def test_unresolved_bump_is_a_resolution_error():
    a = _bump(1024, 0.01, 1e-6)
    with pytest.raises(ResolutionError):
        w2_distance(a, rotate(a, 0.5))


def test_zero_sample_is_degenerate():
    u = np.ones(64)
    u[5] = 0.0
    with pytest.raises(DegenerateDensityError):
        optimal_map(PeriodicDensity.from_samples(u), PeriodicDensity.uniform(64))


def test_pushforward_trivial_cases(sine):
    assert np.max(np.abs(pushforward(sine, np.zeros(256)).values - sine.values)) <= 1e-14
    shifted = pushforward(sine, np.full(256, 0.3))
    assert np.max(np.abs(shifted.values - rotate(sine, 0.3).values)) <= 1e-10


def test_pushforward_monge_ampere_residual():
    n = 512
    x = np.arange(n) / n
    mu = PeriodicDensity.uniform(n)
    f = 0.1 * np.sin(2 * np.pi * x)
    v = pushforward(mu, f)
    vt = TrigInterpolant(v.values)(x + f)
    assert np.max(np.abs(vt * (1 + derivative(f, 1)) - mu.values)) <= 1e-6


def test_pushforward_rejects_fold():
    x = np.arange(64) / 64
    with pytest.raises(FoldError):
        pushforward(PeriodicDensity.uniform(64), 0.3 * np.sin(2 * np.pi * x))


@given(st.floats(0.0, 1.0))
def test_geodesic_endpoints_and_uniform(s):
    u = PeriodicDensity.uniform(64)
    assert np.max(np.abs(geodesic(u, u, s).values - 1.0)) <= 1e-12


def test_geodesic_endpoints(sine):
    nu = sine_density(256, 0.3, 2, 0.1)
    assert np.max(np.abs(geodesic(sine, nu, 0.0).values - sine.values)) <= 1e-12
    assert np.max(np.abs(geodesic(sine, nu, 1.0).values - nu.values)) <= 1e-8


@pytest.mark.parametrize("index", range(4))
def test_geodesic_has_constant_speed(index):
    rng = child_rng(7, index)
    mu, nu = random_density(128, rng), random_density(128, rng)
    d = w2_distance(mu, nu)
    for s in (0.25, 0.5, 0.75):
        assert w2_distance(mu, geodesic(mu, nu, s)) == pytest.approx(s * d, rel=1e-6)


@given(st.integers(0, 10**6))
def test_w2_is_symmetric_and_a_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density(64, rng) for _ in range(3))
    dab, dba = w2_distance(a, b), w2_distance(b, a)
    assert dab == pytest.approx(dba, rel=1e-6, abs=1e-12)
    assert dab <= w2_distance(a, c) + w2_distance(c, b) + 1e-10


def test_brute_force_single_pair_and_identity():
    assert brute_force_plan([0.1], [1.0], [0.5], [1.0]).cost == pytest.approx(0.16)
    x = np.arange(8) / 8
    assert brute_force_plan(x, np.full(8, 1 / 8), x, np.full(8, 1 / 8)).cost <= 1e-14


def test_brute_force_rejects_unequal_marginals():
    with pytest.raises(MarginalError):
        brute_force_plan([0.1], [1.0], [0.5], [0.9])


def test_plan_marginals():
    plan = brute_force_plan([0.1, 0.6], [0.3, 0.7], [0.2, 0.4, 0.9], [0.2, 0.5, 0.3])
    assert np.allclose(plan.coupling.sum(axis=1), [0.3, 0.7])
    assert np.allclose(plan.coupling.sum(axis=0), [0.2, 0.5, 0.3])


def test_32_atom_oracle_agrees():
    mu, nu = sine_density(256, 0.4, 1), sine_density(256, 0.3, 1, 0.3)
    plan = brute_force_plan(*atomize(mu, 32), *atomize(nu, 32))
    assert abs(plan.cost - w2_distance(mu, nu) ** 2) <= 1e-3


def test_map_csv_roundtrip(tmp_path, sine):
    tm = optimal_map(PeriodicDensity.uniform(256), sine)
    write_map_csv(tmp_path / "m.csv", tm, ["h"])
    x, T = read_map_csv(tmp_path / "m.csv")
    assert np.array_equal(T, tm.values) and np.array_equal(x, tm.x)


def test_reference_quantile_agrees_with_solver_quantile():
    from otflow.transport import _LiftedCDF

    nu = sine_density(256, 0.4, 2, 0.1)
    levels = np.linspace(-0.5, 1.5, 41)
    assert np.max(np.abs(reference_quantile(nu, levels) - _LiftedCDF(nu.values).quantile(levels))) <= 1e-6
