import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ALL_FAMILIES
from otflow.energy import (
    EnergySpec,
    dissipation,
    evaluate,
    first_variation,
    pde_rhs,
    sublevel_bounds,
)
from otflow.exceptions import DomainError
from otflow.geometry import PeriodicDensity, integrate, mollify, sine_density
from otflow.sampling import random_trig, sublevel_sample
from otflow.transport import w2_distance


@pytest.mark.parametrize(
    "text", ["dirichlet", "hk:3", "power:0.5", "fisher", "log", "perturbed:0.01"]
)
def test_parse_roundtrip(text):
    assert EnergySpec.parse(str(EnergySpec.parse(text))) == EnergySpec.parse(text)


@pytest.mark.parametrize("text", ["power:0", "power:-1", "hk:0", "perturbed:0", "log:2", "hk", "bogus"])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        EnergySpec.parse(text)


def test_fisher_is_half_power():
    assert EnergySpec("fisher").exponent == 0.5
    u = sine_density(256, 0.5)
    assert evaluate(EnergySpec("fisher"), u) == pytest.approx(
        evaluate(EnergySpec("power", 0.5), u), rel=1e-14
    )


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=str)
def test_uniform_energy(spec, uniform):
    expected = spec.param if spec.family == "perturbed" else 0.0
    assert evaluate(spec, uniform) == pytest.approx(expected, abs=1e-14)


def test_closed_form_values(sine):
    assert evaluate(EnergySpec("dirichlet"), sine) == pytest.approx(math.pi**2 / 4, rel=1e-12)
    assert evaluate(EnergySpec("hk", 2), sine) == pytest.approx(math.pi**4, rel=1e-12)


def test_positivity_failure_gives_infinity():
    u = PeriodicDensity.from_samples(1 + np.sin(2 * np.pi * np.arange(64) / 64))
    assert evaluate(EnergySpec("log"), u) == math.inf
    with pytest.raises(DomainError):
        first_variation(EnergySpec("log"), u)


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=str)
def test_first_variation_of_uniform_has_no_gradient(spec, uniform):
    fv = first_variation(spec, uniform)
    assert np.max(np.abs(fv - fv.mean())) <= 1e-10


def test_dirichlet_first_variation(sine):
    x = sine.x
    assert np.max(np.abs(first_variation(EnergySpec("dirichlet"), sine)
                         - 2 * math.pi**2 * np.sin(2 * math.pi * x))) <= 1e-10


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=str)
def test_gateaux_derivative_is_second_order(spec):
    rng = np.random.default_rng(3)
    u = sine_density(256, 0.3, 1)
    w = random_trig(256, rng, modes=4)
    w -= w.mean()
    fv = first_variation(spec, u)
    e0 = evaluate(spec, u)
    errs = []
    for eps in (1e-3, 1e-4):
        v = PeriodicDensity.from_samples(u.values + eps * w)
        errs.append(abs(evaluate(spec, v) - e0 - eps * integrate(fv * w)))
    assert math.log10(errs[0] / errs[1]) >= 1.9


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=str)
def test_pde_rhs_conserves_mass_and_dissipates(spec):
    u = sine_density(256, 0.3, 2, 0.1)
    rhs = pde_rhs(spec, u)
    assert abs(integrate(rhs)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))
    lhs = integrate(first_variation(spec, u) * rhs)
    assert lhs == pytest.approx(-dissipation(spec, u), rel=1e-8)


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=str)
def test_pde_rhs_vanishes_at_uniform(spec, uniform):
    assert np.max(np.abs(pde_rhs(spec, uniform))) <= 1e-10


def test_dirichlet_bounds_at_unit_level():
    b = sublevel_bounds(EnergySpec("dirichlet"), 1.0)
    assert b.holder == pytest.approx(math.sqrt(2))
    assert b.M == pytest.approx(2.0)
    assert b.h1 == pytest.approx(5.0)


def test_bounds_near_zero_level():
    assert sublevel_bounds(EnergySpec("dirichlet"), 1e-12).M == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(ValueError):
        sublevel_bounds(EnergySpec("dirichlet"), 0.0)


@pytest.mark.parametrize(
    "spec,c",
    [(EnergySpec("log"), 0.5), (EnergySpec("dirichlet"), 1.0), (EnergySpec("power", 0.5), 1.0),
     (EnergySpec("power", 2.0), 2.0), (EnergySpec("hk", 2), 200.0), (EnergySpec("perturbed", 0.1), 1.5)],
    ids=lambda v: str(v),
)
def test_sampled_densities_respect_bounds(spec, c):
    rng = np.random.default_rng(11)
    b = sublevel_bounds(spec, c)
    for u in sublevel_sample(spec, c, 256, rng, 100):
        assert u.max <= b.M + 1e-12
        assert u.min >= b.floor - 1e-12
        assert integrate(u.values**2) <= b.h1
        x = u.x
        gaps = np.abs(u.values[:, None] - u.values[None, ::7])
        dist = np.abs(x[:, None] - x[None, ::7])
        dist = np.minimum(dist, 1 - dist)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dist > 0, gaps / np.sqrt(dist), 0.0)
        assert ratio.max() <= b.holder + 1e-9


@given(st.floats(0.01, 100.0))
def test_bounds_are_monotone_in_level(c):
    spec = EnergySpec("dirichlet")
    lo, hi = sublevel_bounds(spec, c), sublevel_bounds(spec, 2 * c)
    assert hi.M >= lo.M and hi.floor <= lo.floor and hi.holder >= lo.holder


def test_mollification_is_lower_semicontinuous():
    spec = EnergySpec("dirichlet")
    u = sine_density(1024, 0.5, 3)
    for k in (8, 32, 128):
        uk = mollify(u, k)
        assert w2_distance(uk, u) < 0.1
    assert evaluate(spec, mollify(u, 128)) >= evaluate(spec, mollify(u, 8)) - 1e-6
    assert evaluate(spec, u) >= evaluate(spec, mollify(u, 128)) - 1e-6
