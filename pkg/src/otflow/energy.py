"""Energy functionals on densities of the circle.

Every family carries a factor 1/2 on its quadratic integrand except the
perturbed Dirichlet energy, which is ``int u'^2 + eps / u^2`` as written.

    dirichlet      1/2 int u'^2
    hk:K           1/2 int (u^(K))^2
    power:A        1/2 int ((u^A)')^2
    fisher         power:1/2
    log            1/2 int (u'/u)^2
    perturbed:EPS  int u'^2 + EPS / u^2
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .exceptions import DomainError
from .geometry import derivative, samples

FAMILIES = ("dirichlet", "hk", "power", "fisher", "log", "perturbed")


@dataclass(frozen=True)
class EnergySpec:
    family: str
    param: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown energy family {self.family!r}")
        if self.family == "hk":
            if self.param is None or int(self.param) != self.param or self.param < 1:
                raise ValueError("hk needs a positive integer order")
            object.__setattr__(self, "param", int(self.param))
        elif self.family in ("power", "perturbed"):
            if self.param is None or not self.param > 0:
                raise ValueError(f"{self.family} needs a positive parameter")
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise ValueError(f"{self.family} takes no parameter")

    @classmethod
    def parse(cls, text):
        """``dirichlet | hk:K | power:A | log | fisher | perturbed:EPS``."""
        name, _, arg = text.strip().lower().partition(":")
        if name in ("hk", "power", "perturbed"):
            if not arg:
                raise ValueError(f"{name} needs a parameter, e.g. {name}:2")
            return cls(name, int(arg) if name == "hk" else float(arg))
        if arg:
            raise ValueError(f"{name} takes no parameter")
        return cls(name)

    def __str__(self):
        if self.param is None:
            return self.family
        p = self.param
        return f"{self.family}:{p:g}" if isinstance(p, float) else f"{self.family}:{p}"

    @property
    def exponent(self):
        """Power-family exponent a (1 for Dirichlet, 1/2 for Fisher)."""
        if self.family == "power":
            return self.param
        if self.family == "fisher":
            return 0.5
        if self.family == "dirichlet":
            return 1.0
        return None

    @property
    def order(self):
        """Highest derivative appearing in the integrand."""
        return self.param if self.family == "hk" else 1

    @property
    def needs_positive(self):
        if self.family in ("log", "perturbed", "fisher"):
            return True
        return self.family == "power" and self.param < 1

    @property
    def half_prefactor(self):
        return self.family != "perturbed"


def integrand(spec, derivs, xp=np):
    """Pointwise energy density from ``derivs = [u, u', ..., u^(order)]``.

    ``xp`` is the array namespace, so the same algebra serves numpy and jax.
    """
    u = derivs[0]
    fam = spec.family
    if fam == "dirichlet":
        return 0.5 * derivs[1] ** 2
    if fam == "hk":
        return 0.5 * derivs[spec.param] ** 2
    if fam in ("power", "fisher"):
        a = spec.exponent
        return 0.5 * (a * u ** (a - 1.0) * derivs[1]) ** 2
    if fam == "log":
        return 0.5 * (derivs[1] / u) ** 2
    eps = spec.param
    return derivs[1] ** 2 + eps / u**2


def _derivs(u, order):
    return [u] + [derivative(u, k) for k in range(1, order + 1)]


def evaluate(spec, u):
    """Energy value; ``inf`` when the family needs positivity and u fails it."""
    u = samples(u)
    if spec.needs_positive and u.min() <= 0:
        return math.inf
    if spec.family == "power" and u.min() < 0:
        return math.inf
    return float(np.mean(integrand(spec, _derivs(u, spec.order))))


def _check_positive(spec, u):
    if spec.needs_positive and u.min() <= 0:
        raise DomainError(f"{spec} needs a strictly positive density (min {u.min():.3g})")


def first_variation(spec, u):
    """L2 gradient dE/du at the nodes."""
    u = samples(u)
    _check_positive(spec, u)
    fam = spec.family
    if fam == "dirichlet":
        return -derivative(u, 2)
    if fam == "hk":
        k = spec.param
        return (-1) ** k * derivative(u, 2 * k)
    if fam in ("power", "fisher"):
        a = spec.exponent
        w = u**a
        return -a * u ** (a - 1.0) * derivative(w, 2)
    if fam == "log":
        return -derivative(np.log(u), 2) / u
    eps = spec.param
    return -2.0 * derivative(u, 2) - 2.0 * eps / u**3


def pde_rhs(spec, u):
    """Gradient-flow velocity d/dx (u d/dx dE/du)."""
    u = samples(u)
    return derivative(u * derivative(first_variation(spec, u), 1), 1)


def dissipation(spec, u):
    """int u |d/dx dE/du|^2, the energy dissipation rate."""
    u = samples(u)
    g = derivative(first_variation(spec, u), 1)
    return float(np.mean(u * g * g))


@dataclass(frozen=True)
class SublevelBounds:
    """Pointwise control of densities with E(u) <= c.

    ``M`` bounds the sup, ``floor`` is the best lower bound the energy alone
    gives, ``m`` is the configured positivity floor, ``holder`` is the constant
    in ``|u(x) - u(y)| <= holder * sqrt|x - y|`` and ``h1`` bounds ``int u^2``.
    """

    c: float
    M: float
    m: float
    holder: float
    h1: float
    floor: float

    def __post_init__(self):
        if not (self.M >= 1 and self.holder > 0 and math.isfinite(self.M)):
            raise ValueError("inconsistent sub-level bounds")


def _perturbed_floor(eps, c):
    # min u = mu forces int eps / u^2 >= eps * (4/c) [log((mu+W)/mu) + mu/(mu+W) - 1],
    # W = sqrt(c/2), using u(x) <= mu + sqrt(c |x - x0|)
    w = math.sqrt(c / 2.0)

    def excess(mu):
        return eps * (4.0 / c) * (math.log((mu + w) / mu) + mu / (mu + w) - 1.0) - c

    hi = 1.0
    if excess(hi) > 0:
        return hi
    lo = 1e-300
    if excess(lo) < 0:
        return 0.0
    return brentq(excess, lo, hi, xtol=1e-300, rtol=1e-14)


def sublevel_bounds(spec, c, m=0.0):
    """Constants valid on ``{E <= c}`` for the given family."""
    if not c > 0:
        raise ValueError("energy bound c must be positive")
    if m < 0:
        raise ValueError("floor m must be nonnegative")
    fam = spec.family
    if fam == "perturbed":
        # int u'^2 <= c with no 1/2; max distance to a point where u = 1 is 1/2
        root = math.sqrt(c)
        M = 1.0 + math.sqrt(c / 2.0)
        floor = _perturbed_floor(spec.param, c)
        return SublevelBounds(c, M, m, root, c + 3.0, floor)
    root = math.sqrt(c)
    holder = math.sqrt(2.0 * c)
    if fam in ("dirichlet", "hk"):
        # int u'^2 <= 2c (Wirtinger for hk), u = 1 somewhere
        return SublevelBounds(c, 1.0 + root, m, holder, 2.0 * c + 3.0, max(0.0, 1.0 - root))
    if fam in ("power", "fisher"):
        a = spec.exponent
        M = (1.0 + root) ** (1.0 / a)
        floor = max(0.0, 1.0 - root) ** (1.0 / a)
        # u^a is sqrt(2c)-Hoelder; transfer through w -> w^(1/a)
        if a <= 1:
            h = holder * M ** (1.0 - a) / a
        else:
            low = max(1.0 - root, m**a)
            h = holder * low ** (1.0 / a - 1.0) / a if low > 0 else math.inf
        return SublevelBounds(c, M, m, h, M * M, floor)
    # log: |log u| <= sqrt(c) since log u vanishes somewhere
    M = math.exp(root)
    return SublevelBounds(c, M, m, holder * M, M * M, math.exp(-root))


__all__ = [
    "EnergySpec",
    "SublevelBounds",
    "integrand",
    "evaluate",
    "first_variation",
    "pde_rhs",
    "dissipation",
    "sublevel_bounds",
]
