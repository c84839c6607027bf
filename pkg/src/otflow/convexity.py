"""Second variations of energies along Wasserstein geodesics.

Along ``u_s = (Id + s f)_# u`` the density is ``v = u / (1 + s f')`` in the
moving variable, so for ``E = int g(u, u') dx``

    d^2/ds^2 E(u_s)|_0 = int [f', f''] A [f', f'']^T dx

with A built from u, u' and the partials of g.  For ``g = u'^2 / 2`` the form
reduces to ``int (u f'')^2 + 8 (u f'')(u' f') + 6 (u' f')^2``.

Values are in the 1/2 convention unless ``convention="full"`` is requested,
in which case quadratic energies carry no 1/2 and every value doubles.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .energy import evaluate
from .exceptions import DomainError, ResolutionError
from .geometry import PeriodicDensity, PeriodicField, derivative, samples
from .transport import geodesic, pushforward, w2_distance

CONVENTIONS = ("half", "full")


def _scale(convention):
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    return 1.0 if convention == "half" else 2.0


def dirichlet_density(u, du, df, d2f, power=5):
    """Pointwise second variation of ``1/2 int u'^2``.

    ``power`` is the Jacobian exponent in ``((1+sf')u' - s u f'')^2 / (1+sf')^power``;
    the change of variables gives 5, other values are kept as controls.
    """
    a = du * df
    q = a - u * d2f
    return q * q - 2.0 * power * a * q + 0.5 * power * (power + 1) * a * a


def hessian_dirichlet(u, f, power=5, convention="half", method="spectral"):
    """Second derivative of the Dirichlet energy along (Id + s f)_# u at s = 0."""
    uv = samples(u)
    fv = samples(f)
    du = derivative(uv, 1, method)
    df = derivative(fv, 1, method)
    d2f = derivative(fv, 2, method)
    return _scale(convention) * float(np.mean(dirichlet_density(uv, du, df, d2f, power)))


@dataclass(frozen=True)
class HessianQuadraticForm:
    """Symmetric 2x2 field A(x) acting on (f', f'')."""

    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray

    def __post_init__(self):
        for name in ("a11", "a12", "a22"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DomainError(f"non-finite entry in A ({name})")

    def density(self, df, d2f):
        return self.a11 * df * df + 2.0 * self.a12 * df * d2f + self.a22 * d2f * d2f

    def value(self, f):
        fv = samples(f)
        return float(np.mean(self.density(derivative(fv, 1), derivative(fv, 2))))

    def matrix(self, i):
        return np.array([[self.a11[i], self.a12[i]], [self.a12[i], self.a22[i]]])


def quadratic_form(partials, u):
    """Assemble A from ``partials(i, j, U, P) = d^{i+j} g / dU^i dP^j``."""
    uv = samples(u)
    p = derivative(uv, 1)
    with np.errstate(all="ignore"):
        g01 = partials(0, 1, uv, p)
        g02 = partials(0, 2, uv, p)
        g11 = partials(1, 1, uv, p)
        g20 = partials(2, 0, uv, p)
        u2 = uv * uv
        a11 = 2 * p * g01 + 4 * p * p * g02 + 4 * uv * p * g11 + u2 * g20
        a12 = 2 * uv * g01 + 2 * uv * p * g02 + u2 * g11
        a22 = u2 * g02
    return HessianQuadraticForm(a11, a12, a22)


def hessian_general(partials, u, f):
    """int [f', f''] A [f', f'']^T for ``E = int g(u, u')``."""
    return quadratic_form(partials, u).value(f)


def energy_partials(spec):
    """Partials of the pointwise integrand g(U, P) of a first-order family."""
    fam = spec.family
    if fam == "hk" and spec.param == 1:
        fam = "dirichlet"
    if fam == "dirichlet":
        table = {(0, 1): lambda U, P: P, (0, 2): lambda U, P: np.ones_like(U)}
    elif fam in ("power", "fisher"):
        a = spec.exponent
        # g = a^2/2 U^(2a-2) P^2
        k = 0.5 * a * a
        e = 2 * a - 2
        table = {
            (0, 1): lambda U, P: 2 * k * U**e * P,
            (0, 2): lambda U, P: 2 * k * U**e,
            (1, 1): lambda U, P: 2 * k * e * U ** (e - 1) * P,
            (2, 0): lambda U, P: k * e * (e - 1) * U ** (e - 2) * P * P,
        }
    elif fam == "log":
        table = {
            (0, 1): lambda U, P: P / U**2,
            (0, 2): lambda U, P: 1 / U**2,
            (1, 1): lambda U, P: -2 * P / U**3,
            (2, 0): lambda U, P: 3 * P * P / U**4,
        }
    elif fam == "perturbed":
        eps = spec.param
        table = {
            (0, 1): lambda U, P: 2 * P,
            (0, 2): lambda U, P: 2 * np.ones_like(U),
            (2, 0): lambda U, P: 6 * eps / U**4,
        }
    else:
        raise ValueError(f"{spec} has no first-order integrand; use hessian_numeric")

    def partials(i, j, U, P):
        fn = table.get((i, j))
        return np.zeros_like(U) if fn is None else fn(U, P)

    return partials


def hessian_analytic(spec, u, f):
    """Analytic second variation for first-order families (1/2 convention)."""
    return hessian_general(energy_partials(spec), u, f)


def hessian_numeric(spec, u, f, step=1e-3):
    """Central second difference of E along (Id + s f)_# u."""
    fv = samples(f)
    e0 = evaluate(spec, u)
    ep = evaluate(spec, pushforward(u, step * fv))
    em = evaluate(spec, pushforward(u, -step * fv))
    return (ep - 2.0 * e0 + em) / step**2


def hessian_richardson(spec, u, f, step=1e-2):
    """Second difference extrapolated from ``step`` and ``step / 2``."""
    coarse = hessian_numeric(spec, u, f, step)
    fine = hessian_numeric(spec, u, f, step / 2)
    return (4.0 * fine - coarse) / 3.0


@functools.lru_cache(maxsize=None)
def interpolation_d(terms=10**6):
    """Upper bound for 2 pi (sum_{k != 0} |k|^{-6/5})^{1/2}.

    Partial sum to ``terms`` plus the midpoint-convexity tail bound
    sum_{k > K} k^{-6/5} <= int_{K+1/2}^inf x^{-6/5} dx.
    """
    k = np.arange(1, terms + 1, dtype=float)
    partial = math.fsum(np.sort(k**-1.2))
    tail = 5.0 * (terms + 0.5) ** -0.2
    return 2.0 * math.pi * math.sqrt(2.0 * (partial + tail))


@dataclass(frozen=True)
class InterpolationConstants:
    alpha: float
    d: float
    beta: float
    lam: float
    form: str

    def __iter__(self):
        return iter((self.d, self.beta, self.lam))


def interpolation_constants(alpha, form="linear"):
    """(d, beta, lambda) closing ``|f'|_inf <= d |f''|^{4/5} |f|^{1/5}``.

    ``linear``: beta = (5 alpha d / 4)^{-4/5}, lambda = -d alpha beta^{-5} / 5,
    which gives ``alpha |f'|_inf <= |f''| - lambda |f|`` in L2 norms.
    ``squared``: the same chain with d^2, giving
    ``alpha |f'|_inf^2 <= |f''|^2 - lambda |f|^2``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    d = interpolation_d()
    dd = d if form == "linear" else d * d
    if form not in ("linear", "squared"):
        raise ValueError("form must be 'linear' or 'squared'")
    beta = (1.25 * alpha * dd) ** -0.8
    lam = -dd * alpha * beta**-5 / 5.0
    return InterpolationConstants(alpha, d, beta, lam, form)


def _chain(alpha, level, form):
    # |f^(L)|_inf^2 <= (1/alpha)|f^(L+1)|^2 - chain * |f|^2
    if level == 1:
        return interpolation_constants(alpha, form).lam / alpha
    lh = interpolation_constants(2 * alpha, form).lam / (2 * alpha)
    return -0.5 * lh * _chain(-2.0 * lh, level - 1, form)


def convexity_alpha(spec, c, m):
    """alpha in the sup-norm term of the lower bound on the second variation.

    ``c`` bounds the energy in the no-1/2 convention."""
    fam = spec.family
    if fam in ("dirichlet", "perturbed", "hk"):
        return 52.0 * c / m**2
    if fam in ("power", "fisher"):
        a = spec.exponent
        return 2.0 * (1 + a) * (7 + 6 * a) * c / (a * a * m ** (2 * a))
    if fam == "log":
        return 6.0 * c * math.exp(math.sqrt(c))
    raise ValueError(f"unknown family {fam}")


def lambda_estimate(spec, c, m, convention="full", form="squared"):
    """Restricted convexity modulus on {E < c, u > m}.

    With ``convention="half"``, c bounds the 1/2-convention energy and the
    returned modulus refers to it (the perturbed family has no 1/2 either way).
    """
    if not m > 0:
        raise ValueError("restricted convexity needs a floor m > 0")
    if not c > 0:
        raise ValueError("energy bound c must be positive")
    half = convention == "half" and spec.family != "perturbed"
    _scale(convention)
    cp = 2.0 * c if half else c
    alpha = convexity_alpha(spec, cp, m)
    fam = spec.family
    if fam in ("dirichlet", "perturbed"):
        lam = m * interpolation_constants(alpha, form).lam
    elif fam == "hk":
        # each induction level raises the modulus to roughly the fifth power
        try:
            lam = m * alpha * _chain(alpha, spec.param, form)
        except OverflowError:
            lam = -math.inf
    elif fam in ("power", "fisher"):
        a = spec.exponent
        lam = a * a * m ** (2 * a) * interpolation_constants(alpha, form).lam / m
    else:
        lam = interpolation_constants(alpha, form).lam / max(m, math.exp(-math.sqrt(cp)))
    lam = min(lam, 0.0)
    return 0.5 * lam if half else lam


def interpolant_bounds(c, m, M):
    """(floor, energy bound) along geodesics joining densities with
    E < c, m < u < M."""
    r = M / m
    a = r**2 + r**5
    b = r**6
    return m * m / M, 2.0 * c * r * (a * a + b * b * r)


# --- non-convexity witness -------------------------------------------------

_U_PIECES = (
    (0.0, 2 / 9, lambda x: 81 / 16 * (1 - 4 * x), lambda x: -81 / 4 + 0 * x),
    (2 / 9, 3 / 8, lambda x: 9 / 16 + 0 * x, lambda x: 0 * x),
    (3 / 8, 0.5, lambda x: 9 / 4 * (1 - 2 * x), lambda x: -9 / 2 + 0 * x),
)
_F1_PIECES = (
    (lambda x: 16 / (81 * (1 - 4 * x)), lambda x: 64 / (81 * (1 - 4 * x) ** 2)),
    (lambda x: 16 / 11 * (3 - 8 * x), lambda x: -128 / 11 + 0 * x),
    (lambda x: 0 * x, lambda x: 0 * x),
)
RAW_MASS = 191 / 128


def _f_raw(x):
    """Odd antiderivative of the piecewise f' on [0, 1/2]."""
    x = np.asarray(x, dtype=float)
    a, b = 2 / 9, 3 / 8
    f1 = lambda t: -4 / 81 * np.log(1 - 4 * np.minimum(t, a))
    fa = -4 / 81 * math.log(1 - 4 * a)
    f2 = lambda t: fa + 16 / 11 * (3 * (t - a) - 4 * (t * t - a * a))
    fb = fa + 16 / 11 * (3 * (b - a) - 4 * (b * b - a * a))
    return np.where(x < a, f1(x), np.where(x < b, f2(x), fb))


def _raw_pieces(x):
    """u, u', f', f'' of the unscaled witness at |x| <= 1/2 (even u, even f')."""
    ax = np.abs(np.asarray(x, dtype=float))
    sgn = np.sign(x)
    u = np.zeros_like(ax)
    du = np.zeros_like(ax)
    df = np.zeros_like(ax)
    d2f = np.zeros_like(ax)
    for (lo, hi, uf, duf), (ff, dff) in zip(_U_PIECES, _F1_PIECES):
        sel = (ax >= lo) & (ax <= hi) if hi == 0.5 else (ax >= lo) & (ax < hi)
        t = ax[sel]
        u[sel] = uf(t)
        du[sel] = duf(t) * sgn[sel]
        df[sel] = ff(t)
        d2f[sel] = dff(t) * sgn[sel]
    return u, du, df, d2f


@dataclass(frozen=True)
class CounterexamplePair:
    """Scaled witness (u_h, f_h) with A the second variation without the 1/2
    and B = int f_h^2 u_h."""

    h: float
    A_value: float
    B_value: float
    normalized: bool
    u_h: PeriodicDensity | None = None
    f_h: PeriodicField | None = None
    df_h: np.ndarray | None = field(default=None, repr=False)

    @property
    def ratio(self):
        return self.A_value / self.B_value


def _piecewise_integrals():
    a_total = 0.0
    b_total = 0.0
    for lo, hi, *_ in _U_PIECES:
        def fa(t):
            u, du, df, d2f = _raw_pieces(np.array([t]))
            return float(dirichlet_density(u, du, df, d2f)[0])

        def fb(t):
            u, *_ = _raw_pieces(np.array([t]))
            return float(_f_raw(t) ** 2 * u[0])

        a_total += integrate.quad(fa, lo, hi, epsabs=1e-13, epsrel=1e-13)[0]
        b_total += integrate.quad(fb, lo, hi, epsabs=1e-13, epsrel=1e-13)[0]
    # both integrands are even; dropping the 1/2 doubles the form
    return 2.0 * 2.0 * a_total, 2.0 * b_total


@functools.lru_cache(maxsize=None)
def _base_values():
    return _piecewise_integrals()


def counterexample(h=1.0, n=None, normalize=True):
    """Scaled witness u_h(x) = h u(h x), f_h'(x) = f'(h x) / h.

    The support |x| <= 1/(2h) is centred at x = 1/2 when sampled on a grid of
    ``n`` points.  ``normalize`` rescales u to unit mass (the raw pieces carry
    mass 191/128).  A and B come from exact per-piece quadrature.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    if n is not None and h > n / 16:
        raise ResolutionError(f"h = {h} needs n >= {16 * h:g}")
    a1, b1 = _base_values()
    w = 1.0 / RAW_MASS if normalize else 1.0
    # A is quadratic and B linear in u
    A = w * w * a1 * h
    B = w * b1 / h**4
    if n is None:
        return CounterexamplePair(h, A, B, normalize)
    x = np.arange(n) / n - 0.5
    inside = np.abs(h * x) <= 0.5
    u, _, df, _ = _raw_pieces(np.where(inside, h * x, 0.0))
    u = np.where(inside, w * h * u, 0.0)
    df = np.where(inside, df / h, 0.0)
    f = np.where(inside, _f_raw(np.abs(h * x)) * np.sign(x) / h**2, 0.0)
    return CounterexamplePair(
        h, A, B, normalize, PeriodicDensity.from_samples(u), PeriodicField(f), df
    )


def counterexample_grid(h, n=4096, normalize=True):
    """A and B of the witness from second-order finite differences on a grid.

    Derivatives of u and f' are centred differences; f' is sampled directly."""
    pair = counterexample(h, n, normalize)
    u = pair.u_h.values
    du = derivative(u, 1, "finite-diff")
    d2f = derivative(pair.df_h, 1, "finite-diff")
    A = 2.0 * float(np.mean(dirichlet_density(u, du, pair.df_h, d2f)))
    B = float(np.mean(pair.f_h.values**2 * u))
    return A, B


def find_violation(lam, hs=None):
    """Smallest h in the witness family with A < lam B, or None."""
    for h in hs if hs is not None else 2.0 ** np.arange(0, 40):
        pair = counterexample(float(h))
        if pair.A_value < lam * pair.B_value:
            return pair
    return None


# --- sampled certification -------------------------------------------------


@dataclass
class ConvexityReport:
    lambda_estimate: float
    alpha: float
    constants: InterpolationConstants
    sampled_min_ratio: float
    violations: list = field(default_factory=list)
    samples: int = 0


def convexity_gap(spec, nu0, nu1, s=0.5):
    """(chord - E(nu_s), W2^2): lambda-convexity needs
    chord - E(nu_s) >= (lambda / 2) s (1 - s) W2^2."""
    nus = geodesic(nu0, nu1, s)
    chord = (1 - s) * evaluate(spec, nu0) + s * evaluate(spec, nu1)
    return chord - evaluate(spec, nus), w2_distance(nu0, nu1) ** 2


def certify(spec, center, c, m, delta=0.05, count=50, seed=0, s=0.5, convention="half"):
    """Sample geodesics inside {E < c} near ``center`` and compare the worst
    convexity ratio with the analytic modulus."""
    from .sampling import child_rng, nearby

    lam = lambda_estimate(spec, c, m, convention=convention)
    cp = 2.0 * c if convention == "half" and spec.family != "perturbed" else c
    alpha = convexity_alpha(spec, cp, m)
    consts = interpolation_constants(alpha, "squared")
    center = center if isinstance(center, PeriodicDensity) else PeriodicDensity.from_samples(center)
    worst = math.inf
    violations = []
    taken = 0
    index = 0
    while taken < count and index < 100 * count:
        rng = child_rng(seed, index)
        index += 1
        nu0 = nearby(center, rng, rng.uniform(0.0, delta))
        nu1 = nearby(center, rng, rng.uniform(0.0, delta))
        if min(nu0.min, nu1.min) <= m:
            continue
        if max(evaluate(spec, nu0), evaluate(spec, nu1)) >= c:
            continue
        gap, w2sq = convexity_gap(spec, nu0, nu1, s)
        if w2sq <= 0:
            continue
        taken += 1
        ratio = 2.0 * gap / (s * (1 - s) * w2sq)
        worst = min(worst, ratio)
        if ratio < lam * (1 + 1e-3):
            violations.append((index - 1, ratio))
    return ConvexityReport(lam, alpha, consts, worst, violations, taken)


__all__ = [
    "HessianQuadraticForm",
    "ConvexityReport",
    "CounterexamplePair",
    "InterpolationConstants",
    "dirichlet_density",
    "hessian_dirichlet",
    "hessian_general",
    "hessian_analytic",
    "hessian_numeric",
    "hessian_richardson",
    "energy_partials",
    "quadratic_form",
    "interpolation_d",
    "interpolation_constants",
    "convexity_alpha",
    "lambda_estimate",
    "interpolant_bounds",
    "counterexample",
    "counterexample_grid",
    "find_violation",
    "convexity_gap",
    "certify",
]
