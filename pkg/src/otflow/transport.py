"""Optimal transport on the circle.

On R/Z every optimal map is a monotone rearrangement composed with a rotation of
the cut point.  With F, G the lifted CDFs of the source and target,

    T_theta(x) = G^{-1}(F(x) - theta),

and the optimal shift minimizes the convex function
``C(theta) = int (T_theta(x) - x)^2 u(x) dx``.  The returned map lives in the
branch where ``|T(x) - x| <= 1/2`` so the displacement equals geodesic distance.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.optimize import linprog
from scipy.signal import resample

from .exceptions import DegenerateDensityError, FoldError, MarginalError, ResolutionError
from .geometry import (
    PeriodicDensity,
    PeriodicField,
    TrigInterpolant,
    antiderivative_at_nodes,
    circle_distance,
    derivative,
    samples,
)

logger = logging.getLogger(__name__)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
SCAN_POINTS = 64
THETA_TOL = 1e-12
MAX_ORACLE_ATOMS = 128


class _LiftedCDF:
    """CDF of a positive density lifted to R with F(x + 1) = F(x) + 1."""

    def __init__(self, values):
        u = samples(values)
        self.n = len(u)
        self.nodes = np.arange(self.n) / self.n
        self.interp = TrigInterpolant(u)
        self.at_nodes = antiderivative_at_nodes(u)
        # three periods of knots so the monotone spline has sane end slopes
        xs = np.concatenate([self.nodes - 1.0, self.nodes, self.nodes + 1.0, [2.0]])
        fs = np.concatenate([self.at_nodes - 1.0, self.at_nodes, self.at_nodes + 1.0, [2.0]])
        if np.any(np.diff(fs) <= 0):
            raise ResolutionError(
                f"density is under-resolved on n={self.n}: its interpolated CDF is not increasing"
            )
        self._pchip = PchipInterpolator(fs, xs)

    def coarse_quantile(self, t):
        t = np.asarray(t, dtype=float)
        k = np.floor(t)
        return self._pchip(t - k) + k

    def quantile(self, t, tol=1e-15, max_iter=60):
        """Inverse CDF: monotone-cubic start, then safeguarded Newton on the
        spectral antiderivative."""
        t = np.asarray(t, dtype=float)
        k = np.floor(t)
        r = t - k
        knots = np.append(self.at_nodes, 1.0)
        j = np.clip(np.searchsorted(knots, r, side="right") - 1, 0, self.n - 1)
        lo = self.nodes[j].copy()
        hi = lo + 1.0 / self.n
        y = np.clip(self._pchip(r), lo, hi)
        for _ in range(max_iter):
            F, dens = self.interp.antiderivative_and_value(y)
            resid = F - r
            lo = np.where(resid < 0, y, lo)
            hi = np.where(resid > 0, y, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = y - resid / dens
            bad = ~np.isfinite(step) | (step < lo) | (step > hi) | (dens <= 0)
            y_new = np.where(resid == 0, y, np.where(bad, 0.5 * (lo + hi), step))
            moved = np.abs(y_new - y)
            y = y_new
            if np.all((moved <= tol) | (np.abs(resid) <= tol)):
                break
        return y + k


@dataclass(frozen=True)
class TransportMap:
    """Optimal map sampled on the source grid, in the branch |T - x| <= 1/2.

    ``first`` and ``second`` hold T' and T'' at the nodes; ``theta`` is the
    optimal cut shift.
    """

    values: np.ndarray
    source: PeriodicDensity
    target: PeriodicDensity
    first: np.ndarray
    second: np.ndarray
    theta: float

    @property
    def grid(self):
        return self.source.grid

    @property
    def x(self):
        return self.source.x

    @property
    def displacement(self):
        return PeriodicField(self.values - self.x)

    @property
    def cost(self):
        """Squared W2 distance, int |T - x|^2 dmu."""
        d = self.values - self.x
        return float(np.mean(self.source.values * d * d))

    def __call__(self, y):
        """Evaluate the lifted map at arbitrary points."""
        y = np.asarray(y, dtype=float)
        disp = TrigInterpolant(self.values - self.x)
        return y + disp(y)


def _shift_cost(cdf_mu, cdf_nu, x, u, theta, fast=True):
    q = cdf_nu.coarse_quantile if fast else cdf_nu.quantile
    T = q(cdf_mu.at_nodes - theta)
    return float(np.mean(u * (T - x) ** 2))


def _golden_section(fun, a, b, tol=THETA_TOL):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def optimal_shift(mu, nu):
    """Optimal cut shift theta* and the map values it produces."""
    u = samples(mu)
    v = samples(nu)
    if u.min() <= 0 or v.min() <= 0:
        raise DegenerateDensityError("optimal map needs strictly positive densities")
    if len(u) != len(v):
        raise ValueError("source and target must share a grid")
    x = np.arange(len(u)) / len(u)
    F = _LiftedCDF(u)
    G = _LiftedCDF(v)

    lo = -float(G.interp.antiderivative(0.5))
    hi = lo + 1.0
    pad = 1.0 / SCAN_POINTS
    scan = np.linspace(lo - pad, hi + pad, SCAN_POINTS + 1)
    costs = np.array([_shift_cost(F, G, x, u, t) for t in scan])
    j = int(np.argmin(costs))
    a, b = scan[max(j - 1, 0)], scan[min(j + 1, len(scan) - 1)]
    theta = _golden_section(lambda t: _shift_cost(F, G, x, u, t), a, b)

    # Newton polish with the spectral quantile; C is smooth and convex in theta
    for _ in range(8):
        T = G.quantile(F.at_nodes - theta)
        dens_T, ddens_T = G.interp.evaluate(T, (0, 1))
        grad = 2.0 * np.mean(u * (x - T) / dens_T)
        curv = 2.0 * np.mean(u / dens_T**2 + u * (x - T) * ddens_T / dens_T**3)
        if curv <= 0:
            curv = 2.0 * np.mean(u / dens_T**2)
        step = grad / curv
        theta -= step
        if abs(step) < 1e-15:
            break
    T = G.quantile(F.at_nodes - theta)
    return theta, T, F, G


def optimal_map(mu, nu):
    """Optimal transport map from mu to nu on the circle."""
    mu = mu if isinstance(mu, PeriodicDensity) else PeriodicDensity.from_samples(mu)
    nu = nu if isinstance(nu, PeriodicDensity) else PeriodicDensity.from_samples(nu)
    theta, T, F, G = optimal_shift(mu, nu)
    u = mu.values
    x = mu.x
    gap = np.max(np.abs(T - x))
    if gap > 0.5 + 1e-8:
        logger.warning("optimal map displacement %.3g exceeds 1/2", gap)
    dens_T, ddens_T = G.interp.evaluate(T, (0, 1))
    du = derivative(u, 1)
    dT = u / dens_T
    d2T = (du - dT**2 * ddens_T) / dens_T
    return TransportMap(T, mu, nu, dT, d2T, float(theta))


def w2_distance(mu, nu):
    """Quadratic Wasserstein distance between two positive densities."""
    tm = optimal_map(mu, nu)
    return float(np.sqrt(max(tm.cost, 0.0)))


def pushforward(mu, f, df=None, tol=1e-14, max_iter=60):
    """Density of (Id + f)_# mu on the grid of mu.

    ``df`` may supply f' at the nodes; otherwise it is taken spectrally.
    """
    u = samples(mu)
    fv = samples(f)
    n = len(u)
    if len(fv) != n:
        raise ValueError("field and density must share a grid")
    if np.max(np.abs(fv)) > 0.5 + 1e-12:
        raise ValueError("displacement must satisfy |f| <= 1/2")
    dfv = derivative(fv, 1) if df is None else samples(df)
    if np.any(1.0 + dfv <= 0):
        i = int(np.argmin(1.0 + dfv))
        raise FoldError(f"1 + f' = {1.0 + dfv[i]:.3g} <= 0 at node {i}")

    x = np.arange(n) / n
    f_int = TrigInterpolant(fv)
    df_int = TrigInterpolant(dfv)
    u_int = TrigInterpolant(u)
    y = x + fv
    y_ext = np.append(y, y[0] + 1.0)
    # lift each target node into [y_0, y_0 + 1)
    z = x + np.ceil(y[0] - x)
    z = np.where(z >= y[0] + 1.0, z - 1.0, z)
    j = np.clip(np.searchsorted(y_ext, z, side="right") - 1, 0, n - 1)
    lo = x[j].copy()
    hi = lo + 1.0 / n
    w = (z - y_ext[j]) / (y_ext[j + 1] - y_ext[j])
    p = lo + w / n
    for _ in range(max_iter):
        fp = f_int(p)
        g = p + fp - z
        lo = np.where(g < 0, p, lo)
        hi = np.where(g > 0, p, hi)
        slope = 1.0 + df_int(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = p - g / slope
        bad = ~np.isfinite(step) | (step < lo) | (step > hi) | (slope <= 0)
        p_new = np.where(g == 0, p, np.where(bad, 0.5 * (lo + hi), step))
        moved = np.abs(p_new - p)
        p = p_new
        if np.all((moved <= tol) | (np.abs(g) <= tol)):
            break
    slope = 1.0 + df_int(p)
    if np.any(slope <= 0):
        raise FoldError("map folds between grid nodes")
    v = np.clip(u_int(p), 0.0, None) / slope
    label = getattr(mu, "label", "")
    return PeriodicDensity.from_samples(v, label=label)


def geodesic(mu0, mu1, s):
    """Displacement interpolant ((1-s) Id + s T)_# mu0."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    mu0 = mu0 if isinstance(mu0, PeriodicDensity) else PeriodicDensity.from_samples(mu0)
    if s == 0.0:
        return mu0
    tm = optimal_map(mu0, mu1)
    f = s * (tm.values - tm.x)
    df = s * (tm.first - 1.0)
    return pushforward(mu0, f, df)


@dataclass(frozen=True)
class DiscretePlan:
    """Coupling between two atomic measures with squared circle-distance cost."""

    source_x: np.ndarray
    source_w: np.ndarray
    target_x: np.ndarray
    target_w: np.ndarray
    coupling: np.ndarray
    cost: float


def brute_force_plan(source_x, source_w, target_x, target_w):
    """Exact optimal coupling by linear programming.  Oracle scale only."""
    sx, sw = np.atleast_1d(np.asarray(source_x, float)), np.atleast_1d(np.asarray(source_w, float))
    tx, tw = np.atleast_1d(np.asarray(target_x, float)), np.atleast_1d(np.asarray(target_w, float))
    if len(sx) != len(sw) or len(tx) != len(tw):
        raise ValueError("positions and weights must have equal length")
    if len(sx) > MAX_ORACLE_ATOMS or len(tx) > MAX_ORACLE_ATOMS:
        raise ValueError(f"at most {MAX_ORACLE_ATOMS} atoms per side")
    if np.any(sw < 0) or np.any(tw < 0):
        raise MarginalError("atom weights must be nonnegative")
    if abs(sw.sum() - tw.sum()) > 1e-12 * max(1.0, sw.sum()):
        raise MarginalError(f"marginal totals differ: {sw.sum()!r} vs {tw.sum()!r}")
    m, k = len(sx), len(tx)
    cost = circle_distance(sx[:, None], tx[None, :]) ** 2
    rows = sparse.kron(sparse.eye(m), np.ones((1, k)))
    cols = sparse.kron(np.ones((1, m)), sparse.eye(k))
    res = linprog(
        cost.ravel(),
        A_eq=sparse.vstack([rows, cols]).tocsr(),
        b_eq=np.concatenate([sw, tw]),
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        raise MarginalError(f"transport problem infeasible: {res.message}")
    gamma = np.clip(res.x.reshape(m, k), 0.0, None)
    return DiscretePlan(sx, sw, tx, tw, gamma, float(np.sum(gamma * cost)))


def atomize(mu, atoms, scheme="quantile"):
    """Atomic approximation of a density with ``atoms`` atoms.

    ``quantile``: equal weights at the mass midpoints F^{-1}((i + 1/2)/m).
    ``cell``: one atom per equal-width cell carrying the exact cell mass at the
    cell barycenter; independent of the quantile solver.
    """
    u = samples(mu)
    if scheme == "quantile":
        levels = (np.arange(atoms) + 0.5) / atoms
        return _LiftedCDF(u).quantile(levels), np.full(atoms, 1.0 / atoms)
    if scheme != "cell":
        raise ValueError(f"unknown atom scheme {scheme!r}")
    n = len(u)
    edges = np.arange(atoms + 1) / atoms
    interp = TrigInterpolant(u)
    mass = np.diff(interp.antiderivative(edges))
    gx, gw = np.polynomial.legendre.leggauss(max(8, 2 * n // atoms + 4))
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 / atoms
    pts = mid[:, None] + half * gx[None, :]
    first = half * (interp(pts) * pts) @ gw
    return first / mass, mass / mass.sum()


def reference_quantile(u, levels, refine=16):
    """Quantiles from a cumulative trapezoid on an FFT-refined grid.

    Deliberately shares no code with the solver's Newton quantile."""
    v = samples(u)
    fine = resample(v, refine * len(v))
    xs = np.linspace(0.0, 1.0, len(fine) + 1)
    F = cumulative_trapezoid(np.append(fine, fine[0]), xs, initial=0.0)
    F /= F[-1]
    levels = np.asarray(levels, dtype=float)
    k = np.floor(levels)
    return np.interp(levels - k, F, xs) + k


def oracle_cost(mu, nu, atoms=64, phases=4):
    """W2^2 from equal-mass atom linear programs.

    Atoms sit at the mass midpoints of mu and at the mass midpoints of nu
    offset by a phase.  Each LP cost is a midpoint rule in the mass variable
    (spectrally accurate for smooth densities) up to the restriction of the
    relative shift to multiples of 1/atoms.  Scanning ``phases`` offsets in
    [0, 1/atoms) and fitting a parabola at the best one removes it.
    """
    levels = (np.arange(atoms) + 0.5) / atoms
    w = np.full(atoms, 1.0 / atoms)
    sx = reference_quantile(mu, levels)
    offsets = np.arange(phases) / (phases * atoms)
    costs = np.array(
        [brute_force_plan(sx, w, reference_quantile(nu, levels + p), w).cost for p in offsets]
    )
    j = int(np.argmin(costs))
    left, mid, right = costs[(j - 1) % phases], costs[j], costs[(j + 1) % phases]
    curv = left - 2.0 * mid + right
    if curv <= 0:
        return float(mid)
    return float(mid - (left - right) ** 2 / (8.0 * curv))


def equivalence_constant(c):
    """Constant in W2^2 >= a |u1 - u2|_inf^7 on {int u'^2 <= c}."""
    return 1.0 / (27648.0 * c**3)


def write_map_csv(path, tm, header=None):
    with open(path, "w", newline="") as fh:
        for line in header or ():
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["x", "T"])
        for xi, ti in zip(tm.x, tm.values):
            w.writerow([repr(float(xi)), repr(float(ti))])


def read_map_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    if not rows or [h.strip() for h in rows[0]] != ["x", "T"]:
        raise ValueError(f"{path}: expected header 'x,T'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    return data[:, 0], data[:, 1]


__all__ = [
    "TransportMap",
    "DiscretePlan",
    "optimal_map",
    "optimal_shift",
    "w2_distance",
    "pushforward",
    "geodesic",
    "brute_force_plan",
    "atomize",
    "oracle_cost",
    "reference_quantile",
    "equivalence_constant",
    "write_map_csv",
    "read_map_csv",
]
