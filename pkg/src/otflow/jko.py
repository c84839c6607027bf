"""Minimizing-movement (JKO) scheme for Wasserstein gradient flows on the circle.

Each step minimizes over displacements f of the previous density u

    J(f) = E((Id + f)_# u) + 1/(2 tau) int f^2 u dx.

In 1-D the pushed density in Lagrangian coordinates is v = u / (1 + f') and
d/dy = (1 / (1 + f')) d/dx, so J is an explicit smooth function of the nodal
values of f.  It is written in jax and minimized by damped Newton with the
exact Hessian.
"""

import functools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import EnergySpec, evaluate, first_variation, integrand
from .exceptions import FoldError, OptimizationFailure
from .geometry import PeriodicDensity, PeriodicField, derivative, samples
from .transport import optimal_map, pushforward, w2_distance

import jax

jax.config.update("jax_enable_x64", True)
import jax.numpy as jnp  # noqa: E402

logger = logging.getLogger(__name__)

JACOBIAN_FLOOR = 1e-6
GTOL = 1e-9
MAX_ITER = 500
W2_CHECK = 1e-6
STEP_RTOL = 1e-12


def _jnp_derivative(w, mult):
    return jnp.fft.irfft(jnp.fft.rfft(w) * mult, n=w.shape[0])


@functools.lru_cache(maxsize=None)
def _compiled(spec, n):
    """jit-compiled energy, gradient and Hessian of J for a family and grid."""
    k = 2.0 * np.pi * np.arange(n // 2 + 1)
    d1 = 1j * k
    if n % 2 == 0:
        d1[-1] = 0.0
    d1 = jnp.asarray(d1)
    order = spec.order

    def energy(f, u):
        jac = 1.0 + _jnp_derivative(f, d1)
        v = u / jac
        derivs = [v]
        for _ in range(order):
            derivs.append(_jnp_derivative(derivs[-1], d1) / jac)
        return jnp.mean(integrand(spec, derivs, jnp) * jac)

    def objective(f, u, tau):
        return energy(f, u) + jnp.mean(f * f * u) / (2.0 * tau)

    grad = jax.grad(objective)
    hess = jax.hessian(objective)
    return (
        jax.jit(objective),
        jax.jit(grad),
        jax.jit(hess),
    )


def _feasible(f):
    return np.max(np.abs(f)) <= 0.5 and np.min(1.0 + derivative(f, 1)) > JACOBIAN_FLOOR


@dataclass(frozen=True)
class JKOStep:
    """One accepted minimizing-movement step."""

    predecessor: PeriodicDensity
    result: PeriodicDensity
    displacement: PeriodicField
    tau: float
    velocity: PeriodicField
    objective: float
    el_residual: float
    energy: float
    w2: float
    iterations: int
    gradient_norm: float
    resolved: bool = False


@dataclass
class DomainBudget:
    """Restricted-convexity domain: E < c, min > m, W2 to the start < delta/4."""

    c: float
    m: float
    delta: float
    exit_step: int | None = None
    reason: str = ""

    def __post_init__(self):
        if not (self.c > 0 and self.m >= 0 and self.delta > 0):
            raise ValueError("budget needs c > 0, m >= 0, delta > 0")

    def validate(self, spec, mu0):
        e0 = evaluate(spec, mu0)
        if not e0 < self.c:
            raise ValueError(f"initial energy {e0:.6g} is not below c = {self.c:g}")
        if not mu0.min > self.m:
            raise ValueError(f"initial minimum {mu0.min:.6g} is not above m = {self.m:g}")


@dataclass
class JKOTrajectory:
    spec: EnergySpec
    initial: PeriodicDensity
    tau: float
    steps: list = field(default_factory=list)
    budget: DomainBudget | None = None
    failure: str = ""

    @property
    def densities(self):
        return [self.initial] + [s.result for s in self.steps]

    @property
    def energies(self):
        return [evaluate(self.spec, self.initial)] + [s.energy for s in self.steps]

    @property
    def times(self):
        return [self.tau * i for i in range(len(self.steps) + 1)]

    def state_at(self, t):
        """Piecewise-constant interpolant: M_n on ((n-1) tau, n tau]."""
        n = int(math.ceil(t / self.tau - 1e-9))
        return self.densities[min(max(n, 0), len(self.steps))]


def _rms(w):
    return float(np.sqrt(np.mean(w * w)))


def _weighted_gradient(g, u):
    # Riesz representative of dJ in L2(u): n * dJ/df_i / u_i
    r = len(u) * g / u
    return r, float(np.sqrt(np.mean(u * r * r)))


def _minimize(spec, u, tau, f0, gtol, max_iter):
    n = len(u)
    obj, grad, hess = _compiled(spec, n)
    uj = jnp.asarray(u)
    f = np.array(f0, dtype=float)
    J = float(obj(f, uj, tau))
    history = [J]
    gnorm = math.inf
    for it in range(max_iter):
        g = np.asarray(grad(f, uj, tau))
        _, gnorm = _weighted_gradient(g, u)
        if gnorm <= gtol:
            return f, J, it, gnorm
        H = np.asarray(hess(f, uj, tau))
        H = 0.5 * (H + H.T)
        shift = 0.0
        scale = np.max(np.abs(np.diag(H)))
        while True:
            try:
                L = np.linalg.cholesky(H + shift * scale * np.eye(n))
                break
            except np.linalg.LinAlgError:
                shift = max(2 * shift, 1e-10) if shift else 1e-10
                if shift > 1e3:
                    raise OptimizationFailure(
                        "Hessian regularization failed", {"iteration": it, "objective": J}
                    )
        step = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        slope = float(g @ step)
        # Newton step at round-off size: the gradient is noise from here on
        if _rms(step) <= STEP_RTOL * _rms(f) and _feasible(f + step):
            f = f + step
            g = np.asarray(grad(f, uj, tau))
            return f, float(obj(f, uj, tau)), it + 1, _weighted_gradient(g, u)[1]
        noise = 8.0 * np.finfo(float).eps * (1.0 + abs(J))
        t = 1.0
        accepted = False
        while t > 1e-12:
            cand = f + t * step
            if _feasible(cand):
                Jc = float(obj(cand, uj, tau))
                if Jc <= J + 1e-4 * t * slope + noise:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            raise OptimizationFailure(
                "line search failed",
                {"iteration": it, "objective": J, "gradient_norm": gnorm, "history": history},
            )
        f, J = cand, Jc
        history.append(J)
    raise OptimizationFailure(
        "iteration budget exhausted",
        {"iterations": max_iter, "objective": J, "gradient_norm": gnorm},
    )


def velocity(prev, result, tau):
    """U_n = -(T - Id) / tau with T the optimal map from M_n back to M_{n-1}."""
    tm = optimal_map(result, prev)
    return PeriodicField(-(tm.values - tm.x) / tau)


def residual_field(spec, result, vel):
    return samples(vel) + derivative(first_variation(spec, result), 1)


def el_residual(spec, step):
    """|U_n + d/dx dE/du(M_n)| in L2(M_n)."""
    r = residual_field(spec, step.result, step.velocity)
    return float(np.sqrt(np.mean(step.result.values * r * r)))


def jko_step(spec, prev, tau, f0=None, gtol=GTOL, max_iter=MAX_ITER):
    """One minimizing-movement step from ``prev``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    prev = prev if isinstance(prev, PeriodicDensity) else PeriodicDensity.from_samples(prev)
    if prev.min <= 0:
        raise FoldError("previous density must be strictly positive")
    u = prev.values
    n = len(u)
    f_start = np.zeros(n) if f0 is None else np.asarray(f0, float)
    if not _feasible(f_start):
        f_start = np.zeros(n)
    f, J, iters, gnorm = _minimize(spec, u, tau, f_start, gtol, max_iter)
    J0 = evaluate(spec, prev)
    if J > J0 + 1e-12 * (1 + abs(J0)):
        raise OptimizationFailure(
            "no decrease below the trivial candidate", {"objective": J, "trivial": J0}
        )
    result = pushforward(prev, f)
    transport = float(np.sqrt(np.mean(f * f * u)))
    w2 = w2_distance(prev, result) if transport > 0 else 0.0
    resolved = False
    if transport > 0 and abs(w2 - transport) > W2_CHECK * transport:
        logger.info("re-solving step: W2 %.3g vs transport %.3g", w2, transport)
        base = optimal_map(prev, result).displacement.values
        f, J, more, gnorm = _minimize(spec, u, tau, base, gtol, max_iter)
        iters += more
        result = pushforward(prev, f)
        transport = float(np.sqrt(np.mean(f * f * u)))
        w2 = w2_distance(prev, result)
        resolved = True
    vel = velocity(prev, result, tau) if transport > 0 else PeriodicField(np.zeros(n))
    energy = evaluate(spec, result)
    step = JKOStep(
        prev, result, PeriodicField(f), tau, vel, J, 0.0, energy, w2, iters, gnorm, resolved
    )
    return replace(step, el_residual=el_residual(spec, step))


def domain_monitor(traj, budget):
    """First step index leaving {W2(M_n, mu0) < delta/4, min > m, E < c}."""
    out = replace(budget, exit_step=None, reason="")
    mu0 = traj.initial
    for i, mu in enumerate(traj.densities):
        e = evaluate(traj.spec, mu)
        if e >= budget.c:
            return replace(out, exit_step=i, reason=f"energy {e:.6g} >= c")
        if mu.min <= budget.m:
            return replace(out, exit_step=i, reason=f"min {mu.min:.6g} <= m")
        if i and w2_distance(mu0, mu) >= budget.delta / 4:
            return replace(out, exit_step=i, reason="left the W2 ball of radius delta/4")
    return out


def _exit_reason(spec, mu0, mu, e, budget):
    if e >= budget.c:
        return f"energy {e:.6g} >= c"
    if mu.min <= budget.m:
        return f"min {mu.min:.6g} <= m"
    if w2_distance(mu0, mu) >= budget.delta / 4:
        return "left the W2 ball of radius delta/4"
    return ""


def flow(spec, mu0, tau, horizon, budget=None, gtol=GTOL, max_iter=MAX_ITER, callback=None):
    """Iterate JKO steps up to ``horizon`` or until the budget is exhausted."""
    mu0 = mu0 if isinstance(mu0, PeriodicDensity) else PeriodicDensity.from_samples(mu0)
    if budget is not None:
        budget.validate(spec, mu0)
        budget = replace(budget, exit_step=None, reason="")
    traj = JKOTrajectory(spec, mu0, tau, budget=budget)
    nsteps = int(round(horizon / tau))
    prev = mu0
    f_prev = None
    for i in range(1, nsteps + 1):
        try:
            step = jko_step(spec, prev, tau, f0=f_prev, gtol=gtol, max_iter=max_iter)
        except (OptimizationFailure, FoldError) as exc:
            traj.failure = f"step {i}: {exc}"
            logger.warning("flow stopped: %s", traj.failure)
            break
        traj.steps.append(step)
        if callback is not None:
            callback(i, step)
        if budget is not None:
            reason = _exit_reason(spec, mu0, step.result, step.energy, budget)
            if reason:
                traj.budget = replace(budget, exit_step=i, reason=reason)
                break
        prev = step.result
        f_prev = step.displacement.values
    return traj


def subdifferential_slack(spec, step, nu, lam):
    """E(nu) - E(M_n) - int <-U_n, T - Id> dM_n - (lam/2) W2^2(M_n, nu).

    Nonnegative when -U_n is a restricted lambda-subgradient at M_n."""
    tm = optimal_map(step.result, nu)
    disp = tm.values - tm.x
    mn = step.result.values
    inner = float(np.mean(mn * (-step.velocity.values) * disp))
    return evaluate(spec, nu) - step.energy - inner - 0.5 * lam * tm.cost


__all__ = [
    "JKOStep",
    "JKOTrajectory",
    "DomainBudget",
    "jko_step",
    "flow",
    "el_residual",
    "domain_monitor",
    "velocity",
    "subdifferential_slack",
]
