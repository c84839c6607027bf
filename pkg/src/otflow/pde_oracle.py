"""Method-of-lines reference solver for u_t = (u (dE/du)_x)_x.

The spatial operator is ``energy.pde_rhs`` in divergence form, so every
scheme conserves mass to round-off.  Time stepping is either an implicit
Radau/BDF integrator from scipy (default; the equations are stiff of order
2k + 2) or classical RK4 with a conservative explicit step.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .energy import evaluate, pde_rhs
from .exceptions import StepSizeError
from .geometry import PeriodicDensity

logger = logging.getLogger(__name__)

POSITIVITY_FLOOR = 1e-6
METHODS = ("radau", "bdf", "rk4")


@dataclass
class PDETrajectory:
    spec: object
    times: np.ndarray
    states: list
    dt: float | None
    scheme: str
    message: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def energies(self):
        return [evaluate(self.spec, s) for s in self.states]

    def state_at(self, t):
        """Linear interpolation in time between stored states."""
        times = self.times
        if t < times[0] - 1e-15 or t > times[-1] * (1 + 1e-12) + 1e-15:
            raise ValueError(f"t = {t} outside [{times[0]}, {times[-1]}]")
        j = int(np.clip(np.searchsorted(times, t), 1, len(times) - 1))
        t0, t1 = times[j - 1], times[j]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        w = min(max(w, 0.0), 1.0)
        return (1 - w) * self.states[j - 1].values + w * self.states[j].values


def auto_dt(spec, u0):
    """Explicit step below the RK4 stability limit (~2.78) for the largest
    spectral eigenvalue max(u) (pi n)^(2k+2), with a factor-2 margin."""
    n = len(u0.values)
    order = 2 * spec.order + 2
    return 1.0 / ((math.pi * n) ** order * float(np.max(u0.values)))


def _rk4(spec, u0, t_end, dt, save):
    steps = int(math.ceil(t_end / dt - 1e-12))
    dt = t_end / steps
    stride = max(1, steps // max(save, 1))
    u = u0.values.copy()
    times = [0.0]
    states = [u0]
    e_prev = evaluate(spec, u0)
    message = ""
    for i in range(1, steps + 1):
        k1 = pde_rhs(spec, u)
        k2 = pde_rhs(spec, u + 0.5 * dt * k1)
        k3 = pde_rhs(spec, u + 0.5 * dt * k2)
        k4 = pde_rhs(spec, u + dt * k3)
        u = u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise StepSizeError(f"non-finite state at step {i}; dt = {dt:.3g} too large")
        if u.min() < POSITIVITY_FLOOR:
            message = f"positivity lost at t = {i * dt:.6g}"
            break
        if i % stride == 0 or i == steps:
            e = evaluate(spec, u)
            if e > e_prev + 1e-6:
                raise StepSizeError(f"energy increased by {e - e_prev:.3g}; dt = {dt:.3g} too large")
            e_prev = e
            times.append(i * dt)
            states.append(PeriodicDensity(u.copy()))
    return np.array(times), states, dt, message


def pde_solve(spec, u0, t_end, dt=None, method="radau", save=100, rtol=1e-10, atol=1e-12):
    """Integrate the gradient-flow PDE from u0 to t_end.

    ``save`` states are stored at equal spacing (the implicit methods also
    honour explicit ``t_eval`` through ``save`` times).  ``dt`` only applies to
    RK4; ``None`` picks :func:`auto_dt`.
    """
    u0 = u0 if isinstance(u0, PeriodicDensity) else PeriodicDensity.from_samples(u0)
    if u0.min <= 0:
        raise ValueError("initial density must be strictly positive")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if method == "rk4":
        step = auto_dt(spec, u0) if dt is None else dt
        times, states, used, message = _rk4(spec, u0, t_end, step, save)
        return PDETrajectory(spec, times, states, used, "rk4", message)

    t_eval = np.linspace(0.0, t_end, save + 1)

    def rhs(_t, u):
        return pde_rhs(spec, u)

    def floor_event(_t, u):
        return float(u.min()) - POSITIVITY_FLOOR

    floor_event.terminal = True
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        u0.values,
        method="Radau" if method == "radau" else "BDF",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
        events=floor_event,
    )
    if sol.status < 0:
        raise StepSizeError(f"integrator failed: {sol.message}")
    message = ""
    if sol.status == 1:
        message = f"positivity lost at t = {sol.t_events[0][0]:.6g}"
    states = [u0] + [PeriodicDensity.from_samples(sol.y[:, i]) for i in range(1, sol.y.shape[1])]
    stats = {"nfev": int(sol.nfev), "njev": int(sol.njev), "nlu": int(sol.nlu)}
    return PDETrajectory(spec, np.asarray(sol.t), states, None, method, message, stats)


@dataclass(frozen=True)
class Comparison:
    times: np.ndarray
    sup: np.ndarray
    l2: np.ndarray
    energy_gap: np.ndarray

    @property
    def max_sup(self):
        return float(np.max(self.sup)) if len(self.sup) else 0.0

    @property
    def final_sup(self):
        return float(self.sup[-1]) if len(self.sup) else 0.0


def compare(jko, pde):
    """Differences between a JKO trajectory (at t = n tau) and a PDE trajectory."""
    t_max = min(jko.times[-1], pde.times[-1] * (1 + 1e-12))
    if t_max <= 0 and len(jko.times) > 1:
        raise ValueError("trajectories share no time range")
    times, sup, l2, egap = [], [], [], []
    for t, mu, e in zip(jko.times, jko.densities, jko.energies):
        if t > t_max + 1e-15:
            break
        ref = pde.state_at(t)
        d = mu.values - ref
        times.append(t)
        sup.append(float(np.max(np.abs(d))))
        l2.append(float(np.sqrt(np.mean(d * d))))
        egap.append(e - evaluate(pde.spec, ref))
    return Comparison(np.array(times), np.array(sup), np.array(l2), np.array(egap))


def linear_rate(spec, mode=1):
    """Decay rate of mode ``mode`` for the flow linearized about u = 1."""
    k = 2.0 * math.pi * mode
    fam = spec.family
    if fam == "dirichlet":
        return k**4
    if fam == "hk":
        return k ** (2 * spec.param + 2)
    if fam in ("power", "fisher"):
        return spec.exponent**2 * k**4
    if fam == "log":
        return k**4
    return 2.0 * k**4 + 6.0 * spec.param * k**2


__all__ = ["PDETrajectory", "Comparison", "pde_solve", "compare", "auto_dt", "linear_rate"]
