"""Seeded random densities: smooth trig perturbations of the uniform density,
rejection-sampled into energy sub-level sets or Wasserstein balls."""

import numpy as np

from .energy import evaluate
from .geometry import PeriodicDensity


def random_trig(n, rng, modes=6, decay=2.0):
    """Zero-mean real trig polynomial with coefficients decaying like k^-decay,
    normalized to unit sup norm."""
    x = np.arange(n) / n
    k = np.arange(1, modes + 1)
    amp = rng.standard_normal((2, modes)) / k**decay
    w = amp[0] @ np.cos(2 * np.pi * np.outer(k, x)) + amp[1] @ np.sin(2 * np.pi * np.outer(k, x))
    return w / np.max(np.abs(w))


def random_density(n, rng, amplitude=0.5, modes=6, decay=2.0):
    """1 + a w with w a random trig polynomial, |w| <= 1; positive for a < 1."""
    a = amplitude * rng.uniform(0.1, 1.0)
    return PeriodicDensity.from_samples(1.0 + a * random_trig(n, rng, modes, decay))


def sublevel_sample(spec, c, n, rng, count, m=0.0, amplitude=0.9, modes=6, max_tries=100000):
    """``count`` densities with E < c and min > m, by rejection."""
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"rejection sampling accepted only {len(out)} of {count}")
        u = random_density(n, rng, amplitude, modes)
        if u.min <= m:
            continue
        e = evaluate(spec, u)
        if e < c:
            out.append(u)
    return out


def nearby(u, rng, size, modes=4):
    """Perturb a density by a random trig field of sup norm ``size`` times u."""
    base = u.values
    w = random_trig(len(base), rng, modes)
    return PeriodicDensity.from_samples(base * (1.0 + size * w))


def child_rng(seed, index):
    """Deterministic per-sample generator, independent of evaluation order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


__all__ = ["random_trig", "random_density", "sublevel_sample", "nearby", "child_rng"]
