"""
Uniform periodic grids on the circle R/Z and the calculus used everywhere else:
spectral and finite-difference derivatives, trapezoid quadrature, trigonometric
interpolation at off-grid points, rotations and mollification.

Densities are stored nodally, ``u_i = u(i/n)``.
"""

import csv
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ResolutionError

logger = logging.getLogger(__name__)

MASS_TOL = 1e-12
MIN_POINTS = 8


@dataclass(frozen=True)
class Grid:
    """n equispaced nodes x_i = i/n on [0, 1)."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_POINTS:
            raise ValueError(f"grid needs an integer n >= {MIN_POINTS}, got {self.n}")

    @property
    def spacing(self):
        return 1.0 / self.n

    @property
    def x(self):
        return np.arange(self.n) / self.n


def _frozen(values):
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PeriodicField:
    """Periodic samples of a displacement or velocity field."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        Grid(len(self.values))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field samples must be finite")

    @property
    def grid(self):
        return Grid(len(self.values))

    @property
    def n(self):
        return len(self.values)

    @property
    def x(self):
        return self.grid.x


@dataclass(frozen=True)
class PeriodicDensity:
    """Nonnegative samples of a unit-mass density u, so that mu = u dx."""

    values: np.ndarray
    label: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        Grid(len(self.values))
        v = self.values
        if not np.all(np.isfinite(v)):
            raise ValueError("density samples must be finite")
        if v.min() < 0.0:
            raise ValueError(f"density has negative samples (min {v.min():.3e})")
        if abs(v.mean() - 1.0) > MASS_TOL:
            raise ValueError(f"density mass {v.mean():.15f} differs from 1")

    @classmethod
    def from_samples(cls, values, label=""):
        """Build a density from nonnegative samples, rescaling to unit mass."""
        v = np.asarray(values, dtype=float)
        mass = v.mean()
        if not mass > 0:
            raise ValueError("samples carry no mass")
        return cls(v / mass, label=label)

    @classmethod
    def uniform(cls, n):
        return cls(np.ones(n), label="uniform")

    @property
    def grid(self):
        return Grid(len(self.values))

    @property
    def n(self):
        return len(self.values)

    @property
    def x(self):
        return self.grid.x

    @property
    def min(self):
        return float(self.values.min())

    @property
    def max(self):
        return float(self.values.max())


def samples(w):
    """Return the sample array of a density, a field or anything array-like."""
    return np.asarray(getattr(w, "values", w), dtype=float)


def wavenumbers(n):
    """Angular wavenumbers 2*pi*k for the rfft layout of length-n data."""
    return 2.0 * np.pi * np.arange(n // 2 + 1)


def _spectral_multiplier(n, order):
    mult = (1j * wavenumbers(n)) ** order
    if n % 2 == 0 and order % 2 == 1:
        mult[-1] = 0.0
    return mult


def derivative(w, order=1, method="spectral"):
    """Derivative of periodic samples.

    Parameters
    ----------
    w : PeriodicField, PeriodicDensity or array
        Samples on the uniform grid.
    order : int
        Derivative order, at least 1.
    method : {"spectral", "finite-diff"}
        ``spectral`` differentiates the trigonometric interpolant (Nyquist mode
        dropped for odd orders); ``finite-diff`` uses 2nd-order centered
        stencils, which is what kinked data needs.

    Returns
    -------
    ndarray
        Samples of the derivative.
    """
    if int(order) != order or order < 1:
        raise ValueError(f"derivative order must be a positive integer, got {order}")
    v = samples(w)
    n = len(v)
    if method == "spectral":
        return np.fft.irfft(np.fft.rfft(v) * _spectral_multiplier(n, order), n=n)
    if method in ("finite-diff", "fd"):
        h = 1.0 / n
        out = v
        for _ in range(order // 2):
            out = (np.roll(out, -1) - 2.0 * out + np.roll(out, 1)) / h**2
        if order % 2:
            out = (np.roll(out, -1) - np.roll(out, 1)) / (2.0 * h)
        return out
    raise ValueError(f"unknown differentiation method {method!r}")


def integrate(w):
    """Periodic trapezoid rule over one period (the sample mean)."""
    return float(np.mean(samples(w)))


def antiderivative_at_nodes(w):
    """Exact-for-trig-polynomials values of int_0^{x_i} w, i = 0..n-1."""
    v = samples(w)
    n = len(v)
    c = np.fft.rfft(v) / n
    k = wavenumbers(n)
    x = np.arange(n) / n
    out = c[0].real * x
    coef = np.zeros_like(c)
    coef[1:] = c[1:] / (1j * k[1:])
    if n % 2 == 0:
        coef[-1] = 0.0  # Nyquist cosine integrates to sin(pi*n*x), zero on nodes
    weights = np.full(len(c), 2.0)
    weights[0] = 0.0
    if n % 2 == 0:
        weights[-1] = 1.0
    full = np.zeros(n, dtype=complex)
    full[: len(c)] = weights * coef
    periodic = np.fft.ifft(full).real * n
    return out + periodic - periodic[0]


class TrigInterpolant:
    """Trigonometric interpolant of periodic samples, evaluable anywhere on R.

    The Nyquist mode of even-length data is represented by ``cos(pi n x)`` so the
    interpolant is real and reproduces the samples exactly.
    """

    _BLOCK = 1 << 21

    def __init__(self, values):
        v = samples(values)
        self.n = len(v)
        c = np.fft.rfft(v) / self.n
        w = np.full(len(c), 2.0)
        w[0] = 1.0
        if self.n % 2 == 0:
            w[-1] = 1.0
        self._coef = c * w
        self._k = wavenumbers(self.n)
        self.mean = float(c[0].real)

    def _evaluate(self, x, *coefs):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        stack = np.array(coefs)
        out = np.empty((len(coefs), flat.size))
        step = max(1, self._BLOCK // stack.shape[1])
        for start in range(0, flat.size, step):
            xs = flat[start:start + step]
            phase = np.exp(1j * np.outer(self._k, xs))
            out[:, start:start + step] = (stack @ phase).real
        return [row.reshape(x.shape) for row in out]

    def _derivative_coef(self, order):
        return self._coef * (1j * self._k) ** order if order else self._coef

    def __call__(self, x, order=0):
        return self._evaluate(x, self._derivative_coef(order))[0]

    def evaluate(self, x, orders=(0, 1)):
        """Several derivatives at the same points, sharing one phase matrix."""
        return self._evaluate(x, *[self._derivative_coef(k) for k in orders])

    def _antiderivative_coef(self):
        coef = np.zeros_like(self._coef)
        coef[1:] = self._coef[1:] / (1j * self._k[1:])
        return coef

    def antiderivative(self, x):
        """int_0^x of the interpolant, including the linear mean part."""
        x = np.asarray(x, dtype=float)
        coef = self._antiderivative_coef()
        offset = self._evaluate(np.zeros(1), coef)[0][0]
        return self.mean * x + self._evaluate(x, coef)[0] - offset

    def antiderivative_and_value(self, x):
        """(int_0^x p, p(x)) sharing one phase matrix."""
        x = np.asarray(x, dtype=float)
        coef = self._antiderivative_coef()
        offset = self._evaluate(np.zeros(1), coef)[0][0]
        prim, val = self._evaluate(x, coef, self._coef)
        return self.mean * x + prim - offset, val


def rotate(w, theta):
    """Samples of x -> w(x - theta), i.e. the profile translated by +theta."""
    v = samples(w)
    n = len(v)
    c = np.fft.rfft(v) * np.exp(-1j * wavenumbers(n) * theta)
    if n % 2 == 0:
        # keep the Nyquist cosine real: cos(pi n (x - theta)) sampled on nodes
        c[-1] = np.fft.rfft(v)[-1].real * np.cos(np.pi * n * theta)
    out = np.fft.irfft(c, n=n)
    if isinstance(w, PeriodicDensity):
        return PeriodicDensity.from_samples(np.clip(out, 0.0, None), label=w.label)
    if isinstance(w, PeriodicField):
        return PeriodicField(out)
    return out


def circle_distance(x, y):
    """Geodesic distance on R/Z."""
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def bump_kernel(n, k):
    """Grid samples of eta_k(x) ~ exp(-1/(1-(kx)^2)) on |x| < 1/k, unit grid mass.

    Returns the offsets (in grid cells) and weights of the discrete kernel.
    """
    if k < 1:
        raise ValueError("mollifier index k must be positive")
    if k > n / 4:
        raise ResolutionError(f"mollifier width 1/{k} is unresolvable on n={n} (need k <= n/4)")
    half = int(np.ceil(n / k))
    offsets = np.arange(-half, half + 1)
    r = k * offsets / n
    inside = np.abs(r) < 1.0
    weights = np.zeros(len(offsets))
    weights[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    keep = weights > 0
    offsets, weights = offsets[keep], weights[keep]
    return offsets, weights / weights.sum()


def mollify(u, k):
    """Circular convolution of a density with the compactly supported bump of width 1/k.

    The discrete kernel has unit grid mass and nonnegative weights, so the output
    keeps unit mass and its minimum never drops below the input minimum.
    """
    v = samples(u)
    offsets, weights = bump_kernel(len(v), k)
    out = np.zeros_like(v)
    for off, wt in zip(offsets, weights):
        out += wt * np.roll(v, off)
    return PeriodicDensity.from_samples(out, label=getattr(u, "label", ""))


def sine_density(n, amp=0.5, mode=1, phase=0.0):
    """1 + amp*sin(2*pi*mode*(x + phase)) sampled on n nodes."""
    x = np.arange(n) / n
    return PeriodicDensity.from_samples(1.0 + amp * np.sin(2 * np.pi * mode * (x + phase)),
                                        label=f"sine:amp={amp},mode={mode}")


def read_density_csv(path):
    """Load a density from a CSV with header ``x,u``.

    Rows must be sorted with x on the uniform grid i/n. A mass off by more than
    1e-6 triggers a warning; the result is always rescaled to unit mass.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = [h.strip() for h in next(reader)]
        if header[:2] != ["x", "u"]:
            raise ValueError(f"{path}: expected header 'x,u', got {','.join(header)}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    x = np.array([r[0] for r in rows])
    u = np.array([r[1] for r in rows])
    n = len(u)
    if n < MIN_POINTS:
        raise ValueError(f"{path}: need at least {MIN_POINTS} rows")
    if np.any(np.diff(x) <= 0) or x[0] < 0 or x[-1] >= 1:
        raise ValueError(f"{path}: x must be sorted and lie in [0, 1)")
    if np.max(np.abs(x - np.arange(n) / n)) > 1e-9:
        raise ValueError(f"{path}: x is not the uniform grid i/{n}")
    if np.any(u < 0):
        raise ValueError(f"{path}: negative density samples")
    mass = u.mean()
    if abs(mass - 1.0) > 1e-6:
        warnings.warn(f"{path}: mass {mass:.8f} renormalized to 1", stacklevel=2)
    return PeriodicDensity.from_samples(u, label=str(path))


def write_density_csv(path, u, header=None):
    v = samples(u)
    x = np.arange(len(v)) / len(v)
    with open(path, "w", newline="") as fh:
        if header:
            for line in header:
                fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["x", "u"])
        for xi, ui in zip(x, v):
            w.writerow([repr(float(xi)), repr(float(ui))])
