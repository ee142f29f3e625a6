"""Time-dependent, space-independent velocity fields H(t) on a horizon [0, T]."""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from .errors import DegenerateField, OutOfHorizon
from .quadrature import adaptive_simpson, cumulative_adaptive_simpson

DEFAULT_SAMPLES = 10_001
DEGENERACY_TOL = 1e-10
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a, b, tol=1e-13, maximize=False):
    """Locate an extremum of a unimodal scalar function on [a, b]."""
    sign = -1.0 if maximize else 1.0
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = sign * f(c), sign * f(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = sign * f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = sign * f(d)
    t = 0.5 * (a + b)
    return t, f(t)


class VelocityField:
    """Base class.  Subclasses implement :meth:`_eval` and optionally :meth:`_deriv`.

    Evaluation is vectorised: scalar ``t`` gives shape ``(d,)``, an array of
    ``n`` times gives ``(n, d)``.
    """

    kind = "abstract"
    analytic_derivative = True
    is_c1 = True

    def __init__(self, horizon, dim):
        self.horizon = float(horizon)
        self.dim = int(dim)
        if not self.horizon > 0:
            raise ValueError("horizon T must be positive")

    # subclasses -----------------------------------------------------------
    def _eval(self, t):
        raise NotImplementedError

    def _deriv(self, t):
        raise NotImplementedError

    def breakpoints(self):
        """Interior times where H may fail to be smooth."""
        return np.zeros(0)

    # public API -----------------------------------------------------------
    def _check_times(self, t):
        t = np.asarray(t, dtype=float)
        slack = 1e-12 * max(1.0, self.horizon)
        if np.any(t < -slack) or np.any(t > self.horizon + slack):
            raise OutOfHorizon(f"time outside [0, {self.horizon}]")
        return np.clip(t, 0.0, self.horizon)

    def __call__(self, t):
        t = self._check_times(t)
        out = self._eval(np.atleast_1d(t))
        return out[0] if t.ndim == 0 else out

    def speed(self, t):
        return np.linalg.norm(self(t), axis=-1)

    def derivative(self, t):
        t = self._check_times(t)
        ts = np.atleast_1d(t)
        if self.analytic_derivative:
            out = self._deriv(ts)
        else:
            step = 1e-6 * self.horizon
            hi = np.minimum(ts + step, self.horizon)
            lo = np.maximum(ts - step, 0.0)
            out = (self._eval(hi) - self._eval(lo)) / (hi - lo)[:, None]
        return out[0] if t.ndim == 0 else out

    def bounds(self, n_samples=DEFAULT_SAMPLES):
        """``(H0, H*)``: min and max of |H| on [0, T].

        Uniform sampling followed by golden-section refinement in the two
        cells around each extremal sample.
        """
        if n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        ts = np.linspace(0.0, self.horizon, n_samples)
        ts = np.union1d(ts, self.breakpoints())
        speeds = np.linalg.norm(self._eval(ts), axis=1)

        def refine(k, maximize):
            a = ts[max(k - 1, 0)]
            b = ts[min(k + 1, ts.size - 1)]
            _, val = golden_section(
                lambda s: float(np.linalg.norm(self._eval(np.array([s]))[0])), a, b,
                maximize=maximize,
            )
            return val

        h0 = min(float(speeds.min()), refine(int(np.argmin(speeds)), False))
        hstar = max(float(speeds.max()), refine(int(np.argmax(speeds)), True))
        if h0 <= DEGENERACY_TOL:
            raise DegenerateField(f"min |H(t)| = {h0:.3e} violates the positivity assumption")
        return h0, hstar

    @cached_property
    def speed_bounds(self):
        return self.bounds()

    @property
    def h0(self):
        return self.speed_bounds[0]

    @property
    def hstar(self):
        return self.speed_bounds[1]

    def lipschitz_estimate(self, n_samples=DEFAULT_SAMPLES, safety=1.1):
        if n_samples < 3:
            raise ValueError("n_samples must be at least 3")
        if safety < 1:
            raise ValueError("safety factor must be >= 1")
        ts = np.linspace(0.0, self.horizon, n_samples)
        rates = np.linalg.norm(self._deriv(ts), axis=1)
        k = int(np.argmax(rates))
        a, b = ts[max(k - 1, 0)], ts[min(k + 1, ts.size - 1)]
        _, top = golden_section(
            lambda s: float(np.linalg.norm(self._deriv(np.array([s]))[0])), a, b, maximize=True
        )
        return safety * max(float(rates.max()), top)

    def displacement(self, t):
        """``X(t) = int_0^t H(s) ds`` by adaptive Simpson (abs. tol 1e-12 per component)."""
        t = float(self._check_times(t))
        cuts = [0.0] + [b for b in self.breakpoints() if 0.0 < b < t] + [t]
        total = np.zeros(self.dim)
        for a, b in zip(cuts[:-1], cuts[1:]):
            total += adaptive_simpson(
                lambda s: self._eval(np.array([s]))[0], a, b, tol=1e-12 / (len(cuts) - 1)
            )
        return total

    def displacement_many(self, ts):
        """Vectorised :meth:`displacement` for an array of times (any order)."""
        ts = self._check_times(ts)
        flat = np.atleast_1d(ts).ravel()
        knots = np.union1d(np.union1d(flat, [0.0]), self.breakpoints())
        table = cumulative_adaptive_simpson(self._eval, knots, tol=1e-12)
        idx = np.searchsorted(knots, flat)
        out = table[idx]
        return out.reshape(np.shape(ts) + (self.dim,))

    def describe(self):
        return {"kind": self.kind, "horizon": self.horizon}


class ConstantField(VelocityField):
    kind = "constant"

    def __init__(self, vector, horizon):
        self.vector = np.atleast_1d(np.asarray(vector, dtype=float))
        super().__init__(horizon, self.vector.size)
        self.speed_bounds  # validate positivity now

    def _eval(self, t):
        return np.tile(self.vector, (t.size, 1))

    def _deriv(self, t):
        return np.zeros((t.size, self.dim))

    def lipschitz_estimate(self, n_samples=DEFAULT_SAMPLES, safety=1.1):
        return 0.0

    def displacement(self, t):
        t = float(self._check_times(t))
        # exact for a constant integrand, and matches adaptive Simpson to roundoff
        return adaptive_simpson(lambda s: self.vector, 0.0, t)

    def describe(self):
        return {"kind": self.kind, "vector": self.vector.tolist(), "horizon": self.horizon}


class RotationField(VelocityField):
    """``H(t) = radius * (cos(rate*t + phase), sin(rate*t + phase))``."""

    kind = "rotation"

    def __init__(self, radius, rate, horizon, phase=0.0):
        self.radius = float(radius)
        self.rate = float(rate)
        self.phase = float(phase)
        super().__init__(horizon, 2)
        self.speed_bounds

    def _eval(self, t):
        a = self.rate * t + self.phase
        return self.radius * np.column_stack([np.cos(a), np.sin(a)])

    def _deriv(self, t):
        a = self.rate * t + self.phase
        return self.radius * self.rate * np.column_stack([-np.sin(a), np.cos(a)])

    def describe(self):
        return {
            "kind": self.kind, "radius": self.radius, "rate": self.rate,
            "phase": self.phase, "horizon": self.horizon,
        }


class TabulatedField(VelocityField):
    """Piecewise-linear interpolation of sampled velocities.  Lipschitz, not C^1."""

    kind = "tabulated"
    analytic_derivative = False
    is_c1 = False

    def __init__(self, times, vectors):
        times = np.asarray(times, dtype=float)
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim == 1:
            vectors = vectors[:, None]
        if times.ndim != 1 or times.size < 2 or vectors.shape[0] != times.size:
            raise ValueError("table needs >= 2 rows of (t, H_1..H_d)")
        if abs(times[0]) > 1e-15 or np.any(np.diff(times) <= 0):
            raise ValueError("table times must start at 0 and increase strictly")
        self.times = times
        self.vectors = vectors
        super().__init__(times[-1], vectors.shape[1])
        self.speed_bounds

    @classmethod
    def from_csv(cls, path):
        """Rows ``t, H_1, ..., H_d``; an optional non-numeric header row is skipped."""
        with open(path) as fh:
            first = fh.readline().split(",")[0].strip()
        try:
            float(first)
            skip = 0
        except ValueError:
            skip = 1
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, skiprows=skip)
        return cls(data[:, 0], data[:, 1:])

    def _eval(self, t):
        return np.column_stack(
            [np.interp(t, self.times, self.vectors[:, i]) for i in range(self.dim)]
        )

    def _deriv(self, t):
        slopes = np.diff(self.vectors, axis=0) / np.diff(self.times)[:, None]
        k = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, slopes.shape[0] - 1)
        return slopes[k]

    def breakpoints(self):
        return self.times[1:-1]

    def lipschitz_estimate(self, n_samples=DEFAULT_SAMPLES, safety=1.1):
        if safety < 1:
            raise ValueError("safety factor must be >= 1")
        diffs = np.linalg.norm(np.diff(self.vectors, axis=0), axis=1) / np.diff(self.times)
        return safety * float(diffs.max())

    def describe(self):
        return {"kind": self.kind, "rows": int(self.times.size), "horizon": self.horizon}


class CompositeField(VelocityField):
    """Pointwise sum of component fields sharing one horizon."""

    kind = "composite"

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise ValueError("composite field needs at least one part")
        horizon, dim = parts[0].horizon, parts[0].dim
        if any(p.dim != dim or abs(p.horizon - horizon) > 1e-12 for p in parts):
            raise ValueError("composite parts must share dimension and horizon")
        self.parts = parts
        self.analytic_derivative = all(p.analytic_derivative for p in parts)
        self.is_c1 = all(p.is_c1 for p in parts)
        super().__init__(horizon, dim)
        self.speed_bounds

    def _eval(self, t):
        return sum(p._eval(t) for p in self.parts)

    def _deriv(self, t):
        return sum(p._deriv(t) for p in self.parts)

    def breakpoints(self):
        pts = [p.breakpoints() for p in self.parts]
        return np.unique(np.concatenate(pts)) if pts else np.zeros(0)

    def describe(self):
        return {"kind": self.kind, "parts": [p.describe() for p in self.parts]}


def constant(vector, horizon):
    return ConstantField(vector, horizon)


def rotation(radius, rate, horizon, phase=0.0):
    return RotationField(radius, rate, horizon, phase)
