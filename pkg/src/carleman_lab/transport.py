"""Exact solutions of the transport IBVP by characteristics.

Because H does not depend on x, characteristics are translates of the
displacement curve ``X(t) = int_0^t H``: the value at ``(x, t)`` is carried
from the point where the backward path ``x - (X(t) - X(s))`` last entered the
domain (boundary data) or from its position at the initial time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable

import numpy as np

from . import kernels
from ._workers import parallel_map
from .errors import OutOfHorizon, RhoOutOfRange
from .geometry import Domain
from .velocity import RotationField

DEFAULT_TABLE = 20_001


# ---------------------------------------------------------------- profiles
def gaussian(center, width, amplitude=1.0):
    center = np.asarray(center, dtype=float)

    def F(p):
        p = np.asarray(p, dtype=float)
        return amplitude * np.exp(-np.sum((p - center) ** 2, axis=-1) / width**2)

    return F


def cosine_profile(wavevector, phase=0.0, offset=0.0, amplitude=1.0):
    k = np.asarray(wavevector, dtype=float)

    def F(p):
        return offset + amplitude * np.cos(np.asarray(p, dtype=float) @ k + phase)

    return F


def trig_product(freqs, amplitude=1.0):
    """``amplitude * prod_i cos(freqs_i * x_i)``."""
    freqs = np.asarray(freqs, dtype=float)

    def F(p):
        return amplitude * np.prod(np.cos(np.asarray(p, dtype=float) * freqs), axis=-1)

    return F


def bump(radius, center=None, amplitude=1.0):
    """Smooth compactly supported ``exp(1 - 1/(1 - |x/R|^2))`` inside ``|x| < R``."""

    def F(p):
        p = np.asarray(p, dtype=float)
        c = np.zeros(p.shape[-1]) if center is None else np.asarray(center, dtype=float)
        r2 = np.sum((p - c) ** 2, axis=-1) / radius**2
        out = np.zeros(r2.shape)
        inside = r2 < 1.0
        out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out

    return F


def constant_profile(value):
    def F(p):
        p = np.asarray(p, dtype=float)
        return np.full(p.shape[:-1], float(value))

    return F


# ---------------------------------------------------------------- solution
@dataclass(eq=False)
class SolutionField:
    """Samples of one solution on an interior grid and a boundary grid.

    ``rule(points, t)`` re-evaluates the generating solution on demand, and
    ``residual`` holds the PDE residual ``Pu`` at the interior samples.
    """

    domain: Domain
    field: object
    grid: object
    bgrid: object
    times: np.ndarray
    interior: np.ndarray  # (n_t, n_nodes)
    boundary: np.ndarray  # (n_t, n_bnodes)
    provenance: str
    rule: Callable | None = None
    residual: np.ndarray | None = None
    notes: list = dc_field(default_factory=list)

    def __post_init__(self):
        if self.residual is None:
            self.residual = np.zeros_like(self.interior)

    def evaluate(self, points, t):
        if self.rule is None:
            raise ValueError("solution carries no generating rule")
        return self.rule(np.asarray(points, dtype=float), float(t))

    def scaled(self, lam):
        rule = self.rule
        return replace(
            self,
            interior=lam * self.interior,
            boundary=lam * self.boundary,
            residual=lam * self.residual,
            rule=None if rule is None else (lambda p, t: lam * rule(p, t)),
            provenance=f"{self.provenance} x {lam:g}",
            notes=list(self.notes),
        )

    def interior_norms(self):
        """``||u(., t)||_{L2}`` per time slice."""
        return np.sqrt(np.maximum(self.interior**2 @ self.grid.weights, 0.0))


@dataclass(frozen=True, eq=False)
class TraceField:
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    times: np.ndarray
    values: np.ndarray  # (n_t, n_b)
    h_dot_nu: np.ndarray  # (n_t, n_b)
    sigma: np.ndarray  # exit-set mask, H.nu >= 0

    def norm_sq(self, exit_only=False):
        """``int |g|^2`` over the lateral boundary (or only its exit part)."""
        vals = self.values**2
        if exit_only:
            vals = np.where(self.sigma, vals, 0.0)
        per_time = vals @ self.weights
        return float(np.dot(time_weights(self.times), per_time))


def time_weights(times):
    """Composite Simpson weights on uniform odd samples, trapezoid otherwise."""
    times = np.asarray(times, dtype=float)
    n = times.size
    if n == 1:
        return np.zeros(1)
    dt = np.diff(times)
    if n >= 3 and n % 2 == 1 and np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        w = np.ones(n)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * dt[0] / 3.0
    w = np.zeros(n)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


def partition_times(partition, per_interval=8):
    """Uniform samples inside every piece (even count) with every cut time included."""
    per_interval = max(2, per_interval + (per_interval % 2))
    pieces = [
        np.linspace(a, b, per_interval + 1)[:-1]
        for a, b in zip(partition.times[:-1], partition.times[1:])
    ]
    return np.concatenate(pieces + [partition.times[-1:]])


# ---------------------------------------------------------------- solvers
class CharacteristicSolver:
    """Backward-characteristic evaluator for given initial and boundary data.

    ``u0(points)`` is the state at ``t0`` and ``g(points, times)`` the lateral
    boundary data.  The displacement is tabulated on ``n_table`` knots by
    adaptive Simpson and interpolated by cubic Hermite inside the tracer.
    """

    def __init__(self, domain, field, u0, g, t0=0.0, n_table=DEFAULT_TABLE, dmin=None,
                 extra_times=()):
        self.domain = domain
        self.field = field
        self.u0 = u0
        self.g = g
        self.t0 = float(t0)
        T = field.horizon
        if not 0.0 <= self.t0 <= T:
            raise OutOfHorizon(f"start time {t0} outside [0, {T}]")
        knots = np.linspace(self.t0, T, n_table) if T > self.t0 else np.array([self.t0, T])
        extra = np.asarray(list(extra_times), dtype=float)
        extra = extra[(extra >= self.t0) & (extra <= T)]
        bps = field.breakpoints()
        knots = np.unique(np.concatenate([knots, extra, bps[(bps > self.t0) & (bps < T)]]))
        self.knots = knots
        self.X = field.displacement_many(knots)
        self.H = field(knots)
        self.hstar = field.hstar
        self.dmin = dmin if dmin is not None else 1e-3 * domain.diameter() / self.hstar
        self.spec = domain.kernel_spec()

    def _table_for(self, t):
        k = int(np.searchsorted(self.knots, t))
        if k < self.knots.size and abs(self.knots[k] - t) <= 1e-14 * max(1.0, abs(t)):
            return self.knots, self.X, self.H, k
        # insert t as a knot; its displacement comes from the exact integral
        xt = self.field.displacement(t)
        knots = np.insert(self.knots, k, t)
        X = np.insert(self.X, k, xt, axis=0)
        H = np.insert(self.H, k, self.field(t), axis=0)
        return knots, X, H, k

    def trace(self, points, t, backend=None):
        t = float(t)
        if not self.t0 - 1e-12 <= t <= self.field.horizon + 1e-12:
            raise OutOfHorizon(f"t = {t} outside [{self.t0}, {self.field.horizon}]")
        t = min(max(t, self.t0), self.field.horizon)
        knots, X, H, k = self._table_for(t)
        code, center, radius, A, b = self.spec
        fn = backend or kernels.trace_backward
        return fn(
            np.atleast_2d(np.asarray(points, dtype=float)), knots, X, H, k, 0,
            self.hstar, self.dmin, code, center, radius, A, b,
        )

    def __call__(self, points, t, backend=None):
        foot, when, hit = self.trace(points, t, backend)
        out = np.empty(foot.shape[0])
        entered = hit.astype(bool)
        if entered.any():
            out[entered] = self.g(foot[entered], when[entered])
        if (~entered).any():
            out[~entered] = self.u0(foot[~entered])
        return out


def _check_compatibility(domain, field, u0, g, bgrid, t0):
    hnu = bgrid.normals @ field(t0)
    inflow = hnu < 0
    if not inflow.any():
        return None
    pts = bgrid.nodes[inflow]
    gap = float(np.max(np.abs(u0(pts) - g(pts, np.full(pts.shape[0], t0)))))
    scale = max(1.0, float(np.max(np.abs(u0(bgrid.nodes)))))
    if gap > 1e-6 * scale:
        return f"IncompatibleData: |u0 - g| = {gap:.3e} on the inflow boundary at t = {t0}"
    return None


def solve_characteristics(domain, field, u0, g, grid, bgrid, times, n_table=DEFAULT_TABLE,
                          t0=0.0, backend=None):
    """Sample the exact IBVP solution on ``grid``/``bgrid`` at each of ``times``."""
    times = np.asarray(times, dtype=float)
    if np.any(times < t0 - 1e-12) or np.any(times > field.horizon + 1e-12):
        raise OutOfHorizon("requested times leave the horizon")
    solver = CharacteristicSolver(domain, field, u0, g, t0=t0, n_table=n_table,
                                  extra_times=times)
    notes = []
    msg = _check_compatibility(domain, field, u0, g, bgrid, t0)
    if msg:
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)

    def one(t):
        return solver(grid.nodes, t, backend), solver(bgrid.nodes, t, backend)

    slices = parallel_map(one, times)
    interior = np.array([s[0] for s in slices])
    boundary = np.array([s[1] for s in slices])
    return SolutionField(
        domain, field, grid, bgrid, times, interior, boundary,
        provenance="characteristics", rule=lambda p, t: solver(p, t), notes=notes,
    )


def manufactured_solution(F, field, domain, grid, bgrid, times, label="manufactured"):
    """``u(x, t) = F(x - X(t))``: an exact solution with zero residual."""
    times = np.asarray(times, dtype=float)
    shifts = field.displacement_many(times)
    interior = np.array([F(grid.nodes - s) for s in shifts])
    boundary = np.array([F(bgrid.nodes - s) for s in shifts])
    return SolutionField(
        domain, field, grid, bgrid, times, interior, boundary,
        provenance=label, rule=lambda p, t: F(p - field.displacement(t)),
    )


def with_injected_residual(solution, amplitude):
    """Add ``amplitude * t`` to a solution: a negative control with ``Pu = amplitude``."""
    rule = solution.rule
    t = solution.times[:, None]
    return replace(
        solution,
        interior=solution.interior + amplitude * t,
        boundary=solution.boundary + amplitude * t,
        residual=solution.residual + amplitude,
        rule=None if rule is None else (lambda p, s: rule(p, s) + amplitude * s),
        provenance=f"{solution.provenance} + residual {amplitude:g}",
        notes=list(solution.notes),
    )


def pde_residual_fd(solution, eps):
    """Central-difference estimate of ``u_t + H . grad u`` at interior nodes.

    Only slices at least ``eps`` away from both ends of the horizon are used;
    returns ``(times, residual)``.
    """
    T = solution.field.horizon
    keep = (solution.times >= eps) & (solution.times <= T - eps)
    nodes = solution.grid.nodes
    d = nodes.shape[1]
    out = []
    for t in solution.times[keep]:
        ut = (solution.evaluate(nodes, t + eps) - solution.evaluate(nodes, t - eps)) / (2 * eps)
        hv = solution.field(t)
        adv = np.zeros(nodes.shape[0])
        for i in range(d):
            e = np.zeros(d)
            e[i] = eps
            adv += hv[i] * (solution.evaluate(nodes + e, t) - solution.evaluate(nodes - e, t)) / (2 * eps)
        out.append(ut + adv)
    return solution.times[keep], np.array(out)


def boundary_trace(solution):
    bg = solution.bgrid
    hv = solution.field(solution.times)  # (n_t, d)
    hnu = hv @ bg.normals.T
    return TraceField(
        nodes=bg.nodes, normals=bg.normals, weights=bg.weights, times=solution.times,
        values=solution.boundary, h_dot_nu=hnu, sigma=hnu >= 0.0,
    )


# ---------------------------------------------------------------- counterexample
@dataclass(frozen=True, eq=False)
class Scenario:
    domain: Domain
    field: RotationField
    u0: Callable
    g: Callable
    profile: Callable
    sigma: float
    rho: float

    def support_center(self, t):
        return self.rho * np.array([math.cos(t), math.sin(t)])


def rotating_bump_counterexample(sigma=1.0, rho=0.5, profile=None, horizon=2.0 * math.pi):
    """A bump carried around a circle of radius ``rho`` inside the disk of radius ``sigma``.

    The velocity ``(-rho sin t, rho cos t)`` has constant speed ``rho``, and
    the support (radius ``rho/2``) never reaches the boundary, so the lateral
    trace vanishes while the interior norm stays constant.
    """
    if not 0.0 < rho < 2.0 * sigma / 3.0:
        raise RhoOutOfRange(f"rho must lie in (0, 2 sigma / 3) = (0, {2 * sigma / 3:.6g}), got {rho}")
    profile = profile or bump(0.5 * rho)
    domain = Domain.disk((0.0, 0.0), sigma)
    fld = RotationField(rho, 1.0, horizon, phase=0.5 * math.pi)
    start = np.array([rho, 0.0])

    def u0(p):
        return profile(np.asarray(p, dtype=float) - start)

    def g(p, t):
        return np.zeros(np.asarray(p).shape[0])

    return Scenario(domain, fld, u0, g, profile, float(sigma), float(rho))


def solve_scenario(scenario, grid, bgrid, times, **kw):
    sol = solve_characteristics(scenario.domain, scenario.field, scenario.u0, scenario.g,
                                grid, bgrid, times, **kw)
    sol.provenance = "counterexample"
    return sol
