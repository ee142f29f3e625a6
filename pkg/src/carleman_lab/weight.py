"""Piecewise Carleman weight for the transport operator and its pointwise checks.

On the partition piece ``[t_j, t_{j+1})`` the weight is

    phi_j(x, t) = -beta (t - t_j) + |x - x_j|^2,

with apex points ``x_j = -R_j eta_j`` pushed far enough from the domain that
the whole domain sits inside a narrow cone around ``eta_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPartition, OutOfDomain, OutOfHorizon, SlackNonpositive
from .partition import check_aperture, verify_cone_condition


@dataclass(frozen=True, eq=False)
class CarlemanWeight:
    partition: object
    sstar: float
    diameter: float
    slack: float
    radii: np.ndarray  # R_j
    apexes: np.ndarray  # x_j, (m, d)
    mu: np.ndarray  # min distance from x_j to the domain
    M: np.ndarray  # max distance from x_j to the domain
    beta: float
    h0: float
    hstar: float
    domain: object = None

    @property
    def m(self):
        return self.partition.m

    @property
    def cstar(self):
        return 2.0 * self.sstar**2 - 1.0

    @property
    def times(self):
        return self.partition.times

    @property
    def phi_max(self):
        """Largest weight value on the closed cylinder, reached at a left endpoint t_j."""
        return float(np.max(self.M**2))

    def branch(self, x, t, j):
        """Evaluate phi_j without interval lookup (used for one-sided limits)."""
        x = np.asarray(x, dtype=float)
        diff = x - self.apexes[j]
        return -self.beta * (t - self.times[j]) + np.sum(diff * diff, axis=-1)

    def window_lengths(self):
        """Per piece, the length (t_{j+1} - t_j) above which the observability condition holds."""
        return self.M**2 / (self.mu * self.h0 * self.cstar)


def radii_sequence(m, sstar, diameter, slack):
    base = (1.0 + sstar) / (1.0 - sstar) * diameter
    j = np.arange(m, dtype=float)
    return 2.0**j * base + (2.0**j - 1.0) * (diameter + slack)


def build_weight(domain, field, partition, r=None):
    """Assemble apexes, radii, distance extremes and the drift ``beta``.

    ``r`` defaults to the domain diameter.
    """
    check_aperture(partition.sstar)
    delta = domain.diameter()
    r = delta if r is None else float(r)
    if not r > 0:
        raise SlackNonpositive(f"slack r must be positive, got {r}")
    cert = partition.certificate or verify_cone_condition(partition, field)
    if cert.margin < 0:
        raise InvalidPartition(f"cone condition fails by {-cert.margin:.3e} at t = {cert.worst_time}")

    radii = radii_sequence(partition.m, partition.sstar, delta, r)
    apexes = -radii[:, None] * partition.axes
    ext = np.array([domain.distance_extremes(x) for x in apexes])
    h0, hstar = field.speed_bounds
    beta = (2.0 * partition.sstar**2 - 1.0) * h0 * ext[0, 0]
    return CarlemanWeight(
        partition=partition, sstar=partition.sstar, diameter=delta, slack=r,
        radii=radii, apexes=apexes, mu=ext[:, 0], M=ext[:, 1], beta=beta,
        h0=h0, hstar=hstar, domain=domain,
    )


def _check_inputs(weight, x, t):
    x = np.asarray(x, dtype=float)
    T = weight.times[-1]
    if not (-1e-12 * max(1.0, T) <= t <= T * (1 + 1e-12)):
        raise OutOfHorizon(f"t = {t} outside [0, {T}]")
    if weight.domain is not None and not np.all(weight.domain.contains(x)):
        raise OutOfDomain("phi is only defined on the closed domain")
    return x


def phi(weight, x, t):
    x = _check_inputs(weight, x, t)
    j = int(weight.partition.interval_index(t))
    return weight.branch(x, t, j)


def p_phi(weight, field, x, t):
    """Transport operator applied to the weight: -beta + 2 H(t).(x - x_j)."""
    x = _check_inputs(weight, x, t)
    j = int(weight.partition.interval_index(t))
    return -weight.beta + 2.0 * (x - weight.apexes[j]) @ field(t)


def check_apex_cone(weight, domain, grid):
    """min over pieces and nodes of (x - x_j).eta_j - S* |x - x_j|; expected >= 0."""
    worst = math.inf
    for j in range(weight.m):
        diff = grid.nodes - weight.apexes[j]
        val = diff @ weight.partition.axes[j] - weight.sstar * np.linalg.norm(diff, axis=1)
        worst = min(worst, float(val.min()))
    return worst


def check_separation(weight):
    """Gaps mu_{j+1} - M_j between consecutive apexes, plus the max/min ordering."""
    gaps = (weight.mu[1:] - weight.M[:-1]).tolist()
    ordered = bool(weight.M[-1] >= weight.M.max() and weight.mu[0] <= weight.mu.min())
    ok = all(g > 0 for g in gaps) and ordered
    return ok, gaps


def check_pphi_lower_bound(weight, field, grid, t_samples=200):
    """min of P phi_j - C* H0 mu_0 over nodes and closed pieces; expected >= 0."""
    floor = weight.cstar * weight.h0 * weight.mu[0]
    worst = math.inf
    for j in range(weight.m):
        ts = np.linspace(weight.times[j], weight.times[j + 1], t_samples)
        proj = field(ts) @ (grid.nodes - weight.apexes[j]).T  # (t, nodes)
        worst = min(worst, float((2.0 * proj.min()) - weight.beta - floor))
    return worst


@dataclass(frozen=True)
class ObservabilityCertificate:
    holds: bool
    jstar: int | None
    q: list
    threshold: float

    @property
    def margin(self):
        return max(self.q) - self.threshold


def observability_condition(weight, field=None):
    """Quantitative time condition max_j (t_{j+1}-t_j) mu_j / M_j^2 > 1 / (H0 C*)."""
    lengths = np.diff(weight.times)
    q = lengths * weight.mu / weight.M**2
    threshold = 1.0 / (weight.h0 * weight.cstar)
    k = int(np.argmax(q))
    holds = bool(q[k] > threshold)
    return ObservabilityCertificate(holds, k if holds else None, q.tolist(), threshold)


@dataclass(frozen=True)
class S0Estimate:
    s0: float
    source: str  # "vacuous", "empirical" or "analytic"


def _slice_term_ok(weight, field, nodes, j, s):
    """Does q_j(x) >= (mu0 H0 / 2) exp(2 s mu_j^2) hold at every node?  Log-domain."""
    hj = field(weight.times[j])
    a_coef = 2.0 * (nodes - weight.apexes[j]) @ hj - weight.beta
    b_coef = 2.0 * (nodes - weight.apexes[j - 1]) @ hj - weight.beta
    mu2 = weight.mu[j] ** 2
    ea = 2.0 * s * (np.sum((nodes - weight.apexes[j]) ** 2, axis=1) - mu2)
    eb = 2.0 * s * (np.sum((nodes - weight.apexes[j - 1]) ** 2, axis=1) - mu2)
    # scale both exponentials by exp(-ea); eb - ea <= 0 so nothing overflows
    scaled = a_coef - b_coef * np.exp(eb - ea)
    target = 0.5 * weight.mu[0] * weight.h0
    if np.any(scaled <= 0):
        return False
    return bool(np.all(np.log(scaled) + ea >= math.log(target)))


def estimate_s0(weight, field, grid, s_grid):
    """Smallest scanned s from which the interior slice terms stay positive.

    With a single piece there are no interior slices and the smallest grid
    value is returned.  If no scanned value works, the closed-form threshold
    is used with the unknown constant replaced by C*.
    """
    s_grid = np.sort(np.asarray(s_grid, dtype=float))
    if weight.m == 1:
        return S0Estimate(float(s_grid[0]), "vacuous")
    ok = np.array([
        all(_slice_term_ok(weight, field, grid.nodes, j, s) for j in range(1, weight.m))
        for s in s_grid
    ])
    # require the condition from s0 onward, not just at an isolated grid value
    tail_ok = np.flip(np.logical_and.accumulate(np.flip(ok)))
    if tail_ok.any():
        return S0Estimate(float(s_grid[np.argmax(tail_ok)]), "empirical")
    mstar = weight.M[-1]
    ratio = 2.0 * weight.hstar * mstar / (weight.cstar * weight.mu[0] * weight.h0)
    sj = [
        math.log(ratio) / (2.0 * (weight.mu[j] ** 2 - weight.M[j - 1] ** 2))
        for j in range(1, weight.m)
    ]
    return S0Estimate(max(0.0, max(sj)), "analytic")
