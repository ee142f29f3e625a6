"""Quadrature-based checks of the energy, Carleman and observability inequalities.

All weighted integrals ``int |v|^2 exp(2 s phi)`` are accumulated in log
space (log-sum-exp with the quadrature weights as multipliers), so large
``s`` never overflows and the comparison of both sides is unaffected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.special import logsumexp

from .errors import GridMismatch, NotC1, WindowOutOfRange
from .transport import boundary_trace, time_weights
from .weight import estimate_s0, observability_condition

NEG_INF = -math.inf


# ------------------------------------------------------------------ energy
@dataclass(frozen=True, eq=False)
class EnergyProfile:
    times: np.ndarray
    energy: np.ndarray  # E(t) = ||u(., t)||^2
    flux: np.ndarray  # int_{boundary} (H.nu) |g|^2
    flux_integral: np.ndarray  # int_0^t flux
    g_norm_sq: float
    hstar: float
    tau_q: float

    @property
    def identity_residual(self):
        return self.energy - self.energy[0] + self.flux_integral

    @property
    def en1_slack(self):
        return self.energy[0] + self.hstar * self.g_norm_sq - self.energy

    @property
    def en2_slack(self):
        return self.energy + self.hstar * self.g_norm_sq - self.energy[0]

    @property
    def estimates_hold(self):
        return bool(
            np.all(self.en1_slack >= -self.tau_q) and np.all(self.en2_slack >= -self.tau_q)
        )


def _energy_pieces(values_in, values_bd, grid_w, bgrid, hv, times):
    energy = values_in**2 @ grid_w
    hnu = hv @ bgrid.normals.T
    flux = (hnu * values_bd**2) @ bgrid.weights
    g_sq = float(np.dot(time_weights(times), values_bd**2 @ bgrid.weights))
    return energy, flux, g_sq


def energy_profile(solution, estimate_tolerance=True):
    """Tabulate E(t) and the boundary flux, and attach a quadrature tolerance.

    The tolerance ``tau_q`` is an a-posteriori estimate: the same quantities
    are recomputed on grids of twice the spacing (from the solution's
    generating rule) and the discrepancy is reported.
    """
    times = solution.times
    if times.size < 2:
        raise ValueError("energy profile needs at least two time slices")
    fld = solution.field
    hv = fld(times)
    energy, flux, g_sq = _energy_pieces(
        solution.interior, solution.boundary, solution.grid.weights, solution.bgrid, hv, times
    )
    if times.size >= 3:
        flux_int = cumulative_simpson(flux, x=times, initial=0.0)
    else:
        flux_int = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (flux[1:] + flux[:-1]))])

    tau = 0.0
    if estimate_tolerance and solution.rule is not None:
        dom = solution.domain
        cg = dom.interior_grid(2.0 * solution.grid.h)
        cb = dom.boundary_grid(2.0 * solution.bgrid.h)
        vin = np.array([solution.evaluate(cg.nodes, t) for t in times])
        vbd = np.array([solution.evaluate(cb.nodes, t) for t in times])
        e_c, _, g_c = _energy_pieces(vin, vbd, cg.weights, cb, hv, times)
        tau = float(np.max(np.abs(energy - e_c)) + fld.hstar * abs(g_sq - g_c))
    return EnergyProfile(times, energy, flux, flux_int, g_sq, fld.hstar, tau)


# ------------------------------------------------------------------ Carleman
def piece_indices(times, partition):
    """Sample indices of each partition piece; each piece needs odd uniform samples."""
    out = []
    for a, b in zip(partition.times[:-1], partition.times[1:]):
        tol = 1e-12 * max(1.0, abs(b))
        idx = np.nonzero((times >= a - tol) & (times <= b + tol))[0]
        if idx.size < 3 or idx.size % 2 == 0:
            raise GridMismatch(
                f"piece [{a}, {b}] needs an odd number (>= 3) of time samples, got {idx.size}"
            )
        if abs(times[idx[0]] - a) > tol or abs(times[idx[-1]] - b) > tol:
            raise GridMismatch(f"time samples must include the cut times {a} and {b}")
        dt = np.diff(times[idx])
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise GridMismatch(f"time samples on piece [{a}, {b}] are not uniform")
        out.append(idx)
    return out


def piecewise_time_weights(times, partition):
    w = np.zeros(times.size)
    for idx in piece_indices(times, partition):
        w[idx] += time_weights(times[idx])
    return w


def _log_weighted(values, weight, grid, times, pieces, s):
    """log of int_Q |values|^2 exp(2 s phi), piece by piece (one-sided limits at cuts)."""
    logs = []
    for j, idx in enumerate(pieces):
        tw = time_weights(times[idx])
        diff = grid.nodes - weight.apexes[j]
        dist2 = np.sum(diff * diff, axis=1)
        ph = -weight.beta * (times[idx] - weight.times[j])[:, None] + dist2[None, :]
        mult = tw[:, None] * grid.weights[None, :] * values[idx] ** 2
        pos = mult > 0
        if pos.any():
            logs.append(logsumexp(2.0 * s * ph[pos], b=mult[pos]))
    return logsumexp(logs) if logs else NEG_INF


@dataclass(frozen=True, eq=False)
class CarlemanTerms:
    """Per-solution term logs over the s grid (``-inf`` encodes an exact zero)."""

    label: str
    log_bulk: np.ndarray  # log(s^2 int_Q |u|^2 e^{2 s phi})
    log_res: np.ndarray  # log(int_Q |Pu|^2 e^{2 s phi})
    slices: float  # sum_j int |u(., t_j)|^2
    sigma: float  # int over the exit set of |u|^2
    final: float  # int |u(., T)|^2
    C: np.ndarray  # minimal constant per s

    def log_lhs(self, k, s, C0):
        """log(s^2 int|u|^2 e^{2 s phi} + s e^{-C0 s} sum_j int|u(t_j)|^2) at grid index k."""
        return float(np.logaddexp(self.log_bulk[k], math.log(s) - C0 * s + _log(self.slices)))


def _log(x):
    return math.log(x) if x > 0 else NEG_INF


def _log_rhs(C, s, log_res, data):
    # data = sigma + final; both sides in log space
    a = math.log(C) + log_res if log_res > NEG_INF else NEG_INF
    b = math.log(C) + math.log(s) + C * s + _log(data) if data > 0 else NEG_INF
    return np.logaddexp(a, b)


def _holds(C, s, log_lhs, log_res, data):
    return bool(_log_rhs(C, s, log_res, data) >= log_lhs)


def minimal_constant(s, log_lhs, log_res, data, rel_tol=1e-14):
    """Smallest C >= 1 with LHS <= C int|Pu|^2 e^{2 s phi} + C s e^{C s}(sigma + final)."""
    if log_lhs == NEG_INF or _holds(1.0, s, log_lhs, log_res, data):
        return 1.0
    hi = 2.0
    while not _holds(hi, s, log_lhs, log_res, data):
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    lo = hi / 2.0 if hi > 2.0 else 1.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _holds(mid, s, log_lhs, log_res, data):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True, eq=False)
class CarlemanReport:
    s_values: np.ndarray
    C0: float
    weight: object
    terms: list  # CarlemanTerms per solution

    @property
    def C(self):
        """Family-wide minimal constant per s."""
        return np.max(np.array([t.C for t in self.terms]), axis=0)

    def holds_with(self, C):
        """Does every solution satisfy the inequality with constant ``C`` at every s?"""
        for t in self.terms:
            data = t.sigma + t.final
            for k, s in enumerate(self.s_values):
                if not _holds(C, s, t.log_lhs(k, s, self.C0), t.log_res[k], data):
                    return False
        return True


def _terms_for(solution, weight, s_values, C0, pieces, tw_all, label):
    grid = solution.grid
    times = solution.times
    log_bulk = np.array([
        2.0 * math.log(s) + _log_weighted(solution.interior, weight, grid, times, pieces, s)
        for s in s_values
    ])
    if np.any(solution.residual != 0):
        log_res = np.array([
            _log_weighted(solution.residual, weight, grid, times, pieces, s) for s in s_values
        ])
    else:
        log_res = np.full(s_values.size, NEG_INF)
    slice_idx = [idx[0] for idx in pieces]
    slices = float(np.sum(solution.interior[slice_idx] ** 2 @ grid.weights))
    trace = boundary_trace(solution)
    sig_vals = np.where(trace.sigma, trace.values**2, 0.0) @ trace.weights
    sigma = float(np.dot(tw_all, sig_vals))
    final = float(solution.interior[-1] ** 2 @ grid.weights)
    terms = CarlemanTerms(label, log_bulk, log_res, slices, sigma, final, np.empty(s_values.size))
    for k, s in enumerate(s_values):
        terms.C[k] = minimal_constant(s, terms.log_lhs(k, s, C0), log_res[k], sigma + final)
    return terms


def carleman_report(solutions, weight, s_values, C0=1.0):
    """Term ledger and minimal constants for one solution or a family."""
    if not isinstance(solutions, (list, tuple)):
        solutions = [solutions]
    s_values = np.asarray(s_values, dtype=float)
    if s_values.size == 0 or np.any(s_values <= 0) or np.any(np.diff(s_values) <= 0):
        raise ValueError("s values must be positive and increasing")
    terms = []
    for n, sol in enumerate(solutions):
        if not sol.field.is_c1:
            raise NotC1("the Carleman check needs a continuously differentiable velocity")
        if weight.domain is not None and sol.domain is not weight.domain:
            if sol.domain.describe() != weight.domain.describe():
                raise GridMismatch("solution and weight live on different domains")
        if abs(sol.times[-1] - weight.times[-1]) > 1e-12 * max(1.0, weight.times[-1]):
            raise GridMismatch("solution horizon differs from the partition horizon")
        pieces = piece_indices(sol.times, weight.partition)
        tw_all = piecewise_time_weights(sol.times, weight.partition)
        terms.append(_terms_for(sol, weight, s_values, C0, pieces, tw_all,
                                f"{n}:{sol.provenance}"))
    return CarlemanReport(s_values, float(C0), weight, terms)


def default_s_grid(weight, field, grid, n=16, span=50.0):
    """``n`` log-spaced values on ``[max(1, s0), span * max(1, s0)]``."""
    est = estimate_s0(weight, field, grid, np.logspace(-3, 2, 61))
    lo = max(1.0, est.s0)
    return np.logspace(math.log10(lo), math.log10(span * lo), n), est


def fit_constants(report, holdout):
    """Fit one constant on ``report`` and test it on ``holdout``."""
    if report.weight is not holdout.weight:
        raise GridMismatch("reports were computed with different weights")
    if report.s_values.shape != holdout.s_values.shape or not np.allclose(
        report.s_values, holdout.s_values, rtol=1e-12, atol=0
    ):
        raise GridMismatch("reports use different s grids")
    C_uniform = float(np.max(report.C))
    return C_uniform, holdout.holds_with(C_uniform)


# ------------------------------------------------------------------ observability
@dataclass(frozen=True, eq=False)
class ObservabilityReport:
    labels: list
    sup_norms: np.ndarray
    trace_norms: np.ndarray
    ratios: np.ndarray  # inf marks a vanishing trace
    certificate: object
    verdict: str

    @property
    def family_sup(self):
        return float(np.max(self.ratios)) if self.ratios.size else 0.0

    @property
    def all_finite(self):
        return bool(np.all(np.isfinite(self.ratios)))


def observation_ratio(solution):
    sup = float(np.max(solution.interior_norms()))
    gnorm = math.sqrt(max(boundary_trace(solution).norm_sq(), 0.0))
    if sup == 0.0:
        return 0.0, sup, gnorm
    if gnorm <= 1e-12 * sup:
        return math.inf, sup, gnorm
    return sup / gnorm, sup, gnorm


def observability_ratio(solutions, weight, field=None):
    """Per-solution ratios sup_t ||u(t)|| / ||g|| plus the time-condition certificate.

    ``solutions`` may be any iterable (a generator keeps only one solution
    in memory at a time) or a single solution.
    """
    if hasattr(solutions, "interior"):
        solutions = [solutions]
    rows, labels = [], []
    for s in solutions:
        rows.append(observation_ratio(s))
        labels.append(s.provenance)
    ratios = np.array([r[0] for r in rows])
    cert = observability_condition(weight, field)
    if np.any(np.isinf(ratios)):
        verdict = "observability fails"
    elif cert.holds:
        verdict = "observability holds"
    else:
        verdict = "max cond fails"
    return ObservabilityReport(
        labels=labels,
        sup_norms=np.array([r[1] for r in rows]),
        trace_norms=np.array([r[2] for r in rows]),
        ratios=ratios, certificate=cert, verdict=verdict,
    )


@dataclass(frozen=True)
class WindowCheck:
    ok: bool
    skipped: bool
    premise: bool  # the measured in-window ratio is below the window constant
    c_window: float
    before_sup: float
    before_bound: float
    after_sup: float
    after_bound: float

    def __bool__(self):
        return self.ok


def extend_window_check(solution, t_window, C_window=None, rel_tol=1e-9):
    """Check the two energy-based extensions of an in-window observability constant.

    Before the window the squared ratio may grow by at most ``2 H*``, after
    it by at most ``H*`` (ratios measured with the trace normalised to 1).
    """
    s1, s2 = map(float, t_window)
    T = solution.field.horizon
    if not (0.0 <= s1 < s2 <= T):
        raise WindowOutOfRange(f"window ({s1}, {s2}) must satisfy 0 <= s1 < s2 <= {T}")
    norms = solution.interior_norms()
    gnorm = math.sqrt(max(boundary_trace(solution).norm_sq(), 0.0))
    if gnorm <= 1e-12 * max(float(norms.max()), 1e-300):
        return WindowCheck(True, True, False, math.inf, math.inf, math.inf, math.inf, math.inf)
    ratio = norms / gnorm
    times = solution.times
    inside = (times >= s1) & (times <= s2)
    measured = float(ratio[inside].max()) if inside.any() else 0.0
    c = measured if C_window is None else float(C_window)
    premise = measured <= c * (1 + rel_tol)
    hstar = solution.field.hstar
    before = ratio[times <= s1]
    after = ratio[times >= s2]
    b_sup = float(before.max()) if before.size else 0.0
    a_sup = float(after.max()) if after.size else 0.0
    b_bound = math.sqrt(c * c + 2.0 * hstar)
    a_bound = math.sqrt(c * c + hstar)
    ok = (not premise) or (b_sup <= b_bound * (1 + rel_tol) and a_sup <= a_bound * (1 + rel_tol))
    return WindowCheck(ok, False, premise, c, b_sup, b_bound, a_sup, a_bound)
