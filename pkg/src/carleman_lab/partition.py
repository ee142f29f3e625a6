"""Cone partitions of [0, T]: on every piece, H(t) stays inside a fixed cone.

For a partition ``0 = t_0 < ... < t_m = T`` with axes
``eta_j = H(t_j) / |H(t_j)|`` the cone condition reads
``H(t)/|H(t)| . eta_j >= S*`` for all ``t`` in ``[t_j, t_{j+1}]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ApertureOutOfRange, PartitionFailure

SQRT_HALF = 1.0 / math.sqrt(2.0)
CERTIFICATE_SAMPLES = 1000


@dataclass(frozen=True)
class ConeCertificate:
    margin: float  # min over pieces of (normalized dot) - S*
    worst_time: float
    sampling_gap: float  # bound on what the sampling can miss: L * dt_sample / H0

    @property
    def valid(self):
        return self.margin >= 0.0


@dataclass(frozen=True, eq=False)
class ConePartition:
    times: np.ndarray
    axes: np.ndarray  # (m, d) unit vectors
    sstar: float
    certificate: ConeCertificate | None = field(default=None)

    @property
    def m(self):
        return self.times.size - 1

    def interval_index(self, t):
        """Index j with t in [t_j, t_{j+1}); t = T maps to the last piece."""
        j = np.searchsorted(self.times, t, side="right") - 1
        return np.clip(j, 0, self.m - 1)


def check_aperture(sstar):
    if not (SQRT_HALF < sstar < 1.0):
        raise ApertureOutOfRange(
            f"aperture must exceed 1/sqrt(2) ~ 0.7071 and stay below 1, got {sstar}"
        )


def from_times(field, times, sstar, n_samples=CERTIFICATE_SAMPLES):
    """Wrap explicit cut times in a partition and attach its cone certificate."""
    check_aperture(sstar)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("a partition needs at least two times")
    if times[0] != 0.0 or abs(times[-1] - field.horizon) > 1e-12 * max(1.0, field.horizon):
        raise ValueError("partition must start at 0 and end at T")
    if np.any(np.diff(times) <= 0):
        raise ValueError("partition times must increase strictly")
    times = times.copy()
    times[-1] = field.horizon
    heads = field(times[:-1])
    axes = heads / np.linalg.norm(heads, axis=1, keepdims=True)
    part = ConePartition(times, axes, float(sstar))
    cert = verify_cone_condition(part, field, n_samples)
    return ConePartition(times, axes, float(sstar), cert)


def verify_cone_condition(partition, field, n_samples=CERTIFICATE_SAMPLES):
    """Sampled certificate for the cone condition; negative margin means invalid."""
    worst, worst_t = math.inf, 0.0
    max_dt = 0.0
    for j in range(partition.m):
        a, b = partition.times[j], partition.times[j + 1]
        ts = np.linspace(a, b, max(2, n_samples))
        hv = field(ts)
        dots = hv @ partition.axes[j] / np.linalg.norm(hv, axis=1)
        k = int(np.argmin(dots))
        if dots[k] < worst:
            worst, worst_t = float(dots[k]), float(ts[k])
        max_dt = max(max_dt, (b - a) / (max(2, n_samples) - 1))
    gap = field.lipschitz_estimate(safety=1.0) * max_dt / field.h0
    return ConeCertificate(worst - partition.sstar, worst_t, gap)


def uniform_count(field, sstar, safety=1.0):
    """Number of equal pieces guaranteeing the cone condition: ceil(2 L T / (H0 (1 - S*)))."""
    check_aperture(sstar)
    lip = field.lipschitz_estimate(safety=safety)
    bound = 2.0 * lip * field.horizon / (field.h0 * (1.0 - sstar))
    # guard against the ceiling of an exact integer drifting up by roundoff
    m = math.ceil(bound - 1e-9 * max(1.0, bound))
    return max(1, m)


def uniform_partition(field, sstar, safety=1.0, n_samples=CERTIFICATE_SAMPLES):
    m = uniform_count(field, sstar, safety)
    times = np.linspace(0.0, field.horizon, m + 1)
    return from_times(field, times, sstar, n_samples)


def greedy_partition(field, sstar, sampling=20_001, margin=0.01, n_samples=CERTIFICATE_SAMPLES):
    """Cut each piece at the last dense-grid sample still inside the (tightened) cone.

    The requested margin is capped at ``(1 - S*)/2`` so the tightened aperture
    stays below 1.  If the greedy pass ends up with more pieces than the uniform
    bound, the uniform partition is returned instead, so the greedy count never
    exceeds the uniform one.
    """
    check_aperture(sstar)
    if sampling < 2:
        raise ValueError("sampling must be at least 2")
    margin = min(max(margin, 0.0), 0.5 * (1.0 - sstar))
    level = sstar + margin
    ts = np.linspace(0.0, field.horizon, sampling)
    ts = np.union1d(ts, field.breakpoints())
    hv = field(ts)
    dirs = hv / np.linalg.norm(hv, axis=1, keepdims=True)

    cuts = [0]
    k = 0
    n = ts.size
    while k < n - 1:
        dots = dirs[k + 1:] @ dirs[k]
        bad = np.nonzero(dots < level)[0]
        if bad.size == 0:
            k = n - 1
        else:
            nxt = k + int(bad[0])  # last good sample sits just before the first bad one
            if nxt <= k:
                raise PartitionFailure(f"cannot advance past t = {ts[k]}")
            k = nxt
        cuts.append(k)

    greedy = from_times(field, ts[cuts], sstar, n_samples)
    if greedy.m > uniform_count(field, sstar):
        return uniform_partition(field, sstar, n_samples=n_samples)
    return greedy
