"""Pure-numpy backward characteristic tracer (fallback for the compiled kernel).

Both implementations share one algorithm.  The backward path from ``(x, t)``
is ``y(s) = x - (X(t) - X(s))`` with ``X`` interpolated by cubic Hermite
between tabulated knots (values ``X_k``, slopes ``H_k``).  Marching backward
in time, each step is ``max(-level(y) / H*, dmin)``: because minus the level
is the distance to the boundary and the path moves at speed at most ``H*``,
steps of the first kind can never jump over an exit.  The first sample found
outside triggers bisection in time down to ``time_tol``.
"""

from __future__ import annotations

import numpy as np

MAX_BISECT = 200


def hermite_displacement(s, knots, X, H):
    """Cubic Hermite interpolant of the displacement table at times ``s``."""
    k = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, knots.size - 2)
    h = knots[k + 1] - knots[k]
    tau = (s - knots[k]) / h
    tau2 = tau * tau
    tau3 = tau2 * tau
    h00 = 2 * tau3 - 3 * tau2 + 1
    h10 = tau3 - 2 * tau2 + tau
    h01 = -2 * tau3 + 3 * tau2
    h11 = tau3 - tau2
    return (
        h00[:, None] * X[k]
        + (h10 * h)[:, None] * H[k]
        + h01[:, None] * X[k + 1]
        + (h11 * h)[:, None] * H[k + 1]
    )


def _level(y, code, center, radius, A, b):
    if code == 0:
        return np.sqrt(np.sum((y - center) ** 2, axis=1)) - radius
    return np.max(y @ A.T - b, axis=1)


def trace_backward(nodes, knots, X, H, i_end, i_start, hstar, dmin,
                   code, center, radius, A, b, tol_in=1e-12, time_tol=1e-12):
    """Return ``(foot, foot_time, hit)`` for every node traced back from ``knots[i_end]``.

    ``hit[n] == 1`` when the path entered through the boundary at ``foot_time``
    (``foot`` then lies on the boundary); otherwise the path stays in the
    closed domain down to ``knots[i_start]`` and ``foot`` is its position there.
    """
    nodes = np.ascontiguousarray(nodes, dtype=float)
    n, d = nodes.shape
    t_end = knots[i_end]
    t0 = knots[i_start]
    x_end = X[i_end]

    def path(idx, s):
        return nodes[idx] - (x_end - hermite_displacement(s, knots, X, H))

    foot = nodes.copy()
    foot_time = np.full(n, t0)
    hit = np.zeros(n, dtype=np.int8)

    s_in = np.full(n, t_end)
    lev = _level(nodes, code, center, radius, A, b)
    active = np.arange(n) if t_end > t0 else np.zeros(0, dtype=int)
    lo = np.empty(0)
    hi = np.empty(0)
    hit_idx = np.empty(0, dtype=int)
    lo_parts, hi_parts, idx_parts = [], [], []

    while active.size:
        step = np.maximum(-lev[active] / hstar, dmin)
        s_try = np.maximum(s_in[active] - step, t0)
        y = path(active, s_try)
        lt = _level(y, code, center, radius, A, b)
        out = lt > tol_in
        if out.any():
            idx_parts.append(active[out])
            lo_parts.append(s_try[out])
            hi_parts.append(s_in[active[out]])
        stay = ~out
        done = stay & (s_try <= t0)
        if done.any():
            foot[active[done]] = y[done]
            foot_time[active[done]] = t0
        cont = stay & ~done
        s_in[active[cont]] = s_try[cont]
        lev[active[cont]] = lt[cont]
        active = active[cont]

    if idx_parts:
        hit_idx = np.concatenate(idx_parts)
        lo = np.concatenate(lo_parts)
        hi = np.concatenate(hi_parts)
        for _ in range(MAX_BISECT):
            wide = hi - lo > time_tol
            if not wide.any():
                break
            mid = 0.5 * (lo + hi)
            outside = _level(path(hit_idx, mid), code, center, radius, A, b) > tol_in
            lo = np.where(wide & outside, mid, lo)
            hi = np.where(wide & ~outside, mid, hi)
        foot[hit_idx] = path(hit_idx, hi)
        foot_time[hit_idx] = hi
        hit[hit_idx] = 1
    return foot, foot_time, hit
