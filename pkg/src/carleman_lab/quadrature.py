"""One-dimensional quadrature helpers: adaptive Simpson and composite Simpson weights."""

from __future__ import annotations

import numpy as np

_MAX_DEPTH = 48


def _simpson(fa, fm, fb, a, b):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f, a, b, tol=1e-12, max_depth=_MAX_DEPTH):
    """Integrate a (possibly vector-valued) function of one variable over [a, b].

    ``f`` maps a float to a float or 1-D array.  The Richardson estimate
    ``|S2 - S1| / 15`` is held below ``tol`` on every accepted panel, with the
    tolerance split in half at each bisection, so the total absolute error per
    component is bounded by ``tol`` for smooth integrands.
    """
    if b == a:
        return np.zeros_like(np.asarray(f(a), dtype=float))
    fa = np.asarray(f(a), dtype=float)
    fb = np.asarray(f(b), dtype=float)
    m = 0.5 * (a + b)
    fm = np.asarray(f(m), dtype=float)
    whole = _simpson(fa, fm, fb, a, b)

    total = np.zeros_like(whole)
    # explicit stack instead of recursion: (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm = np.asarray(f(lm), dtype=float)
        frm = np.asarray(f(rm), dtype=float)
        left = _simpson(fa, flm, fm, a, m)
        right = _simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth >= max_depth or np.max(np.abs(delta)) <= 15.0 * eps:
            total = total + left + right + delta / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
    return total


def cumulative_adaptive_simpson(f, knots, tol=1e-12, max_depth=_MAX_DEPTH):
    """Running integrals ``F[k] = int_{knots[0]}^{knots[k]} f`` for increasing knots.

    Vectorised variant of :func:`adaptive_simpson`: every cell between
    consecutive knots is integrated by adaptive Simpson, with all unresolved
    panels refined together.  ``f`` must accept a 1-D array of abscissae and
    return an array of shape ``(n,)`` or ``(n, d)``.  The tolerance is spread
    over cells in proportion to their length.
    """
    knots = np.asarray(knots, dtype=float)
    if knots.ndim != 1 or knots.size < 1:
        raise ValueError("knots must be a non-empty 1-D array")
    if np.any(np.diff(knots) < 0):
        raise ValueError("knots must be nondecreasing")
    sample = np.asarray(f(knots[:1]), dtype=float)
    shape_tail = sample.shape[1:]
    if knots.size == 1:
        return np.zeros((1,) + shape_tail)

    span = knots[-1] - knots[0]
    a = knots[:-1].copy()
    b = knots[1:].copy()
    cell = np.arange(a.size)
    eps = tol * (b - a) / span if span > 0 else np.full(a.size, tol)

    fa = np.asarray(f(a), dtype=float)
    fb = np.asarray(f(b), dtype=float)
    fm = np.asarray(f(0.5 * (a + b)), dtype=float)
    whole = _simpson(fa, fm, fb, _col(a, fa), _col(b, fa))

    cell_sums = np.zeros((knots.size - 1,) + shape_tail)
    depth = 0
    while a.size:
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm = np.asarray(f(lm), dtype=float)
        frm = np.asarray(f(rm), dtype=float)
        left = _simpson(fa, flm, fm, _col(a, fa), _col(m, fa))
        right = _simpson(fm, frm, fb, _col(m, fa), _col(b, fa))
        delta = left + right - whole
        err = np.abs(delta).reshape(a.size, -1).max(axis=1)
        done = (err <= 15.0 * eps) | (depth >= max_depth)
        np.add.at(cell_sums, cell[done], (left + right + delta / 15.0)[done])
        keep = ~done
        if not keep.any():
            break
        a, m, b = a[keep], m[keep], b[keep]
        fa, flm, fm, frm, fb = fa[keep], flm[keep], fm[keep], frm[keep], fb[keep]
        left, right = left[keep], right[keep]
        cell, eps = cell[keep], eps[keep]
        # split each surviving panel into its two halves
        a = np.concatenate([a, m])
        b = np.concatenate([m, b])
        fa, fm, fb = np.concatenate([fa, fm]), np.concatenate([flm, frm]), np.concatenate([fm, fb])
        whole = np.concatenate([left, right])
        cell = np.concatenate([cell, cell])
        eps = np.concatenate([0.5 * eps, 0.5 * eps])
        depth += 1

    out = np.zeros((knots.size,) + shape_tail)
    out[1:] = np.cumsum(cell_sums, axis=0)
    return out


def _col(x, like):
    # broadcast per-panel abscissae against (n,) or (n, d) values
    return x.reshape((-1,) + (1,) * (like.ndim - 1))


def simpson_weights(n, dt):
    """Composite Simpson weights for ``n`` (odd, >= 3) equispaced samples of step ``dt``."""
    if n < 3 or n % 2 == 0:
        raise ValueError("composite Simpson needs an odd number >= 3 of samples")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * dt / 3.0
