"""Bounded convex spatial domains and the quadrature grids built on them.

Four shapes are supported: intervals (d = 1), disks, axis-aligned boxes and
convex polygons (d = 2).  Boxes, polygons and intervals are stored as an
intersection of half-planes ``A @ p <= b`` with unit rows in ``A``; that
single representation drives membership, normals, and the level function
used by the characteristic tracer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CornerPoint, InvalidDomain, ResolutionTooCoarse

MEMBERSHIP_TOL = 1e-12
BOUNDARY_TOL = 1e-9

INTERVAL = "interval"
DISK = "disk"
AXIS_BOX = "axis_box"
CONVEX_POLYGON = "convex_polygon"
KINDS = (INTERVAL, DISK, AXIS_BOX, CONVEX_POLYGON)

# kernel codes for the compiled tracer
BALL_CODE = 0
HALFPLANE_CODE = 1


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    nodes: np.ndarray  # (n, d)
    weights: np.ndarray  # (n,)
    h: float

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    nodes: np.ndarray  # (n, d)
    weights: np.ndarray  # (n,)
    normals: np.ndarray  # (n, d), unit outward
    h: float

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True, eq=False)
class Domain:
    """A closed bounded convex region containing the origin.

    Build instances through :meth:`interval`, :meth:`disk`, :meth:`box` or
    :meth:`polygon`; they validate the shape.
    """

    kind: str
    dim: int
    center: np.ndarray | None = None
    radius: float | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    vertices: np.ndarray | None = None
    A: np.ndarray | None = None
    b: np.ndarray | None = None

    # ----------------------------------------------------------- constructors
    @classmethod
    def interval(cls, a, b):
        a, b = float(a), float(b)
        if not a < b:
            raise InvalidDomain(f"interval needs a < b, got [{a}, {b}]")
        dom = cls(
            INTERVAL, 1,
            lo=np.array([a]), hi=np.array([b]),
            vertices=np.array([[a], [b]]),
            A=np.array([[-1.0], [1.0]]), b=np.array([-a, b]),
        )
        dom._check_origin()
        return dom

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius=1.0):
        center = np.asarray(center, dtype=float).reshape(2)
        radius = float(radius)
        if not radius > 0:
            raise InvalidDomain("disk radius must be positive")
        dom = cls(DISK, 2, center=center, radius=radius)
        dom._check_origin()
        return dom

    @classmethod
    def box(cls, lo, hi):
        lo = np.asarray(lo, dtype=float).reshape(2)
        hi = np.asarray(hi, dtype=float).reshape(2)
        if np.any(hi <= lo):
            raise InvalidDomain("box needs min < max in every coordinate")
        verts = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
        A = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
        bb = np.array([-lo[0], hi[0], -lo[1], hi[1]])
        dom = cls(AXIS_BOX, 2, lo=lo, hi=hi, vertices=verts, A=A, b=bb)
        dom._check_origin()
        return dom

    @classmethod
    def polygon(cls, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InvalidDomain("polygon needs at least three 2-D vertices")
        edges = np.roll(v, -1, axis=0) - v
        prev = np.roll(edges, 1, axis=0)
        cross = prev[:, 0] * edges[:, 1] - prev[:, 1] * edges[:, 0]
        scale = np.linalg.norm(prev, axis=1) * np.linalg.norm(edges, axis=1)
        if np.any(scale == 0):
            raise InvalidDomain("polygon has repeated vertices")
        if np.any(cross <= 1e-12 * scale):
            raise InvalidDomain(
                "polygon vertices must be strictly counterclockwise and strictly convex"
            )
        lengths = np.linalg.norm(edges, axis=1)
        A = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
        bb = np.einsum("ij,ij->i", A, v)
        dom = cls(
            CONVEX_POLYGON, 2,
            lo=v.min(axis=0), hi=v.max(axis=0),
            vertices=v, A=A, b=bb,
        )
        dom._check_origin()
        return dom

    def _check_origin(self):
        if not self.contains(np.zeros(self.dim)):
            raise InvalidDomain("the origin must lie in the closed domain")

    # ---------------------------------------------------------------- metrics
    def level(self, p):
        """Convex level function: negative inside, zero on the boundary.

        For every supported shape, minus the level of an interior point is its
        exact distance to the boundary, which the tracer uses as a safe step.
        """
        p = np.asarray(p, dtype=float)
        if self.kind == DISK:
            return np.linalg.norm(p - self.center, axis=-1) - self.radius
        return np.max(p @ self.A.T - self.b, axis=-1)

    def contains(self, p, tol=MEMBERSHIP_TOL):
        return self.level(p) <= tol

    def diameter(self):
        if self.kind == DISK:
            return 2.0 * self.radius
        diff = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt(np.max(np.sum(diff**2, axis=-1))))

    def measure(self):
        if self.kind == DISK:
            return math.pi * self.radius**2
        if self.kind in (INTERVAL, AXIS_BOX):
            return float(np.prod(self.hi - self.lo))
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def boundary_measure(self):
        if self.kind == DISK:
            return 2.0 * math.pi * self.radius
        if self.kind == INTERVAL:
            return 2.0  # counting measure on the two endpoints
        edges = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.linalg.norm(edges, axis=1).sum())

    def centroid(self):
        if self.kind == DISK:
            return self.center.copy()
        if self.kind in (INTERVAL, AXIS_BOX):
            return 0.5 * (self.lo + self.hi)
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        return ((v + w) * cross[:, None]).sum(axis=0) / (3.0 * cross.sum())

    def distance_extremes(self, p):
        """Return ``(min, max)`` of ``|x - p|`` over the closed domain."""
        p = np.asarray(p, dtype=float).reshape(self.dim)
        if self.kind == DISK:
            r = float(np.linalg.norm(p - self.center))
            return max(r - self.radius, 0.0), r + self.radius
        far = float(np.max(np.linalg.norm(self.vertices - p, axis=1)))
        if self.kind in (INTERVAL, AXIS_BOX):
            near = float(np.linalg.norm(p - np.clip(p, self.lo, self.hi)))
            return near, far
        if self.contains(p):
            return 0.0, far
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        s = np.clip(np.einsum("ij,ij->i", p - v, e) / np.einsum("ij,ij->i", e, e), 0.0, 1.0)
        near = float(np.min(np.linalg.norm(v + s[:, None] * e - p, axis=1)))
        return near, far

    def outward_normal(self, b):
        b = np.asarray(b, dtype=float).reshape(self.dim)
        if abs(float(self.level(b))) > BOUNDARY_TOL:
            raise ValueError(f"point {b} is not on the boundary")
        if self.kind == DISK:
            n = b - self.center
            return n / np.linalg.norm(n)
        if self.kind == INTERVAL:
            return np.array([-1.0]) if b[0] - self.lo[0] < self.hi[0] - b[0] else np.array([1.0])
        if np.min(np.linalg.norm(self.vertices - b, axis=1)) <= BOUNDARY_TOL:
            raise CornerPoint(f"no unique normal at vertex {b}")
        active = np.abs(self.A @ b - self.b) <= BOUNDARY_TOL
        if active.sum() != 1:
            raise CornerPoint(f"no unique normal at {b}")
        return self.A[np.argmax(active)].copy()

    # ------------------------------------------------------------------ grids
    def interior_grid(self, h):
        """Cut-cell grid: each tensor cell meeting the domain contributes one node.

        The weight is the exact area (length) of the cell inside the domain and
        the node sits at the centroid of that piece, so nodes always lie in the
        closed domain and the rule is second order for smooth integrands.
        """
        if not h > 0:
            raise ValueError("h must be positive")
        lo, hi = self._bounding_box()
        counts = np.maximum(1, np.ceil((hi - lo) / h - 1e-9).astype(int))
        steps = (hi - lo) / counts
        edges = [lo[i] + np.arange(counts[i] + 1) * steps[i] for i in range(self.dim)]
        if self.dim == 1:
            nodes = (0.5 * (edges[0][:-1] + edges[0][1:]))[:, None]
            weights = np.full(counts[0], float(steps[0]))
        elif self.kind == DISK:
            nodes, weights = _disk_cut_cells(edges[0], edges[1], self.center, self.radius)
        else:
            nodes, weights = _polygon_cut_cells(edges[0], edges[1], self.A, self.b)
        keep = weights > 1e-12 * float(np.prod(steps))
        if not np.any(keep):
            raise ResolutionTooCoarse(f"h = {h} leaves no cell inside the domain")
        return QuadratureGrid(nodes[keep], weights[keep], float(steps.max()))

    def boundary_grid(self, h):
        """Edge-interior boundary nodes with surface weights and outward normals."""
        if not h > 0:
            raise ValueError("h must be positive")
        if self.kind == INTERVAL:
            nodes = np.array([[self.lo[0]], [self.hi[0]]])
            return BoundaryGrid(nodes, np.ones(2), np.array([[-1.0], [1.0]]), float(h))
        if self.kind == DISK:
            n = max(8, int(math.ceil(2.0 * math.pi * self.radius / h - 1e-9)))
            theta = (np.arange(n) + 0.5) * (2.0 * math.pi / n)
            normals = np.column_stack([np.cos(theta), np.sin(theta)])
            nodes = self.center + self.radius * normals
            weights = np.full(n, 2.0 * math.pi * self.radius / n)
            return BoundaryGrid(nodes, weights, normals, 2.0 * math.pi * self.radius / n)
        nodes, weights, normals = [], [], []
        v = self.vertices
        hmax = 0.0
        for i in range(v.shape[0]):
            start, stop = v[i], v[(i + 1) % v.shape[0]]
            length = float(np.linalg.norm(stop - start))
            k = max(1, int(math.ceil(length / h - 1e-9)))
            frac = (np.arange(k) + 0.5) / k
            nodes.append(start + frac[:, None] * (stop - start))
            weights.append(np.full(k, length / k))
            edge = stop - start
            normals.append(np.tile(np.array([edge[1], -edge[0]]) / length, (k, 1)))
            hmax = max(hmax, length / k)
        return BoundaryGrid(np.vstack(nodes), np.concatenate(weights), np.vstack(normals), hmax)

    def _bounding_box(self):
        if self.kind == DISK:
            return self.center - self.radius, self.center + self.radius
        return self.lo, self.hi

    def kernel_spec(self):
        """Flat description consumed by the characteristic tracer kernels."""
        if self.kind == DISK:
            return BALL_CODE, self.center.copy(), float(self.radius), np.zeros((0, 2)), np.zeros(0)
        return HALFPLANE_CODE, np.zeros(self.dim), 0.0, self.A.copy(), self.b.copy()

    def describe(self):
        if self.kind == DISK:
            return {"kind": DISK, "center": self.center.tolist(), "radius": self.radius}
        if self.kind in (INTERVAL, AXIS_BOX):
            return {"kind": self.kind, "min": self.lo.tolist(), "max": self.hi.tolist()}
        return {"kind": CONVEX_POLYGON, "vertices": self.vertices.tolist()}


def _disk_primitive(X, Y, R):
    """Area and first moments of {x <= X, y <= Y} intersected with the disk |p| <= R."""
    a = np.sqrt(np.maximum(R * R - Y * Y, 0.0))
    upper = np.clip(X, -R, R)

    def w(x):
        return np.sqrt(np.maximum(R * R - x * x, 0.0))

    def area_w(x):  # antiderivative of w
        return 0.5 * (x * w(x) + R * R * np.arcsin(np.clip(x / R, -1.0, 1.0)))

    def xmom_w(x):  # antiderivative of x w
        return -w(x) ** 3 / 3.0

    def w2(x):  # antiderivative of w^2
        return R * R * x - x ** 3 / 3.0

    outer = (Y >= 0).astype(float)
    area = np.zeros(np.broadcast(X, Y).shape)
    mx = np.zeros_like(area)
    my = np.zeros_like(area)
    # outer strips |x| > a: the column is either complete (Y >= 0) or empty
    for s0, s1 in ((-R, -a), (a, R)):
        x0 = np.minimum(s0, upper)
        x1 = np.minimum(s1, upper)
        area += outer * 2.0 * (area_w(x1) - area_w(x0))
        mx += outer * 2.0 * (xmom_w(x1) - xmom_w(x0))
    # inner strip |x| < a: the column runs from -w up to Y
    x0 = np.minimum(-a, upper)
    x1 = np.minimum(a, upper)
    area += Y * (x1 - x0) + area_w(x1) - area_w(x0)
    mx += 0.5 * Y * (x1 ** 2 - x0 ** 2) + xmom_w(x1) - xmom_w(x0)
    my += 0.5 * (Y * Y * (x1 - x0) - (w2(x1) - w2(x0)))
    return area, mx, my


def _disk_cut_cells(ex, ey, center, R):
    x0, y0 = np.meshgrid(ex[:-1] - center[0], ey[:-1] - center[1], indexing="ij")
    x1, y1 = np.meshgrid(ex[1:] - center[0], ey[1:] - center[1], indexing="ij")
    x0, y0, x1, y1 = (v.ravel() for v in (x0, y0, x1, y1))
    parts = [_disk_primitive(X, Y, R) for X, Y in ((x1, y1), (x0, y1), (x1, y0), (x0, y0))]
    area, mx, my = (parts[0][k] - parts[1][k] - parts[2][k] + parts[3][k] for k in range(3))
    full = np.maximum.reduce([x0 * x0, x1 * x1]) + np.maximum.reduce([y0 * y0, y1 * y1]) <= R * R
    cell = (x1 - x0) * (y1 - y0)
    area = np.where(full, cell, np.maximum(area, 0.0))
    safe = np.where(area > 0, area, 1.0)
    cx = np.where(full, 0.5 * (x0 + x1), mx / safe)
    cy = np.where(full, 0.5 * (y0 + y1), my / safe)
    nodes = np.column_stack([cx + center[0], cy + center[1]])
    return nodes, area


def _clip(poly, a, b):
    """Keep the part of a convex polygon with a @ p <= b (one Sutherland-Hodgman pass)."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp, fq = a @ p - b, a @ q - b
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            out.append(p + (fp / (fp - fq)) * (q - p))
    return out


def _shoelace(poly):
    v = np.asarray(poly)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area <= 0:
        return 0.0, v.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cy])


def _polygon_cut_cells(ex, ey, A, b):
    x0, y0 = np.meshgrid(ex[:-1], ey[:-1], indexing="ij")
    x1, y1 = np.meshgrid(ex[1:], ey[1:], indexing="ij")
    x0, y0, x1, y1 = (v.ravel() for v in (x0, y0, x1, y1))
    corners = np.stack([np.column_stack(c) for c in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))])
    vals = np.einsum("kni,ri->knr", corners, A) - b  # corner x constraint
    full = np.all(vals <= 0, axis=(0, 2))
    empty = np.any(np.all(vals >= 0, axis=0), axis=1)
    area = np.where(full, (x1 - x0) * (y1 - y0), 0.0)
    nodes = np.column_stack([0.5 * (x0 + x1), 0.5 * (y0 + y1)])
    for i in np.flatnonzero(~full & ~empty):
        poly = list(corners[:, i, :])
        for r in range(A.shape[0]):
            poly = _clip(poly, A[r], b[r])
            if len(poly) < 3:
                break
        if len(poly) >= 3:
            area[i], nodes[i] = _shoelace(poly)
    return nodes, area


def distance_extremes(domain, p):
    return domain.distance_extremes(p)


def diameter(domain):
    return domain.diameter()
