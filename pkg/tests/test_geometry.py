import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carleman_lab.errors import CornerPoint, InvalidDomain
from carleman_lab.geometry import Domain

SHAPES = [
    Domain.disk(),
    Domain.disk((0.3, -0.2), 1.3),
    Domain.box([0.0, 0.0], [2.0, 1.0]),
    Domain.box([-1.0, -0.5], [2.0, 1.0]),
    Domain.polygon([[-1.0, -1.0], [2.0, -1.0], [0.0, 2.0]]),
    Domain.polygon([[1.0, 0.0], [0.5, 0.9], [-0.5, 0.9], [-1.0, 0.0], [-0.5, -0.9], [0.5, -0.9]]),
]


def test_constructors_reject_bad_shapes():
    with pytest.raises(InvalidDomain):
        Domain.interval(1.0, -1.0)
    with pytest.raises(InvalidDomain):
        Domain.disk(radius=0.0)
    with pytest.raises(InvalidDomain):
        Domain.box([0, 0], [0, 1])
    with pytest.raises(InvalidDomain):  # clockwise
        Domain.polygon([[0, 0], [0, 1], [1, 0]])
    with pytest.raises(InvalidDomain):  # origin outside
        Domain.disk((3.0, 0.0), 1.0)
    with pytest.raises(InvalidDomain):  # collinear vertex
        Domain.polygon([[-1, -1], [0, -1], [1, -1], [0, 1]])


def test_closed_form_metrics():
    box = Domain.box([0.0, 0.0], [2.0, 1.0])
    assert box.diameter() == pytest.approx(math.sqrt(5.0), rel=1e-15)
    assert Domain.disk().diameter() == 2.0
    assert Domain.interval(-1, 2).diameter() == 3.0
    assert Domain.disk().measure() == pytest.approx(math.pi)
    tri = Domain.polygon([[-1.0, -1.0], [2.0, -1.0], [0.0, 2.0]])
    assert tri.measure() == pytest.approx(4.5)
    assert tri.boundary_measure() == pytest.approx(3 + math.sqrt(13) + math.sqrt(10))


def test_distance_extremes_disk():
    mu, M = Domain.disk().distance_extremes([-18.0, 0.0])
    assert (mu, M) == (pytest.approx(17.0, rel=1e-15), pytest.approx(19.0, rel=1e-15))


def test_distance_extremes_box_edge_and_corner():
    box = Domain.box([0.0, 0.0], [1.0, 1.0])
    mu, M = box.distance_extremes([-2.0, 0.5])
    assert mu == pytest.approx(2.0)
    assert M == pytest.approx(math.hypot(3.0, 0.5))
    mu, M = box.distance_extremes([-1.0, -1.0])
    assert mu == pytest.approx(math.sqrt(2.0))
    assert M == pytest.approx(math.sqrt(8.0))


def test_outward_normals():
    assert np.allclose(Domain.disk().outward_normal([1.0, 0.0]), [1.0, 0.0])
    assert np.allclose(Domain.disk().outward_normal([0.0, -1.0]), [0.0, -1.0])
    assert np.allclose(Domain.box([0, 0], [1, 1]).outward_normal([0.5, 0.0]), [0.0, -1.0])
    with pytest.raises(CornerPoint):
        Domain.box([0, 0], [1, 1]).outward_normal([1.0, 1.0])


def test_interior_grid_examples():
    g = Domain.box([0, 0], [1, 1]).interior_grid(0.25)
    assert len(g) == 16 and g.weights.sum() == 1.0
    g = Domain.interval(-1, 1).interior_grid(0.5)
    assert np.allclose(np.sort(g.nodes[:, 0]), [-0.75, -0.25, 0.25, 0.75])
    assert np.allclose(g.weights, 0.5)
    g = Domain.disk().interior_grid(0.05)
    assert abs(g.weights.sum() - math.pi) < 0.02 * math.pi


@pytest.mark.parametrize("dom", SHAPES, ids=lambda d: d.kind)
@pytest.mark.parametrize("h", [0.2, 0.07, 0.031])
def test_cut_cells_are_exact(dom, h):
    g = dom.interior_grid(h)
    assert g.weights.sum() == pytest.approx(dom.measure(), rel=1e-12)
    first = g.nodes.T @ g.weights
    assert np.allclose(first, dom.measure() * dom.centroid(), atol=1e-12)
    assert np.all(dom.contains(g.nodes))


def test_interior_grid_is_second_order_for_smooth_integrands():
    dom = Domain.disk()
    exact = math.pi * (1 - math.exp(-1.0))  # int exp(-|x|^2)
    errs = []
    hs = [0.1, 0.05, 0.025]
    for h in hs:
        g = dom.interior_grid(h)
        errs.append(abs(g.integrate(np.exp(-np.sum(g.nodes**2, axis=1))) - exact))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 1.8


def test_nonpositive_spacing_rejected():
    with pytest.raises(ValueError):
        Domain.disk().interior_grid(0.0)
    with pytest.raises(ValueError):
        Domain.box([0, 0], [1, 1]).boundary_grid(-1.0)


def test_box_boundary_normals_follow_edges():
    bg = Domain.box([0.0, 0.0], [2.0, 1.0]).boundary_grid(0.5)
    for p, n in zip(bg.nodes, bg.normals):
        if p[1] == 0.0:
            assert np.allclose(n, [0, -1])
        elif p[0] == 2.0:
            assert np.allclose(n, [1, 0])
        elif p[1] == 1.0:
            assert np.allclose(n, [0, 1])
        else:
            assert np.allclose(n, [-1, 0])


@pytest.mark.parametrize("dom", SHAPES, ids=lambda d: d.kind)
def test_boundary_grid(dom):
    bg = dom.boundary_grid(0.05)
    assert np.allclose(np.linalg.norm(bg.normals, axis=1), 1.0)
    assert np.all(np.abs(dom.level(bg.nodes)) <= 1e-9)
    assert np.all(np.einsum("ij,ij->i", bg.normals, bg.nodes - dom.centroid()) > 0)
    if dom.kind == "disk":
        assert bg.weights.sum() == pytest.approx(2 * math.pi * dom.radius, rel=1e-12)
    else:
        assert bg.weights.sum() == pytest.approx(dom.boundary_measure(), rel=1e-13)


def test_interval_boundary():
    bg = Domain.interval(-1, 1).boundary_grid(0.1)
    assert np.allclose(bg.nodes[:, 0], [-1, 1])
    assert np.allclose(bg.weights, 1.0)
    assert np.allclose(bg.normals[:, 0], [-1, 1])


def test_level_is_minus_distance_inside():
    dom = Domain.box([-1.0, -1.0], [1.0, 2.0])
    assert dom.level(np.array([[0.0, 0.0]]))[0] == pytest.approx(-1.0)
    assert Domain.disk().level(np.array([[0.5, 0.0]]))[0] == pytest.approx(-0.5)


angles = st.floats(0.0, 2 * math.pi, allow_nan=False)
radii = st.floats(1.05, 50.0, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(SHAPES), angles, radii)
def test_distance_extremes_triangle_inequality(dom, theta, rad):
    p = dom.centroid() + rad * dom.diameter() * np.array([math.cos(theta), math.sin(theta)])
    mu, M = dom.distance_extremes(p)
    delta = dom.diameter()
    assert mu + delta >= M - 1e-12 * M
    assert M - mu <= delta + 1e-12 * M
    # sampled boundary points respect the extremes
    bg = dom.boundary_grid(0.05)
    d = np.linalg.norm(bg.nodes - p, axis=1)
    assert d.min() >= mu - 1e-9 and d.max() <= M + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_contains_matches_level(x, y):
    dom = SHAPES[4]
    p = np.array([[x, y]])
    assert bool(dom.contains(p)[0]) == bool(dom.level(p)[0] <= 1e-12)
