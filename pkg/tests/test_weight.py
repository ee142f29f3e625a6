import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carleman_lab import geometry, partition, velocity, weight
from carleman_lab.errors import InvalidPartition, OutOfDomain, OutOfHorizon, SlackNonpositive

from oracles import DISK_FIXTURE as FX


@pytest.fixture
def single(unit_disk):
    fld = velocity.constant([1.0, 0.0], 80.0)
    part = partition.greedy_partition(fld, 0.8)
    return unit_disk, fld, weight.build_weight(unit_disk, fld, part, r=2.0)


def test_construction_values(single):
    _, _, w = single
    assert w.radii[0] == pytest.approx(FX["R0"], rel=1e-12)
    assert np.allclose(w.apexes[0], FX["x0"], rtol=1e-12)
    assert w.mu[0] == pytest.approx(FX["mu0"], rel=1e-12)
    assert w.M[0] == pytest.approx(FX["M0"], rel=1e-12)
    assert w.beta == pytest.approx(FX["beta"], rel=1e-12)
    assert w.cstar == pytest.approx(FX["cstar"], rel=1e-12)
    assert w.window_lengths()[0] == pytest.approx(FX["threshold_time"], rel=1e-12)


def test_radii_recursion():
    R = weight.radii_sequence(4, 0.8, 2.0, 2.0)
    assert np.allclose(R, [18, 2 * 18 + 4, 4 * 18 + 3 * 4, 8 * 18 + 7 * 4])
    assert np.allclose(R[1:], 2 * R[:-1] + 4)


def test_phi_and_pphi_values(disk_fixture):
    dom, fld, part, w = disk_fixture
    assert weight.phi(w, [1.0, 0.0], 0.0) == pytest.approx(361.0)
    assert weight.phi(w, [1.0, 0.0], 1.0 - 1e-15) == pytest.approx(361.0 - 4.76, rel=1e-12)
    # second piece uses apex -R_1 eta = (-40, 0)
    assert weight.phi(w, [0.0, 0.0], 1.0) == pytest.approx(40.0**2)
    assert weight.p_phi(w, fld, [0.0, 0.0], 0.5) == pytest.approx(2 * 18 - 4.76)


def test_phi_domain_and_horizon_errors(disk_fixture):
    _, _, _, w = disk_fixture
    with pytest.raises(OutOfHorizon):
        weight.phi(w, [0.0, 0.0], 2.5)
    with pytest.raises(OutOfDomain):
        weight.phi(w, [2.0, 0.0], 0.5)


def test_build_errors(unit_disk):
    fld = velocity.rotation(1.0, 1.0, math.pi)
    bad = partition.from_times(fld, [0.0, math.pi], 0.8)
    with pytest.raises(InvalidPartition):
        weight.build_weight(unit_disk, fld, bad)
    good = partition.greedy_partition(fld, 0.8)
    with pytest.raises(SlackNonpositive):
        weight.build_weight(unit_disk, fld, good, r=0.0)


def test_pointwise_checks_on_fixture(disk_fixture):
    dom, fld, _, w = disk_fixture
    grid = dom.interior_grid(0.04)
    assert weight.check_apex_cone(w, dom, grid) >= 0
    ok, gaps = weight.check_separation(w)
    assert ok and gaps == [pytest.approx(40 - 1 - 19)]
    assert weight.check_pphi_lower_bound(w, fld, grid) == pytest.approx(2 * 17 - 4.76 - 4.76, abs=0.1)


def test_observability_condition_threshold(unit_disk):
    for T, holds in ((80.0, True), (70.0, False)):
        fld = velocity.constant([1.0, 0.0], T)
        w = weight.build_weight(unit_disk, fld, partition.greedy_partition(fld, 0.8), r=2.0)
        cert = weight.observability_condition(w, fld)
        assert cert.holds is holds
        assert cert.threshold == pytest.approx(1 / 0.28)
        assert cert.q[0] == pytest.approx(T * 17 / 361)
        assert cert.jstar == (0 if holds else None)


def test_s0_estimate_sources(disk_fixture, single):
    dom, fld, _, w = disk_fixture
    grid = dom.interior_grid(0.1)
    est = weight.estimate_s0(w, fld, grid, np.logspace(-3, 2, 31))
    assert est.source == "empirical" and est.s0 > 0
    d1, f1, w1 = single
    assert weight.estimate_s0(w1, f1, grid, [0.5, 1.0]).source == "vacuous"


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 2.5), st.sampled_from([0.72, 0.8, 0.95]), st.floats(0.5, 4.0))
def test_weight_jumps_up_at_every_cut(rate, sstar, r):
    dom = geometry.Domain.polygon([[-1, -1], [1.5, -1], [1.5, 1], [-1, 1.2]])
    fld = velocity.rotation(1.0, rate, 3.0)
    w = weight.build_weight(dom, fld, partition.greedy_partition(fld, sstar), r=r)
    nodes = dom.interior_grid(0.2).nodes
    for j in range(1, w.m):
        before = w.branch(nodes, w.times[j], j - 1)
        after = w.branch(nodes, w.times[j], j)
        assert np.all(after > before)
    ok, _ = weight.check_separation(w)
    assert ok
