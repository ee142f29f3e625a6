import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carleman_lab import geometry, partition, transport, velocity, verify, weight
from carleman_lab.errors import GridMismatch, NotC1, WindowOutOfRange


def manufactured(F, fld, dom, h, times):
    return transport.manufactured_solution(F, fld, dom, dom.interior_grid(h), dom.boundary_grid(h),
                                           times)


def test_energy_of_constant_state(unit_disk):
    fld = velocity.constant([1.0, 0.0], 1.0)
    sol = manufactured(transport.constant_profile(1.0), fld, unit_disk, 0.05, np.linspace(0, 1, 5))
    ep = verify.energy_profile(sol)
    assert np.allclose(ep.energy, math.pi, rtol=1e-12)
    assert np.allclose(ep.flux, 0.0, atol=1e-12)  # inflow and outflow balance
    assert np.max(np.abs(ep.identity_residual)) < 1e-12
    assert ep.estimates_hold


def test_energy_of_zero_state(unit_disk):
    fld = velocity.constant([1.0, 0.0], 1.0)
    sol = manufactured(transport.constant_profile(0.0), fld, unit_disk, 0.1, np.linspace(0, 1, 3))
    ep = verify.energy_profile(sol)
    assert np.all(ep.energy == 0) and np.all(ep.flux == 0) and ep.tau_q == 0


def test_energy_identity_converges(unit_disk):
    fld = velocity.rotation(1.0, 1.0, 1.0)
    F = transport.gaussian([0.2, -0.1], 0.5)
    res = []
    hs = [0.08, 0.04, 0.02]
    for h in hs:
        ep = verify.energy_profile(manufactured(F, fld, unit_disk, h, np.linspace(0, 1, 41)))
        res.append(np.max(np.abs(ep.identity_residual)))
        assert ep.estimates_hold
    assert np.polyfit(np.log(hs), np.log(res), 1)[0] >= 1.0


def test_energy_needs_two_slices(unit_disk):
    fld = velocity.constant([1.0, 0.0], 1.0)
    sol = manufactured(transport.constant_profile(1.0), fld, unit_disk, 0.2, [0.0])
    with pytest.raises(ValueError):
        verify.energy_profile(sol)


# ---------------------------------------------------------------- Carleman
@pytest.fixture
def fixture_solutions(disk_fixture):
    dom, fld, part, w = disk_fixture
    times = transport.partition_times(part, 20)
    sols = [manufactured(transport.gaussian(c, 0.4), fld, dom, 0.08, times)
            for c in ([0.0, 0.0], [-0.4, 0.3])]
    return w, fld, times, sols


def test_zero_solution_has_unit_constant(disk_fixture):
    dom, fld, part, w = disk_fixture
    sol = manufactured(transport.constant_profile(0.0), fld, dom, 0.1,
                       transport.partition_times(part, 4))
    rep = verify.carleman_report(sol, w, [1.0, 2.0, 4.0])
    assert np.all(rep.C == 1.0)
    assert np.all(rep.terms[0].log_bulk == -np.inf)


def test_homogeneity_of_constants(fixture_solutions):
    w, fld, times, sols = fixture_solutions
    s = np.logspace(0, 1.5, 6)
    base = verify.carleman_report(sols, w, s)
    scaled = verify.carleman_report([x.scaled(3.0) for x in sols], w, s)
    assert np.max(np.abs(base.C - scaled.C)) <= 1e-9
    for a, b in zip(base.terms, scaled.terms):
        assert np.allclose(b.log_bulk - a.log_bulk, 2 * math.log(3.0))
        assert b.sigma == pytest.approx(9 * a.sigma)


def test_report_inequality_holds_with_own_constants(fixture_solutions):
    w, fld, times, sols = fixture_solutions
    s = np.logspace(0, 1.5, 6)
    rep = verify.carleman_report(sols, w, s)
    assert np.all(np.isfinite(rep.C)) and np.all(rep.C >= 1)
    assert rep.holds_with(float(rep.C.max()))
    C, valid = verify.fit_constants(rep, rep)
    assert valid and C == rep.C.max()
    # just below a binding constant the inequality must fail somewhere
    k = int(np.argmax(rep.C))
    if rep.C[k] > 1:
        assert not rep.holds_with(rep.C[k] * (1 - 1e-9))


def test_injected_residual_is_reported(fixture_solutions):
    w, fld, times, sols = fixture_solutions
    s = np.logspace(0, 1.5, 6)
    rep = verify.carleman_report(sols, w, s)
    bad = verify.carleman_report([transport.with_injected_residual(sols[0], 0.5)], w, s)
    assert np.all(np.isfinite(bad.terms[0].log_res))
    C, valid = verify.fit_constants(rep, bad)
    assert isinstance(valid, bool)  # outcome is reported, not asserted


def test_report_errors(fixture_solutions, disk_fixture):
    w, fld, times, sols = fixture_solutions
    with pytest.raises(ValueError):
        verify.carleman_report(sols[0], w, [2.0, 1.0])
    with pytest.raises(GridMismatch):
        verify.fit_constants(verify.carleman_report(sols[0], w, [1.0, 2.0]),
                             verify.carleman_report(sols[0], w, [1.0, 3.0]))
    dom = disk_fixture[0]
    even = manufactured(transport.constant_profile(1.0), fld, dom, 0.2, np.linspace(0, 2, 6))
    with pytest.raises(GridMismatch):
        verify.carleman_report(even, w, [1.0])
    tab = velocity.TabulatedField([0.0, 1.0, 2.0], [[1.0, 0.0], [1.0, 0.1], [1.0, 0.0]])
    rough = manufactured(transport.constant_profile(1.0), tab, dom, 0.2, times)
    with pytest.raises(NotC1):
        verify.carleman_report(rough, w, [1.0])


def test_default_s_grid(disk_fixture):
    dom, fld, part, w = disk_fixture
    s, est = verify.default_s_grid(w, fld, dom.interior_grid(0.1))
    assert s.size == 16 and s[0] >= 1 and s[-1] == pytest.approx(50 * s[0])
    assert np.all(np.diff(np.log(s)) == pytest.approx(np.log(50) / 15))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 50), st.floats(-50, 800), st.floats(1e-6, 10))
def test_minimal_constant_is_tight(s, log_lhs, data):
    C = verify.minimal_constant(s, log_lhs, -math.inf, data)
    assert C >= 1
    rhs = math.log(C) + math.log(s) + C * s + math.log(data)
    assert rhs >= log_lhs
    if C > 1:
        lo = C * (1 - 1e-12)
        assert math.log(lo) + math.log(s) + lo * s + math.log(data) <= log_lhs + 1e-9


# ---------------------------------------------------------------- observability
def test_constant_state_ratio_closed_form(unit_disk):
    T = 3.0
    fld = velocity.constant([1.0, 0.0], T)
    w = weight.build_weight(unit_disk, fld, partition.greedy_partition(fld, 0.8))
    sol = manufactured(transport.constant_profile(2.0), fld, unit_disk, 0.05, np.linspace(0, T, 7))
    rep = verify.observability_ratio([sol], w, fld)
    assert rep.ratios[0] == pytest.approx(math.sqrt(math.pi / (2 * math.pi * T)), rel=1e-12)
    assert rep.all_finite and rep.verdict == "max cond fails"


def test_counterexample_is_flagged():
    sc = transport.rotating_bump_counterexample()
    grid, bgrid = sc.domain.interior_grid(0.05), sc.domain.boundary_grid(0.05)
    sol = transport.solve_scenario(sc, grid, bgrid, np.linspace(0, 2 * math.pi, 17))
    w = weight.build_weight(sc.domain, sc.field, partition.greedy_partition(sc.field, 0.8))
    rep = verify.observability_ratio([sol], w, sc.field)
    assert rep.ratios[0] == math.inf and rep.verdict == "observability fails"
    assert not rep.all_finite
    ep = verify.energy_profile(sol)
    assert np.max(np.abs(ep.energy - ep.energy[0])) <= ep.tau_q
    assert np.allclose(ep.flux, 0.0)
    check = verify.extend_window_check(sol, (1.0, 2.0))
    assert check.ok and check.skipped


def test_window_extension(unit_disk):
    fld = velocity.rotation(1.0, 1.0, 2.0)
    sol = manufactured(transport.gaussian([0.1, 0.0], 0.5), fld, unit_disk, 0.05,
                       np.linspace(0, 2, 41))
    check = verify.extend_window_check(sol, (0.5, 1.5))
    assert check.ok and check.premise
    assert check.before_sup <= check.before_bound and check.after_sup <= check.after_bound
    assert verify.extend_window_check(sol, (0.0, 2.0)).ok
    with pytest.raises(WindowOutOfRange):
        verify.extend_window_check(sol, (1.5, 0.5))


def test_ratio_invariant_under_scaling(unit_disk):
    fld = velocity.constant([0.0, 1.0], 2.0)
    w = weight.build_weight(unit_disk, fld, partition.greedy_partition(fld, 0.8))
    sol = manufactured(transport.gaussian([0.3, 0.0], 0.4), fld, unit_disk, 0.08,
                       np.linspace(0, 2, 11))
    a = verify.observability_ratio([sol], w).ratios[0]
    b = verify.observability_ratio([sol.scaled(-7.0)], w).ratios[0]
    assert a == pytest.approx(b, rel=1e-13)
