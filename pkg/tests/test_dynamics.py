import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetpde import (ChargeRates, ControlVector, FleetState, SoeGrid, TransitEntry, advect, init_uniform_idle,
                      load_builtin, project_controls, state_census, step, step_flows, total_vehicles, transfer)
from fleetpde.errors import ConfigurationError, DimensionError, InfeasibleControlError

from states import GRID, NODES, OD, RATES, random_controls, random_state


def test_default_charging_gain_per_step():
    assert RATES.soe_gain_per_step(GRID) == pytest.approx(7 / 10 * 0.86 / 60 * 10, abs=1e-15)
    assert abs(RATES.soe_gain_per_step(GRID) - 0.1003) <= 1e-4


def test_zero_controls_on_idle_fleet_leave_state_unchanged():
    s = init_uniform_idle(7500, GRID)
    nxt = step(s, ControlVector.zeros(3, GRID.n_bins), RATES, GRID, OD)
    np.testing.assert_array_equal(nxt.v, s.v)
    assert not nxt.u.any() and not nxt.w.any()
    assert nxt.step == 1


def test_unit_courant_charging_shifts_one_bin():
    rates = ChargeRates(7.0, 7.0 * 10 / 60 / 0.2, 1.0)
    assert rates.courant(GRID)[0] == pytest.approx(1.0)
    u = np.zeros((1, 6))
    u[0, 2] = 10.0
    s = FleetState(("I",), u, np.zeros((1, 6)), np.zeros((1, 6)))
    out = advect(s, GRID, rates)
    expected = np.zeros((1, 6))
    expected[0, 3] = 10.0
    np.testing.assert_allclose(out.u, expected, atol=1e-12)


def test_discharging_moves_down_and_ends_absorb():
    u = np.zeros((1, 6))
    w = np.zeros((1, 6))
    u[0, 5], w[0, 0], w[0, 3] = 4.0, 3.0, 2.0
    s = FleetState(("I",), u, np.zeros((1, 6)), w)
    out = advect(s, GRID, RATES)
    cc, cd = RATES.courant(GRID)
    assert out.u[0, 5] == pytest.approx(4.0)
    assert out.w[0, 0] == pytest.approx(3.0)
    assert out.w[0, 2] == pytest.approx(2.0 * cd)
    assert out.w[0, 3] == pytest.approx(2.0 * (1 - cd))


def test_cfl_violation_is_rejected():
    with pytest.raises(ConfigurationError, match="CFL"):
        RATES.check_cfl(SoeGrid(n_bins=21))


def test_passenger_departure_I_to_IV_lands_two_steps_later_one_bin_lower():
    s = init_uniform_idle(300, GRID)
    i, j, k = 0, 2, 4
    ctrl = ControlVector.zeros(3, 6)
    pax = np.array(ctrl.pax)
    pax[i, j, k] = 5.0 / (GRID.dt_minutes * GRID.dx)
    ctrl = ControlVector(ctrl.sic, ctrl.sid, pax, ctrl.emp)
    post = transfer(s.with_(step=7), ctrl, GRID, OD)
    assert post.in_transit == (TransitEntry("I", "IV", 9, 3, pytest.approx(5.0), True),)
    s1 = advect(post, GRID, RATES)
    assert s1.in_transit and s1.v[2, 3] == pytest.approx(s.v[2, 3])
    s2 = step(s1, ControlVector.zeros(3, 6), RATES, GRID, OD)
    assert not s2.in_transit
    assert s2.v[2, 3] * GRID.dx == pytest.approx(s.v[2, 3] * GRID.dx + 5.0)


def test_census_counts():
    assert tuple(state_census(init_uniform_idle(7500, GRID), GRID)) == pytest.approx((0, 7500, 0, 0, 0))
    s = init_uniform_idle(600, GRID)
    sic = np.zeros((3, 6))
    sic[0, 1] = 10.0 / (GRID.dt_minutes * GRID.dx)
    nxt = step(s, ControlVector(sic, np.zeros((3, 6)), np.zeros((3, 3, 6)), np.zeros((3, 3, 6))), RATES, GRID, OD)
    assert state_census(nxt, GRID).charging == pytest.approx(10.0, abs=1e-9)
    s = s.with_(in_transit=(TransitEntry("I", "II", 2, 0, 3.0, True), TransitEntry("II", "I", 1, 0, 4.0, False)))
    c = state_census(s, GRID)
    assert (c.transit_pax, c.transit_empty) == (3.0, 4.0)


def test_forced_returns_at_the_ends():
    u = np.zeros((1, 6))
    w = np.zeros((1, 6))
    u[0, 5], w[0, 0] = 2.0, 3.0
    s = FleetState(("I",), u, np.zeros((1, 6)), w)
    od = load_builtin("extreme").od
    post = transfer(s, ControlVector.zeros(1, 6), GRID, type(od)(("I",), od.delta_x_kwh[:1, :1],
                                                                    od.delta_t_seconds[:1, :1], od.delta_bins[:1, :1],
                                                                    od.delta_steps[:1, :1]))
    assert post.u[0, 5] == 0 and post.w[0, 0] == 0
    assert post.v[0, 5] == 2.0 and post.v[0, 0] == 3.0


def test_infeasible_controls_raise():
    s = init_uniform_idle(60, GRID)
    ctrl = ControlVector.zeros(3, 6)
    too_many = np.array(ctrl.sic)
    too_many[0, 2] = 2 * s.v[0, 2] / GRID.dt_minutes
    with pytest.raises(InfeasibleControlError):
        transfer(s, ControlVector(too_many, ctrl.sid, ctrl.pax, ctrl.emp), GRID, OD)
    low = np.array(ctrl.pax)
    low[0, 1, 0] = 1.0
    with pytest.raises(InfeasibleControlError):
        transfer(s, ControlVector(ctrl.sic, ctrl.sid, low, ctrl.emp), GRID, OD)
    with pytest.raises(DimensionError):
        transfer(s, ControlVector.zeros(2, 6), GRID, OD)


def test_projection_absorbs_round_off_only():
    s = init_uniform_idle(7500, GRID)
    ctrl = ControlVector.zeros(3, 6)
    sic = np.array(ctrl.sic)
    sic[0, 0] = s.v[0, 0] / GRID.dt_minutes * (1 + 1e-9)
    fixed = project_controls(s, ControlVector(sic, ctrl.sid, ctrl.pax, ctrl.emp), GRID, OD)
    assert transfer(s, fixed, GRID, OD).v[0, 0] >= 0
    sic[0, 0] = s.v[0, 0] / GRID.dt_minutes * 1.01
    with pytest.raises(InfeasibleControlError):
        project_controls(s, ControlVector(sic, ctrl.sid, ctrl.pax, ctrl.emp), GRID, OD)


def test_step_flows_energy_bookkeeping():
    s = init_uniform_idle(600, GRID)
    sid = np.zeros((3, 6))
    sid[1, 3] = 10.0 / (GRID.dt_minutes * GRID.dx)
    f = step_flows(s, ControlVector(np.zeros((3, 6)), sid, np.zeros((3, 3, 6)), np.zeros((3, 3, 6))), RATES, GRID, OD)
    np.testing.assert_allclose(f.discharge_kwh, [0, 10 * 7 * 10 / 60, 0])
    assert not f.charge_kwh.any()


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_steps=st.integers(1, 6))
def test_conservation_under_random_feasible_controls(seed, n_steps):
    rng = np.random.default_rng(seed)
    s = random_state(rng)
    before = total_vehicles(s, GRID)
    for _ in range(n_steps):
        c = random_controls(rng, s)
        post = transfer(s, c, GRID, OD)
        assert sum(state_census(post, GRID)) == pytest.approx(before, rel=1e-9)
        s = step(s, c, RATES, GRID, OD)
        assert total_vehicles(s, GRID) == pytest.approx(before, rel=1e-6, abs=1e-9)
        assert min(s.u.min(), s.v.min(), s.w.min()) >= -1e-9


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dt=st.sampled_from([1.0, 5.0, 10.0]))
def test_upwind_keeps_nonnegative_input_nonnegative(seed, dt):
    rng = np.random.default_rng(seed)
    grid = SoeGrid(dt_minutes=dt)
    s = random_state(rng, transit=False)
    out = advect(s, grid, RATES)
    assert out.u.min() >= 0 and out.w.min() >= 0
    # away from the absorbing ends each new value is a convex combination of old ones
    assert out.u[:, :-1].max() <= s.u.max() + 1e-12 and out.w[:, 1:].max() <= s.w.max() + 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_every_departure_lands_once_lower_by_its_trip_energy(seed):
    rng = np.random.default_rng(seed)
    s = random_state(rng, transit=False)
    c = random_controls(rng, s)
    post = transfer(s, c, GRID, OD)
    dt, dx = GRID.dt_minutes, GRID.dx
    expected = {}
    for i, o in enumerate(NODES):
        for j, d in enumerate(NODES):
            for k in range(GRID.n_bins):
                for flow, flag in ((c.pax, True), (c.emp, False)):
                    if flow[i, j, k] > 0:
                        key = (o, d, int(OD.delta_steps[i, j]), k - int(OD.delta_bins[i, j]), flag)
                        expected[key] = expected.get(key, 0.0) + flow[i, j, k] * dt * dx
    got = {e.key: e.vehicle_count for e in post.in_transit}
    assert set(got) == set(expected)
    for key, count in expected.items():
        assert got[key] == pytest.approx(count, rel=1e-12)
    # landing releases exactly the ledger, nothing more
    s = post
    arrived = np.zeros((3, GRID.n_bins))
    for _ in range(int(OD.delta_steps.max())):
        before_v = np.array(s.v)
        s = advect(s, GRID, RATES)
        arrived += (s.v - before_v) * dx
        s = transfer(s, ControlVector.zeros(3, GRID.n_bins), GRID, OD)
    assert not s.in_transit
    assert arrived.sum() == pytest.approx(sum(got.values()), rel=1e-12)
