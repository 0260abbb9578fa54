import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetpde import FleetState, SoeGrid, TransitEntry, empty_state, init_uniform_idle, total_vehicles
from fleetpde.errors import ConfigurationError, DimensionError, InfeasibleControlError, ValidationError
from fleetpde.grid import clamp_floor


def test_default_grid_has_six_points_at_fifth_spacing():
    g = SoeGrid()
    assert g.n_bins == 6
    assert g.dx == pytest.approx(0.2)
    np.testing.assert_allclose(g.x, [0, 0.2, 0.4, 0.6, 0.8, 1.0])
    assert g.dt_seconds == 600.0


def test_from_dx_rejects_uneven_spacing():
    assert SoeGrid.from_dx(0.25).n_bins == 5
    with pytest.raises(ConfigurationError):
        SoeGrid.from_dx(0.3)


@pytest.mark.parametrize("kw", [{"n_bins": 1}, {"dt_minutes": 0}, {"horizon_steps": 0}, {"n_sim_steps": -1}])
def test_grid_rejects_bad_parameters(kw):
    with pytest.raises(ConfigurationError):
        SoeGrid(**kw)


def test_empty_fleet_counts_zero():
    g = SoeGrid()
    assert total_vehicles(empty_state(("I", "II"), g), g) == 0.0


def test_unit_idle_density_over_six_points_is_1_2_vehicles():
    g = SoeGrid()
    s = FleetState(("I",), np.zeros((1, 6)), np.ones((1, 6)), np.zeros((1, 6)))
    assert total_vehicles(s, g) == pytest.approx(1.2, abs=1e-12)


def test_transit_counts_toward_total():
    g = SoeGrid()
    s = empty_state(("I", "II"), g).with_(in_transit=(TransitEntry("I", "II", 3, 0, 4.0, True),))
    assert total_vehicles(s, g) == 4.0


def test_uniform_idle_init_of_7500_over_three_nodes():
    g = SoeGrid()
    s = init_uniform_idle(7500, g)
    assert total_vehicles(s, g) == pytest.approx(7500, abs=1e-9)
    assert not s.u.any() and not s.w.any()


def test_uniform_idle_init_of_300_density_per_bin():
    g = SoeGrid()
    s = init_uniform_idle(300, g)
    np.testing.assert_allclose(s.v, 100 / 1.2, rtol=1e-12)


def test_zero_fleet_and_degenerate_weights():
    g = SoeGrid()
    assert not init_uniform_idle(0, g).v.any()
    s = init_uniform_idle(90, g, weights=(1, 0, 0))
    assert s.v[0].sum() * g.dx == pytest.approx(90)
    assert not s.v[1:].any()


def test_weights_by_label_and_validation():
    g = SoeGrid()
    s = init_uniform_idle(60, g, nodes=("a", "b"), weights={"a": 0.25, "b": 0.75})
    assert s.v[1].sum() * g.dx == pytest.approx(45)
    with pytest.raises(ValidationError):
        init_uniform_idle(60, g, nodes=("a", "b"), weights={"a": 1.0})
    with pytest.raises(ValidationError):
        init_uniform_idle(60, g, weights=(0.5, 0.5, 0.5))
    with pytest.raises(ValidationError):
        init_uniform_idle(-1, g)


def test_state_shape_checks():
    with pytest.raises(DimensionError):
        FleetState(("I",), np.zeros((1, 6)), np.zeros((1, 5)), np.zeros((1, 6)))
    with pytest.raises(DimensionError):
        FleetState(("I", "II"), np.zeros((1, 6)), np.zeros((1, 6)), np.zeros((1, 6)))
    s = FleetState(("I",), np.zeros((1, 5)), np.zeros((1, 5)), np.zeros((1, 5)))
    with pytest.raises(DimensionError):
        total_vehicles(s, SoeGrid())


def test_state_is_read_only():
    s = init_uniform_idle(10, SoeGrid())
    with pytest.raises(ValueError):
        s.v[0, 0] = 1.0


def test_transit_entries_merge_and_reject_stale():
    e = TransitEntry("I", "II", 2, 1, 1.5, True)
    s = FleetState(("I", "II"), np.zeros((2, 6)), np.zeros((2, 6)), np.zeros((2, 6)), (e, e))
    assert len(s.in_transit) == 1 and s.in_transit[0].vehicle_count == 3.0
    with pytest.raises(ValidationError):
        FleetState(("I", "II"), np.zeros((2, 6)), np.zeros((2, 6)), np.zeros((2, 6)), (e,), step=2)


def test_density_floor_clamps_round_off_and_rejects_real_negatives():
    np.testing.assert_array_equal(clamp_floor(np.array([1.0, -5e-10]), "v"), [1.0, 0.0])
    with pytest.raises(InfeasibleControlError):
        clamp_floor(np.array([1.0, -1e-6]), "v")


@settings(max_examples=60, deadline=None)
@given(fleet=st.floats(0, 1e6), n_bins=st.integers(2, 12),
       weights=st.lists(st.floats(0.01, 1.0), min_size=1, max_size=4))
def test_init_then_count_round_trip(fleet, n_bins, weights):
    g = SoeGrid(n_bins=n_bins)
    w = np.array(weights) / sum(weights)
    nodes = tuple(f"n{i}" for i in range(len(w)))
    s = init_uniform_idle(fleet, g, nodes, w)
    assert total_vehicles(s, g) == pytest.approx(fleet, rel=1e-12, abs=1e-9)
