"""Grids, left-continuous trajectories, the sup metric, and CSV round-trips."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fidhvi.trajectory import (
    PiecewiseTrajectory,
    TimeGrid,
    sup_distance,
    trajectory_from_csv,
    trajectory_to_csv,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.1, 0.5, 1.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.linspace(0.0, 1.0, 5), (1.0,))
    with pytest.raises(ValueError):
        TimeGrid(np.linspace(0.0, 1.0, 5), (0.5, 0.25))


def test_uniform_lattice_snaps_impulses_onto_nodes():
    grid = TimeGrid.uniform(1.0, 8, (0.25, 0.75))
    assert grid.n_nodes == 9
    assert grid.impulse_times == (0.25, 0.75)
    assert tuple(grid.impulse_indices) == (2, 6)
    assert grid.is_uniform
    with pytest.raises(ValueError):
        TimeGrid.uniform(1.0, 8, (0.3,))
    with pytest.raises(ValueError):
        TimeGrid.uniform(1.0, 1)


def test_subinterval_convention_is_left_continuous():
    # a node at an impulse time closes the previous subinterval
    grid = TimeGrid.uniform(1.0, 8, (0.25, 0.75))
    assert grid.subinterval_index(0.25) == 0
    assert grid.subinterval_index(0.375) == 1
    assert grid.subinterval_index(0.75) == 1
    assert grid.subinterval_index(1.0) == 2
    assert grid.subinterval_index(0.0) == 0


def test_per_subinterval_grid_counts():
    grid = TimeGrid.per_subinterval(1.0, (0.25, 0.75), (2, 3, 2))
    assert grid.n_nodes == 8
    assert grid.impulse_times == (0.25, 0.75)
    assert not grid.is_uniform
    with pytest.raises(ValueError):
        TimeGrid.per_subinterval(1.0, (0.5,), (2, 2, 2))


def test_node_lookup_rejects_off_grid_times():
    grid = TimeGrid.uniform(1.0, 4)
    assert grid.node_index(0.5) == 2
    with pytest.raises(ValueError):
        grid.node_index(0.3)


def test_trajectory_shape_checks_and_one_sided_values():
    grid = TimeGrid.uniform(1.0, 4, (0.5,))
    vals = np.arange(5.0)[:, None]
    traj = PiecewiseTrajectory(grid, vals, np.array([[9.0]]))
    assert traj.dim == 1
    assert traj.eval_left(0.5) == pytest.approx(2.0)
    assert traj.eval_right(0.5) == pytest.approx(9.0)
    assert traj.eval_right(0.25) == traj.eval_left(0.25)
    assert traj.jump(0) == pytest.approx(7.0)
    assert traj.jumps().shape == (1, 1)
    with pytest.raises(IndexError):
        traj.jump(1)
    with pytest.raises(ValueError):
        PiecewiseTrajectory(grid, vals[:-1], np.array([[9.0]]))
    with pytest.raises(ValueError):
        PiecewiseTrajectory(grid, vals, np.zeros((2, 1)))


def test_from_values_and_jumps_builds_right_limits():
    grid = TimeGrid.uniform(1.0, 4, (0.25, 0.75))
    vals = np.linspace(0.0, 1.0, 5)
    traj = PiecewiseTrajectory.from_values_and_jumps(grid, vals, np.array([0.5, -0.25]))
    assert traj.right_values[:, 0] == pytest.approx([0.75, 0.5])


def test_constant_trajectory_and_restriction():
    fine = TimeGrid.uniform(1.0, 8, (0.5,))
    coarse = TimeGrid.uniform(1.0, 4, (0.5,))
    traj = PiecewiseTrajectory.from_values_and_jumps(
        fine, np.arange(9.0), np.array([100.0])
    )
    sub = traj.restrict(coarse)
    assert sub.values[:, 0] == pytest.approx([0.0, 2.0, 4.0, 6.0, 8.0])
    assert sub.right_values[0, 0] == pytest.approx(104.0)
    const = PiecewiseTrajectory.constant(fine, [3.0, -1.0])
    assert const.dim == 2
    assert np.all(const.values == np.array([3.0, -1.0]))


def _traj(grid, flat):
    flat = np.asarray(flat, dtype=float)
    return PiecewiseTrajectory(grid, flat[:9, None], flat[9:10, None])


_GRID = TimeGrid.uniform(1.0, 8, (0.5,))
_vec = st.lists(
    st.floats(min_value=-50.0, max_value=50.0, allow_nan=False),
    min_size=10,
    max_size=10,
)


@given(_vec, _vec, _vec)
def test_sup_distance_is_a_metric(a, b, c):
    ta, tb, tc = _traj(_GRID, a), _traj(_GRID, b), _traj(_GRID, c)
    dab = sup_distance(ta, tb)
    assert dab >= 0.0
    assert sup_distance(ta, ta) == 0.0
    assert dab == sup_distance(tb, ta)
    assert sup_distance(ta, tc) <= dab + sup_distance(tb, tc) + 1e-12


def test_sup_distance_known_value_and_mismatch_errors():
    a = _traj(_GRID, np.zeros(10))
    b = _traj(_GRID, np.concatenate([np.zeros(9), [2.5]]))
    assert sup_distance(a, b) == 2.5  # attained at the right limit
    other = PiecewiseTrajectory.constant(TimeGrid.uniform(1.0, 4), [0.0])
    with pytest.raises(ValueError):
        sup_distance(a, other)


def test_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(11)
    grid = TimeGrid.uniform(1.0, 16, (0.25, 0.75))
    traj = PiecewiseTrajectory(
        grid=grid,
        values=rng.normal(size=(17, 2)),
        right_values=rng.normal(size=(2, 2)),
    )
    path = tmp_path / "traj.csv"
    trajectory_to_csv(traj, path)
    back = trajectory_from_csv(path)
    assert np.array_equal(back.grid.nodes, grid.nodes)
    assert back.grid.impulse_times == grid.impulse_times
    assert np.array_equal(back.values, traj.values)
    assert np.array_equal(back.right_values, traj.right_values)


def test_csv_rejects_foreign_headers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        trajectory_from_csv(path)
