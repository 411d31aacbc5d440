import numpy as np
import pytest
from hypothesis import given, strategies as st

from swarm.grid import Heading, Pose
from swarm.metrics import (
    fitness,
    intended_movement_I,
    movement_M,
    similarity_S,
    tail_window,
    temperature,
    wrapped_distance,
)


def test_fitness_extremes_and_hand_value():
    sensors = np.array([[[1, 1]]])
    assert fitness(sensors, sensors) == 1.0
    assert fitness(1 - sensors, sensors) == 0.0
    assert fitness(np.array([[[1, 0]]]), sensors) == 0.5


def test_fitness_rejects_bad_shapes():
    with pytest.raises(ValueError):
        fitness(np.zeros((2, 3, 4)), np.zeros((2, 3, 5)))
    with pytest.raises(ValueError):
        fitness(np.zeros((0, 3, 4)), np.zeros((0, 3, 4)))


@given(st.integers(0, 2**32 - 1))
def test_fitness_bounds(seed):
    rng = np.random.default_rng(seed)
    p, s = rng.integers(0, 2, (2, 5, 4, 14))
    assert 0.0 <= fitness(p, s) <= 1.0


def test_wrapped_distance_at_seam():
    assert wrapped_distance(np.array([14]), np.array([0]), 15).tolist() == [1]
    assert wrapped_distance(np.array([3]), np.array([3]), 15).tolist() == [0]


def poses(*cells, heading=Heading.NORTH):
    return [Pose(x, y, heading) for x, y in cells]


def test_temperature_stationary_and_all_moving():
    before = poses((0, 0), (5, 5), (9, 2))
    assert temperature(before, before, 15, 15) == 0.0
    after = poses((1, 0), (5, 6), (8, 2))
    assert temperature(before, after, 15, 15) == 1.0


def test_seam_crossing_counts_one_cell():
    before = poses((14, 3), (2, 2))
    after = poses((0, 3), (2, 2))
    assert temperature(before, after, 15, 15) == pytest.approx(0.5)


def test_temperature_needs_same_robots():
    with pytest.raises(ValueError):
        temperature(poses((0, 0)), poses((0, 0), (1, 1)), 5, 5)


def test_tail_window():
    assert tail_window(15, 15) == 113
    assert tail_window(20, 20) == 200
    assert tail_window(25, 8) == 100


def test_movement_window():
    assert movement_M([0.0] * 10, 5) == 0.0
    assert movement_M([0.25] * 10, 4) == pytest.approx(0.25)
    assert movement_M([1.0, 1.0, 0.0, 0.0], 2) == 0.0
    with pytest.raises(ValueError):
        movement_M([0.1] * 3, 4)
    with pytest.raises(ValueError):
        movement_M([0.1] * 3, 0)


def test_intended_movement():
    assert intended_movement_I(np.ones((6, 4))) == 1.0
    assert intended_movement_I(np.zeros((6, 4))) == 0.0
    actions = np.vstack([np.ones((3, 2)), np.zeros((2, 2))])
    assert intended_movement_I(actions, 2) == 0.0
    assert intended_movement_I(actions, 5) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        intended_movement_I(actions, 6)


def test_similarity():
    config = poses(*[(i, 0) for i in range(10)])
    assert similarity_S(config, config, 10) == 1.0
    assert similarity_S(poses((0, 1)), poses((0, 2)), 1) == 0.0
    half = poses(*[(i, 0) for i in range(50)]) + poses(*[(i, 1) for i in range(50)])
    other = poses(*[(i, 0) for i in range(50)]) + poses(*[(i, 2) for i in range(50)])
    assert similarity_S(half, other, 100) == 0.5


def test_similarity_heading_switch():
    before = poses((0, 0), (1, 0))
    after = poses((0, 0), (1, 0), heading=Heading.EAST)
    assert similarity_S(after, before, 2) == 0.0
    assert similarity_S(after, before, 2, compare_headings=False) == 1.0
    with pytest.raises(ValueError):
        similarity_S(after, before, 0)


@given(st.sets(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=1),
       st.sets(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=1))
def test_similarity_is_symmetric_for_equal_sizes(a, b):
    a, b = sorted(a), sorted(b)
    n = min(len(a), len(b))
    a, b = poses(*a[:n]), poses(*b[:n])
    s = similarity_S(a, b, n)
    assert s == similarity_S(b, a, n)
    assert 0.0 <= s <= 1.0
