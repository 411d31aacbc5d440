import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swarm.grid import FRONT_BEHIND_SENSORS, Action, Turn
from swarm.networks import (
    ActionNetwork,
    ActionTopology,
    Genome,
    PredefinedPredictions,
    PredictionNetwork,
    PredictionTopology,
    action_forward,
    build_topologies,
    load_genome,
    mutate,
    prediction_forward,
    random_genome,
    resolve_mask,
    save_genome,
)


def zero_genome(mask: PredefinedPredictions = None, sensor_model: str = "C") -> Genome:
    mask = mask or resolve_mask(sensor_model, "none")
    action, prediction = build_topologies(sensor_model, mask)
    return Genome(sensor_model, action, prediction, np.zeros(action.size), np.zeros(prediction.size), mask)


def test_topology_sizes_for_model_c():
    action, prediction = build_topologies("C", resolve_mask("C", "none"))
    assert action == ActionTopology(15, 8, 2)
    assert action.size == (15 * 8 + 8) + (8 * 2 + 2) == 146
    assert prediction == PredictionTopology(15, 14, 14)
    # input weights, hidden biases, self-loops, output weights, output biases
    assert prediction.size == 15 * 14 + 14 + 14 + 14 * 14 + 14


def test_partial_mask_topology():
    mask = resolve_mask("C", "partial")
    assert mask.fixed == {i: 1 for i in FRONT_BEHIND_SENSORS}
    _, prediction = build_topologies("C", mask)
    assert prediction == PredictionTopology(15, 12, 10)


def test_full_mask_removes_prediction_network():
    mask = resolve_mask("C", "full")
    assert mask.complete
    assert mask.fixed == {i: int(i in FRONT_BEHIND_SENSORS) for i in range(14)}
    _, prediction = build_topologies("C", mask)
    assert prediction.size == 0


@pytest.mark.parametrize("model, sensors", [("A", 8), ("B", 6)])
def test_other_models_derive_layer_sizes(model, sensors):
    action, prediction = build_topologies(model, resolve_mask(model, "none"))
    assert action.inputs == prediction.inputs == sensors + 1
    assert prediction.outputs == sensors


def test_mask_presets_need_model_c():
    with pytest.raises(ValueError):
        resolve_mask("A", "partial")
    with pytest.raises(ValueError):
        resolve_mask("C", {14: 1})
    with pytest.raises(ValueError):
        resolve_mask("C", {0: 2})


def test_zero_action_network_moves_right():
    genome = zero_genome()
    assert action_forward(genome, np.zeros(14), 0) == Action(True, Turn.RIGHT)


def test_output_bias_sign_flips_move_decision():
    genome = zero_genome()
    weights = np.zeros(genome.action_topology.size)
    # the last two weights are the output biases (move, turn)
    weights[-2] = -0.5
    assert action_forward(genome.with_weights(weights, genome.prediction_weights), np.zeros(14), 1).move is False
    weights[-2] = 0.5
    assert action_forward(genome.with_weights(weights, genome.prediction_weights), np.zeros(14), 1).move is True


def test_identical_inputs_give_identical_actions():
    genome = random_genome("C", resolve_mask("C", "none"), *build_topologies("C", resolve_mask("C", "none")),
                           np.random.default_rng(4))
    network = ActionNetwork(genome.action_topology, genome.action_weights)
    sensors = np.tile(np.random.default_rng(5).integers(0, 2, 14), (3, 1))
    moves, turns = network.decide(sensors, np.array([1, 1, 1]))
    assert len(set(moves.tolist())) == 1 and len(set(turns.tolist())) == 1


def test_action_network_rejects_weight_mismatch():
    with pytest.raises(ValueError):
        ActionNetwork(ActionTopology(15, 8, 2), np.zeros(10))


def test_zero_prediction_network_predicts_ones():
    genome = zero_genome()
    predictions, state = prediction_forward(genome, np.zeros(14), np.zeros(14), 1)
    assert predictions.tolist() == [1] * 14
    assert state.shape == (14,)


def test_prediction_network_rejects_dimension_mismatch():
    genome = zero_genome()
    network = PredictionNetwork(genome.prediction_topology, genome.prediction_weights, genome.mask)
    with pytest.raises(ValueError):
        network.predict(network.initial_state(2), np.zeros((2, 13)), np.zeros(2))
    with pytest.raises(ValueError):
        network.predict(np.zeros((2, 5)), np.zeros((2, 14)), np.zeros(2))


def test_self_recurrence_makes_predictions_state_dependent():
    # one hidden unit, one output: hidden = tanh(-1 - 3 * previous), output = logistic(hidden)
    mask = PredefinedPredictions(1)
    topology = PredictionTopology(2, 1, 1)
    weights = np.array([0.0, 0.0, -1.0, -3.0, 1.0, 0.0])
    network = PredictionNetwork(topology, weights, mask)
    state = network.initial_state(1)
    first, state = network.predict(state, np.zeros((1, 1)), np.zeros(1))
    second, state = network.predict(state, np.zeros((1, 1)), np.zeros(1))
    assert first.tolist() == [[0]]
    assert second.tolist() == [[1]]


def test_hidden_state_starts_at_zero():
    genome = random_genome("C", resolve_mask("C", "none"), *build_topologies("C", resolve_mask("C", "none")),
                           np.random.default_rng(8))
    sensors = np.random.default_rng(9).integers(0, 2, 14)
    a, _ = prediction_forward(genome, np.zeros(14), sensors, 1)
    b, _ = prediction_forward(genome, np.zeros(14), sensors, 1)
    assert (a == b).all()


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["partial", "full"]))
def test_fixed_predictions_dominate(seed, preset):
    rng = np.random.default_rng(seed)
    mask = resolve_mask("C", preset)
    genome = random_genome("C", mask, *build_topologies("C", mask), rng)
    network = PredictionNetwork(genome.prediction_topology, genome.prediction_weights, mask)
    robots = 20
    state = rng.uniform(-1, 1, (robots, genome.prediction_topology.hidden))
    predictions, _ = network.predict(state, rng.integers(0, 2, (robots, 14)), rng.integers(0, 2, robots))
    for index, bit in mask.fixed.items():
        assert (predictions[:, index] == bit).all()
    assert set(np.unique(predictions).tolist()) <= {0, 1}


@pytest.mark.parametrize("preset", ["partial", "full"])
def test_fixed_predictions_dominate_ten_thousand_inputs(preset):
    mask = resolve_mask("C", preset)
    action, prediction = build_topologies("C", mask)
    fixed = np.array(list(mask.fixed.keys()))
    bits = np.array(list(mask.fixed.values()))
    rows = 0
    for seed in range(500):
        rng = np.random.default_rng(seed)
        genome = random_genome("C", mask, action, prediction, rng)
        network = PredictionNetwork(prediction, genome.prediction_weights, mask)
        state = rng.uniform(-1, 1, (20, prediction.hidden))
        predictions, _ = network.predict(state, rng.integers(0, 2, (20, 14)), rng.integers(0, 2, 20))
        assert (predictions[:, fixed] == bits).all()
        rows += len(predictions)
    assert rows == 10_000


def test_random_genome_weights_in_range_and_seeded():
    mask = resolve_mask("C", "none")
    topologies = build_topologies("C", mask)
    a = random_genome("C", mask, *topologies, np.random.default_rng(1))
    b = random_genome("C", mask, *topologies, np.random.default_rng(1))
    c = random_genome("C", mask, *topologies, np.random.default_rng(2))
    assert a == b
    assert a != c
    assert np.abs(a.action_weights).max() <= 1.0
    assert np.abs(a.prediction_weights).max() <= 1.0


def test_genome_rejects_bad_weights():
    mask = resolve_mask("C", "none")
    action, prediction = build_topologies("C", mask)
    with pytest.raises(ValueError):
        Genome("C", action, prediction, np.zeros(action.size - 1), np.zeros(prediction.size), mask)
    weights = np.zeros(action.size)
    weights[0] = np.nan
    with pytest.raises(ValueError):
        Genome("C", action, prediction, weights, np.zeros(prediction.size), mask)


def test_genome_weights_are_read_only():
    genome = zero_genome()
    with pytest.raises(ValueError):
        genome.action_weights[0] = 1.0


def test_mutation_rate_extremes():
    mask = resolve_mask("C", "none")
    genome = random_genome("C", mask, *build_topologies("C", mask), np.random.default_rng(0))
    assert mutate(genome, 0.0, np.random.default_rng(1)) == genome
    fresh = mutate(genome, 1.0, np.random.default_rng(1))
    assert not np.isin(fresh.action_weights, genome.action_weights).any()
    with pytest.raises(ValueError):
        mutate(genome, 1.5, np.random.default_rng(1))


def test_mutation_fraction_within_three_sigma():
    action = ActionTopology(inputs=99_999, hidden=1, outputs=0)
    prediction = PredictionTopology(2, 0, 0)
    genome = Genome("C", action, prediction, np.random.default_rng(3).uniform(-1, 1, action.size), [],
                    PredefinedPredictions(14, {i: 0 for i in range(14)}))
    mutated = mutate(genome, 0.1, np.random.default_rng(4))
    changed = np.mean(mutated.action_weights != genome.action_weights)
    n = action.size
    assert abs(changed - 0.1) < 3 * np.sqrt(0.1 * 0.9 / n)


def test_genome_file_round_trip(tmp_path):
    mask = resolve_mask("C", "partial")
    genome = random_genome("C", mask, *build_topologies("C", mask), np.random.default_rng(6))
    path = tmp_path / "genome.json"
    save_genome(genome, path)
    assert load_genome(path) == genome


@pytest.mark.parametrize("change", [
    {"format": "something-else"},
    {"version": 99},
    {"sensor_model": "Z"},
    {"action_weights": [0.0]},
])
def test_malformed_genome_files(tmp_path, change):
    genome = zero_genome()
    path = tmp_path / "genome.json"
    save_genome(genome, path)
    raw = json.loads(path.read_text())
    raw.update(change)
    path.write_text(json.dumps(raw))
    with pytest.raises(ValueError):
        load_genome(path)


def test_genome_file_not_json(tmp_path):
    path = tmp_path / "genome.json"
    path.write_text("weights: 1 2 3")
    with pytest.raises(ValueError):
        load_genome(path)
