import numpy as np
import pytest
from pydantic import ValidationError

from swarm.evolution import (
    STREAM_NOISE,
    STREAM_PLACEMENT,
    EvolutionConfig,
    derive_seed,
    evaluate_genome,
    evaluate_population,
    evolve,
    generation_seeds,
    initial_population,
    make_rng,
    next_generation,
    select_proportionate,
    simulate_evaluation,
)
from swarm.grid import SensorModel, TorusGrid, random_placement, sense_all, step_actions
from swarm.metrics import fitness, intended_movement_I, movement_M, temperature
from swarm.networks import action_forward, prediction_forward, random_genome


def genome_for(config: EvolutionConfig, seed: int = 0):
    return random_genome(config.sensor_model, config.predefined(), *config.topologies(), make_rng(seed))


def lone_robot_config(bit: int) -> EvolutionConfig:
    return EvolutionConfig(width=15, height=15, swarm_size=1, eval_length=20, evals_per_genome=3,
                           mask={i: bit for i in range(14)})


def test_derive_seed_is_stable_and_separates_streams():
    assert derive_seed(5, STREAM_PLACEMENT, 0, 1) == derive_seed(5, STREAM_PLACEMENT, 0, 1)
    seeds = {derive_seed(5, STREAM_PLACEMENT, 0, 1), derive_seed(5, STREAM_NOISE, 0, 1),
             derive_seed(5, STREAM_PLACEMENT, 1, 0), derive_seed(6, STREAM_PLACEMENT, 0, 1)}
    assert len(seeds) == 4


def test_config_defaults_match_reference_settings():
    config = EvolutionConfig()
    assert (config.population_size, config.generations, config.eval_length, config.evals_per_genome) == (50, 100, 500, 10)
    assert (config.elitism, config.mutation_rate, config.swarm_size) == (1, 0.1, 100)
    assert config.sensor_count == 14
    assert config.tau == 113
    assert config.robot_steps() == 100 * 50 * 10 * 500 * 100


@pytest.mark.parametrize("fields", [
    {"swarm_size": 226},
    {"swarm_size": 0},
    {"population_size": 3, "elitism": 3},
    {"sensor_model": "A", "mask": "partial"},
    {"noise": 1.5},
    {"mutation_rate": -0.1},
    {"generations": 0},
    {"mask": {20: 1}},
])
def test_config_rejects_invalid_settings(fields):
    with pytest.raises(ValidationError):
        EvolutionConfig(**fields)


def test_lone_robot_predicting_nothing_is_perfect():
    config = lone_robot_config(0)
    record = simulate_evaluation(genome_for(config), config, run_seed=1)
    assert record.fitness == 1.0
    assert record.temperature.shape == (20,)


def test_lone_robot_predicting_everything_is_always_wrong():
    config = lone_robot_config(1)
    assert simulate_evaluation(genome_for(config), config, run_seed=1).fitness == 0.0


def test_simulation_is_deterministic(tiny_config):
    genome = genome_for(tiny_config, 3)
    a = simulate_evaluation(genome, tiny_config, 42, 7)
    b = simulate_evaluation(genome, tiny_config, 42, 7)
    assert a.fitness == b.fitness
    assert (a.temperature == b.temperature).all()
    assert a.final_grid.to_ascii() == b.final_grid.to_ascii()
    assert a.initial_poses == b.initial_poses


def test_simulation_with_noise_is_deterministic(tiny_config):
    config = tiny_config.model_copy(update={"noise": 0.1})
    genome = genome_for(config, 3)
    assert simulate_evaluation(genome, config, 42, 7).fitness == simulate_evaluation(genome, config, 42, 7).fitness


def test_simulation_does_not_touch_the_given_grid(tiny_config):
    grid = TorusGrid(6, 6)
    random_placement(grid, 8, make_rng(0))
    before = grid.to_ascii()
    record = simulate_evaluation(genome_for(tiny_config), tiny_config, None, 3, grid=grid)
    assert grid.to_ascii() == before
    assert record.placement_seed is None


def test_empty_swarm_cannot_be_simulated(tiny_config):
    with pytest.raises(ValueError):
        simulate_evaluation(genome_for(tiny_config), tiny_config, None, 1, grid=TorusGrid(6, 6))


def test_snapshots_every_k_steps(tiny_config):
    record = simulate_evaluation(genome_for(tiny_config), tiny_config, 5, 5, snapshot_every=3)
    assert sorted(record.snapshots) == [0, 3, 6]
    assert record.snapshots[6] == record.final_grid.to_ascii()


@pytest.mark.parametrize("seed", range(100))
def test_movement_never_exceeds_intention(seed):
    config = EvolutionConfig(width=10, height=10, swarm_size=30, eval_length=60, evals_per_genome=1)
    record = simulate_evaluation(genome_for(config, seed), config, seed)
    tau = 50
    assert record.movement(tau) <= record.intended_movement(tau) + 1e-12
    assert ((record.temperature >= 0) & (record.temperature <= 1)).all()
    assert 0.0 <= record.fitness <= 1.0
    assert record.mean_prediction.shape == (14,)


@pytest.mark.parametrize("seed", range(10))
def test_one_step_record_matches_a_robot_by_robot_replay(seed):
    config = EvolutionConfig(width=8, height=8, swarm_size=12, eval_length=1, evals_per_genome=1)
    genome = genome_for(config, seed)
    record = simulate_evaluation(genome, config, seed)

    grid = TorusGrid.from_poses(8, 8, record.initial_poses)
    model = SensorModel(genome.sensor_model)
    before = sense_all(grid, model)
    decisions = [action_forward(genome, before[r], 0) for r in range(grid.size)]
    hidden = np.zeros(genome.prediction_topology.hidden)
    predictions = np.array([prediction_forward(genome, hidden, before[r], decisions[r].value)[0]
                            for r in range(grid.size)])
    step_actions(grid, decisions)
    after = sense_all(grid, model)

    assert grid.poses() == record.final_grid.poses()
    assert record.fitness == pytest.approx(fitness(predictions[None], after[None]))
    assert record.temperature[0] == pytest.approx(temperature(record.initial_poses, grid.poses(), 8, 8))
    moves = np.array([[d.value for d in decisions]])
    assert record.actions.tolist() == moves.tolist()
    assert record.intended_movement(1) == pytest.approx(intended_movement_I(moves, 1))
    assert record.movement(1) == pytest.approx(movement_M(record.temperature, 1))
    assert record.mean_prediction == pytest.approx(predictions.mean(axis=0))


def test_genome_fitness_is_minimum_over_runs(tiny_config):
    genome = genome_for(tiny_config, 2)
    result = evaluate_genome(genome, tiny_config, [1, 2])
    assert result.fitness == min(result.run_fitnesses)
    assert result.run_fitnesses == [r.fitness for r in result.records]
    with pytest.raises(ValueError):
        evaluate_genome(genome, tiny_config, [1, 2, 3])


def test_select_proportionate_certain_pick():
    rng = make_rng(0)
    assert {select_proportionate([1.0, 0.0, 0.0], rng) for _ in range(200)} == {0}


@pytest.mark.parametrize("fitnesses, p", [([1.0, 1.0], 0.5), ([3.0, 1.0], 0.75), ([0.0, 0.0], 0.5)])
def test_select_proportionate_rates(fitnesses, p):
    rng = make_rng(1)
    draws = 10_000
    hits = sum(select_proportionate(fitnesses, rng) == 0 for _ in range(draws))
    assert abs(hits / draws - p) < 3 * np.sqrt(p * (1 - p) / draws)


def test_select_proportionate_rejects_bad_input():
    with pytest.raises(ValueError):
        select_proportionate([], make_rng(0))
    with pytest.raises(ValueError):
        select_proportionate([0.5, -0.1], make_rng(0))


def test_next_generation_keeps_elite(tiny_config):
    population = initial_population(tiny_config)
    fitnesses = [0.2, 0.9, 0.4, 0.1]
    offspring = next_generation(population, fitnesses, tiny_config, make_rng(3))
    assert len(offspring) == tiny_config.population_size
    assert offspring[0] == population[1]


def test_generation_shares_placement_seeds(tiny_config):
    assert generation_seeds(tiny_config, 0) == generation_seeds(tiny_config, 0)
    assert generation_seeds(tiny_config, 0) != generation_seeds(tiny_config, 1)
    results = evaluate_population(initial_population(tiny_config), tiny_config, 0)
    placements = {tuple(r.placement_seed for r in result.records) for result in results}
    assert len(placements) == 1


def test_elite_reevaluated_on_same_seeds_scores_the_same(tiny_config):
    population = initial_population(tiny_config)
    first = evaluate_population(population, tiny_config, 0)
    again = evaluate_population(population, tiny_config, 0)
    assert [r.fitness for r in first] == [r.fitness for r in again]


def test_single_generation_returns_best_initial_genome(tiny_config):
    config = tiny_config.model_copy(update={"generations": 1})
    result = evolve(config)
    fitnesses = [r.fitness for r in evaluate_population(initial_population(config), config, 0)]
    assert result.best_evaluation.fitness == max(fitnesses)
    assert result.best_genome == initial_population(config)[int(np.argmax(fitnesses))]


def test_evolution_is_reproducible_and_counts_budget(tiny_config):
    seen = []
    a = evolve(tiny_config, on_generation=lambda record, results: seen.append(len(results)))
    b = evolve(tiny_config)
    assert [h.model_dump() for h in a.history] == [h.model_dump() for h in b.history]
    assert a.best_genome == b.best_genome
    assert seen == [tiny_config.population_size] * tiny_config.generations
    assert a.budget == tiny_config.robot_steps() == a.history[-1].budget


def test_parallel_matches_serial(tiny_config):
    serial = evolve(tiny_config)
    parallel = evolve(tiny_config.model_copy(update={"workers": 2}))
    assert [h.model_dump() for h in serial.history] == [h.model_dump() for h in parallel.history]
    assert serial.best_genome == parallel.best_genome


def test_partial_and_full_masks_evolve(tiny_config):
    for mask in ("partial", "full"):
        config = tiny_config.model_copy(update={"mask": mask})
        result = evolve(config)
        for index, bit in config.predefined().fixed.items():
            assert result.best_genome.mask.fixed[index] == bit
