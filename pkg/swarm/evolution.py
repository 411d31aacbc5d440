#!/usr/bin/env python3
"""
Minimal-Surprise Evolution
Swarm simulation of one genome, fitness evaluation and the generational genetic algorithm
"""

import concurrent.futures
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from swarm.grid import (
    SENSOR_OFFSETS,
    NoiseModel,
    Pose,
    SensorModel,
    TorusGrid,
    random_placement,
    sense_all,
    step_swarm,
)
from swarm.metrics import fitness as prediction_fitness
from swarm.metrics import intended_movement_I, movement_M, tail_window, temperature_from_arrays
from swarm.networks import (
    ActionNetwork,
    Genome,
    PredefinedPredictions,
    PredictionNetwork,
    build_topologies,
    mutate,
    random_genome,
    resolve_mask,
)

logger = logging.getLogger("swarm-evolution")

# Independent random streams derived from one master seed
STREAM_INIT = 0
STREAM_PLACEMENT = 1
STREAM_NOISE = 2
STREAM_BREED = 3
STREAM_RERUN = 4
STREAM_STUDY = 5
STREAM_REPOSITION = 6


def derive_seed(master_seed: int, stream: int, *indices: int) -> int:
    """Seed for one stream/index combination; independent of evaluation order"""
    sequence = np.random.SeedSequence(master_seed, spawn_key=(stream, *indices))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


class EvolutionConfig(BaseModel):
    """Parameters of one evolutionary run; defaults are the reference experiment settings"""

    population_size: int = Field(50, ge=1)
    generations: int = Field(100, ge=1)
    eval_length: int = Field(500, ge=1)
    evals_per_genome: int = Field(10, ge=1)
    elitism: int = Field(1, ge=0)
    mutation_rate: float = Field(0.1, ge=0.0, le=1.0)
    width: int = Field(15, ge=1)
    height: int = Field(15, ge=1)
    swarm_size: int = Field(100, ge=1)
    sensor_model: Literal["A", "B", "C"] = "C"
    mask: Union[Literal["none", "partial", "full"], Dict[int, int]] = "none"
    noise: float = Field(0.0, ge=0.0, le=1.0)
    action_hidden: int = Field(8, ge=1)
    prediction_hidden: Optional[int] = Field(None, ge=1)
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def check_consistency(self) -> "EvolutionConfig":
        if self.swarm_size > self.width * self.height:
            raise ValueError(f"Swarm size {self.swarm_size} exceeds {self.width}x{self.height} cells")
        if self.elitism >= self.population_size and self.generations > 1:
            raise ValueError("Elitism must leave room for offspring")
        resolve_mask(self.sensor_model, self.mask)
        return self

    @property
    def sensor_count(self) -> int:
        return len(SENSOR_OFFSETS[self.sensor_model])

    @property
    def tau(self) -> int:
        return tail_window(self.width, self.height)

    def predefined(self) -> PredefinedPredictions:
        return resolve_mask(self.sensor_model, self.mask)

    def topologies(self):
        return build_topologies(self.sensor_model, self.predefined(), self.action_hidden, self.prediction_hidden)

    def noise_model(self) -> NoiseModel:
        return NoiseModel(self.noise)

    def robot_steps_per_generation(self) -> int:
        return self.population_size * self.evals_per_genome * self.eval_length * self.swarm_size

    def robot_steps(self) -> int:
        return self.generations * self.robot_steps_per_generation()


@dataclass
class RunRecord:
    """Everything measured during one simulated evaluation"""

    placement_seed: Optional[int]
    noise_seed: int
    fitness: float
    temperature: np.ndarray
    intended: np.ndarray
    actions: np.ndarray
    initial_poses: List[Pose]
    final_grid: TorusGrid
    mean_prediction: np.ndarray
    snapshots: Dict[int, str] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.temperature)

    def window(self, tau: int) -> int:
        return min(tau, self.steps)

    def movement(self, tau: int) -> float:
        return movement_M(self.temperature, self.window(tau))

    def intended_movement(self, tau: int) -> float:
        return intended_movement_I(self.actions, self.window(tau))

    @property
    def final_temperature(self) -> float:
        return float(self.temperature[-1]) if self.steps else 0.0


@dataclass
class EvaluationResult:
    fitness: float
    run_fitnesses: List[float]
    records: List[RunRecord]


def simulate(genome: Genome, grid: TorusGrid, eval_length: int, noise: NoiseModel,
             noise_rng: Optional[np.random.Generator], snapshot_every: int = 0) -> Tuple[float, Dict]:
    """Run the swarm for eval_length steps in place and score predictions against the next readings"""
    robots = grid.size
    if robots == 0:
        raise ValueError("Cannot evaluate an empty swarm")
    model = SensorModel(genome.sensor_model)
    action_net = ActionNetwork(genome.action_topology, genome.action_weights)
    prediction_net = PredictionNetwork(genome.prediction_topology, genome.prediction_weights, genome.mask)

    state = prediction_net.initial_state(robots)
    last_actions = np.zeros(robots, dtype=np.int8)
    temperatures = np.zeros(eval_length, dtype=np.float64)
    # (steps, N) action bits and (steps, N, R) predicted and sensed bits
    actions = np.zeros((eval_length, robots), dtype=np.int8)
    predicted = np.zeros((eval_length, robots, model.size), dtype=np.int8)
    sensed = np.zeros((eval_length, robots, model.size), dtype=np.int8)
    snapshots = {0: grid.to_ascii()} if snapshot_every else {}

    sensors = sense_all(grid, model, noise, noise_rng)
    for t in range(eval_length):
        moves, turns = action_net.decide(sensors, last_actions)
        # p(t+1) is produced from s(t) and a(t)
        predictions, state = prediction_net.predict(state, sensors, moves)
        predicted[t] = predictions

        xs, ys = grid.xs.copy(), grid.ys.copy()
        step_swarm(grid, moves, turns)
        temperatures[t] = temperature_from_arrays(xs, ys, grid.xs, grid.ys, grid.width, grid.height)
        actions[t] = moves
        last_actions = moves

        sensors = sense_all(grid, model, noise, noise_rng)
        sensed[t] = sensors
        if snapshot_every and (t + 1) % snapshot_every == 0:
            snapshots[t + 1] = grid.to_ascii()

    return prediction_fitness(predicted, sensed), {
        "temperature": temperatures,
        "intended": actions.mean(axis=1),
        "actions": actions,
        "mean_prediction": predicted.mean(axis=(0, 1)),
        "snapshots": snapshots,
    }


def simulate_evaluation(genome: Genome, config: EvolutionConfig, run_seed: Optional[int],
                        noise_seed: Optional[int] = None, grid: Optional[TorusGrid] = None,
                        eval_length: Optional[int] = None, snapshot_every: int = 0) -> RunRecord:
    """One evaluation: random placement from run_seed (or a given grid), then eval_length steps"""
    if grid is None:
        if run_seed is None:
            raise ValueError("A run seed is required when no start configuration is given")
        grid = TorusGrid(config.width, config.height)
        random_placement(grid, config.swarm_size, make_rng(run_seed))
    else:
        grid = grid.copy()
    if noise_seed is None:
        noise_seed = derive_seed(run_seed or 0, STREAM_NOISE)
    initial = grid.poses()
    fitness, trace = simulate(genome, grid, eval_length or config.eval_length, config.noise_model(),
                              make_rng(noise_seed), snapshot_every)
    return RunRecord(
        placement_seed=run_seed,
        noise_seed=noise_seed,
        fitness=fitness,
        temperature=trace["temperature"],
        intended=trace["intended"],
        actions=trace["actions"],
        initial_poses=initial,
        final_grid=grid,
        mean_prediction=trace["mean_prediction"],
        snapshots=trace["snapshots"],
    )


def evaluate_genome(genome: Genome, config: EvolutionConfig, run_seeds: Sequence[int],
                    noise_seeds: Optional[Sequence[int]] = None) -> EvaluationResult:
    """Genome fitness is the minimum over its evaluation runs"""
    if len(run_seeds) != config.evals_per_genome:
        raise ValueError(f"Expected {config.evals_per_genome} run seeds, got {len(run_seeds)}")
    if noise_seeds is None:
        noise_seeds = [None] * len(run_seeds)
    if len(noise_seeds) != len(run_seeds):
        raise ValueError("Need one noise seed per run seed")
    records = [simulate_evaluation(genome, config, seed, noise)
               for seed, noise in zip(run_seeds, noise_seeds)]
    run_fitnesses = [r.fitness for r in records]
    logger.debug(f"Evaluated genome on {len(records)} runs: {[round(f, 4) for f in run_fitnesses]}")
    return EvaluationResult(min(run_fitnesses), run_fitnesses, records)


def select_proportionate(fitnesses: Sequence[float], rng: np.random.Generator) -> int:
    """Roulette-wheel selection; uniform when every fitness is zero"""
    values = np.asarray(fitnesses, dtype=np.float64)
    if values.size == 0:
        raise ValueError("Cannot select from an empty population")
    if np.any(values < 0):
        raise ValueError("Proportionate selection needs non-negative fitness values")
    total = values.sum()
    if total <= 0:
        return int(rng.integers(values.size))
    pick = rng.random() * total
    return int(min(np.searchsorted(np.cumsum(values), pick, side="right"), values.size - 1))


class GenerationRecord(BaseModel):
    generation: int
    best_fitness: float
    median_fitness: float
    best_index: int
    budget: int


@dataclass
class EvolutionResult:
    best_genome: Genome
    best_evaluation: EvaluationResult
    history: List[GenerationRecord]
    budget: int


def generation_seeds(config: EvolutionConfig, generation: int) -> List[int]:
    """Placement seeds shared by every genome of a generation"""
    return [derive_seed(config.seed, STREAM_PLACEMENT, generation, run)
            for run in range(config.evals_per_genome)]


def _noise_seeds(config: EvolutionConfig, generation: int, index: int) -> List[int]:
    return [derive_seed(config.seed, STREAM_NOISE, generation, index, run)
            for run in range(config.evals_per_genome)]


def _evaluate_task(task) -> EvaluationResult:
    genome, config, run_seeds, noise_seeds = task
    return evaluate_genome(genome, config, run_seeds, noise_seeds)


def evaluate_population(population: Sequence[Genome], config: EvolutionConfig,
                        generation: int) -> List[EvaluationResult]:
    """Evaluate a generation serially or on a process pool; results are identical either way"""
    run_seeds = generation_seeds(config, generation)
    tasks = [(genome, config, run_seeds, _noise_seeds(config, generation, i))
             for i, genome in enumerate(population)]
    if config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as executor:
            return list(executor.map(_evaluate_task, tasks))
    return [_evaluate_task(task) for task in tasks]


def initial_population(config: EvolutionConfig) -> List[Genome]:
    action_topology, prediction_topology = config.topologies()
    mask = config.predefined()
    rng = make_rng(derive_seed(config.seed, STREAM_INIT))
    return [random_genome(config.sensor_model, mask, action_topology, prediction_topology, rng)
            for _ in range(config.population_size)]


def next_generation(population: Sequence[Genome], fitnesses: Sequence[float], config: EvolutionConfig,
                    rng: np.random.Generator) -> List[Genome]:
    """Elite copies of the best genomes followed by mutated offspring of proportionately selected parents"""
    ranking = sorted(range(len(population)), key=lambda i: (-fitnesses[i], i))
    offspring = [population[i] for i in ranking[:config.elitism]]
    while len(offspring) < config.population_size:
        parent = population[select_proportionate(fitnesses, rng)]
        offspring.append(mutate(parent, config.mutation_rate, rng))
    return offspring


def evolve(config: EvolutionConfig,
           on_generation: Optional[Callable[[GenerationRecord, List[EvaluationResult]], None]] = None
           ) -> EvolutionResult:
    """Run the genetic algorithm; (config, seed) fully determines the outcome"""
    population = initial_population(config)
    history: List[GenerationRecord] = []
    budget = 0
    results: List[EvaluationResult] = []
    logger.info(f"🚀 Evolving {config.population_size} genomes for {config.generations} generations "
                f"on {config.width}x{config.height} with N={config.swarm_size}, sensor model {config.sensor_model}, "
                f"mask {config.mask}, noise {config.noise}")

    for generation in range(config.generations):
        results = evaluate_population(population, config, generation)
        fitnesses = [r.fitness for r in results]
        budget += config.robot_steps_per_generation()
        best_index = int(np.argmax(fitnesses))
        record = GenerationRecord(
            generation=generation,
            best_fitness=fitnesses[best_index],
            median_fitness=float(np.median(fitnesses)),
            best_index=best_index,
            budget=budget,
        )
        history.append(record)
        logger.info(f"🧬 Generation {generation + 1}/{config.generations}: best {record.best_fitness:.4f}, "
                    f"median {record.median_fitness:.4f}, {record.budget} robot steps")
        if on_generation is not None:
            on_generation(record, results)
        if generation + 1 < config.generations:
            rng = make_rng(derive_seed(config.seed, STREAM_BREED, generation))
            population = next_generation(population, fitnesses, config, rng)

    best_index = history[-1].best_index
    return EvolutionResult(population[best_index], results[best_index], history, budget)
