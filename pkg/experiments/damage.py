#!/usr/bin/env python3
"""
Damage Protocols
Remove or reposition the robots of a rectangular area and let the swarm recover
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from swarm.classify import DISPERSION_LABELS, PatternLabel, classify_run
from swarm.evolution import (
    STREAM_NOISE,
    STREAM_REPOSITION,
    EvolutionConfig,
    RunRecord,
    derive_seed,
    make_rng,
    simulate_evaluation,
)
from swarm.grid import EMPTY, TorusGrid
from swarm.metrics import similarity_S
from swarm.networks import Genome

logger = logging.getLogger("swarm-damage")


class Rect(BaseModel):
    """Inclusive cell rectangle (x_min, y_min) .. (x_max, y_max)"""

    x_min: int = Field(ge=0)
    y_min: int = Field(ge=0)
    x_max: int = Field(ge=0)
    y_max: int = Field(ge=0)

    @model_validator(mode="after")
    def check_order(self) -> "Rect":
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"Empty rectangle {self.as_tuple()}")
        return self

    @classmethod
    def parse(cls, text: str) -> "Rect":
        """Read 'x_min,y_min,x_max,y_max'"""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"Rectangle '{text}' must have four comma-separated integers")
        x_min, y_min, x_max, y_max = (int(p) for p in parts)
        return cls(x_min=x_min, y_min=y_min, x_max=x_max, y_max=y_max)

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return self.x_min, self.y_min, self.x_max, self.y_max

    def contains(self, x: int, y: int) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def cells(self) -> int:
        return (self.x_max - self.x_min + 1) * (self.y_max - self.y_min + 1)

    def check_within(self, width: int, height: int):
        if self.x_max >= width or self.y_max >= height:
            raise ValueError(f"Rectangle {self.as_tuple()} exceeds the {width}x{height} grid")


def robots_in(grid: TorusGrid, rect: Rect) -> List[int]:
    return [r for r in range(grid.size) if rect.contains(int(grid.xs[r]), int(grid.ys[r]))]


def remove_area(grid: TorusGrid, rect: Rect) -> int:
    """Delete every robot inside the rectangle; returns the number removed"""
    rect.check_within(grid.width, grid.height)
    doomed = robots_in(grid, rect)
    if doomed:
        grid.remove(doomed)
    logger.debug(f"Removed {len(doomed)} robots from {rect.as_tuple()}")
    return len(doomed)


def reposition_area(grid: TorusGrid, rect: Rect, rng: np.random.Generator) -> int:
    """Redraw each robot inside the rectangle onto random free cells until it lands outside"""
    rect.check_within(grid.width, grid.height)
    inside = robots_in(grid, rect)
    free_outside = sum(1 for y in range(grid.height) for x in range(grid.width)
                       if grid.occupancy[y, x] == EMPTY and not rect.contains(x, y))
    if free_outside < len(inside):
        raise ValueError(f"Only {free_outside} free cells outside {rect.as_tuple()} "
                         f"for {len(inside)} robots to reposition")
    for robot_id in inside:
        while rect.contains(int(grid.xs[robot_id]), int(grid.ys[robot_id])):
            free = np.flatnonzero(grid.occupancy.ravel() == EMPTY)
            cell = int(rng.choice(free))
            grid.relocate(robot_id, cell % grid.width, cell // grid.width)
    return len(inside)


class DamageRecord(BaseModel):
    repeat: int
    mode: str
    affected: int
    swarm_size: int
    fitness: float
    start_fraction: float
    end_fraction: float
    similarity: float
    end_label: PatternLabel
    noise_seed: int
    reposition_seed: Optional[int] = None


@dataclass
class DamageOutcome:
    label: PatternLabel
    base_fraction: float
    records: List[DamageRecord] = field(default_factory=list)
    runs: List[RunRecord] = field(default_factory=list)

    def summary(self):
        """Mean and median of the recovery measures over repeats"""
        def stats(values):
            return {"mean": float(np.mean(values)), "median": float(np.median(values))}

        return {
            "fitness": stats([r.fitness for r in self.records]),
            "start_fraction": stats([r.start_fraction for r in self.records]),
            "end_fraction": stats([r.end_fraction for r in self.records]),
            "similarity": stats([r.similarity for r in self.records]),
        }


def _empty_run(grid: TorusGrid, config: EvolutionConfig, noise_seed: int, steps: int) -> RunRecord:
    """Recovery record of a swarm with no robots left: nothing moves, nothing is predicted, fitness 0"""
    return RunRecord(
        placement_seed=None,
        noise_seed=noise_seed,
        fitness=0.0,
        temperature=np.zeros(steps, dtype=np.float64),
        intended=np.zeros(steps, dtype=np.float64),
        actions=np.zeros((steps, 0), dtype=np.int8),
        initial_poses=[],
        final_grid=grid,
        mean_prediction=np.zeros(config.sensor_count, dtype=np.float64),
    )


def run_damage_experiment(genome: Genome, config: EvolutionConfig, base_grid: TorusGrid, rect: Rect,
                          mode: str, extra_steps: int = 500, repeats: int = 20, seed: int = 0,
                          label: Optional[PatternLabel] = None) -> DamageOutcome:
    """Damage the final configuration of a base run and simulate the recovery

    The structure of interest is the base configuration's winning label unless given.
    Hidden states restart at zero after the damage.
    """
    if mode not in ("remove", "reposition"):
        raise ValueError(f"Unknown damage mode '{mode}'")
    if repeats < 1:
        raise ValueError("At least one repeat is required")
    rect.check_within(base_grid.width, base_grid.height)
    base_report = classify_run(base_grid)
    label = label or base_report.winner
    compare_headings = label not in DISPERSION_LABELS
    before = base_grid.poses()
    outcome = DamageOutcome(label, base_report.fraction(label))

    # noiseless removal is deterministic, one run suffices
    runs = 1 if mode == "remove" and config.noise == 0 else repeats
    logger.info(f"💥 {mode} {rect.as_tuple()} on a {label.value} structure, {runs} run(s) of {extra_steps} steps")
    for repeat in range(runs):
        damaged = base_grid.copy()
        reposition_seed = None
        if mode == "remove":
            affected = remove_area(damaged, rect)
        else:
            reposition_seed = derive_seed(seed, STREAM_REPOSITION, repeat)
            affected = reposition_area(damaged, rect, make_rng(reposition_seed))
        start = classify_run(damaged)
        noise_seed = derive_seed(seed, STREAM_NOISE, repeat)
        if damaged.size == 0:
            record = _empty_run(damaged, config, noise_seed, extra_steps)
        else:
            record = simulate_evaluation(genome, config, None, noise_seed, grid=damaged, eval_length=extra_steps)
        end = classify_run(record.final_grid)
        outcome.runs.append(record)
        outcome.records.append(DamageRecord(
            repeat=repeat,
            mode=mode,
            affected=affected,
            swarm_size=damaged.size,
            fitness=record.fitness,
            start_fraction=start.fraction(label),
            end_fraction=end.fraction(label),
            similarity=similarity_S(record.final_grid.poses(), before, len(before), compare_headings),
            end_label=end.winner,
            noise_seed=noise_seed,
            reposition_seed=reposition_seed,
        ))
    return outcome
