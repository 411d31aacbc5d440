#!/usr/bin/env python3
"""
Run Records
Per-run directories, CSV rows, ASCII snapshots and temperature logs
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

from pydantic import BaseModel

from swarm.classify import DISPERSION_LABELS, PatternLabel, classify_run
from swarm.evolution import EvolutionConfig, GenerationRecord, RunRecord
from swarm.grid import Pose
from swarm.metrics import similarity_S

logger = logging.getLogger("swarm-records")


class RunSummary(BaseModel):
    """One metrics row: a simulated run, its measures and its classification"""

    run: int
    placement_seed: Optional[int] = None
    noise_seed: int
    fitness: float
    final_temperature: float
    movement: float
    intended: float
    label: PatternLabel
    fraction: float
    orientation: Optional[str] = None
    spanning_lines: int = 0
    similarity: Optional[float] = None
    mean_prediction: str = ""


def summarize(run: int, record: RunRecord, tau: int, reference: Optional[Sequence[Pose]] = None,
              label: Optional[PatternLabel] = None) -> RunSummary:
    """Measure and classify a run

    Similarity is computed when a reference configuration is given. Headings count unless
    the structure of interest (label, else this run's winner) is a dispersion.
    """
    report = classify_run(record.final_grid)
    similarity = None
    if reference is not None and len(reference):
        label = label or report.winner
        similarity = similarity_S(record.final_grid.poses(), reference, len(reference),
                                  compare_headings=label not in DISPERSION_LABELS)
    return RunSummary(
        run=run,
        placement_seed=record.placement_seed,
        noise_seed=record.noise_seed,
        fitness=record.fitness,
        final_temperature=record.final_temperature,
        movement=record.movement(tau),
        intended=record.intended_movement(tau),
        label=report.winner,
        fraction=report.fraction(report.winner),
        orientation=report.orientation,
        spanning_lines=report.spanning_lines,
        similarity=similarity,
        mean_prediction=" ".join(f"{p:.4f}" for p in record.mean_prediction),
    )


def _row(model: BaseModel) -> Dict:
    row = model.model_dump(mode="json")
    return {k: ("" if v is None else v) for k, v in row.items()}


def write_csv(path: Union[str, Path], rows: Iterable[BaseModel], fields: Optional[List[str]] = None):
    rows = [_row(r) if isinstance(r, BaseModel) else r for r in rows]
    if fields is None:
        fields = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def read_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


GENERATION_FIELDS = ["generation", "best_fitness", "median_fitness", "budget"]


class RunDirectory:
    """Layout of one run's artifacts; nothing here is shared between runs"""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    def prepare(self) -> "RunDirectory":
        (self.root / "snapshots").mkdir(parents=True, exist_ok=True)
        (self.root / "logs").mkdir(parents=True, exist_ok=True)
        return self

    @property
    def config_path(self) -> Path:
        return self.root / "config.json"

    @property
    def generations_path(self) -> Path:
        return self.root / "generations.csv"

    @property
    def genome_path(self) -> Path:
        return self.root / "best_genome.json"

    @property
    def metrics_path(self) -> Path:
        return self.root / "metrics.csv"

    def snapshot_path(self, run: int, step: Optional[int] = None) -> Path:
        name = f"run{run:03d}_final.txt" if step is None else f"run{run:03d}_step{step:05d}.txt"
        return self.root / "snapshots" / name

    def temperature_path(self, run: int) -> Path:
        return self.root / "logs" / f"run{run:03d}_temperature.csv"

    def write_config(self, config: BaseModel):
        self.config_path.write_text(json.dumps(config.model_dump(mode="json"), indent=1, sort_keys=True) + "\n")

    def read_config(self) -> EvolutionConfig:
        return EvolutionConfig.model_validate(json.loads(self.config_path.read_text()))

    def start_generation_log(self):
        with open(self.generations_path, "w", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow(GENERATION_FIELDS)

    def append_generation(self, record: GenerationRecord):
        with open(self.generations_path, "a", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow(
                [record.generation, repr(record.best_fitness), repr(record.median_fitness), record.budget])

    def write_run(self, run: int, record: RunRecord):
        """Final snapshot, intermediate snapshots and the per-step temperature log of one run"""
        self.snapshot_path(run).write_text(record.final_grid.to_ascii())
        for step, text in record.snapshots.items():
            self.snapshot_path(run, step).write_text(text)
        with open(self.temperature_path(run), "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["step", "temperature", "intended"])
            for step, (temp, intended) in enumerate(zip(record.temperature, record.intended)):
                writer.writerow([step, repr(float(temp)), repr(float(intended))])
