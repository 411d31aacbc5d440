#!/usr/bin/env python3
"""
Experiment Runner
Evolution studies, reruns with fresh starting positions, damage protocols, noise sweeps and run statistics
"""

import concurrent.futures
import json
import logging
import math
import os
from collections import Counter
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from swarm.classify import DISPERSION_LABELS, PRECEDENCE, PatternLabel, StructureReport, classify_run
from swarm.evolution import (
    STREAM_RERUN,
    STREAM_STUDY,
    EvolutionConfig,
    RunRecord,
    derive_seed,
    evolve,
    simulate_evaluation,
)
from swarm.grid import Pose, TorusGrid
from swarm.metrics import movement_M, similarity_S
from swarm.networks import Genome, load_genome, save_genome

from experiments.base_experiment import BaseExperiment
from experiments.damage import Rect, run_damage_experiment
from experiments.records import RunDirectory, RunSummary, read_csv, summarize, write_csv
from experiments.scenario_manager import ScenarioManager, scenario_manager

logger = logging.getLogger("swarm-experiments")

ScenarioKind = Literal["evolve", "rerun", "damage-remove", "damage-reposition", "noise-sweep"]

DEFAULT_LEVELS = [0.0, 0.05, 0.1, 0.15]


class ScenarioConfig(BaseModel):
    """One experiment: what to run, on which evolution settings, and where to write it"""

    kind: ScenarioKind
    evolution: EvolutionConfig = Field(default_factory=EvolutionConfig)
    rect: Optional[Rect] = None
    repeats: int = Field(20, ge=1)
    out: Optional[str] = None
    seed: Optional[int] = Field(None, ge=0)
    genome: Optional[str] = None
    runs: int = Field(1, ge=1)
    snapshot_every: int = Field(0, ge=0)
    extra_steps: int = Field(500, ge=1)
    base_seed: Optional[int] = Field(None, ge=0)
    levels: List[float] = Field(default_factory=lambda: list(DEFAULT_LEVELS))
    runs_per_level: int = Field(20, ge=1)

    @model_validator(mode="after")
    def check_scenario(self) -> "ScenarioConfig":
        if self.seed is not None and self.seed != self.evolution.seed:
            self.evolution = self.evolution.model_copy(update={"seed": self.seed})
        if self.kind in ("rerun", "damage-remove", "damage-reposition") and not self.genome:
            raise ValueError(f"Scenario {self.kind} needs a genome file")
        if self.kind.startswith("damage"):
            if self.rect is None:
                raise ValueError("Damage scenarios need a rectangle or a named area")
            self.rect.check_within(self.evolution.width, self.evolution.height)
        if self.kind == "noise-sweep":
            if not self.levels:
                raise ValueError("Noise sweep needs at least one level")
            for level in self.levels:
                if not 0.0 <= level <= 1.0:
                    raise ValueError(f"Noise level {level} outside [0, 1]")
        return self

    @property
    def mode(self) -> Optional[str]:
        return self.kind.split("-", 1)[1] if self.kind.startswith("damage") else None


def majority(values: Sequence[Optional[str]], total: Optional[int] = None) -> str:
    """The value held by more than half of all repeats, otherwise 'diverse'"""
    total = len(values) if total is None else total
    counts = Counter(v for v in values if v is not None)
    if counts:
        value, count = counts.most_common(1)[0]
        if count > total / 2:
            return value
    return "diverse"


def _distribution(values: Sequence[Optional[str]]) -> Dict[str, float]:
    if not values:
        return {}
    counts = Counter("none" if v is None else v for v in values)
    return {k: counts[k] / len(values) for k in sorted(counts)}


def align_config(config: EvolutionConfig, genome: Genome) -> EvolutionConfig:
    """Make the sensor model and predefined predictions of the config match a loaded genome"""
    if config.sensor_model == genome.sensor_model and config.predefined() == genome.mask:
        return config
    logger.warning(f"⚠️ Using sensor model {genome.sensor_model} and the genome's predefined "
                   f"predictions instead of the configured ones")
    fields = config.model_dump()
    fields.update(sensor_model=genome.sensor_model, mask=dict(genome.mask.fixed) or "none",
                  prediction_hidden=None)
    return EvolutionConfig(**fields)


def write_runs(directory: RunDirectory, records: Sequence[RunRecord], tau: int, first_run: int = 0,
               references: Optional[Sequence[Optional[Sequence[Pose]]]] = None,
               label: Optional[PatternLabel] = None) -> List[RunSummary]:
    """Snapshots, temperature logs and one metrics row per run

    references holds one reference configuration (or None) per record for the similarity column.
    """
    if references is not None and len(references) != len(records):
        raise ValueError(f"Got {len(references)} references for {len(records)} runs")
    summaries = []
    for offset, record in enumerate(records):
        run = first_run + offset
        directory.write_run(run, record)
        reference = references[offset] if references is not None else None
        summaries.append(summarize(run, record, tau, reference=reference, label=label))
    write_csv(directory.metrics_path, summaries)
    return summaries


def run_evolution(config: EvolutionConfig, out: Union[str, Path], snapshot_every: int = 0) -> Dict[str, Any]:
    """One evolutionary run: generation log, best genome, and the best genome's final evaluation runs"""
    directory = RunDirectory(out).prepare()
    directory.write_config(config)
    directory.start_generation_log()
    result = evolve(config, on_generation=lambda record, _: directory.append_generation(record))
    save_genome(result.best_genome, directory.genome_path)

    records = result.best_evaluation.records
    if snapshot_every:
        # replaying the stored seeds reproduces the evaluation exactly, now with snapshots
        records = [simulate_evaluation(result.best_genome, config, r.placement_seed, r.noise_seed,
                                       snapshot_every=snapshot_every) for r in records]
    summaries = write_runs(directory, records, config.tau)
    # the run is classified by the first evaluation of the best genome
    head = summaries[0]
    logger.info(f"✅ Best fitness {result.best_evaluation.fitness:.4f}, structure {head.label.value} "
                f"({head.fraction:.1%}) -> {directory.root}")
    return {
        "out": str(directory.root),
        "seed": config.seed,
        "best_fitness": result.best_evaluation.fitness,
        "label": head.label.value,
        "fraction": head.fraction,
        "orientation": head.orientation,
        "spanning_lines": head.spanning_lines,
        "budget": result.budget,
    }


class StudyRow(BaseModel):
    run: int
    seed: int
    best_fitness: float
    label: str
    fraction: float
    orientation: Optional[str] = None
    spanning_lines: int = 0


def _evolution_task(task) -> Dict[str, Any]:
    config, out, snapshot_every = task
    return run_evolution(config, out, snapshot_every)


def run_study(config: EvolutionConfig, out: Union[str, Path], runs: int,
              snapshot_every: int = 0) -> Dict[str, Any]:
    """Independent evolutions with seeds derived from the master seed, one directory each"""
    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    seeds = [derive_seed(config.seed, STREAM_STUDY, k) for k in range(runs)]
    if config.workers > 1 and runs > 1:
        tasks = [(config.model_copy(update={"seed": seed, "workers": 1}), root / f"run_{k:03d}", snapshot_every)
                 for k, seed in enumerate(seeds)]
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as executor:
            results = list(executor.map(_evolution_task, tasks))
    else:
        results = [run_evolution(config.model_copy(update={"seed": seed}), root / f"run_{k:03d}", snapshot_every)
                   for k, seed in enumerate(seeds)]

    rows = [StudyRow(run=k, **{key: r[key] for key in StudyRow.model_fields if key != "run"})
            for k, r in enumerate(results)]
    write_csv(root / "study.csv", rows)
    summary = {
        "out": str(root),
        "runs": runs,
        "median_best_fitness": float(np.median([r.best_fitness for r in rows])),
        "labels": _distribution([r.label for r in rows]),
        "orientations": _distribution([r.orientation for r in rows if r.label == "line"]) if any(
            r.label == "line" for r in rows) else {},
    }
    (root / "study.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    logger.info(f"📊 Study of {runs} runs: median best fitness {summary['median_best_fitness']:.4f}, "
                f"labels {summary['labels']}")
    return summary


def run_noise_sweep(config: EvolutionConfig, levels: Sequence[float], runs_per_level: int,
                    out: Union[str, Path]) -> Dict[str, Any]:
    """A study per sensor-noise level; noise 0 uses exactly the seeds of a noise-free study"""
    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    fields = ["noise", "runs", "median_best_fitness"] + [label.value for label in PRECEDENCE]
    rows = []
    for level in levels:
        level_config = config.model_copy(update={"noise": float(level)})
        logger.info(f"🔊 Noise level {level:.2f}: {runs_per_level} evolutions")
        study = run_study(level_config, root / f"noise_{level:.2f}", runs_per_level)
        row = {"noise": float(level), "runs": runs_per_level, "median_best_fitness": study["median_best_fitness"]}
        row.update({label.value: study["labels"].get(label.value, 0.0) for label in PRECEDENCE})
        rows.append(row)
    write_csv(root / "noise_sweep.csv", rows, fields)
    return {"out": str(root), "levels": rows}


def rerun_seeds(master_seed: int, repeats: int) -> List[Tuple[int, int]]:
    """(placement, noise) seed pairs of fresh starting configurations"""
    return [(derive_seed(master_seed, STREAM_RERUN, i, 0), derive_seed(master_seed, STREAM_RERUN, i, 1))
            for i in range(repeats)]


def _rerun_task(task) -> RunRecord:
    genome, config, placement_seed, noise_seed, snapshot_every = task
    return simulate_evaluation(genome, config, placement_seed, noise_seed, snapshot_every=snapshot_every)


def rerun_best(genome: Genome, config: EvolutionConfig, repeats: int, out: Union[str, Path],
               snapshot_every: int = 0) -> Dict[str, Any]:
    """Evaluate a stored genome from fresh random placements and aggregate the structures by majority"""
    if repeats < 1:
        raise ValueError("At least one repeat is required")
    config = align_config(config, genome)
    directory = RunDirectory(out).prepare()
    directory.write_config(config)
    tasks = [(genome, config, placement, noise, snapshot_every)
             for placement, noise in rerun_seeds(config.seed, repeats)]
    if config.workers > 1 and repeats > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as executor:
            records = list(executor.map(_rerun_task, tasks))
    else:
        records = [_rerun_task(task) for task in tasks]

    summaries = write_runs(directory, records, config.tau)
    labels = [s.label.value for s in summaries]
    summary = {
        "out": str(directory.root),
        "repeats": repeats,
        "label": majority(labels),
        "orientation": majority([s.orientation for s in summaries]),
        "labels": _distribution(labels),
        "median_fitness": float(np.median([s.fitness for s in summaries])),
        "mean_fraction": float(np.mean([s.fraction for s in summaries])),
    }
    (directory.root / "rerun.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    logger.info(f"🔁 {repeats} reruns: {summary['label']} (orientation {summary['orientation']}), "
                f"median fitness {summary['median_fitness']:.4f}")
    return summary


def run_damage(genome: Genome, config: EvolutionConfig, rect: Rect, mode: str, out: Union[str, Path],
               base_seed: Optional[int] = None, extra_steps: int = 500, repeats: int = 20) -> Dict[str, Any]:
    """Base run from base_seed, damage its final configuration, then let the swarm recover

    Run 0 in the directory is the base run, runs 1.. are the recoveries.
    """
    config = align_config(config, genome)
    rect.check_within(config.width, config.height)
    if base_seed is None:
        base_seed = derive_seed(config.seed, STREAM_RERUN, 0, 0)
    directory = RunDirectory(out).prepare()
    directory.write_config(config)

    base = simulate_evaluation(genome, config, base_seed)
    outcome = run_damage_experiment(genome, config, base.final_grid, rect, mode, extra_steps=extra_steps,
                                    repeats=repeats, seed=config.seed)
    before = base.final_grid.poses()
    write_runs(directory, [base] + outcome.runs, config.tau,
               references=[None] + [before] * len(outcome.runs), label=outcome.label)
    write_csv(directory.root / "damage.csv", outcome.records)
    summary = {
        "out": str(directory.root),
        "mode": mode,
        "rect": list(rect.as_tuple()),
        "base_seed": base_seed,
        "label": outcome.label.value,
        "base_fraction": outcome.base_fraction,
        "affected": outcome.records[0].affected,
        "runs": len(outcome.records),
        "statistics": outcome.summary(),
    }
    (directory.root / "damage.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    stats = summary["statistics"]
    logger.info(f"💥 {mode}: {summary['affected']} robots affected, {outcome.label.value} membership "
                f"{stats['start_fraction']['median']:.1%} -> {stats['end_fraction']['median']:.1%}, "
                f"similarity {stats['similarity']['median']:.3f}")
    return summary


def classify_snapshot(source: Union[str, Path]) -> StructureReport:
    return classify_run(TorusGrid.from_ascii(Path(source).read_text()))


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def run_stats(run_dir: Union[str, Path]) -> Dict[str, Any]:
    """Summarize a run directory and recompute every metrics row from the logs and final snapshots"""
    directory = RunDirectory(run_dir)
    if not directory.metrics_path.exists():
        raise ValueError(f"No metrics.csv in {directory.root}")
    config = directory.read_config()
    rows = read_csv(directory.metrics_path)
    mismatches = []

    def check(run: int, name: str, reported, recomputed):
        same = reported == recomputed if isinstance(recomputed, str) else _close(float(reported), recomputed)
        if not same:
            mismatches.append({"run": run, "field": name, "reported": reported, "recomputed": recomputed})

    # damage directories compare every recovery to the base run's final configuration
    reference, damaged_label = None, None
    damage_path = directory.root / "damage.json"
    if damage_path.exists():
        reference = TorusGrid.from_ascii(directory.snapshot_path(0).read_text()).poses()
        damaged_label = PatternLabel(json.loads(damage_path.read_text())["label"])

    for row in rows:
        run = int(row["run"])
        log = read_csv(directory.temperature_path(run))
        temperature = np.array([float(r["temperature"]) for r in log])
        intended = np.array([float(r["intended"]) for r in log])
        window = min(config.tau, len(temperature))
        check(run, "movement", row["movement"], movement_M(temperature, window))
        check(run, "intended", row["intended"], float(np.mean(intended[-window:])))
        check(run, "final_temperature", row["final_temperature"], float(temperature[-1]) if len(log) else 0.0)
        final = TorusGrid.from_ascii(directory.snapshot_path(run).read_text())
        report = classify_run(final)
        check(run, "label", row["label"], report.winner.value)
        check(run, "fraction", row["fraction"], report.fraction(report.winner))
        if row["similarity"] and reference:
            check(run, "similarity", row["similarity"],
                  similarity_S(final.poses(), reference, len(reference), damaged_label not in DISPERSION_LABELS))

    summary: Dict[str, Any] = {
        "out": str(directory.root),
        "runs": len(rows),
        "labels": _distribution([row["label"] for row in rows]),
        "median_fitness": float(np.median([float(row["fitness"]) for row in rows])),
        "mean_prediction": rows[0]["mean_prediction"] if rows else "",
    }
    if directory.generations_path.exists():
        generations = read_csv(directory.generations_path)
        last = generations[-1]
        summary["generations"] = len(generations)
        summary["best_fitness"] = float(last["best_fitness"])
        summary["budget"] = int(last["budget"])
        if len(rows) == config.evals_per_genome:
            check(-1, "best_fitness", last["best_fitness"], min(float(row["fitness"]) for row in rows))
    summary["mismatches"] = mismatches
    summary["consistent"] = not mismatches
    if mismatches:
        logger.warning(f"⚠️ {len(mismatches)} recorded values differ from their recomputation in {directory.root}")
    return summary


class ExperimentRunner(BaseExperiment):
    """Scenario dispatch over the experiment functions, configured through a ScenarioManager"""

    def __init__(self, manager: Optional[ScenarioManager] = None):
        scenarios = [
            {
                "name": "evolve",
                "description": "Evolve action and prediction networks; --runs K performs K independent evolutions",
                "inputSchema": {
                    "type": "object",
                    "properties": {
                        "preset": {"type": "string", "description": "Named preset from scenarios.json"},
                        "config": {"type": "object", "description": "EvolutionConfig field overrides"},
                        "out": {"type": "string", "description": "Output directory"},
                        "runs": {"type": "integer", "minimum": 1, "default": 1},
                        "snapshot_every": {"type": "integer", "minimum": 0, "default": 0}
                    }
                }
            },
            {
                "name": "rerun",
                "description": "Evaluate a stored genome from fresh random starting positions",
                "inputSchema": {
                    "type": "object",
                    "properties": {
                        "genome": {"type": "string", "description": "Genome JSON file"},
                        "preset": {"type": "string"},
                        "config": {"type": "object"},
                        "out": {"type": "string"},
                        "repeats": {"type": "integer", "minimum": 1, "default": 20},
                        "snapshot_every": {"type": "integer", "minimum": 0, "default": 0}
                    },
                    "required": ["genome"]
                }
            },
            {
                "name": "damage",
                "description": "Remove or reposition the robots of an area and simulate the recovery",
                "inputSchema": {
                    "type": "object",
                    "properties": {
                        "genome": {"type": "string"},
                        "mode": {"type": "string", "enum": ["remove", "reposition"]},
                        "area": {"type": "string", "description": "Named damage area from scenarios.json"},
                        "rect": {"type": "string", "description": "x_min,y_min,x_max,y_max"},
                        "base_seed": {"type": "integer", "minimum": 0},
                        "extra_steps": {"type": "integer", "minimum": 1, "default": 500},
                        "repeats": {"type": "integer", "minimum": 1, "default": 20},
                        "preset": {"type": "string"},
                        "config": {"type": "object"},
                        "out": {"type": "string"}
                    },
                    "required": ["genome", "mode"]
                }
            },
            {
                "name": "noise-sweep",
                "description": "Independent evolutions per sensor-noise level with a summary table",
                "inputSchema": {
                    "type": "object",
                    "properties": {
                        "levels": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
                        "runs_per_level": {"type": "integer", "minimum": 1, "default": 20},
                        "preset": {"type": "string"},
                        "config": {"type": "object"},
                        "out": {"type": "string"}
                    }
                }
            },
            {
                "name": "classify",
                "description": "Classify an ASCII snapshot file or text",
                "inputSchema": {
                    "type": "object",
                    "properties": {
                        "snapshot": {"type": "string", "description": "Snapshot file"},
                        "text": {"type": "string", "description": "Snapshot contents"}
                    }
                }
            },
            {
                "name": "stats",
                "description": "Summarize a run directory and check its metrics against a recomputation",
                "inputSchema": {
                    "type": "object",
                    "properties": {"run_dir": {"type": "string"}},
                    "required": ["run_dir"]
                }
            }
        ]
        super().__init__("swarm", scenarios)
        self.manager = manager or scenario_manager

    def scenario_config(self, kind: str, arguments: Dict[str, Any]) -> ScenarioConfig:
        """Resolve presets, named areas and shipped experiment defaults into a validated ScenarioConfig"""
        evolution = self.manager.build_config(arguments.get("preset"), arguments.get("config"))
        fields = {k: v for k, v in self.manager.section("experiments").items() if k in ScenarioConfig.model_fields}
        fields.update({k: v for k, v in arguments.items()
                       if k in ScenarioConfig.model_fields and k not in ("kind", "evolution", "rect") and v is not None})
        rect = arguments.get("rect")
        if isinstance(rect, str):
            rect = Rect.parse(rect)
        elif isinstance(rect, (list, tuple)):
            rect = Rect(**dict(zip(("x_min", "y_min", "x_max", "y_max"), rect)))
        if rect is None and arguments.get("area"):
            rect = self.manager.get_area(arguments["area"])
        if not fields.get("out"):
            output = self.manager.section("output").get("directory", "runs")
            fields["out"] = os.path.join(output, f"{kind}-seed{fields.get('seed', evolution.seed)}")
        return ScenarioConfig(kind=kind, evolution=evolution, rect=rect, **fields)

    def run_scenario(self, name: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        if name == "classify":
            if arguments.get("text"):
                report = classify_run(TorusGrid.from_ascii(arguments["text"]))
            else:
                report = classify_snapshot(arguments["snapshot"])
            return {"report": report.model_dump(mode="json"), "summary": report.summary()}

        elif name == "stats":
            return run_stats(arguments["run_dir"])

        elif name == "evolve":
            scenario = self.scenario_config("evolve", arguments)
            if scenario.runs > 1:
                return run_study(scenario.evolution, scenario.out, scenario.runs, scenario.snapshot_every)
            return run_evolution(scenario.evolution, scenario.out, scenario.snapshot_every)

        elif name == "rerun":
            scenario = self.scenario_config("rerun", arguments)
            return rerun_best(load_genome(scenario.genome), scenario.evolution, scenario.repeats, scenario.out,
                              scenario.snapshot_every)

        elif name == "damage":
            mode = arguments.get("mode")
            if mode not in ("remove", "reposition"):
                raise ValueError(f"Damage mode must be remove or reposition, got {mode}")
            scenario = self.scenario_config(f"damage-{mode}", arguments)
            return run_damage(load_genome(scenario.genome), scenario.evolution, scenario.rect, scenario.mode,
                              scenario.out, scenario.base_seed, scenario.extra_steps, scenario.repeats)

        elif name == "noise-sweep":
            scenario = self.scenario_config("noise-sweep", arguments)
            return run_noise_sweep(scenario.evolution, scenario.levels, scenario.runs_per_level, scenario.out)

        raise ValueError(f"Unknown scenario: {name}")
