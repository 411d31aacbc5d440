#!/usr/bin/env python3
"""
Action and Prediction Networks
Genome encoding, forward passes, predefined predictions, mutation and genome files
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from swarm.grid import FRONT_BEHIND_SENSORS, SENSOR_OFFSETS, Action, Turn

logger = logging.getLogger("swarm-networks")

GENOME_FORMAT = "surprise-swarm-genome"
GENOME_VERSION = 1


class ActionTopology(NamedTuple):
    inputs: int
    hidden: int = 8
    outputs: int = 2

    @property
    def size(self) -> int:
        return self.inputs * self.hidden + self.hidden + self.hidden * self.outputs + self.outputs


class PredictionTopology(NamedTuple):
    inputs: int
    hidden: int
    outputs: int

    @property
    def size(self) -> int:
        """Input weights, hidden biases, self-loops, output weights, output biases"""
        if self.outputs == 0:
            return 0
        return (self.inputs * self.hidden + self.hidden + self.hidden
                + self.hidden * self.outputs + self.outputs)


@dataclass(frozen=True)
class PredefinedPredictions:
    """Sensor predictions fixed to constant bits instead of coming from the network"""

    sensor_count: int
    fixed: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for index, bit in self.fixed.items():
            index, bit = int(index), int(bit)
            if not 0 <= index < self.sensor_count:
                raise ValueError(f"Predefined sensor {index} outside 0..{self.sensor_count - 1}")
            if bit not in (0, 1):
                raise ValueError(f"Predefined prediction for sensor {index} must be 0 or 1, got {bit}")
            clean[index] = bit
        object.__setattr__(self, "fixed", dict(sorted(clean.items())))

    @property
    def free(self) -> List[int]:
        return [i for i in range(self.sensor_count) if i not in self.fixed]

    @property
    def complete(self) -> bool:
        return len(self.fixed) == self.sensor_count

    @classmethod
    def none(cls, sensor_count: int) -> "PredefinedPredictions":
        return cls(sensor_count)

    @classmethod
    def partial(cls, sensor_count: int = 14) -> "PredefinedPredictions":
        """Front and behind sensors fixed to 1, the rest predicted"""
        return cls(sensor_count, {i: 1 for i in FRONT_BEHIND_SENSORS})

    @classmethod
    def full(cls, sensor_count: int = 14) -> "PredefinedPredictions":
        """Front and behind sensors fixed to 1, every other sensor fixed to 0"""
        return cls(sensor_count, {i: int(i in FRONT_BEHIND_SENSORS) for i in range(sensor_count)})


MaskSpec = Union[str, Mapping[int, int], None]


def resolve_mask(sensor_model: str, mask: MaskSpec) -> PredefinedPredictions:
    """Turn a preset name or an explicit {sensor: bit} map into PredefinedPredictions"""
    sensor_count = len(SENSOR_OFFSETS[sensor_model])
    if mask is None or mask == "none":
        return PredefinedPredictions.none(sensor_count)
    if isinstance(mask, str):
        if sensor_model != "C":
            raise ValueError(f"Mask preset '{mask}' is defined for sensor model C only")
        if mask == "partial":
            return PredefinedPredictions.partial(sensor_count)
        if mask == "full":
            return PredefinedPredictions.full(sensor_count)
        raise ValueError(f"Unknown mask preset '{mask}'")
    return PredefinedPredictions(sensor_count, dict(mask))


def build_topologies(sensor_model: str, mask: PredefinedPredictions, action_hidden: int = 8,
                     prediction_hidden: Optional[int] = None) -> Tuple[ActionTopology, PredictionTopology]:
    """Layer sizes for both networks; inputs are R sensors plus one action value"""
    sensor_count = len(SENSOR_OFFSETS[sensor_model])
    outputs = sensor_count - len(mask.fixed)
    if prediction_hidden is None:
        if not mask.fixed:
            prediction_hidden = sensor_count
        elif mask.complete:
            prediction_hidden = 0
        else:
            prediction_hidden = max(1, sensor_count - 2)
    if outputs == 0:
        prediction_hidden = 0
    return (ActionTopology(sensor_count + 1, action_hidden, 2),
            PredictionTopology(sensor_count + 1, prediction_hidden, outputs))


def logistic(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _frozen(values, length: int, label: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64).reshape(-1)
    if array.size != length:
        raise ValueError(f"{label} weight vector has length {array.size}, topology expects {length}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{label} weight vector contains non-finite values")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Genome:
    """Weights of one action/prediction network pair plus its predefined predictions"""

    sensor_model: str
    action_topology: ActionTopology
    prediction_topology: PredictionTopology
    action_weights: np.ndarray
    prediction_weights: np.ndarray
    mask: PredefinedPredictions

    def __post_init__(self):
        object.__setattr__(self, "action_weights",
                           _frozen(self.action_weights, self.action_topology.size, "Action"))
        object.__setattr__(self, "prediction_weights",
                           _frozen(self.prediction_weights, self.prediction_topology.size, "Prediction"))
        if self.prediction_topology.outputs + len(self.mask.fixed) != self.mask.sensor_count:
            raise ValueError("Prediction outputs plus predefined sensors must equal the sensor count")

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return (self.sensor_model == other.sensor_model
                and self.action_topology == other.action_topology
                and self.prediction_topology == other.prediction_topology
                and self.mask == other.mask
                and np.array_equal(self.action_weights, other.action_weights)
                and np.array_equal(self.prediction_weights, other.prediction_weights))

    def __hash__(self):
        return hash((self.sensor_model, self.action_topology, self.prediction_topology,
                     self.action_weights.tobytes(), self.prediction_weights.tobytes()))

    def with_weights(self, action_weights: np.ndarray, prediction_weights: np.ndarray) -> "Genome":
        return Genome(self.sensor_model, self.action_topology, self.prediction_topology,
                      action_weights, prediction_weights, self.mask)


class ActionNetwork:
    """Feedforward controller: sensors + last action -> (move, turn direction)"""

    def __init__(self, topology: ActionTopology, weights: np.ndarray):
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if weights.size != topology.size:
            raise ValueError(f"Action weight vector has length {weights.size}, topology expects {topology.size}")
        i, h, o = topology
        cut = np.cumsum([i * h, h, h * o])
        self.topology = topology
        self.w_in = weights[:cut[0]].reshape(i, h)
        self.b_hidden = weights[cut[0]:cut[1]]
        self.w_out = weights[cut[1]:cut[2]].reshape(h, o)
        self.b_out = weights[cut[2]:]

    def outputs(self, sensors: np.ndarray, last_actions: np.ndarray) -> np.ndarray:
        """Logistic outputs for a batch, shape (N, 2)"""
        inputs = np.column_stack([np.asarray(sensors, dtype=np.float64),
                                  np.asarray(last_actions, dtype=np.float64)])
        if inputs.shape[1] != self.topology.inputs:
            raise ValueError(f"Action network expects {self.topology.inputs} inputs, got {inputs.shape[1]}")
        hidden = np.tanh(inputs @ self.w_in + self.b_hidden)
        return logistic(hidden @ self.w_out + self.b_out)

    def decide(self, sensors: np.ndarray, last_actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Batch decisions: move bits (1 forward, 0 rotate) and turn bits (1 right, 0 left)"""
        out = self.outputs(sensors, last_actions)
        return (out[:, 0] >= 0.5).astype(np.int8), (out[:, 1] >= 0.5).astype(np.int8)


class PredictionNetwork:
    """Recurrent world model: sensors + next action -> predicted next sensor bits"""

    def __init__(self, topology: PredictionTopology, weights: np.ndarray, mask: PredefinedPredictions):
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if weights.size != topology.size:
            raise ValueError(f"Prediction weight vector has length {weights.size}, topology expects {topology.size}")
        self.topology = topology
        self.mask = mask
        self.sensor_count = mask.sensor_count
        self.free = np.array(mask.free, dtype=np.int64)
        self.fixed_index = np.array(list(mask.fixed.keys()), dtype=np.int64)
        self.fixed_bits = np.array(list(mask.fixed.values()), dtype=np.int8)
        i, h, o = topology
        if o == 0:
            return
        cut = np.cumsum([i * h, h, h, h * o])
        self.w_in = weights[:cut[0]].reshape(i, h)
        self.b_hidden = weights[cut[0]:cut[1]]
        self.w_self = weights[cut[1]:cut[2]]
        self.w_out = weights[cut[2]:cut[3]].reshape(h, o)
        self.b_out = weights[cut[3]:]

    def initial_state(self, robots: int) -> np.ndarray:
        return np.zeros((robots, self.topology.hidden), dtype=np.float64)

    def predict(self, state: np.ndarray, sensors: np.ndarray,
                next_actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Batch predictions (N, R) of 0/1 and the updated hidden state"""
        sensors = np.asarray(sensors)
        robots = sensors.shape[0]
        if sensors.shape[1] != self.sensor_count:
            raise ValueError(f"Prediction network expects {self.sensor_count} sensors, got {sensors.shape[1]}")
        if state.shape != (robots, self.topology.hidden):
            raise ValueError(f"Hidden state has shape {state.shape}, expected {(robots, self.topology.hidden)}")
        predictions = np.empty((robots, self.sensor_count), dtype=np.int8)
        if self.fixed_index.size:
            predictions[:, self.fixed_index] = self.fixed_bits
        if self.topology.outputs == 0:
            return predictions, state
        inputs = np.column_stack([sensors.astype(np.float64), np.asarray(next_actions, dtype=np.float64)])
        hidden = np.tanh(inputs @ self.w_in + self.b_hidden + self.w_self * state)
        out = logistic(hidden @ self.w_out + self.b_out)
        predictions[:, self.free] = (out >= 0.5).astype(np.int8)
        return predictions, hidden


def action_forward(genome: Genome, sensors: np.ndarray, last_action: int) -> Action:
    """Single-robot action decision"""
    sensors = np.asarray(sensors).reshape(1, -1)
    if sensors.shape[1] != genome.mask.sensor_count:
        raise ValueError(f"Expected {genome.mask.sensor_count} sensor values, got {sensors.shape[1]}")
    moves, turns = ActionNetwork(genome.action_topology, genome.action_weights).decide(sensors, [last_action])
    return Action(bool(moves[0]), Turn(int(turns[0])))


def prediction_forward(genome: Genome, state: np.ndarray, sensors: np.ndarray,
                       next_action: int) -> Tuple[np.ndarray, np.ndarray]:
    """Single-robot prediction step; returns (R prediction bits, new hidden state)"""
    network = PredictionNetwork(genome.prediction_topology, genome.prediction_weights, genome.mask)
    state = np.asarray(state, dtype=np.float64).reshape(1, -1)
    predictions, state = network.predict(state, np.asarray(sensors).reshape(1, -1), [next_action])
    return predictions[0], state[0]


def random_genome(sensor_model: str, mask: PredefinedPredictions, action_topology: ActionTopology,
                  prediction_topology: PredictionTopology, rng: np.random.Generator) -> Genome:
    """Every weight uniform in [-1, 1]"""
    action_weights = rng.uniform(-1.0, 1.0, action_topology.size)
    prediction_weights = rng.uniform(-1.0, 1.0, prediction_topology.size)
    return Genome(sensor_model, action_topology, prediction_topology, action_weights, prediction_weights, mask)


def _replace(weights: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    hits = rng.random(weights.size) < rate
    fresh = rng.uniform(-1.0, 1.0, weights.size)
    return np.where(hits, fresh, weights)


def mutate(genome: Genome, rate: float, rng: np.random.Generator) -> Genome:
    """Replace each weight by a fresh uniform draw with probability `rate`"""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"Mutation rate must lie in [0, 1], got {rate}")
    return genome.with_weights(_replace(genome.action_weights, rate, rng),
                               _replace(genome.prediction_weights, rate, rng))


# Genome files

class TopologyRecord(BaseModel):
    inputs: int = Field(ge=1)
    hidden: int = Field(ge=0)
    outputs: int = Field(ge=0)


class GenomeFile(BaseModel):
    """On-disk genome, JSON; weights are written with full float precision"""

    format: str = GENOME_FORMAT
    version: int = GENOME_VERSION
    sensor_model: str
    action: TopologyRecord
    prediction: TopologyRecord
    mask: Dict[int, int] = Field(default_factory=dict)
    action_weights: List[float]
    prediction_weights: List[float]

    @field_validator("format")
    @classmethod
    def check_format(cls, value: str) -> str:
        if value != GENOME_FORMAT:
            raise ValueError(f"Not a genome file (format '{value}')")
        return value

    @field_validator("version")
    @classmethod
    def check_version(cls, value: int) -> int:
        if value != GENOME_VERSION:
            raise ValueError(f"Unsupported genome file version {value}")
        return value

    @field_validator("sensor_model")
    @classmethod
    def check_model(cls, value: str) -> str:
        if value not in SENSOR_OFFSETS:
            raise ValueError(f"Unknown sensor model '{value}'")
        return value

    @model_validator(mode="after")
    def check_lengths(self) -> "GenomeFile":
        if len(self.action_weights) != ActionTopology(**self.action.model_dump()).size:
            raise ValueError("Action weight count does not match the action topology")
        if len(self.prediction_weights) != PredictionTopology(**self.prediction.model_dump()).size:
            raise ValueError("Prediction weight count does not match the prediction topology")
        return self

    @classmethod
    def from_genome(cls, genome: Genome) -> "GenomeFile":
        return cls(
            sensor_model=genome.sensor_model,
            action=TopologyRecord(**genome.action_topology._asdict()),
            prediction=TopologyRecord(**genome.prediction_topology._asdict()),
            mask=dict(genome.mask.fixed),
            action_weights=genome.action_weights.tolist(),
            prediction_weights=genome.prediction_weights.tolist(),
        )

    def to_genome(self) -> Genome:
        mask = PredefinedPredictions(len(SENSOR_OFFSETS[self.sensor_model]), self.mask)
        return Genome(self.sensor_model,
                      ActionTopology(**self.action.model_dump()),
                      PredictionTopology(**self.prediction.model_dump()),
                      np.array(self.action_weights), np.array(self.prediction_weights), mask)


def save_genome(genome: Genome, path: Union[str, Path]):
    Path(path).write_text(json.dumps(GenomeFile.from_genome(genome).model_dump(), indent=1) + "\n")


def load_genome(path: Union[str, Path]) -> Genome:
    """Read a genome file; malformed files raise ValueError"""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"Genome file {path} is not valid JSON: {e}") from e
    genome = GenomeFile.model_validate(raw).to_genome()
    logger.debug(f"Loaded genome from {path}")
    return genome
