#!/usr/bin/env python3
"""
Torus Grid World
Occupancy, robot poses, collision-blocked motion, sensor models and sensor noise
"""

import logging
from enum import IntEnum
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger("swarm-grid")

EMPTY = -1


class Heading(IntEnum):
    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3

    def left(self) -> "Heading":
        return Heading((self + 3) % 4)

    def right(self) -> "Heading":
        return Heading((self + 1) % 4)


class Turn(IntEnum):
    LEFT = 0
    RIGHT = 1


# x grows East, y grows South, so North decreases y
HEADING_VECTORS = np.array([(0, -1), (1, 0), (0, 1), (-1, 0)], dtype=np.int64)

HEADING_GLYPHS = {Heading.NORTH: "^", Heading.EAST: ">", Heading.SOUTH: "v", Heading.WEST: "<"}
GLYPH_HEADINGS = {glyph: heading for heading, glyph in HEADING_GLYPHS.items()}


class Pose(NamedTuple):
    x: int
    y: int
    heading: Heading


class Action(NamedTuple):
    move: bool
    turn: Turn = Turn.RIGHT

    @property
    def value(self) -> int:
        """Action value a(t): 1 for a forward attempt, 0 for a rotation"""
        return 1 if self.move else 0


# Offsets are (dx, dy) in the robot frame, i.e. the world frame of a robot heading North.
SENSOR_OFFSETS: Dict[str, Tuple[Tuple[int, int], ...]] = {
    # Moore neighborhood, clockwise starting straight ahead
    "A": (
        (0, -1), (1, -1), (1, 0), (1, 1),
        (0, 1), (-1, 1), (-1, 0), (-1, -1),
    ),
    # 3x2 block directly ahead
    "B": (
        (0, -1), (1, -1), (-1, -1),
        (0, -2), (1, -2), (-1, -2),
    ),
    # S0..S13; front/behind line is S0, S3, S8, S11
    "C": (
        (0, -1),   # S0  ahead
        (1, -1),   # S1  ahead right
        (-1, -1),  # S2  ahead left
        (0, -2),   # S3  two ahead
        (1, -2),   # S4
        (-1, -2),  # S5
        (1, 0),    # S6  right
        (-1, 0),   # S7  left
        (0, -3),   # S8  three ahead
        (1, -3),   # S9
        (-1, -3),  # S10
        (0, 1),    # S11 behind
        (1, 1),    # S12 behind right
        (-1, 1),   # S13 behind left
    ),
}

FRONT_BEHIND_SENSORS = (0, 3, 8, 11)


def wrap(coord: int, extent: int) -> int:
    """Wrap a coordinate onto a torus axis"""
    if extent <= 0:
        raise ValueError(f"extent must be positive, got {extent}")
    return coord % extent


def rotate_offset(dx: int, dy: int, heading: int) -> Tuple[int, int]:
    """Rotate a robot-frame offset into the world frame of the given heading"""
    for _ in range(int(heading) % 4):
        dx, dy = -dy, dx
    return dx, dy


class SensorModel:
    """Ordered list of relative cells a robot senses, rotated with its heading"""

    def __init__(self, model_id: str):
        if model_id not in SENSOR_OFFSETS:
            raise ValueError(f"Unknown sensor model '{model_id}', expected one of {sorted(SENSOR_OFFSETS)}")
        self.id = model_id
        self.offsets = SENSOR_OFFSETS[model_id]
        # (4, R, 2) world-frame offsets per heading
        self.rotated = np.array(
            [[rotate_offset(dx, dy, h) for dx, dy in self.offsets] for h in range(4)],
            dtype=np.int64,
        )

    @property
    def size(self) -> int:
        return len(self.offsets)

    def __repr__(self):
        return f"SensorModel({self.id!r}, R={self.size})"


class NoiseModel(NamedTuple):
    flip_probability: float = 0.0

    def apply(self, readings: np.ndarray, rng: Optional[np.random.Generator]) -> np.ndarray:
        """Flip each bit independently with the configured probability"""
        if self.flip_probability <= 0.0:
            return readings
        if rng is None:
            raise ValueError("A random stream is required for noisy sensing")
        flips = rng.random(readings.shape) < self.flip_probability
        return readings ^ flips.astype(readings.dtype)


class TorusGrid:
    """Torus world holding at most one robot per cell"""

    def __init__(self, width: int, height: int):
        if width <= 0 or height <= 0:
            raise ValueError(f"Grid dimensions must be positive, got {width}x{height}")
        self.width = width
        self.height = height
        self.occupancy = np.full((height, width), EMPTY, dtype=np.int64)
        self.xs = np.zeros(0, dtype=np.int64)
        self.ys = np.zeros(0, dtype=np.int64)
        self.headings = np.zeros(0, dtype=np.int64)

    @classmethod
    def from_poses(cls, width: int, height: int, poses: Sequence[Pose]) -> "TorusGrid":
        grid = cls(width, height)
        grid.place(poses)
        return grid

    def place(self, poses: Sequence[Pose]):
        """Replace the swarm with the given poses; ids follow the sequence order"""
        self.occupancy.fill(EMPTY)
        n = len(poses)
        self.xs = np.array([wrap(p.x, self.width) for p in poses], dtype=np.int64).reshape(n)
        self.ys = np.array([wrap(p.y, self.height) for p in poses], dtype=np.int64).reshape(n)
        self.headings = np.array([int(p.heading) for p in poses], dtype=np.int64).reshape(n)
        for robot_id in range(n):
            x, y = self.xs[robot_id], self.ys[robot_id]
            if self.occupancy[y, x] != EMPTY:
                raise ValueError(f"Cell ({x}, {y}) holds more than one robot")
            self.occupancy[y, x] = robot_id

    def copy(self) -> "TorusGrid":
        other = TorusGrid(self.width, self.height)
        other.occupancy = self.occupancy.copy()
        other.xs = self.xs.copy()
        other.ys = self.ys.copy()
        other.headings = self.headings.copy()
        return other

    @property
    def size(self) -> int:
        return len(self.xs)

    @property
    def cells(self) -> int:
        return self.width * self.height

    def pose(self, robot_id: int) -> Pose:
        return Pose(int(self.xs[robot_id]), int(self.ys[robot_id]), Heading(int(self.headings[robot_id])))

    def poses(self) -> List[Pose]:
        return [self.pose(i) for i in range(self.size)]

    def is_occupied(self, x: int, y: int) -> bool:
        return self.occupancy[wrap(y, self.height), wrap(x, self.width)] != EMPTY

    def remove(self, robot_ids: Sequence[int]):
        """Delete robots; remaining robots keep their relative order under compact ids"""
        doomed = set(int(i) for i in robot_ids)
        keep = [i for i in range(self.size) if i not in doomed]
        self.place([self.pose(i) for i in keep])

    def relocate(self, robot_id: int, x: int, y: int):
        """Move a robot to an empty cell without changing its heading"""
        x, y = wrap(x, self.width), wrap(y, self.height)
        if self.occupancy[y, x] not in (EMPTY, robot_id):
            raise ValueError(f"Cell ({x}, {y}) is occupied")
        self.occupancy[self.ys[robot_id], self.xs[robot_id]] = EMPTY
        self.xs[robot_id], self.ys[robot_id] = x, y
        self.occupancy[y, x] = robot_id

    def to_ascii(self) -> str:
        """One row per line: '.' empty, '^ > v <' robot heading North/East/South/West"""
        rows = [["."] * self.width for _ in range(self.height)]
        for robot_id in range(self.size):
            rows[self.ys[robot_id]][self.xs[robot_id]] = HEADING_GLYPHS[Heading(int(self.headings[robot_id]))]
        return "\n".join("".join(row) for row in rows) + "\n"

    @classmethod
    def from_ascii(cls, text: str) -> "TorusGrid":
        """Parse an ASCII snapshot; robot ids are assigned in row-major order"""
        lines = [line.rstrip("\r") for line in text.strip("\n").splitlines() if line.strip()]
        if not lines:
            raise ValueError("Empty snapshot")
        width = len(lines[0])
        poses = []
        for y, line in enumerate(lines):
            if len(line) != width:
                raise ValueError(f"Snapshot row {y} has length {len(line)}, expected {width}")
            for x, glyph in enumerate(line):
                if glyph == ".":
                    continue
                if glyph not in GLYPH_HEADINGS:
                    raise ValueError(f"Unknown glyph '{glyph}' at ({x}, {y})")
                poses.append(Pose(x, y, GLYPH_HEADINGS[glyph]))
        return cls.from_poses(width, len(lines), poses)

    def __repr__(self):
        return f"TorusGrid({self.width}x{self.height}, robots={self.size})"


def cell_ahead(pose: Pose, grid: TorusGrid) -> Tuple[int, int]:
    """Wrapped cell one step along the pose heading"""
    dx, dy = HEADING_VECTORS[int(pose.heading)]
    return wrap(pose.x + int(dx), grid.width), wrap(pose.y + int(dy), grid.height)


def sense_all(grid: TorusGrid, model: SensorModel, noise: NoiseModel = NoiseModel(),
              rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Readings of every robot as an (N, R) array of 0/1"""
    offsets = model.rotated[grid.headings]  # (N, R, 2)
    cx = (grid.xs[:, None] + offsets[:, :, 0]) % grid.width
    cy = (grid.ys[:, None] + offsets[:, :, 1]) % grid.height
    readings = (grid.occupancy[cy, cx] != EMPTY).astype(np.int8)
    return noise.apply(readings, rng)


def sense(grid: TorusGrid, robot_id: int, model: SensorModel, noise: NoiseModel = NoiseModel(),
          rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Reading of a single robot, length R"""
    offsets = model.rotated[grid.headings[robot_id]]
    cx = (grid.xs[robot_id] + offsets[:, 0]) % grid.width
    cy = (grid.ys[robot_id] + offsets[:, 1]) % grid.height
    readings = (grid.occupancy[cy, cx] != EMPTY).astype(np.int8)
    return noise.apply(readings, rng)


def _execute(grid: TorusGrid, robot_id: int, move: bool, turn: int) -> bool:
    """Apply one action in place; returns True when the robot changed cell"""
    if not move:
        h = grid.headings[robot_id]
        grid.headings[robot_id] = (h + 1) % 4 if turn == Turn.RIGHT else (h + 3) % 4
        return False
    dx, dy = HEADING_VECTORS[grid.headings[robot_id]]
    x, y = grid.xs[robot_id], grid.ys[robot_id]
    nx, ny = (x + dx) % grid.width, (y + dy) % grid.height
    if grid.occupancy[ny, nx] != EMPTY:
        return False
    grid.occupancy[y, x] = EMPTY
    grid.occupancy[ny, nx] = robot_id
    grid.xs[robot_id], grid.ys[robot_id] = nx, ny
    return True


def apply_action(grid: TorusGrid, robot_id: int, action: Action) -> Pose:
    """Move forward if the cell ahead is free, else stay; or rotate by 90 degrees"""
    if not 0 <= robot_id < grid.size:
        raise ValueError(f"Robot {robot_id} does not exist")
    _execute(grid, robot_id, bool(action.move), int(action.turn))
    return grid.pose(robot_id)


def step_swarm(grid: TorusGrid, moves: Sequence[int], turns: Sequence[int]) -> np.ndarray:
    """Execute one time step, robots in ascending id order

    Returns a boolean array marking robots that changed cell.
    """
    moves = np.asarray(moves)
    turns = np.asarray(turns)
    if len(moves) != grid.size or len(turns) != grid.size:
        raise ValueError(f"Expected {grid.size} actions, got {len(moves)} moves and {len(turns)} turns")
    moved = np.zeros(grid.size, dtype=bool)
    for robot_id in range(grid.size):
        moved[robot_id] = _execute(grid, robot_id, bool(moves[robot_id]), int(turns[robot_id]))
    return moved


def step_actions(grid: TorusGrid, actions: Sequence[Action]) -> np.ndarray:
    """step_swarm over a list of Action values"""
    return step_swarm(grid, [a.value for a in actions], [int(a.turn) for a in actions])


def random_placement(grid: TorusGrid, swarm_size: int, rng: np.random.Generator) -> List[Pose]:
    """Place robots on distinct uniform cells with uniform headings"""
    if swarm_size < 0:
        raise ValueError(f"Swarm size must be non-negative, got {swarm_size}")
    if swarm_size > grid.cells:
        raise ValueError(f"Cannot place {swarm_size} robots on {grid.width}x{grid.height} = {grid.cells} cells")
    cells = rng.choice(grid.cells, size=swarm_size, replace=False)
    headings = rng.integers(0, 4, size=swarm_size)
    poses = [Pose(int(c % grid.width), int(c // grid.width), Heading(int(h))) for c, h in zip(cells, headings)]
    grid.place(poses)
    return poses
