#!/usr/bin/env python3
"""
Structure Classification
Detects lines, pairs, grouping, dispersion, squares and triangular lattices in a final configuration
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.signal import correlate2d

from swarm.grid import EMPTY, Heading, TorusGrid

logger = logging.getLogger("swarm-classify")

MOORE = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
VON_NEUMANN = [(0, -1), (1, 0), (0, 1), (-1, 0)]
DIAGONALS = [(-1, -1), (1, -1), (-1, 1), (1, 1)]


class PatternLabel(str, Enum):
    LINE = "line"
    PAIR = "pair"
    AGGREGATION = "aggregation"
    CLUSTERING = "clustering"
    LOOSE_GROUPING = "loose_grouping"
    RANDOM_DISPERSION = "random_dispersion"
    SQUARE = "square"
    TRIANGULAR_LATTICE = "triangular_lattice"


# Ties between equal fractions go to the earlier label
PRECEDENCE = [
    PatternLabel.TRIANGULAR_LATTICE,
    PatternLabel.SQUARE,
    PatternLabel.LINE,
    PatternLabel.PAIR,
    PatternLabel.AGGREGATION,
    PatternLabel.LOOSE_GROUPING,
    PatternLabel.CLUSTERING,
    PatternLabel.RANDOM_DISPERSION,
]

DISPERSION_LABELS = {PatternLabel.RANDOM_DISPERSION, PatternLabel.SQUARE, PatternLabel.TRIANGULAR_LATTICE}


class DisjointSet:
    """Union-find with path compression and union by rank"""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int):
        x_root, y_root = self.find(x), self.find(y)
        if x_root == y_root:
            return
        if self.rank[x_root] < self.rank[y_root]:
            x_root, y_root = y_root, x_root
        self.parent[y_root] = x_root
        if self.rank[x_root] == self.rank[y_root]:
            self.rank[x_root] += 1

    def groups(self, members) -> List[List[int]]:
        grouped: Dict[int, List[int]] = {}
        for m in members:
            grouped.setdefault(self.find(m), []).append(m)
        return sorted(grouped.values())


@dataclass
class LineDetection:
    robots: List[int]
    horizontal: bool
    spanning: bool

    @property
    def length(self) -> int:
        return len(self.robots)


class StructureReport(BaseModel):
    """Per-pattern membership fractions and the winning label of one configuration"""

    swarm_size: int
    fractions: Dict[PatternLabel, float]
    winner: PatternLabel
    orientation: Optional[str] = None
    horizontal_lines: int = 0
    vertical_lines: int = 0
    spanning_lines: int = 0
    clusters: int = 0
    members: Dict[PatternLabel, List[int]] = Field(default_factory=dict, exclude=True)

    def fraction(self, label: PatternLabel) -> float:
        return self.fractions.get(label, 0.0)

    def summary(self) -> str:
        lines = [f"winner: {self.winner.value} ({self.fraction(self.winner):.1%} of {self.swarm_size} robots)"]
        for label in PRECEDENCE:
            lines.append(f"  {label.value:<20} {self.fraction(label):6.1%}")
        if self.winner == PatternLabel.LINE:
            lines.append(f"  orientation: {self.orientation} (horizontal {self.horizontal_lines}, "
                         f"vertical {self.vertical_lines}, spanning {self.spanning_lines})")
        return "\n".join(lines)


class _View:
    """Occupancy and neighbor counts of one configuration"""

    def __init__(self, grid: TorusGrid):
        self.grid = grid
        self.occ = (grid.occupancy != EMPTY).astype(np.int64)
        self.moore = self._count(MOORE)
        self.von_neumann = self._count(VON_NEUMANN)
        self.diagonal = self._count(DIAGONALS)

    def _count(self, offsets) -> np.ndarray:
        # out[y, x] = occ[y + dy, x + dx] summed over offsets, wrapped
        kernel = np.zeros((3, 3), dtype=np.int64)
        for dx, dy in offsets:
            kernel[1 + dy, 1 + dx] = 1
        return correlate2d(self.occ, kernel, mode="same", boundary="wrap")

    def robot_at(self, x: int, y: int) -> int:
        return int(self.grid.occupancy[y % self.grid.height, x % self.grid.width])

    def neighbors(self, robot_id: int, offsets) -> List[int]:
        x, y = int(self.grid.xs[robot_id]), int(self.grid.ys[robot_id])
        found = [self.robot_at(x + dx, y + dy) for dx, dy in offsets]
        return [r for r in found if r != EMPTY]


def _segments(flags: List[bool]) -> List[Tuple[List[int], bool]]:
    """Maximal cyclic runs of True as (indices in order, spans whole ring)"""
    n = len(flags)
    if all(flags):
        return [(list(range(n)), True)]
    start = flags.index(False)
    runs, current = [], []
    for k in range(1, n + 1):
        i = (start + k) % n
        if flags[i]:
            current.append(i)
        elif current:
            runs.append((current, False))
            current = []
    if current:
        runs.append((current, False))
    return runs


def _side_ok(side: List[bool], ring: bool) -> bool:
    """At most half the run length on one side, never two adjacent side neighbors"""
    if sum(side) > len(side) // 2:
        return False
    pairs = zip(side, side[1:] + side[:1]) if ring else zip(side, side[1:])
    return not any(a and b for a, b in pairs)


def detect_lines_and_pairs(grid: TorusGrid) -> Tuple[List[LineDetection], List[LineDetection]]:
    """Runs of at least two aligned robots with parallel headings, inward-pointing ends and sparse sides"""
    view = _View(grid)
    lines, pairs = [], []
    for horizontal in (True, False):
        axis_headings = (Heading.EAST, Heading.WEST) if horizontal else (Heading.NORTH, Heading.SOUTH)
        first_inward, last_inward = axis_headings if horizontal else (Heading.SOUTH, Heading.NORTH)
        outer = grid.height if horizontal else grid.width
        inner = grid.width if horizontal else grid.height
        for o in range(outer):
            cells = [(i, o) if horizontal else (o, i) for i in range(inner)]
            robots = [view.robot_at(x, y) for x, y in cells]
            flags = [r != EMPTY and grid.headings[r] in axis_headings for r in robots]
            for run, ring in _segments(flags):
                if len(run) < 2:
                    continue
                ids = [robots[i] for i in run]
                if not ring and (grid.headings[ids[0]] != first_inward or grid.headings[ids[-1]] != last_inward):
                    continue
                sides_ok = True
                for side in (-1, 1):
                    occupied = []
                    for i in run:
                        x, y = cells[i]
                        sx, sy = (x, y + side) if horizontal else (x + side, y)
                        occupied.append(view.robot_at(sx, sy) != EMPTY)
                    sides_ok = sides_ok and _side_ok(occupied, ring)
                if not sides_ok:
                    continue
                detection = LineDetection(ids, horizontal, ring)
                (lines if detection.length >= 3 else pairs).append(detection)
    return lines, pairs


def detect_clusters(grid: TorusGrid) -> Tuple[List[Set[int]], Optional[PatternLabel], Set[int]]:
    """Clusters grown from core robots (>= 6 Moore and >= 3 von Neumann neighbors)"""
    view = _View(grid)
    cores = [r for r in range(grid.size)
             if view.moore[grid.ys[r], grid.xs[r]] >= 6 and view.von_neumann[grid.ys[r], grid.xs[r]] >= 3]
    if not cores:
        return [], None, set()
    index = {r: k for k, r in enumerate(cores)}
    linked = DisjointSet(len(cores))
    for r in cores:
        for n in view.neighbors(r, MOORE):
            if n in index:
                linked.union(index[r], index[n])
    clusters = []
    for group in linked.groups(range(len(cores))):
        members = set()
        for k in group:
            members.add(cores[k])
            members.update(view.neighbors(cores[k], MOORE))
        clusters.append(members)

    if len(clusters) == 1:
        label = PatternLabel.AGGREGATION
    else:
        touching = DisjointSet(len(clusters))
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                if clusters[a] & clusters[b]:
                    touching.union(a, b)
        connected = len(touching.groups(range(len(clusters)))) == 1
        label = PatternLabel.LOOSE_GROUPING if connected else PatternLabel.CLUSTERING
    return clusters, label, set().union(*clusters)


def detect_random_dispersion(grid: TorusGrid) -> Set[int]:
    """Robots with at most one Moore neighbor"""
    view = _View(grid)
    return {r for r in range(grid.size) if view.moore[grid.ys[r], grid.xs[r]] <= 1}


SQUARE_CORNERS = set(DIAGONALS)
SQUARE_WINDOW = [(dx, dy) for dy in range(-2, 3) for dx in range(-2, 3)
                 if (dx, dy) != (0, 0) and (dx, dy) not in SQUARE_CORNERS]


def _square_windows(view: _View) -> Dict[int, Set[int]]:
    """Square centers mapped to the robots of their 5x5 window"""
    grid = view.grid
    windows = {}
    for r in range(grid.size):
        x, y = int(grid.xs[r]), int(grid.ys[r])
        if view.diagonal[y, x] != 4:
            continue
        extra = [view.robot_at(x + dx, y + dy) for dx, dy in SQUARE_WINDOW]
        extra = [e for e in extra if e != EMPTY]
        # one additional robot is tolerated inside the window
        if len(extra) > 1:
            continue
        windows[r] = {r, *view.neighbors(r, DIAGONALS), *extra}
    return windows


def detect_squares(grid: TorusGrid) -> Set[int]:
    """Robots whose centered 5x5 window holds only the four inner corners (plus one allowed extra)"""
    windows = _square_windows(_View(grid))
    return set().union(*windows.values()) if windows else set()


def detect_triangular_lattice(grid: TorusGrid) -> Set[int]:
    """Centers with all diagonal cells occupied and all orthogonal cells empty, plus their diagonal neighbors"""
    view = _View(grid)
    square_centers = _square_windows(view)
    members = set()
    for r in range(grid.size):
        x, y = int(grid.xs[r]), int(grid.ys[r])
        if view.diagonal[y, x] != 4 or view.von_neumann[y, x] != 0:
            continue
        # an isolated square window is not a lattice
        if r in square_centers:
            continue
        members.add(r)
        members.update(view.neighbors(r, DIAGONALS))
    return members


def line_orientation(lines: List[LineDetection]) -> Optional[str]:
    """Mostly horizontal / mostly vertical when more than two thirds of the lines agree, else maze"""
    if not lines:
        return None
    horizontal = sum(1 for line in lines if line.horizontal)
    if 3 * horizontal > 2 * len(lines):
        return "horizontal"
    if 3 * (len(lines) - horizontal) > 2 * len(lines):
        return "vertical"
    return "maze"


def classify_run(grid: TorusGrid) -> StructureReport:
    """Membership fraction of every pattern and the label with the highest resemblance"""
    lines, pairs = detect_lines_and_pairs(grid)
    clusters, grouping, grouped = detect_clusters(grid)
    members: Dict[PatternLabel, Set[int]] = {label: set() for label in PatternLabel}
    for line in lines:
        members[PatternLabel.LINE].update(line.robots)
    for pair in pairs:
        members[PatternLabel.PAIR].update(pair.robots)
    if grouping is not None:
        members[grouping] = grouped
    members[PatternLabel.RANDOM_DISPERSION] = detect_random_dispersion(grid)
    members[PatternLabel.SQUARE] = detect_squares(grid)
    members[PatternLabel.TRIANGULAR_LATTICE] = detect_triangular_lattice(grid)

    n = grid.size
    fractions = {label: (len(members[label]) / n if n else 0.0) for label in PatternLabel}
    best = max(fractions.values())
    if best > 0:
        winner = next(label for label in PRECEDENCE if fractions[label] == best)
    else:
        winner = PatternLabel.RANDOM_DISPERSION

    horizontal = sum(1 for line in lines if line.horizontal)
    report = StructureReport(
        swarm_size=n,
        fractions=fractions,
        winner=winner,
        orientation=line_orientation(lines) if winner == PatternLabel.LINE else None,
        horizontal_lines=horizontal,
        vertical_lines=len(lines) - horizontal,
        spanning_lines=sum(1 for line in lines if line.spanning),
        clusters=len(clusters),
        members={label: sorted(ids) for label, ids in members.items()},
    )
    logger.debug(f"Classified {n} robots as {winner.value}")
    return report
