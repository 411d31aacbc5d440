#!/usr/bin/env python3
"""
Swarm Metrics
Prediction fitness, temperature, movement, intended movement and structure similarity

Naming: `eval_length` is the number of simulated steps of an evaluation,
`temperature` is the per-step displacement measure. Both are written T in the literature.
"""

import math
from typing import Iterable, Optional, Sequence

import numpy as np

from swarm.grid import Pose


def fitness(predictions: np.ndarray, sensors: np.ndarray) -> float:
    """Mean prediction accuracy 1/(NTR) * sum(1 - |p - s|) over robots, steps and sensors"""
    predictions = np.asarray(predictions)
    sensors = np.asarray(sensors)
    if predictions.shape != sensors.shape:
        raise ValueError(f"Prediction shape {predictions.shape} does not match sensor shape {sensors.shape}")
    if predictions.size == 0:
        raise ValueError("Fitness needs at least one robot, step and sensor")
    errors = np.abs(predictions.astype(np.int64) - sensors.astype(np.int64))
    return float(1.0 - errors.sum() / predictions.size)


def wrapped_distance(a: np.ndarray, b: np.ndarray, extent: int) -> np.ndarray:
    """Minimal distance between coordinates on a ring of the given extent"""
    d = np.abs(np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64)) % extent
    return np.minimum(d, extent - d)


def temperature_from_arrays(xs_before: np.ndarray, ys_before: np.ndarray, xs_after: np.ndarray,
                            ys_after: np.ndarray, width: int, height: int) -> float:
    robots = len(xs_before)
    if len(xs_after) != robots:
        raise ValueError("Temperature needs the same robots at both time steps")
    if robots == 0:
        return 0.0
    moved_x = wrapped_distance(xs_before, xs_after, width).sum()
    moved_y = wrapped_distance(ys_before, ys_after, height).sum()
    return float((moved_x + moved_y) / robots)


def temperature(before: Sequence[Pose], after: Sequence[Pose], width: int, height: int) -> float:
    """Sum of mean wrapped x and y displacement between two consecutive steps"""
    if len(before) != len(after):
        raise ValueError("Temperature needs the same robots at both time steps")
    return temperature_from_arrays(
        np.array([p.x for p in before]), np.array([p.y for p in before]),
        np.array([p.x for p in after]), np.array([p.y for p in after]),
        width, height,
    )


def tail_window(width: int, height: int) -> int:
    """Number of final steps metrics are averaged over: ceil(W*H / 2)"""
    return math.ceil(width * height / 2)


def movement_M(series: Sequence[float], tau: int) -> float:
    """Mean temperature over the last tau steps"""
    series = np.asarray(series, dtype=np.float64)
    if tau <= 0:
        raise ValueError(f"Window must be positive, got {tau}")
    if series.size < tau:
        raise ValueError(f"Series of length {series.size} is shorter than the window {tau}")
    return float(series[-tau:].mean())


def intended_movement_I(actions: np.ndarray, tau: Optional[int] = None) -> float:
    """Fraction of forward-move decisions, (steps, N) action bits, over the last tau steps"""
    actions = np.asarray(actions)
    if tau is not None:
        if actions.shape[0] < tau:
            raise ValueError(f"Action log of length {actions.shape[0]} is shorter than the window {tau}")
        actions = actions[-tau:]
    if actions.size == 0:
        return 0.0
    return float(actions.mean())


def _key(pose: Pose, compare_headings: bool):
    return (pose.x, pose.y, int(pose.heading)) if compare_headings else (pose.x, pose.y)


def similarity_S(after: Iterable[Pose], before: Iterable[Pose], swarm_size: int,
                 compare_headings: bool = True) -> float:
    """Fraction of poses in `after` that also occur in `before`, normalized by the swarm size"""
    if swarm_size <= 0:
        raise ValueError(f"Swarm size must be positive, got {swarm_size}")
    reference = {_key(p, compare_headings) for p in before}
    matches = sum(1 for p in after if _key(p, compare_headings) in reference)
    return matches / swarm_size
