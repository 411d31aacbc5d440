import os

import hypothesis
import numpy as np
import pytest

from swarm.evolution import EvolutionConfig
from swarm.grid import TorusGrid

np.seterr(all="warn")

hypothesis.settings.register_profile("dev", max_examples=25, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))


def grid_from_rows(*rows: str) -> TorusGrid:
    """Hand-built configuration; ids are row-major"""
    return TorusGrid.from_ascii("\n".join(rows))


def checkerboard(size: int, heading: str = "^") -> TorusGrid:
    return grid_from_rows(*["".join(heading if (x + y) % 2 == 0 else "." for x in range(size))
                            for y in range(size)])


def blank(width: int, height: int):
    return [["."] * width for _ in range(height)]


def render(rows) -> TorusGrid:
    return grid_from_rows(*["".join(row) for row in rows])


@pytest.fixture
def tiny_config() -> EvolutionConfig:
    """Small but complete settings so evolutions finish in well under a second"""
    return EvolutionConfig(
        population_size=4,
        generations=2,
        eval_length=6,
        evals_per_genome=2,
        width=6,
        height=6,
        swarm_size=8,
        seed=11,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
