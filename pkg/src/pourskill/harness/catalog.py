"""Container catalogs and task sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..control import PourTask
from ..core import ContainerSpec
from ..errors import InfeasibleContainerError, UsageError

MIN_POUR_ML = 50.0
MIN_LEFTOVER_ML = 30.0
FILL_BAND = (0.4, 0.9)


@dataclass(frozen=True)
class ContainerCatalog:
    training: tuple[ContainerSpec, ...]
    similar_test: tuple[ContainerSpec, ...]
    unaccustomed: tuple[ContainerSpec, ...]

    def all(self) -> tuple[ContainerSpec, ...]:
        return self.training + self.similar_test + self.unaccustomed

    def get(self, name: str) -> ContainerSpec:
        for c in self.all():
            if c.name == name:
                return c
        raise UsageError(f"unknown container {name!r}; known: {', '.join(c.name for c in self.all())}")

    @property
    def accustomed(self) -> ContainerSpec:
        """The training container used for headline accuracy."""
        return self.training[0]

    def training_hull(self) -> tuple[tuple[float, float], tuple[float, float]]:
        hs = [c.height_mm for c in self.training]
        ds = [c.diameter_mm for c in self.training]
        return (min(hs), max(hs)), (min(ds), max(ds))

    def inside_training_hull(self, c: ContainerSpec) -> bool:
        (h0, h1), (d0, d1) = self.training_hull()
        return h0 <= c.height_mm <= h1 and d0 <= c.diameter_mm <= d1


DEFAULT_CATALOG = ContainerCatalog(
    training=(
        ContainerSpec("red_cup", 110.0, 72.0),
        ContainerSpec("short_wide_cup", 90.0, 90.0),
        ContainerSpec("slim_glass", 140.0, 50.0),
        ContainerSpec("mug", 95.0, 80.0),
        ContainerSpec("tumbler", 125.0, 60.0),
        ContainerSpec("jar", 130.0, 85.0),
        ContainerSpec("small_glass", 100.0, 55.0),
        ContainerSpec("beaker", 120.0, 70.0),
        ContainerSpec("can", 135.0, 65.0),
    ),
    similar_test=(
        ContainerSpec("water_bottle", 128.0, 68.0),
        ContainerSpec("coffee_cup", 98.0, 58.0),
        ContainerSpec("paper_cup", 105.0, 62.0),
        ContainerSpec("fat_bottle", 115.0, 78.0),
    ),
    unaccustomed=(
        ContainerSpec("wine_bottle", 280.0, 45.0),
        ContainerSpec("blue_bottle", 230.0, 60.0),
        ContainerSpec("measuring_cup", 80.0, 120.0),
    ),
)


def task_band(container: ContainerSpec) -> tuple[float, float]:
    cap = container.capacity_ml
    lo = max(FILL_BAND[0] * cap, MIN_POUR_ML + MIN_LEFTOVER_ML)
    hi = FILL_BAND[1] * cap
    if hi <= MIN_POUR_ML + MIN_LEFTOVER_ML:
        raise InfeasibleContainerError(f"{container.name} ({cap:.0f} mL) is too small for the task band")
    return lo, hi


def generate_practice_tasks(n: int, container: ContainerSpec, rng: np.random.Generator) -> list[PourTask]:
    """Random (v_total, v_2pour) requirements; each task gets its own executor seed."""
    if n < 1:
        raise ValueError("need at least one task")
    lo, hi = task_band(container)
    tasks = []
    for _ in range(n):
        v_total = float(rng.uniform(lo, hi))
        v_2pour = float(rng.uniform(MIN_POUR_ML, v_total - MIN_LEFTOVER_ML))
        seed = int(rng.integers(0, 2**63 - 1))
        tasks.append(PourTask(container, v_total, v_2pour, seed))
    return tasks
