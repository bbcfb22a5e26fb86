"""Run configuration and scale-derived tolerances.

All tolerances are relative to instance scale: mass tolerances scale with the
total source mass, geometric tolerances with the bounding-box diameter, and
cost tolerances with diameter * mass**alpha.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

REL_TOL = 1e-9

INITIALIZERS = ("subdivision", "star", "small")


@dataclass
class OptimizeConfig:
    """Knobs for the optimization pipeline.

    max_vertices is an absolute cap on vertex count during edge subdivision;
    when None it defaults to 20x the number of targets at run time.
    """

    rel_tol: float = REL_TOL
    max_rounds: int = 50
    max_local_sweeps: int = 200
    subdivide_factor: float = 2.0
    max_vertices: int | None = None
    initializer: str = "subdivision"
    seed: int | None = None

    def validate(self) -> None:
        if self.initializer not in INITIALIZERS:
            raise ValueError(f"unknown initializer {self.initializer!r}")
        if self.rel_tol <= 0 or self.subdivide_factor <= 0:
            raise ValueError("tolerances and factors must be positive")
        if self.max_rounds < 1 or self.max_local_sweeps < 1:
            raise ValueError("iteration caps must be >= 1")


def mass_tolerance(total_mass: float) -> float:
    """Balance tolerance: 1e-9 of the total source mass."""
    return 1e-9 * abs(total_mass)


def merge_tolerance(diameter: float) -> float:
    """Vertex-merge radius: 1e-9 of the bounding-box diameter."""
    return 1e-9 * abs(diameter)


def cost_tolerance(diameter: float, total_mass: float, alpha: float) -> float:
    """Minimum accepted cost improvement: 1e-9 * diameter * mass**alpha."""
    return 1e-9 * abs(diameter) * abs(total_mass) ** alpha


def scoring_threads() -> int:
    """Upper bound on scoring parallelism, from BRANCHFLOW_THREADS.

    The evaluator is serial, which respects any cap; the variable is parsed
    and validated so misconfiguration surfaces early.
    """
    raw = os.environ.get("BRANCHFLOW_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"BRANCHFLOW_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError("BRANCHFLOW_THREADS must be >= 1")
    return value
