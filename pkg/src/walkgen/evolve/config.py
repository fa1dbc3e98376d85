"""Evolution parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

from ..visibility import EvalParams


@dataclass(frozen=True)
class AestheticConfig:
    """Optional placement penalties for model mode.

    ``target_counts`` maps model id -> desired number of placements and
    ``target_spacing`` maps model id -> desired nearest-neighbour distance
    between placements of that model. Only listed models contribute.
    """

    w_qty: float = 0.0
    w_pair: float = 0.0
    target_counts: dict[str, int] = field(default_factory=dict)
    target_spacing: dict[str, float] = field(default_factory=dict)
    scale: float = 0.5

    def __post_init__(self) -> None:
        if self.w_qty < 0 or self.w_pair < 0:
            raise ValueError("aesthetic weights must be non-negative")
        if not 0.0 <= self.scale <= 1.0:
            raise ValueError("aesthetic scale must lie in [0, 1]")


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 50
    generations: int = 200
    min_blocks: int = 1
    max_blocks: int = 10
    min_dim: tuple[float, float, float] = (0.5, 0.5, 0.5)
    max_dim: tuple[float, float, float] = (6.0, 6.0, 4.0)
    add_rate: float = 0.2
    remove_rate: float = 0.2
    move_rate: float = 0.6
    resize_rate: float = 0.4
    sigma_move: float = 1.5
    sigma_size: float = 0.75
    crossover_rate: float = 0.7
    tournament_size: int = 3
    elite_count: int = 2
    master_seed: int = 0
    mode: Literal["blocks", "models"] = "blocks"
    aesthetic: AestheticConfig | None = None
    stop_when_solved: bool = True
    patience: int | None = None
    workers: int = 1
    check_invariants: bool = False
    evaluation: EvalParams = field(default_factory=EvalParams)

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if not 0 <= self.elite_count < self.population_size:
            raise ValueError("elite_count must be below population_size")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if not 0 <= self.min_blocks <= self.max_blocks:
            raise ValueError("need 0 <= min_blocks <= max_blocks")
        if any(lo <= 0 or lo > hi for lo, hi in zip(self.min_dim, self.max_dim)):
            raise ValueError("need 0 < min_dim <= max_dim on every axis")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be at least 1")
        if self.mode not in ("blocks", "models"):
            raise ValueError(f"unknown mode {self.mode!r}")
        for name in ("add_rate", "remove_rate", "move_rate", "resize_rate", "crossover_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
