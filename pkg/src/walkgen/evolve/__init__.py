"""Evolutionary search over level layouts."""

from .config import AestheticConfig, EvolutionConfig
from .genome import (Block, BlockGenome, Genome, ModelDef, ModelGenome, ModelLibrary, Placement,
                     aesthetic_score, crossover, default_model_library, genome_footprints,
                     genome_to_occluders, genome_violations, mutate, random_genome)
from .search import (EvolutionResult, HistoryRow, Individual, InvariantError, combined_fitness,
                     evaluate_genome, evolve)

__all__ = [
    "AestheticConfig", "Block", "BlockGenome", "EvolutionConfig", "EvolutionResult", "Genome",
    "HistoryRow", "Individual", "InvariantError", "ModelDef", "ModelGenome", "ModelLibrary",
    "Placement", "aesthetic_score", "combined_fitness", "crossover", "default_model_library",
    "evaluate_genome", "evolve", "genome_footprints", "genome_to_occluders", "genome_violations",
    "mutate", "random_genome",
]
