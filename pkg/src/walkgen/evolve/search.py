"""Generational evolution with elitism and tournament selection.

Each child in generation ``g`` at population slot ``i`` draws all of its
randomness from ``stream(master_seed, g, i)``, so a run is reproducible no
matter how many worker processes evaluate the population.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..rng import stream
from ..template import LevelTemplate, require_valid
from ..visibility import FitnessReport, evaluate_level
from .config import EvolutionConfig
from .genome import (Genome, ModelGenome, ModelLibrary, aesthetic_score, crossover,
                     genome_to_occluders, genome_violations, mutate, random_genome)

log = logging.getLogger(__name__)


class InvariantError(RuntimeError):
    """A genome produced by the search broke a genome invariant."""


@dataclass(frozen=True)
class Individual:
    genome: Genome
    report: FitnessReport
    penalty: float
    fitness: float


@dataclass(frozen=True)
class HistoryRow:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_constraints_met: int


@dataclass(frozen=True)
class EvolutionResult:
    best: Individual
    history: list[HistoryRow]
    solved: bool

    @property
    def best_genome(self) -> Genome:
        return self.best.genome

    @property
    def generations_run(self) -> int:
        return len(self.history)


def combined_fitness(report: FitnessReport, penalty: float, config: EvolutionConfig) -> float:
    """Scale the shaping term down by the aesthetic penalty.

    The penalty only ever shrinks the sub-unit shaping part, so a genome that
    meets more constraints always outranks one that meets fewer.
    """
    if not report.path_found or config.aesthetic is None or penalty == 0.0:
        return report.fitness
    factor = 1.0 - config.aesthetic.scale * penalty / (1.0 + penalty)
    return report.constraints_met + report.shaping * factor


def evaluate_genome(genome: Genome, template: LevelTemplate, config: EvolutionConfig,
                    model_library: ModelLibrary | None = None) -> Individual:
    occluders = genome_to_occluders(genome, model_library)
    report, _ = evaluate_level(template, occluders, config.evaluation, check=False)
    penalty = 0.0
    if isinstance(genome, ModelGenome) and config.aesthetic is not None:
        penalty = aesthetic_score(genome.placements, config.aesthetic)
    return Individual(genome, report, penalty, combined_fitness(report, penalty, config))


_WORKER_STATE: tuple | None = None


def _init_worker(template, config, library) -> None:
    global _WORKER_STATE
    _WORKER_STATE = (template, config, library)


def _worker_eval(genome: Genome) -> Individual:
    template, config, library = _WORKER_STATE
    return evaluate_genome(genome, template, config, library)


class _Evaluator:
    def __init__(self, template, config, library):
        self.args = (template, config, library)
        self.pool = None
        if config.workers > 1:
            self.pool = ProcessPoolExecutor(config.workers, initializer=_init_worker,
                                            initargs=self.args)

    def __call__(self, genomes: Sequence[Genome]) -> list[Individual]:
        if self.pool is None:
            return [evaluate_genome(g, *self.args) for g in genomes]
        chunk = max(1, len(genomes) // (4 * self.args[1].workers))
        return list(self.pool.map(_worker_eval, genomes, chunksize=chunk))

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown()


def _tournament(pop: Sequence[Individual], k: int, rng: np.random.Generator) -> Individual:
    entrants = rng.integers(0, len(pop), size=k)
    # highest fitness wins; lower slot breaks ties
    best = min(entrants.tolist(), key=lambda i: (-pop[i].fitness, i))
    return pop[best]


def _rank(pop: Sequence[Individual]) -> list[int]:
    return sorted(range(len(pop)), key=lambda i: (-pop[i].fitness, i))


def evolve(template: LevelTemplate, config: EvolutionConfig,
           model_library: ModelLibrary | None = None) -> EvolutionResult:
    require_valid(template)
    seed = config.master_seed

    def check(genomes: Sequence[Genome]) -> None:
        if not config.check_invariants:
            return
        for g in genomes:
            problems = genome_violations(g, config, template, model_library)
            if problems:
                raise InvariantError("; ".join(problems))

    evaluate = _Evaluator(template, config, model_library)
    try:
        genomes = [random_genome(config, template, stream(seed, 0, i), model_library)
                   for i in range(config.population_size)]
        check(genomes)
        pop = evaluate(genomes)
        best = pop[_rank(pop)[0]]
        history: list[HistoryRow] = []
        stale = 0
        for gen in range(max(config.generations, 1)):
            if gen > 0:
                order = _rank(pop)
                elites = [pop[i] for i in order[:config.elite_count]]
                children = []
                for slot in range(config.elite_count, config.population_size):
                    rng = stream(seed, gen, slot)
                    a = _tournament(pop, config.tournament_size, rng).genome
                    if rng.random() < config.crossover_rate:
                        b = _tournament(pop, config.tournament_size, rng).genome
                        a = crossover(a, b, rng, config)
                    children.append(mutate(a, config, template, rng, model_library))
                check(children)
                pop = elites + evaluate(children)
                leader = pop[_rank(pop)[0]]
                if leader.fitness > best.fitness:
                    best = leader
                    stale = 0
                else:
                    stale += 1

            mean = float(np.mean([ind.fitness for ind in pop]))
            history.append(HistoryRow(gen, best.fitness, mean, best.report.constraints_met))
            log.debug("generation %d best %.4f mean %.4f", gen, best.fitness, mean)
            if config.stop_when_solved and best.report.all_met:
                break
            if config.patience is not None and stale >= config.patience:
                break
    finally:
        evaluate.close()
    return EvolutionResult(best, history, best.report.all_met)
