import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walkgen.evolve import (AestheticConfig, Block, BlockGenome, EvolutionConfig, ModelDef, ModelGenome,
                            Placement, aesthetic_score, combined_fitness, crossover, default_model_library,
                            evolve, genome_to_occluders, genome_violations, mutate, random_genome)
from walkgen.geometry import Aabb, Rect
from walkgen.rng import stream
from walkgen.scenarios import both_markers_visible, empty_level, top_marker_only
from walkgen.visibility import FitnessReport

LIB = default_model_library()
T = both_markers_visible()
BLOCKS = EvolutionConfig()
MODELS = EvolutionConfig(mode="models")
QUIET = dict(add_rate=0.0, remove_rate=0.0, move_rate=0.0, resize_rate=0.0)


def test_exact_block_count():
    cfg = EvolutionConfig(min_blocks=5, max_blocks=5)
    assert len(random_genome(cfg, T, stream(0, "g"), LIB).blocks) == 5


@pytest.mark.parametrize("cfg", [BLOCKS, MODELS], ids=["blocks", "models"])
def test_random_genomes_are_valid(cfg):
    for i in range(1000):
        g = random_genome(cfg, T, stream(1, i), LIB)
        assert genome_violations(g, cfg, T, LIB) == []


def test_random_genome_deterministic():
    assert random_genome(BLOCKS, T, stream(3, 1)) == random_genome(BLOCKS, T, stream(3, 1))


def test_zero_rates_identity():
    cfg = EvolutionConfig(**QUIET)
    g = random_genome(cfg, T, stream(0, 0))
    assert mutate(g, cfg, T, stream(0, 1)) is g


def test_remove_guard_at_minimum():
    cfg = EvolutionConfig(min_blocks=3, max_blocks=6, **{**QUIET, "remove_rate": 1.0})
    g = random_genome(dataclasses.replace(cfg, max_blocks=3), T, stream(0, 0))
    assert len(g.blocks) == 3
    assert mutate(g, cfg, T, stream(0, 1)) == g


@pytest.mark.parametrize("cfg", [BLOCKS, MODELS], ids=["blocks", "models"])
def test_mutation_sweep_keeps_invariants(cfg):
    g = random_genome(cfg, T, stream(2, 0), LIB)
    n = 10_000 if cfg.mode == "blocks" else 3000
    for i in range(n):
        g = mutate(g, cfg, T, stream(2, 1, i), LIB)
        assert not genome_violations(g, cfg, T, LIB)


def test_crossover_of_equal_parents_is_parent():
    a = random_genome(BLOCKS, T, stream(4, 0))
    # equal lengths leave no tail, so every index picks the same block
    assert crossover(a, a, stream(4, 1), BLOCKS) == a


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31))
def test_crossover_child_from_parents(seed):
    a = random_genome(BLOCKS, T, stream(seed, 0))
    b = random_genome(BLOCKS, T, stream(seed, 1))
    child = crossover(a, b, stream(seed, 2), BLOCKS)
    pool = list(a.blocks) + list(b.blocks)
    for blk in child.blocks:
        assert blk in pool
        pool.remove(blk)
    assert min(len(a.blocks), len(b.blocks)) <= len(child.blocks) <= BLOCKS.max_blocks
    assert child == crossover(a, b, stream(seed, 2), BLOCKS)


def test_crossover_mode_mismatch():
    with pytest.raises(ValueError):
        crossover(BlockGenome(), ModelGenome(), stream(0))


def test_block_to_aabb():
    boxes = genome_to_occluders(BlockGenome((Block((10, 10), (2, 2, 3)),)))
    assert boxes == [Aabb.from_bounds((9, 0, 9), (11, 3, 11))]


def test_rotated_placement():
    lib = {"slab": ModelDef("slab", (Aabb.from_bounds((0, 0, 0), (1, 1, 2)),), Rect(0, 0, 1, 2))}
    (box,) = genome_to_occluders(ModelGenome((Placement("slab", (0, 0), 90),)), lib)
    assert (box.max.x - box.min.x, box.max.z - box.min.z) == (2, 1)
    assert (box.min.y, box.max.y) == (0, 1)


def test_empty_genome_and_unknown_model():
    assert genome_to_occluders(BlockGenome()) == []
    with pytest.raises(KeyError):
        genome_to_occluders(ModelGenome((Placement("boulder", (5, 5), 0),)), LIB)


def test_model_def_footprint_must_cover():
    with pytest.raises(ValueError):
        ModelDef("bad", (Aabb.from_bounds((0, 0, 0), (2, 1, 1)),), Rect(0, 0, 1, 1))


def trees(*xz):
    return [Placement("tree", p, 0) for p in xz]


def test_aesthetic_zero_weights():
    assert aesthetic_score(trees((1, 1), (5, 5)), AestheticConfig()) == 0.0


def test_aesthetic_targets_met():
    cfg = AestheticConfig(1.0, 1.0, {"tree": 2}, {"tree": 5.0})
    assert aesthetic_score(trees((1, 1), (4, 5)), cfg) == 0.0


def test_aesthetic_extra_tree():
    cfg = AestheticConfig(w_qty=1.0, target_counts={"tree": 2})
    assert aesthetic_score(trees((1, 1), (4, 5), (9, 9)), cfg) == 1.0


def report(met, shaping, k=3):
    return FitnessReport(True, (0.0,) * k, (True,) * met + (False,) * (k - met), met, shaping, met + shaping)


@given(st.integers(0, 2), st.floats(0, 0.999), st.floats(0, 1), st.floats(0, 50), st.floats(0, 50))
def test_more_constraints_always_rank_higher(met, sh_lo, sh_hi, pen_hi, pen_lo):
    cfg = EvolutionConfig(mode="models", aesthetic=AestheticConfig(scale=1.0))
    hi = combined_fitness(report(met + 1, sh_hi), pen_hi, cfg)
    lo = combined_fitness(report(met, sh_lo), pen_lo, cfg)
    assert hi > lo


def test_zero_marker_template_stops_at_generation_zero():
    result = evolve(empty_level(), EvolutionConfig(population_size=10, master_seed=1))
    assert result.best.fitness == 1.0
    assert result.generations_run == 1 and result.history[0].generation == 0


def small(seed, **kw):
    return EvolutionConfig(population_size=12, generations=8, master_seed=seed, stop_when_solved=False,
                           check_invariants=True, **kw)


def test_best_is_monotone_and_invariants_hold():
    result = evolve(top_marker_only(), small(5))
    best = [h.best_fitness for h in result.history]
    assert best == sorted(best)
    assert result.best.fitness == best[-1]


def test_models_mode_runs_with_invariants():
    result = evolve(top_marker_only(), small(6, mode="models"), LIB)
    assert isinstance(result.best_genome, ModelGenome)
    assert not genome_violations(result.best_genome, small(6, mode="models"), top_marker_only(), LIB)


def test_evolution_deterministic_across_workers():
    a = evolve(T, small(7))
    b = evolve(T, small(7))
    c = evolve(T, dataclasses.replace(small(7), workers=2))
    assert a.history == b.history == c.history
    assert a.best_genome == b.best_genome == c.best_genome


def test_both_markers_scenario_solved():
    result = evolve(T, EvolutionConfig(master_seed=0, generations=30))
    assert result.solved and result.best.report.constraints_met == 2


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(population_size=1)
    with pytest.raises(ValueError):
        EvolutionConfig(elite_count=50)
    with pytest.raises(ValueError):
        EvolutionConfig(min_blocks=4, max_blocks=2)
    with pytest.raises(ValueError):
        evolve(T, EvolutionConfig(mode="models"), {})


def test_aesthetic_penalty_changes_only_shaping():
    cfg = EvolutionConfig(mode="models", aesthetic=AestheticConfig(w_qty=1.0, target_counts={"tree": 3}))
    r = report(2, 0.8)
    f = combined_fitness(r, 1.0, cfg)
    assert 2.0 <= f < 2.8
    assert combined_fitness(r, 0.0, cfg) == r.fitness


def test_stream_keys_distinct():
    a = stream(1, 0, 0).random()
    assert a == stream(1, 0, 0).random()
    assert a != stream(1, 0, 1).random() and a != stream(2, 0, 0).random()
    assert np.isfinite(stream(1, "decorate").random())
