"""Search strategies: optimality, determinism, decoupled soundness, Pareto."""

from __future__ import annotations

import math

import pytest

from spatialdse.costmodel import evaluate
from spatialdse.mapping import check_legality
from spatialdse.mapspace import ConstraintSet, EmptyMapSpace, build
from spatialdse.mappers import (
    Evaluator,
    Metric,
    SearchConfig,
    Strategy,
    metric_value,
    pareto,
    search,
)

from conftest import arch_2level, arch_3level, gemm_problem


def small_space():
    p = gemm_problem(4, 4, 4)
    a = arch_2level(pes=2, l1_words=64)
    return p, a, build(p, a)


def test_exhaustive_matches_independent_scan():
    p, a, space = small_space()
    result = search(space, SearchConfig(Strategy.EXHAUSTIVE, Metric.EDP))
    scan_best = min(
        (evaluate(m, p, a).edp, m.sort_key()) for m in space.enumerate()
    )
    assert result.best_value == scan_best[0]
    assert result.best_mapping.sort_key() == scan_best[1]
    assert result.evaluated == space.size


@pytest.mark.parametrize("metric", list(Metric))
def test_exhaustive_dominates_other_strategies(metric):
    p, a, space = small_space()
    exhaustive = search(space, SearchConfig(Strategy.EXHAUSTIVE, metric))
    for strategy in (Strategy.RANDOM, Strategy.HILLCLIMB, Strategy.DECOUPLED):
        for seed in (0, 7):
            cfg = SearchConfig(strategy, metric, samples=40, seed=seed, restarts=2)
            other = search(space, cfg)
            assert exhaustive.best_value <= other.best_value + 1e-12


def test_random_sampling_deterministic():
    p, a, space = small_space()
    cfg = SearchConfig(Strategy.RANDOM, Metric.EDP, samples=50, seed=7)
    r1 = search(space, cfg)
    r2 = search(build(p, a), cfg)
    assert r1.best_mapping == r2.best_mapping
    assert r1.best_value == r2.best_value


def test_worker_count_does_not_change_result():
    p, a, space = small_space()
    serial = search(space, SearchConfig(Strategy.EXHAUSTIVE, Metric.EDP, workers=1))
    parallel = search(
        build(p, a), SearchConfig(Strategy.EXHAUSTIVE, Metric.EDP, workers=3)
    )
    assert serial.best_mapping == parallel.best_mapping
    assert serial.best_value == parallel.best_value


def test_decoupled_returns_member_of_space():
    p = gemm_problem(8, 8, 8)
    a = arch_3level(rows=4, l1_words=256, l2_words=1 << 14)
    space = build(p, a)
    result = search(space, SearchConfig(Strategy.DECOUPLED, Metric.EDP, samples=30, seed=3))
    assert check_legality(result.best_mapping, p, a) == []


def test_hillclimb_improves_or_matches_start():
    p = gemm_problem(8, 8, 8)
    a = arch_3level(rows=4, l1_words=256, l2_words=1 << 14)
    space = build(p, a)
    start = space.sample(1, seed=7919 * 0 + 0)[0]  # same first restart draw
    start_value = metric_value(evaluate(start, p, a), Metric.EDP)
    result = search(
        space, SearchConfig(Strategy.HILLCLIMB, Metric.EDP, seed=0, restarts=1)
    )
    assert result.best_value <= start_value


def test_empty_space_raises():
    p = gemm_problem(4, 4, 4)
    a = arch_2level(pes=1, l1_words=2)
    space = build(p, a)
    with pytest.raises(EmptyMapSpace):
        search(space, SearchConfig(Strategy.EXHAUSTIVE, Metric.EDP))


def test_pareto_front_properties():
    p, a, space = small_space()
    evaluations = [(m, evaluate(m, p, a)) for m in space.enumerate()]
    front = pareto(evaluations)
    assert front
    # nothing on the front is dominated by any evaluated point
    for fm, fr in front:
        for m, r in evaluations:
            strictly_better = (
                r.energy <= fr.energy
                and r.latency_cycles <= fr.latency_cycles
                and (r.energy < fr.energy or r.latency_cycles < fr.latency_cycles)
            )
            assert not strictly_better
    # single point degenerates to itself
    assert pareto(evaluations[:1]) == evaluations[:1]


def test_min_edp_point_is_on_front():
    p, a, space = small_space()
    evaluations = [(m, evaluate(m, p, a)) for m in space.enumerate()]
    front = pareto(evaluations)
    best_edp = min(r.edp for _, r in evaluations)
    assert any(math.isclose(r.edp, best_edp) for _, r in front)
