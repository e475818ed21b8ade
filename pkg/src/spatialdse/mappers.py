"""Search strategies over a map space: exhaustive, random sampling, a
decoupled two-phase search, and hill climbing, plus Pareto filtering.

Every strategy is deterministic for a given (config, space): candidate
streams are seeded, and the running best is reduced with an associative min
keyed by (metric value, canonical mapping order), so results do not depend on
how candidates are chunked across workers.
"""

from __future__ import annotations

import enum
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from spatialdse.costmodel import CostReport, evaluate, refetch_count
from spatialdse.mapping import LevelMapping, Mapping
from spatialdse.mapspace import (
    ConstraintSet,
    EmptyMapSpace,
    LevelConstraint,
    MapSpace,
    MapSpaceTooLarge,
    divisors,
)
from spatialdse.problem import footprint, relevant_dimensions


class Strategy(enum.Enum):
    EXHAUSTIVE = "exhaustive"
    RANDOM = "random"
    DECOUPLED = "decoupled"
    HILLCLIMB = "hillclimb"


class Metric(enum.Enum):
    LATENCY = "latency"
    ENERGY = "energy"
    EDP = "edp"


def metric_value(report: CostReport, metric: Metric) -> float:
    if metric is Metric.LATENCY:
        return report.latency_cycles
    if metric is Metric.ENERGY:
        return report.energy
    return report.edp


@dataclass(frozen=True)
class SearchConfig:
    strategy: Strategy = Strategy.EXHAUSTIVE
    metric: Metric = Metric.EDP
    samples: int = 100
    seed: int = 0
    restarts: int = 4
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


@dataclass
class SearchResult:
    best_mapping: Mapping
    best_report: CostReport
    metric: Metric
    evaluated: int
    wall_time_s: float

    @property
    def best_value(self) -> float:
        return metric_value(self.best_report, self.metric)


@dataclass(frozen=True)
class Evaluator:
    """Picklable default evaluator: the analytical model on (problem, arch)."""

    problem: object
    arch: object

    def __call__(self, m: Mapping) -> CostReport:
        return evaluate(m, self.problem, self.arch)


class _Best:
    """Associative, commutative min with a canonical tie-break."""

    def __init__(self, metric: Metric):
        self.metric = metric
        self.key = None
        self.mapping = None
        self.report = None
        self.count = 0

    def offer(self, m: Mapping, r: CostReport):
        self.count += 1
        key = (metric_value(r, self.metric), m.sort_key())
        if self.key is None or key < self.key:
            self.key, self.mapping, self.report = key, m, r

    def merge(self, other: "_Best"):
        self.count += other.count
        if other.key is not None and (self.key is None or other.key < self.key):
            self.key, self.mapping, self.report = other.key, other.mapping, other.report


def _eval_batch(evaluator, metric: Metric, mappings: list[Mapping]) -> _Best:
    best = _Best(metric)
    for m in mappings:
        best.offer(m, evaluator(m))
    return best


def _reduce_stream(mappings, evaluator, metric: Metric, workers: int) -> _Best:
    best = _Best(metric)
    if workers <= 1:
        for m in mappings:
            best.offer(m, evaluator(m))
        return best
    batch = 256
    todo = list(mappings)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_eval_batch, evaluator, metric, todo[k : k + batch])
            for k in range(0, len(todo), batch)
        ]
        for f in futures:
            best.merge(f.result())
    return best


def search(space: MapSpace, cfg: SearchConfig, evaluator=None) -> SearchResult:
    """Best mapping under the configured strategy and metric."""
    if evaluator is None:
        evaluator = Evaluator(space.problem, space.arch)
    start = time.perf_counter()
    if cfg.strategy is Strategy.EXHAUSTIVE:
        best = _reduce_stream(space.enumerate(), evaluator, cfg.metric, cfg.workers)
    elif cfg.strategy is Strategy.RANDOM:
        candidates = space.sample(cfg.samples, cfg.seed)
        best = _reduce_stream(candidates, evaluator, cfg.metric, cfg.workers)
    elif cfg.strategy is Strategy.DECOUPLED:
        best = _decoupled(space, cfg, evaluator)
    elif cfg.strategy is Strategy.HILLCLIMB:
        best = _hillclimb(space, cfg, evaluator)
    else:
        raise ValueError(f"unknown strategy {cfg.strategy}")
    if best.mapping is None:
        raise EmptyMapSpace("search saw no legal mappings")
    return SearchResult(
        best.mapping, best.report, cfg.metric, best.count, time.perf_counter() - start
    )


# ---------------------------------------------------------------------------
# Decoupled (off-chip first) search
# ---------------------------------------------------------------------------

def _offchip_traffic(space: MapSpace, order, tt) -> int:
    """Words streamed out of the backing store for one top-level blocking:
    footprint times refetch over the top level's own temporal loops."""
    p = space.problem
    sizes = p.dim_sizes
    dims = p.dim_names
    tt_map = dict(zip(dims, tt))
    loops = [(d, sizes[d] // tt_map[d]) for d in order]
    total = 0
    for ds in p.data_spaces:
        total += footprint(ds, tt_map) * refetch_count(loops, relevant_dimensions(ds))
    return total


def _top_level_choices(space: MapSpace, cfg: SearchConfig):
    n = space.arch.n_levels
    sizes = space.problem.dim_sizes
    try:
        tilings = space._level_tilings(n, dict(sizes), cap=20_000)
        choices = []
        for tt, st in tilings:
            trips = {d: sizes[d] // t for d, t in zip(space.problem.dim_names, tt)}
            for order in space._level_orders(n, trips):
                choices.append((order, tt, st))
        if choices:
            return choices
    except MapSpaceTooLarge:
        pass
    # Large space: draw the top blocks from sampled full mappings.
    seen = set()
    choices = []
    for m in space.sample(max(cfg.samples, 50), cfg.seed + 101):
        lm = m.level(n)
        key = (lm.temporal_order, lm.temporal_tile_sizes, lm.spatial_tile_sizes)
        if key not in seen:
            seen.add(key)
            choices.append(key)
    return choices


def _decoupled(space: MapSpace, cfg: SearchConfig, evaluator) -> _Best:
    """Fix the off-chip level by minimizing backing-store traffic, then search
    the on-chip levels under that pin."""
    n = space.arch.n_levels
    dims = space.problem.dim_names
    scored = sorted(
        (
            (_offchip_traffic(space, order, tt), (order, tt, st))
            for order, tt, st in _top_level_choices(space, cfg)
        ),
        key=lambda item: (item[0], item[1]),
    )
    best = _Best(cfg.metric)
    for _, (order, tt, st) in scored[:3]:  # keep a little slack for infeasible pins
        pin = LevelConstraint(
            allowed_orders=(order,),
            fixed_temporal=tuple(zip(dims, tt)),
            fixed_spatial=tuple(zip(dims, st)),
        )
        pinned = replace(
            space.constraints,
            levels=tuple(
                [(i, lc) for i, lc in space.constraints.levels if i != n] + [(n, pin)]
            ),
        )
        sub = MapSpace(space.problem, space.arch, pinned)
        try:
            inner = sub.sample(cfg.samples, cfg.seed + 7)
        except EmptyMapSpace:
            continue
        sub_best = _reduce_stream(inner, evaluator, cfg.metric, cfg.workers)
        best.merge(sub_best)
        if best.mapping is not None:
            break
    return best


# ---------------------------------------------------------------------------
# Hill climbing
# ---------------------------------------------------------------------------

def _neighbors(space: MapSpace, m: Mapping):
    """Single-factor moves: nudge one tile size one divisor step, or swap two
    adjacent temporal-order entries at one level."""
    p, a = space.problem, space.arch
    dims = m.dims
    sizes = p.dim_sizes
    n = m.n_levels
    for pos, lm in enumerate(m.levels):
        order = lm.temporal_order
        for j in range(len(order) - 1):
            swapped = list(order)
            swapped[j], swapped[j + 1] = swapped[j + 1], swapped[j]
            yield Mapping(
                dims,
                m.levels[:pos]
                + (replace(lm, temporal_order=tuple(swapped)),)
                + m.levels[pos + 1 :],
            )
        index = lm.target_cluster
        incoming = sizes if index == n else dict(zip(dims, m.level(index + 1).spatial_tile_sizes))
        for k, d in enumerate(dims):
            tt, st = lm.temporal_tile_sizes[k], lm.spatial_tile_sizes[k]
            tt_opts = [v for v in divisors(incoming[d]) if v != tt]
            st_opts = [v for v in divisors(tt) if v != st]
            for new_tt in tt_opts:
                if new_tt % st == 0:
                    tts = list(lm.temporal_tile_sizes)
                    tts[k] = new_tt
                    sts = list(lm.spatial_tile_sizes)
                    if index == 1:
                        sts[k] = new_tt
                    yield Mapping(
                        dims,
                        m.levels[:pos]
                        + (
                            replace(
                                lm,
                                temporal_tile_sizes=tuple(tts),
                                spatial_tile_sizes=tuple(sts),
                            ),
                        )
                        + m.levels[pos + 1 :],
                    )
            if index > 1:
                for new_st in st_opts:
                    sts = list(lm.spatial_tile_sizes)
                    sts[k] = new_st
                    yield Mapping(
                        dims,
                        m.levels[:pos]
                        + (replace(lm, spatial_tile_sizes=tuple(sts)),)
                        + m.levels[pos + 1 :],
                    )


def climb_from(
    space: MapSpace, start: Mapping, cfg: SearchConfig, evaluator=None
) -> tuple[Mapping, CostReport, int]:
    """Hill-climb refinement from a given mapping; returns (mapping, report, evals)."""
    from spatialdse.mapping import check_legality

    if evaluator is None:
        evaluator = Evaluator(space.problem, space.arch)
    current, current_report = start, evaluator(start)
    evals = 1
    for _ in range(200):
        step = _Best(cfg.metric)
        for cand in _neighbors(space, current):
            if check_legality(cand, space.problem, space.arch):
                continue
            if not space._element_ok(cand):
                continue
            step.offer(cand, evaluator(cand))
        evals += step.count
        if step.key is None or step.key >= (
            metric_value(current_report, cfg.metric),
            current.sort_key(),
        ):
            break
        current, current_report = step.mapping, step.report
    return current, current_report, evals


def _hillclimb(space: MapSpace, cfg: SearchConfig, evaluator) -> _Best:
    best = _Best(cfg.metric)
    for r in range(cfg.restarts):
        start = space.sample(1, cfg.seed + 7919 * r)[0]
        mapping, report, evals = climb_from(space, start, cfg, evaluator)
        best.offer(mapping, report)
        best.count += evals - 1
    return best


# ---------------------------------------------------------------------------
# Pareto front
# ---------------------------------------------------------------------------

def pareto(evaluations: list[tuple[Mapping, CostReport]]) -> list[tuple[Mapping, CostReport]]:
    """Non-dominated (energy, latency) points, sorted by energy then latency."""
    points = sorted(
        evaluations,
        key=lambda mr: (mr[1].energy, mr[1].latency_cycles, mr[0].sort_key()),
    )
    front: list[tuple[Mapping, CostReport]] = []
    best_latency = math.inf
    for m, r in points:
        if r.latency_cycles < best_latency:
            front.append((m, r))
            best_latency = r.latency_cycles
    return front
