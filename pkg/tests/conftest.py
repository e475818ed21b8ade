"""Shared builders for tiny architectures, problems, and mappings."""

from __future__ import annotations

import random

import pytest

from spatialdse.arch import Architecture, Axis, ClusterLevel
from spatialdse.frontend import lower_to_problem
from spatialdse.mapping import LevelMapping, Mapping, check_legality
from spatialdse.nestir import parse_loop_nest
from spatialdse.problem import ProblemInstance
from spatialdse.workloads import conv2d_nest, gemm_nest, tc_nest


def level(
    name: str,
    memory_words: int = 1 << 30,
    fanout: int = 1,
    axis: Axis = Axis.NONE,
    virtual: bool = False,
    compute: bool = False,
    bw: float = 1e9,
    energy: float = 1.0,
) -> ClusterLevel:
    return ClusterLevel(
        name=name,
        memory_words=0 if virtual else memory_words,
        fill_bandwidth_wpc=bw,
        sub_cluster_count=fanout,
        axis=axis if fanout > 1 else Axis.NONE,
        virtual=virtual,
        has_compute=compute,
        energy_per_word=energy,
    )


def arch_2level(pes: int = 1, l1_words: int = 4096) -> Architecture:
    return Architecture(
        (
            level("DRAM", fanout=pes, axis=Axis.X, energy=200.0),
            level("L1", memory_words=l1_words, compute=True),
        )
    )


def arch_3level(rows: int = 4, l1_words: int = 512, l2_words: int = 4096) -> Architecture:
    return Architecture(
        (
            level("DRAM", energy=200.0),
            level("L2", memory_words=l2_words, fanout=rows, axis=Axis.Y, energy=6.0),
            level("L1", memory_words=l1_words, compute=True),
        )
    )


def arch_4level(rows: int = 2, cols: int = 2, l1_words: int = 512, l2_words: int = 4096) -> Architecture:
    """DRAM -> L2 (rows) -> virtual (cols) -> L1, one virtual level."""
    return Architecture(
        (
            level("DRAM", energy=200.0),
            level("L2", memory_words=l2_words, fanout=rows, axis=Axis.Y, energy=6.0),
            level("V1", fanout=cols, axis=Axis.X, virtual=True),
            level("L1", memory_words=l1_words, compute=True),
        )
    )


def mk_mapping(dims: tuple[str, ...], *levels_spec) -> Mapping:
    """levels_spec: (order, tt, st) per level, outermost first."""
    n = len(levels_spec)
    return Mapping(
        dims,
        tuple(
            LevelMapping(n - pos, tuple(order), tuple(tt), tuple(st))
            for pos, (order, tt, st) in enumerate(levels_spec)
        ),
    )


def gemm_problem(m: int = 4, n: int = 4, k: int = 4) -> ProblemInstance:
    return lower_to_problem(parse_loop_nest(gemm_nest(m, n, k)))


def conv_problem(**kw) -> ProblemInstance:
    args = dict(n=1, k=2, c=2, x=4, y=4, r=2, s=2, stride=1)
    args.update(kw)
    return lower_to_problem(parse_loop_nest(conv2d_nest(**args)))


def tc_problem_small(tds: int = 2) -> ProblemInstance:
    return lower_to_problem(parse_loop_nest(tc_nest("intensli2", tds)))


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def random_legal_mapping(
    rng: random.Random, p: ProblemInstance, a: Architecture, attempts: int = 4000
) -> Mapping:
    """Rejection-sample a legal mapping; independent of the map-space module."""
    dims = p.dim_names
    sizes = p.dim_sizes
    n = a.n_levels
    for _ in range(attempts):
        incoming = dict(sizes)
        spec = []
        for i in range(n, 0, -1):
            tt = {d: rng.choice(divisors(incoming[d])) for d in dims}
            st = {}
            budget = a.level(i).sub_cluster_count
            for d in dims:
                choices = [f for f in divisors(tt[d]) if f <= budget]
                f = rng.choice(choices)
                budget //= f
                st[d] = tt[d] // f
            if i == 1:
                st = dict(tt)
            order = list(dims)
            rng.shuffle(order)
            spec.append((tuple(order), tuple(tt[d] for d in dims), tuple(st[d] for d in dims)))
            incoming = st
        m = mk_mapping(dims, *spec)
        if not check_legality(m, p, a):
            return m
    raise AssertionError("could not sample a legal mapping")
