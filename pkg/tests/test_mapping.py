"""Mapping legality rules, parallelism, rendering, file round-trip."""

from __future__ import annotations

import random

import pytest

from spatialdse.mapping import (
    check_legality,
    full_mapping_for,
    is_legal,
    parallelism,
    parse_mapping,
    print_mapping,
    render_loop_nest,
    utilized_pes,
)
from spatialdse.arch import Architecture, Axis

from conftest import (
    arch_2level,
    arch_3level,
    arch_4level,
    conv_problem,
    gemm_problem,
    level,
    mk_mapping,
    random_legal_mapping,
)


def rules(violations):
    return {v.rule for v in violations}


def test_full_mapping_is_legal_on_roomy_arch():
    p = gemm_problem(4, 4, 4)
    a = arch_2level(pes=1)
    assert check_legality(full_mapping_for(p, a), p, a) == []


def test_two_level_tiled_gemm_legal():
    p = gemm_problem(8, 8, 8)
    a = arch_2level(pes=4, l1_words=4096)
    m = mk_mapping(
        ("m", "n", "k"),
        (("m", "n", "k"), (8, 8, 8), (4, 8, 8)),  # parallelism 2 on m
        (("k", "m", "n"), (4, 8, 8), (4, 8, 8)),
    )
    assert check_legality(m, p, a) == []
    per_dim, total = parallelism(m, 2)
    assert per_dim["m"] == 2 and total == 2
    assert utilized_pes(m) == 2


def test_r1_fires_when_spatial_tile_smaller_than_inner_temporal():
    p = gemm_problem(8, 8, 8)
    a = arch_2level(pes=4, l1_words=4096)
    m = mk_mapping(
        ("m", "n", "k"),
        (("m", "n", "k"), (8, 8, 8), (2, 8, 8)),
        (("k", "m", "n"), (4, 8, 8), (4, 8, 8)),  # TT m=4 > ST m=2 above
    )
    assert rules(check_legality(m, p, a)) == {"R1"}


def test_r2_fires_on_excess_parallelism():
    p = gemm_problem(32, 4, 4)
    a = arch_2level(pes=16, l1_words=4096)
    m = mk_mapping(
        ("m", "n", "k"),
        (("m", "n", "k"), (32, 4, 4), (1, 4, 4)),  # parallelism 32 > 16
        (("m", "n", "k"), (1, 4, 4), (1, 4, 4)),
    )
    assert rules(check_legality(m, p, a)) == {"R2"}


def test_r3_fires_when_tile_exceeds_memory():
    p = gemm_problem(4, 4, 4)
    a = arch_2level(pes=1, l1_words=32)
    m = full_mapping_for(p, a)  # 48 words of tiles at L1 > 32
    assert rules(check_legality(m, p, a)) == {"R3"}


def test_r4_fires_on_non_divisor_tile():
    p = gemm_problem(8, 8, 8)
    a = arch_2level(pes=1, l1_words=4096)
    m = mk_mapping(
        ("m", "n", "k"),
        (("m", "n", "k"), (8, 8, 8), (8, 8, 8)),
        (("m", "n", "k"), (3, 8, 8), (3, 8, 8)),  # 3 does not divide 8
    )
    assert rules(check_legality(m, p, a)) == {"R4"}


def test_leaf_parallelism_is_rejected_via_r2():
    p = gemm_problem(4, 4, 4)
    a = arch_2level(pes=4, l1_words=4096)
    m = mk_mapping(
        ("m", "n", "k"),
        (("m", "n", "k"), (4, 4, 4), (4, 4, 4)),
        (("m", "n", "k"), (4, 4, 4), (2, 4, 4)),  # ST != TT at C_1
    )
    assert "R2" in rules(check_legality(m, p, a))


def test_virtual_level_skips_capacity_check():
    p = gemm_problem(8, 8, 8)
    a = arch_4level(rows=2, cols=2, l1_words=4096, l2_words=4096)
    m = mk_mapping(
        ("m", "n", "k"),
        (("m", "n", "k"), (8, 8, 8), (8, 8, 8)),
        (("m", "n", "k"), (8, 8, 8), (4, 8, 8)),
        (("m", "n", "k"), (4, 8, 8), (4, 4, 8)),  # virtual: any footprint fine
        (("m", "n", "k"), (4, 4, 8), (4, 4, 8)),
    )
    assert check_legality(m, p, a) == []
    assert utilized_pes(m) == 4


def test_legality_invariant_under_dimension_renaming():
    rng = random.Random(3)
    p = gemm_problem(8, 4, 8)
    a = arch_3level(rows=4)
    for _ in range(10):
        m = random_legal_mapping(rng, p, a)
        renamed = mk_mapping(
            tuple(f"d{i}" for i in range(3)),
            *[
                (
                    tuple(f"d{m.dims.index(d)}" for d in lm.temporal_order),
                    lm.temporal_tile_sizes,
                    lm.spatial_tile_sizes,
                )
                for lm in m.levels
            ],
        )
        p2 = gemm_problem(8, 4, 8)
        from spatialdse.problem import (
            DataSpace,
            Dimension,
            ProblemInstance,
            Projection,
            SubscriptExpr,
            Term,
        )

        mapping_names = dict(zip(p.dim_names, renamed.dims))
        dims2 = tuple(Dimension(mapping_names[d.name], d.size) for d in p.dimensions)
        spaces2 = tuple(
            DataSpace(
                ds.name,
                ds.role,
                Projection(
                    tuple(
                        SubscriptExpr(
                            tuple(Term(t.coeff, mapping_names[t.dim]) for t in s.terms)
                        )
                        for s in ds.projection.subscripts
                    )
                ),
            )
            for ds in p.data_spaces
        )
        p2 = ProblemInstance(dims2, spaces2, p.operation)
        assert is_legal(renamed, p2, a) == is_legal(m, p, a)


def test_shape_mismatch_raises():
    p = gemm_problem(4, 4, 4)
    a = arch_2level()
    m = mk_mapping(("m", "n", "k"), (("m", "n", "k"), (4, 4, 4), (4, 4, 4)))
    with pytest.raises(ValueError):
        check_legality(m, p, a)


def test_render_full_mapping_is_flat():
    p = gemm_problem(2, 2, 2)
    a = arch_2level(pes=1)
    text = render_loop_nest(full_mapping_for(p, a), p)
    # everything resident: only the per-PE serial loops appear
    assert "spatial_for" not in text
    assert text.count("for") == 3
    assert "mac: C += A * B" in text


def test_render_concurrent_spatial_fors():
    p = conv_problem(n=1, k=2, c=1, x=5, y=5, r=2, s=2)
    # dims: n,k,x,y,c,r,s sizes 1,2,4,4,1,2,2
    a = arch_4level(rows=4, cols=4, l1_words=4096, l2_words=1 << 20)
    dims = ("n", "k", "x", "y", "c", "r", "s")
    m = mk_mapping(
        dims,
        (dims, (1, 2, 4, 4, 1, 2, 2), (1, 2, 4, 4, 1, 2, 2)),
        (dims, (1, 2, 4, 4, 1, 2, 2), (1, 2, 4, 2, 1, 1, 2)),  # y,r parallel
        (dims, (1, 2, 4, 2, 1, 1, 2), (1, 2, 2, 2, 1, 1, 1)),  # x,s parallel
        (dims, (1, 2, 2, 2, 1, 1, 1), (1, 2, 2, 2, 1, 1, 1)),
    )
    assert check_legality(m, p, a) == []
    text = render_loop_nest(m, p)
    lines = text.splitlines()
    c3 = [l for l in lines if "concurrent at C_3" in l]
    c2 = [l for l in lines if "concurrent at C_2" in l]
    assert {l.strip().split()[1] for l in c3} == {"y", "r"}
    assert {l.strip().split()[1] for l in c2} == {"x", "s"}


def test_render_enumerates_full_iteration_space():
    rng = random.Random(11)
    p = gemm_problem(4, 4, 2)
    a = arch_3level(rows=4)
    for _ in range(5):
        m = random_legal_mapping(rng, p, a)
        text = render_loop_nest(m, p)
        total = 1
        for line in text.splitlines():
            tokens = line.strip().split()
            if tokens and tokens[0] in ("for", "spatial_for"):
                upper = int(tokens[3].split("..")[1].rstrip(":"))
                total *= upper + 1
        assert total == 32


def test_mapping_file_round_trip():
    dims = ("n", "k", "c", "y", "x", "r", "s")
    m = mk_mapping(
        dims,
        (("n", "k", "c", "y", "x", "r", "s"), (1, 2, 4, 4, 4, 2, 2), (1, 2, 4, 4, 4, 2, 2)),
        (("k", "n", "c", "y", "x", "r", "s"), (1, 2, 2, 4, 4, 2, 2), (1, 2, 2, 4, 4, 2, 2)),
    )
    assert parse_mapping(print_mapping(m)) == m


def test_mapping_file_missing_level_errors():
    text = "mapping\n  dims m n k\n\nlevel 2\n  temporal_order m n k\n"
    with pytest.raises(ValueError, match="missing"):
        parse_mapping(text)


def test_mapping_file_unknown_dimension_errors():
    text = (
        "mapping\n  dims m n k\n\nlevel 1\n  temporal_order m n q\n"
        "  temporal_tile_sizes 1 1 1\n  spatial_tile_sizes 1 1 1\n"
    )
    with pytest.raises(ValueError):
        parse_mapping(text)


def test_nkcyxrs_order_accepted():
    dims = ("n", "k", "c", "y", "x", "r", "s")
    text = print_mapping(
        mk_mapping(dims, (dims, (1,) * 7, (1,) * 7))
    )
    m = parse_mapping(text)
    assert m.level(1).temporal_order == dims
