"""Problem abstraction: footprints, relevant dimensions, MAC counts, file IO."""

from __future__ import annotations

import itertools
import random

import pytest

from spatialdse.problem import (
    DataSpace,
    Dimension,
    OperationTag,
    ProblemInstance,
    Projection,
    Role,
    SubscriptExpr,
    Term,
    footprint,
    parse_problem,
    print_problem,
    relevant_dimensions,
    total_macs,
)
from spatialdse.workloads import dnn_layer_problem, tc_problem

from conftest import conv_problem, gemm_problem


def window_oracle(subscript: SubscriptExpr, tile: dict[str, int]) -> int:
    """Count distinct subscript values by enumerating the tile."""
    dims = subscript.dims()
    values = set()
    for combo in itertools.product(*[range(tile[d]) for d in dims]):
        values.add(sum(t.coeff * v for t, v in zip(subscript.terms, combo)))
    return len(values)


def test_compound_footprint_unit_stride():
    # xx = x + r with tx=4, tr=3 spans (4-1) + (3-1) + 1 = 6
    sub = SubscriptExpr((Term(1, "x"), Term(1, "r")))
    assert sub.extent({"x": 4, "r": 3}) == 6
    assert window_oracle(sub, {"x": 4, "r": 3}) == 6


def test_gemm_operand_footprint_ignores_irrelevant_dim():
    p = gemm_problem(8, 8, 8)
    a = p.data_space("A")
    assert p.footprint(a, {"m": 8, "n": 4, "k": 2}) == 16


def test_strided_window_footprint_matches_enumeration():
    # 2*x + s with tx=3, ts=3: {2x+s} = 0..6, 7 distinct values
    sub = SubscriptExpr((Term(2, "x"), Term(1, "s")))
    assert window_oracle(sub, {"x": 3, "s": 3}) == 7
    assert sub.extent({"x": 3, "s": 3}) == 7


def test_full_extent_footprint_equals_tensor_volume():
    p = conv_problem(n=2, k=2, c=3, x=5, y=5, r=2, s=2)
    sizes = p.dim_sizes
    for ds in p.data_spaces:
        vol = 1
        for sub in ds.projection.subscripts:
            vol *= window_oracle(sub, sizes)
        assert p.footprint(ds, sizes) == vol


def test_footprint_monotone_in_every_extent():
    rng = random.Random(7)
    p = conv_problem(n=2, k=4, c=4, x=6, y=6, r=3, s=3, stride=1)
    sizes = p.dim_sizes
    for _ in range(200):
        tile = {d: rng.randint(1, s) for d, s in sizes.items()}
        d = rng.choice(list(sizes))
        if tile[d] == sizes[d]:
            continue
        grown = dict(tile)
        grown[d] += 1
        for ds in p.data_spaces:
            assert p.footprint(ds, grown) >= p.footprint(ds, tile)


def test_relevant_dimensions():
    p = gemm_problem()
    assert relevant_dimensions(p.data_space("C")) == {"m", "n"}
    conv = conv_problem()
    assert relevant_dimensions(conv.data_space("F")) == {"k", "c", "r", "s"}
    tc = tc_problem("ccsd-t4", 2)
    assert relevant_dimensions(tc.data_space("A")) == {"d", "f", "g", "b"}


def test_total_macs():
    assert total_macs(gemm_problem(32, 32, 32)) == 32768
    assert total_macs(dnn_layer_problem("resnet50-1")) == 32 * 64 * 64 * 56 * 56
    assert total_macs(dnn_layer_problem("resnet50-1")) == 411_041_792
    assert total_macs(tc_problem("ccsd-t4", 16)) == 16**7


def test_footprint_rejects_out_of_range_extent():
    p = gemm_problem(4, 4, 4)
    with pytest.raises(ValueError):
        p.footprint("A", {"m": 5, "n": 1, "k": 1})
    with pytest.raises(ValueError):
        p.footprint("A", {"m": 0, "n": 1, "k": 1})
    with pytest.raises(ValueError):
        p.footprint("A", {"m": 1, "n": 1})


def test_invariants_rejected():
    d = (Dimension("m", 2),)
    out = DataSpace("C", Role.READ_WRITE, Projection((SubscriptExpr((Term(1, "m"),)),)))
    inp = DataSpace("A", Role.READ_ONLY, Projection((SubscriptExpr((Term(1, "m"),)),)))
    with pytest.raises(ValueError):
        ProblemInstance(d, (inp,), OperationTag.GENERIC)  # no output
    with pytest.raises(ValueError):
        ProblemInstance(d, (out, inp), OperationTag.GENERIC, word_bits=7)
    with pytest.raises(ValueError):
        ProblemInstance((Dimension("m", 2), Dimension("m", 3)), (out, inp), OperationTag.GENERIC)
    with pytest.raises(ValueError):
        Dimension("m", 0)


def test_problem_file_round_trip():
    for p in (gemm_problem(8, 4, 2), conv_problem(stride=2), tc_problem("ccsd7", 4)):
        assert parse_problem(print_problem(p)) == p
