"""Loop-nest IR parser and printer."""

from __future__ import annotations

import pytest

from spatialdse.nestir import ParseError, parse_loop_nest, print_loop_nest
from spatialdse.workloads import alg_tc_example, conv2d_nest, gemm_nest, tc_nest


def test_parse_conv2d_reference_nest():
    ir = parse_loop_nest(conv2d_nest(1, 2, 2, 6, 6, 3, 3, stride=2))
    assert len(ir.loops) == 7
    assert ir.iterators == ("n", "k", "x", "y", "c", "r", "s")
    assert len(ir.statement.refs) == 3
    inp = ir.statement.operand_a
    assert inp.name == "IA"
    compound = [idx for idx in inp.indices if len(idx.terms) == 2]
    assert len(compound) == 2
    assert {t for idx in compound for t in idx.terms} >= {(2, "x"), (1, "r")}


def test_parse_tc_reference_nest():
    ir = parse_loop_nest(alg_tc_example(16))
    assert len(ir.loops) == 7
    assert [l.trip_count for l in ir.loops] == [16] * 7
    s = ir.statement
    assert s.target.name == "C" and len(s.target.indices) == 6
    assert [i.terms[0][1] for i in s.operand_a.indices] == ["d", "f", "g", "b"]
    assert [i.terms[0][1] for i in s.operand_b.indices] == ["g", "e", "a", "c"]


def test_empty_input_is_parse_error():
    with pytest.raises(ParseError):
        parse_loop_nest("")


def test_duplicate_iterator_rejected():
    text = "for i = 0 to 3\nfor i = 0 to 3\n  stmt C[i] += A[i] * B[i]\n"
    with pytest.raises(ParseError, match="duplicate"):
        parse_loop_nest(text)


def test_non_integer_bound_rejected():
    with pytest.raises(ParseError):
        parse_loop_nest("for i = 0 to N\n  stmt C[i] += A[i] * B[i]\n")


def test_unreferenced_iterator_rejected():
    text = "for i = 0 to 3\nfor j = 0 to 3\n  stmt C[i] += A[i] * B[i]\n"
    with pytest.raises(ParseError, match="not referenced"):
        parse_loop_nest(text)


def test_statement_must_accumulate():
    with pytest.raises(ParseError, match="\\+="):
        parse_loop_nest("for i = 0 to 3\n  stmt C[i] = A[i] * B[i]\n")


def test_three_term_subscript_rejected():
    text = "for i = 0 to 3\nfor j = 0 to 3\nfor k = 0 to 3\n  stmt C[i+j+k] += A[i][j] * B[k]\n"
    with pytest.raises(ParseError):
        parse_loop_nest(text)


def test_parse_error_carries_location():
    err = None
    try:
        parse_loop_nest("for i = 0 to 3\nbogus line\n")
    except ParseError as e:
        err = e
    assert err is not None and err.line == 2


def test_step_and_constant_parsing():
    ir = parse_loop_nest("for i = 0 to 9 step 2\n  stmt C[i + 1] += A[i] * B[i]\n")
    assert ir.loops[0].step == 2
    assert ir.loops[0].trip_count == 5
    assert ir.statement.target.indices[0].constant == 1


@pytest.mark.parametrize(
    "text",
    [
        gemm_nest(4, 6, 8),
        conv2d_nest(1, 2, 3, 8, 8, 3, 3, stride=1),
        conv2d_nest(2, 2, 2, 9, 9, 3, 3, stride=2),
        tc_nest("intensli2", 4),
        tc_nest("ccsd7", 4),
        "for i = 0 to 9 step 2\n  stmt C[i + 2] += A[2*i] * B[i]\n",
    ],
)
def test_print_parse_identity(text):
    ir = parse_loop_nest(text)
    assert parse_loop_nest(print_loop_nest(ir)) == ir
