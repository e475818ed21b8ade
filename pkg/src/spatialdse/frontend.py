"""Frontend passes: conformability checks, operation classification, lowering.

Two cost-model targets are recognized:

* ``loop-level`` evaluates any reduction-safe perfect affine nest.
* ``operation-level`` additionally restricts the operation to CONV2D/GEMM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from spatialdse.nestir import ArrayRef, LoopNestIR
from spatialdse.problem import (
    DataSpace,
    Dimension,
    OperationTag,
    ProblemInstance,
    Projection,
    Role,
    SubscriptExpr,
    Term,
)

COST_MODEL_TARGETS = ("loop-level", "operation-level")


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    location: str = ""


@dataclass(frozen=True)
class ConformabilityReport:
    violations: tuple[Violation, ...] = ()

    @property
    def conformable(self) -> bool:
        return not self.violations


def check_conformability(ir: LoopNestIR, target: str = "loop-level") -> ConformabilityReport:
    """Decide whether the nest can be evaluated by the given cost-model target.

    Checks, in order: perfect nesting and affine subscripts (guaranteed by the
    parser, re-validated structurally), reorderability (the statement must be
    a pure reduction: the target array is only accumulated into, operands are
    read-only), the two-operand multiply-accumulate unit operation, and for
    ``operation-level`` targets a CONV2D/GEMM operation tag.
    """
    if target not in COST_MODEL_TARGETS:
        raise ValueError(f"unknown cost model target {target!r}")
    violations: list[Violation] = []
    stmt = ir.statement

    # Reorderability: a '+=' of a product of two other arrays commutes across
    # any loop permutation; a target that is also read as an operand does not.
    for operand in (stmt.operand_a, stmt.operand_b):
        if operand.name == stmt.target.name:
            violations.append(
                Violation(
                    "reorderability",
                    f"array {stmt.target.name} is both accumulation target and operand",
                    f"stmt operand {operand.name}",
                )
            )
    if stmt.operand_a.name == stmt.operand_b.name and stmt.operand_a != stmt.operand_b:
        violations.append(
            Violation(
                "reorderability",
                f"operand array {stmt.operand_a.name} read with two different projections",
                "stmt",
            )
        )

    # Perfect nesting, affine subscripts, and the two-operand MAC unit
    # operation are structural invariants of LoopNestIR itself; nothing to
    # re-check here.

    if target == "operation-level":
        tag = classify_operation(ir)
        if tag not in (OperationTag.CONV2D, OperationTag.GEMM):
            violations.append(
                Violation(
                    "operation-support",
                    f"operation {tag.value} unsupported by operation-level cost models",
                    "stmt",
                )
            )
    return ConformabilityReport(tuple(violations))


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def _all_direct(ir: LoopNestIR) -> bool:
    return all(
        len(idx.terms) == 1 and idx.terms[0][0] == 1
        for ref in ir.statement.refs
        for idx in ref.indices
    )


def _index_sets(ir: LoopNestIR) -> tuple[frozenset[str], frozenset[str], frozenset[str]]:
    s = ir.statement
    return s.target.iterators(), s.operand_a.iterators(), s.operand_b.iterators()


def _is_gemm(ir: LoopNestIR) -> bool:
    if len(ir.loops) != 3 or not _all_direct(ir):
        return False
    out, a, b = _index_sets(ir)
    shared = a & b
    return (
        len(out) == 2
        and len(shared) == 1
        and out == (a | b) - shared
        and len(a) == 2
        and len(b) == 2
    )


def _is_tc(ir: LoopNestIR) -> bool:
    if not _all_direct(ir):
        return False
    out, a, b = _index_sets(ir)
    contracted = a & b
    if not contracted or contracted & out:
        return False
    # Every output dimension comes from exactly one input, and together the
    # inputs account for every iterator.
    return out == (a | b) - contracted and (a | b) == frozenset(ir.iterators)


def _is_conv2d(ir: LoopNestIR) -> bool:
    if len(ir.loops) != 7:
        return False
    s = ir.statement
    out, inp, flt = s.target, s.operand_a, s.operand_b
    # Input activation carries the two sliding-window subscripts; allow the
    # operands in either position.
    def compound_count(ref: ArrayRef) -> int:
        return sum(1 for idx in ref.indices if len(idx.terms) == 2)

    if compound_count(inp) != 2:
        inp, flt = flt, inp
    if compound_count(inp) != 2 or compound_count(flt) != 0 or compound_count(out) != 0:
        return False
    if len(out.indices) != 4 or len(inp.indices) != 4 or len(flt.indices) != 4:
        return False
    out_set, inp_set, flt_set = (r.iterators() for r in (out, inp, flt))
    # Each sliding-window subscript pairs an output spatial iterator (stride
    # coefficient >= 1) with a coefficient-1 filter iterator.
    spatial, filt = set(), set()
    for idx in inp.indices:
        if len(idx.terms) != 2:
            continue
        by_role = {}
        for coeff, name in idx.terms:
            if name in out_set and name not in flt_set:
                by_role["spatial"] = (coeff, name)
            elif name in flt_set and name not in out_set:
                by_role["filter"] = (coeff, name)
        if set(by_role) != {"spatial", "filter"} or by_role["filter"][0] != 1:
            return False
        spatial.add(by_role["spatial"][1])
        filt.add(by_role["filter"][1])
    if len(spatial) != 2 or len(filt) != 2:
        return False
    # Remaining roles: n (output+input only), k (output+filter), c (input+filter).
    n_set = (out_set & inp_set) - flt_set - spatial
    k_set = (out_set & flt_set) - inp_set
    c_set = (inp_set & flt_set) - out_set - filt
    return len(n_set) == 1 and len(k_set) == 1 and len(c_set) == 1


def classify_operation(ir: LoopNestIR) -> OperationTag:
    """Deterministically tag the nest as CONV2D, GEMM, TC, or GENERIC."""
    if _is_conv2d(ir):
        return OperationTag.CONV2D
    if _is_gemm(ir):
        return OperationTag.GEMM
    if _is_tc(ir):
        return OperationTag.TC
    return OperationTag.GENERIC


# ---------------------------------------------------------------------------
# Lowering
# ---------------------------------------------------------------------------

def _lower_ref(ref: ArrayRef, role: Role) -> DataSpace:
    subs = tuple(
        SubscriptExpr(tuple(Term(c, n) for c, n in idx.terms)) for idx in ref.indices
    )
    return DataSpace(ref.name, role, Projection(subs))


def lower_to_problem(ir: LoopNestIR, target: str = "loop-level") -> ProblemInstance:
    """Lower a conformable nest: iterators become dimensions sized by their
    trip counts, array refs become data spaces with projections."""
    report = check_conformability(ir, target)
    if not report.conformable:
        raise ValueError(
            "non-conformable nest: " + "; ".join(v.message for v in report.violations)
        )
    dims = tuple(Dimension(l.iterator, l.trip_count) for l in ir.loops)
    s = ir.statement
    spaces = (
        _lower_ref(s.target, Role.READ_WRITE),
        _lower_ref(s.operand_a, Role.READ_ONLY),
        _lower_ref(s.operand_b, Role.READ_ONLY),
    )
    return ProblemInstance(dims, spaces, classify_operation(ir))


# ---------------------------------------------------------------------------
# TTGT reformulation
# ---------------------------------------------------------------------------

def reformulate_ttgt(p: ProblemInstance) -> ProblemInstance:
    """Rewrite a tensor contraction as the equivalent flattened GEMM.

    Output dimensions indexed by the first input collapse into M, output
    dimensions indexed by the second input collapse into N, and contracted
    dimensions collapse into K.  The bracketing transposes move data only,
    so they are not represented (and not costed).
    """
    if p.operation is not OperationTag.TC:
        raise ValueError(f"TTGT reformulation requires a TC problem, got {p.operation.value}")
    out = p.output
    a, b = p.inputs
    out_dims = out.projection.dims()
    a_dims, b_dims = a.projection.dims(), b.projection.dims()
    contracted = a_dims & b_dims
    sizes = p.dim_sizes
    m = math.prod(sizes[d] for d in out_dims & a_dims)
    n = math.prod(sizes[d] for d in out_dims & b_dims)
    k = math.prod(sizes[d] for d in contracted)

    def direct(*names: str) -> Projection:
        return Projection(tuple(SubscriptExpr((Term(1, nm),)) for nm in names))

    return ProblemInstance(
        dimensions=(Dimension("M", m), Dimension("N", n), Dimension("K", k)),
        data_spaces=(
            DataSpace(out.name, Role.READ_WRITE, direct("M", "N")),
            DataSpace(a.name, Role.READ_ONLY, direct("M", "K")),
            DataSpace(b.name, Role.READ_ONLY, direct("K", "N")),
        ),
        operation=OperationTag.GEMM,
        word_bits=p.word_bits,
    )
