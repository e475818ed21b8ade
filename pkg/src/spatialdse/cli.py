"""Command-line interface.

Exit codes: 0 success, 1 not-conformable / empty map space / model-oracle
mismatch, 2 usage error (argparse), 3 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from spatialdse import arch as arch_mod
from spatialdse import mapping as mapping_mod
from spatialdse import problem as problem_mod
from spatialdse.casestudies import CaseStudySpec, run_case_study
from spatialdse.costmodel import evaluate
from spatialdse.frontend import (
    COST_MODEL_TARGETS,
    check_conformability,
    classify_operation,
    lower_to_problem,
    reformulate_ttgt,
)
from spatialdse.mappers import Metric, SearchConfig, Strategy, search
from spatialdse.mapspace import ConstraintSet, EmptyMapSpace, MapSpace, parse_constraints
from spatialdse.nestir import ParseError, parse_loop_nest
from spatialdse.oracle import SimulationCapError, diff, simulate
from spatialdse.report import fmt, write_csv

REPORT_COLUMNS = [
    "latency_cycles", "latency_seconds", "energy", "edp", "utilization",
    "utilized_pes", "bound", "compute_cycles", "total_macs",
]


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        raise SystemExit(3)


def _workers(args) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get("UNION_DSE_WORKERS")
    return int(env) if env else 1


def cmd_check(args) -> int:
    text = _read(args.nest)
    try:
        ir = parse_loop_nest(text)
    except ParseError as e:
        print(f"parse error: {e}")
        return 1
    report = check_conformability(ir, args.target)
    tag = classify_operation(ir)
    if report.conformable:
        print(f"conformable: {tag.value} operation, target {args.target}")
        return 0
    for v in report.violations:
        print(f"violation [{v.rule}] {v.message} ({v.location})")
    return 1


def cmd_lower(args) -> int:
    text = _read(args.nest)
    try:
        ir = parse_loop_nest(text)
        p = lower_to_problem(ir)
        if args.ttgt:
            p = reformulate_ttgt(p)
    except (ParseError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else Path(args.nest).with_suffix(".prob")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(problem_mod.print_problem(p))
    print(f"wrote {out}")
    return 0


def _load_inputs(args):
    p = problem_mod.parse_problem(_read(args.prob))
    a = arch_mod.parse_arch(_read(args.arch))
    c = parse_constraints(_read(args.cons)) if args.cons else ConstraintSet()
    return p, a, c


def cmd_search(args) -> int:
    try:
        p, a, c = _load_inputs(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    space = MapSpace(p, a, c)
    cfg = SearchConfig(
        strategy=Strategy(args.strategy),
        metric=Metric(args.metric),
        samples=args.samples,
        seed=args.seed,
        workers=_workers(args),
    )
    try:
        result = search(space, cfg)
    except EmptyMapSpace as e:
        print(f"empty map space: {e}", file=sys.stderr)
        return 1
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "best.map").write_text(mapping_mod.print_mapping(result.best_mapping))
    row = result.best_report.csv_row()
    row["evaluated"] = result.evaluated
    write_csv(out_dir / "search.csv", [row], REPORT_COLUMNS + ["evaluated"])
    print(
        f"best {cfg.metric.value} = {fmt(result.best_value)} "
        f"({result.evaluated} mappings evaluated); wrote {out_dir}/best.map"
    )
    return 0


def cmd_eval(args) -> int:
    try:
        p, a, _ = _load_inputs(args)
        m = mapping_mod.parse_mapping(_read(args.map))
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    violations = mapping_mod.check_legality(m, p, a)
    if violations:
        for v in violations:
            print(f"illegal [{v.rule}] {v.message}")
        return 1
    report = evaluate(m, p, a)
    for col in REPORT_COLUMNS:
        print(f"{col},{fmt(report.csv_row()[col])}")
    return 0


def cmd_oracle_diff(args) -> int:
    try:
        p, a, _ = _load_inputs(args)
        m = mapping_mod.parse_mapping(_read(args.map))
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    try:
        trace = simulate(m, p, a, cap=args.cap)
    except SimulationCapError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    mismatches = diff(trace, evaluate(m, p, a))
    if not mismatches:
        print("model matches oracle on every counter")
        return 0
    for line in mismatches:
        print(f"mismatch: {line}")
    return 1


def cmd_casestudy(args) -> int:
    spec = CaseStudySpec(
        id=args.id,
        out_dir=args.out_dir,
        scale=args.scale,
        seed=args.seed,
        samples=args.samples,
        workers=_workers(args),
    )
    rows = run_case_study(spec)
    print(f"case study {args.id}: {len(rows)} result rows in {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spatialdse",
        description="Design-space exploration for spatial tensor accelerators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="conformability-check a loop nest")
    p_check.add_argument("nest")
    p_check.add_argument("--target", choices=COST_MODEL_TARGETS, default="loop-level")
    p_check.set_defaults(func=cmd_check)

    p_lower = sub.add_parser("lower", help="lower a loop nest to a problem file")
    p_lower.add_argument("nest")
    p_lower.add_argument("-o", "--out")
    p_lower.add_argument("--ttgt", action="store_true", help="rewrite a contraction as GEMM")
    p_lower.set_defaults(func=cmd_lower)

    def io_args(sp, with_map=False):
        sp.add_argument("--prob", required=True)
        sp.add_argument("--arch", required=True)
        sp.add_argument("--cons")
        if with_map:
            sp.add_argument("--map", required=True)

    p_search = sub.add_parser("search", help="find the best mapping")
    io_args(p_search)
    p_search.add_argument("--strategy", choices=[s.value for s in Strategy], default="exhaustive")
    p_search.add_argument("--metric", choices=[m.value for m in Metric], default="edp")
    p_search.add_argument("--seed", type=int, default=0)
    p_search.add_argument("--samples", type=int, default=100)
    p_search.add_argument("--out-dir", default="results")
    p_search.add_argument("--workers", type=int)
    p_search.set_defaults(func=cmd_search)

    p_eval = sub.add_parser("eval", help="cost a mapping analytically")
    io_args(p_eval, with_map=True)
    p_eval.set_defaults(func=cmd_eval)

    p_diff = sub.add_parser("oracle-diff", help="compare the model against the simulator")
    io_args(p_diff, with_map=True)
    p_diff.add_argument("--cap", type=int, default=4096)
    p_diff.set_defaults(func=cmd_oracle_diff)

    p_cs = sub.add_parser("casestudy", help="run a bundled case study")
    p_cs.add_argument("id", type=int, choices=(1, 2, 3))
    p_cs.add_argument("--out-dir", default="results")
    p_cs.add_argument("--scale", type=int, default=4)
    p_cs.add_argument("--seed", type=int, default=0)
    p_cs.add_argument("--samples", type=int, default=400)
    p_cs.add_argument("--workers", type=int)
    p_cs.set_defaults(func=cmd_casestudy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
