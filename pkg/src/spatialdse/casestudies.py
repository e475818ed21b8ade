"""Drivers for the three exploration case studies.

All three use the partitioned-mapping search preset (at most one parallel
dimension per cluster level, each dimension parallelized at most once), the
mapping style the swept accelerators are configured for.  Searches combine a
seeded random pool with a maximum-utilization seed and hill-climb refinement,
so every run is deterministic for a given seed and worker count.

1. Algorithm exploration: tensor contractions run natively vs through the
   flattened-GEMM rewrite on the cloud 32x64 accelerator.
2. Mapping exploration: EDP across PE-array aspect ratios for DNN layers on
   the edge and cloud accelerators.
3. Hardware exploration: EDP vs per-chiplet fill bandwidth on the 16-chiplet
   accelerator; one candidate pool per layer is re-costed at every bandwidth
   point, so each curve is monotone by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from spatialdse.arch import Architecture, chiplet_arch, cloud_arch, make_grid_arch
from spatialdse.costmodel import CostReport
from spatialdse.frontend import reformulate_ttgt
from spatialdse.mappers import Evaluator, Metric, SearchConfig, _reduce_stream, climb_from
from spatialdse.mapspace import (
    PARTITIONED_PRESET,
    MapSpace,
    max_utilization_pattern,
    top_utilization_patterns,
    utilization_seed,
)
from spatialdse.mapping import Mapping
from spatialdse.problem import ProblemInstance
from spatialdse.report import grouped_bar_chart, line_chart, write_csv
from spatialdse.workloads import DNN_LAYERS, dnn_layer_problem, tc_problem


@dataclass(frozen=True)
class CaseStudySpec:
    id: int
    out_dir: str | Path = "results"
    scale: int = 4
    seed: int = 0
    samples: int = 400
    workers: int = 1

    def __post_init__(self):
        if self.id not in (1, 2, 3):
            raise ValueError("case study id must be 1, 2 or 3")


def preset_search(
    p: ProblemInstance,
    a: Architecture,
    samples: int,
    seed: int,
    workers: int = 1,
    metric: Metric = Metric.EDP,
) -> tuple[Mapping, CostReport]:
    """Best mapping in the partitioned space: random pool + max-utilization
    seed, then hill-climb refinement of the winner."""
    space = MapSpace(p, a, PARTITIONED_PRESET)
    evaluator = Evaluator(p, a)
    pool = space.sample(samples, seed)
    pool.extend(_pattern_seeds(space))
    best = _reduce_stream(pool, evaluator, metric, workers)
    cfg = SearchConfig(metric=metric, seed=seed, workers=workers)
    mapping, report, _ = climb_from(space, best.mapping, cfg, evaluator)
    return mapping, report


def _pattern_seeds(space: MapSpace, k: int = 8) -> list[Mapping]:
    """Greedy mappings for the k highest-utilization spatial patterns."""
    from spatialdse.mapspace import EmptyMapSpace

    seeds = []
    for _, pattern in top_utilization_patterns(space, k=k):
        try:
            seeds.append(utilization_seed(space, pattern))
        except EmptyMapSpace:
            continue
    return seeds


# ---------------------------------------------------------------------------
# Case study 1: native tensor contraction vs flattened GEMM
# ---------------------------------------------------------------------------

CS1_KERNELS = (
    ("intensli2", (16, 64)),
    ("ccsd7", (16, 64)),
    ("ccsd-t4", (16, 32)),
)


def run_case_study_1(spec: CaseStudySpec) -> list[dict]:
    arch = cloud_arch(32, 64)
    rows: list[dict] = []
    for kernel, tds_values in CS1_KERNELS:
        for tds in tds_values:
            native = tc_problem(kernel, tds)
            gemm = reformulate_ttgt(native)
            for algo, problem in (("native", native), ("ttgt", gemm)):
                mapping, report = preset_search(
                    problem, arch, spec.samples, spec.seed, spec.workers
                )
                rows.append(
                    {
                        "kernel": kernel,
                        "tds": tds,
                        "algorithm": algo,
                        "edp": report.edp,
                        "energy": report.energy,
                        "latency_cycles": report.latency_cycles,
                        "utilized_pes": report.utilized_pes,
                        "utilization": report.utilization,
                        "bound": report.bound,
                    }
                )
    # normalize per kernel (max over its tds/algorithm cells)
    for kernel, _ in CS1_KERNELS:
        cells = [r for r in rows if r["kernel"] == kernel]
        peak = max(r["edp"] for r in cells)
        for r in cells:
            r["normalized_edp"] = r["edp"] / peak

    out = Path(spec.out_dir)
    columns = [
        "kernel", "tds", "algorithm", "edp", "normalized_edp", "energy",
        "latency_cycles", "utilized_pes", "utilization", "bound",
    ]
    write_csv(out / "case_study_1.csv", rows, columns)
    groups = [f"{k}/{t}" for k, tds_values in CS1_KERNELS for t in tds_values]
    series = {}
    for algo in ("native", "ttgt"):
        series[algo] = [
            next(
                r["normalized_edp"]
                for r in rows
                if r["kernel"] == g.split("/")[0]
                and r["tds"] == int(g.split("/")[1])
                and r["algorithm"] == algo
            )
            for g in groups
        ]
    grouped_bar_chart(
        out / "case_study_1.svg",
        groups,
        series,
        "Tensor contraction: native vs flattened GEMM (cloud 32x64)",
        "EDP (normalized per kernel)",
    )
    return rows


# ---------------------------------------------------------------------------
# Case study 2: aspect-ratio sweep
# ---------------------------------------------------------------------------

EDGE_RATIOS = ((1, 256), (2, 128), (4, 64), (8, 32), (16, 16))
CLOUD_RATIOS = ((1, 2048), (2, 1024), (4, 512), (8, 256), (16, 128), (32, 64))


def _family_arch(family: str, rows: int, cols: int) -> Architecture:
    if family == "edge":
        return make_grid_arch(rows, cols, l1_kb=0.5, l2_kb=100.0, noc_gbps=32.0)
    return make_grid_arch(rows, cols, l1_kb=0.5, l2_kb=800.0, noc_gbps=256.0)


def run_case_study_2(spec: CaseStudySpec) -> list[dict]:
    rows_out: list[dict] = []
    for layer in DNN_LAYERS:
        problem = dnn_layer_problem(layer, spec.scale)
        for family, ratios in (("edge", EDGE_RATIOS), ("cloud", CLOUD_RATIOS)):
            for r, c in ratios:
                arch = _family_arch(family, r, c)
                mapping, report = preset_search(
                    problem, arch, spec.samples, spec.seed, spec.workers
                )
                space = MapSpace(problem, arch, PARTITIONED_PRESET)
                max_pes, _ = max_utilization_pattern(space)
                rows_out.append(
                    {
                        "layer": layer,
                        "family": family,
                        "aspect_ratio": f"{r}x{c}",
                        "edp": report.edp,
                        "utilization": report.utilization,
                        "utilized_pes": report.utilized_pes,
                        "max_achievable_pes": max_pes,
                        "max_achievable_utilization": max_pes / arch.total_pes,
                        "bound": report.bound,
                    }
                )
    for layer in DNN_LAYERS:
        for family in ("edge", "cloud"):
            cells = [
                r for r in rows_out if r["layer"] == layer and r["family"] == family
            ]
            peak = max(r["edp"] for r in cells)
            for r in cells:
                r["normalized_edp"] = r["edp"] / peak

    out = Path(spec.out_dir)
    columns = [
        "layer", "family", "aspect_ratio", "edp", "normalized_edp", "utilization",
        "utilized_pes", "max_achievable_pes", "max_achievable_utilization", "bound",
    ]
    write_csv(out / "case_study_2.csv", rows_out, columns)
    for family, ratios in (("edge", EDGE_RATIOS), ("cloud", CLOUD_RATIOS)):
        groups = [f"{r}x{c}" for r, c in ratios]
        series = {}
        for layer in DNN_LAYERS:
            series[layer] = [
                next(
                    r["normalized_edp"]
                    for r in rows_out
                    if r["layer"] == layer
                    and r["family"] == family
                    and r["aspect_ratio"] == g
                )
                for g in groups
            ]
        grouped_bar_chart(
            out / f"case_study_2_{family}.svg",
            groups,
            series,
            f"EDP across aspect ratios ({family})",
            "EDP (normalized per layer)",
        )
    return rows_out


# ---------------------------------------------------------------------------
# Case study 3: chiplet fill-bandwidth sweep
# ---------------------------------------------------------------------------

CS3_BANDWIDTHS_GBPS = (0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
CS3_CHIPLETS = 16


def knee_index(edps: list[float], tol: float = 0.01) -> int | None:
    """First sweep position after which every bandwidth doubling improves EDP
    by less than ``tol``; None if the curve is still improving at the end."""
    improvements = [
        (edps[k] - edps[k + 1]) / edps[k] if edps[k] else 0.0
        for k in range(len(edps) - 1)
    ]
    for j in range(len(edps) - 1):
        if all(imp < tol for imp in improvements[j:]):
            return j
    return None


def run_case_study_3(spec: CaseStudySpec) -> list[dict]:
    rows_out: list[dict] = []
    base_arch = chiplet_arch(CS3_CHIPLETS, l2_fill_gbps=CS3_BANDWIDTHS_GBPS[0])
    for layer in DNN_LAYERS:
        problem = dnn_layer_problem(layer, spec.scale)
        space = MapSpace(problem, base_arch, PARTITIONED_PRESET)
        pool = space.sample(spec.samples, spec.seed)
        pool.extend(_pattern_seeds(space))
        layer_edps = []
        for bw in CS3_BANDWIDTHS_GBPS:
            arch = chiplet_arch(CS3_CHIPLETS, l2_fill_gbps=bw)
            evaluator = Evaluator(problem, arch)
            best = _reduce_stream(pool, evaluator, Metric.EDP, spec.workers)
            layer_edps.append(best.report.edp)
            rows_out.append(
                {
                    "layer": layer,
                    "fill_bandwidth_gbps": bw,
                    "edp": best.report.edp,
                    "latency_cycles": best.report.latency_cycles,
                    "energy": best.report.energy,
                    "bound": best.report.bound,
                }
            )
        knee = knee_index(layer_edps)
        peak = max(layer_edps)
        cells = [r for r in rows_out if r["layer"] == layer]
        for k, r in enumerate(cells):
            r["normalized_edp"] = r["edp"] / peak
            r["knee_bandwidth_gbps"] = (
                CS3_BANDWIDTHS_GBPS[knee] if knee is not None else ""
            )

    out = Path(spec.out_dir)
    columns = [
        "layer", "fill_bandwidth_gbps", "edp", "normalized_edp", "latency_cycles",
        "energy", "bound", "knee_bandwidth_gbps",
    ]
    write_csv(out / "case_study_3.csv", rows_out, columns)
    series = {
        layer: [
            (r["fill_bandwidth_gbps"], r["normalized_edp"])
            for r in rows_out
            if r["layer"] == layer
        ]
        for layer in DNN_LAYERS
    }
    line_chart(
        out / "case_study_3.svg",
        series,
        f"EDP vs per-chiplet fill bandwidth ({CS3_CHIPLETS} chiplets)",
        "fill bandwidth (GB/s, log scale)",
        "EDP (normalized per layer)",
        log_x=True,
    )
    return rows_out


def run_case_study(spec: CaseStudySpec) -> list[dict]:
    return {1: run_case_study_1, 2: run_case_study_2, 3: run_case_study_3}[spec.id](spec)
