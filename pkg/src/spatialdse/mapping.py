"""Cluster-target compute-centric mapping: legality, parallelism, rendering.

A mapping assigns, per cluster level, a temporal loop order plus temporal and
spatial tile sizes for every problem dimension.  The incoming tile at the top
level is the full problem; at level i the incoming tile (the spatial tile of
level i+1) is split into ``ST[i+1]/TT[i]`` temporal steps, and each temporal
tile is split across sub-clusters into ``TT[i]/ST[i]`` spatial tiles.  The
innermost spatial tile is executed serially on the level's MAC.

Legality rules (checked per dimension d and level i):

* R1  ST[i][d] >= TT[i-1][d]: a sub-cluster's temporal tile cannot exceed the
  spatial tile handed to it.
* R2  prod_d TT[i][d] / ST[i][d] <= fan-out of level i.
* R3  at physical levels, the temporal tile's footprint summed over data
  spaces fits the level's memory.
* R4  full coverage: the divisor chain from the full dimension size through
  every TT/ST factor is exact, so the rendered nest enumerates the whole
  iteration space.  Divisibility failures at the ST[i] vs TT[i-1] link are
  attributed to R1 when the spatial tile is outright smaller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from spatialdse.arch import Architecture
from spatialdse.problem import ProblemInstance, footprint


@dataclass(frozen=True)
class LevelMapping:
    target_cluster: int
    temporal_order: tuple[str, ...]
    temporal_tile_sizes: tuple[int, ...]
    spatial_tile_sizes: tuple[int, ...]


@dataclass(frozen=True)
class Mapping:
    """Per-cluster-level tiling directives, outermost level first.

    Tile-size tuples are aligned with ``dims`` (not with the per-level
    temporal order).
    """

    dims: tuple[str, ...]
    levels: tuple[LevelMapping, ...]

    def __post_init__(self):
        n = len(self.levels)
        for pos, lm in enumerate(self.levels):
            expect = n - pos
            if lm.target_cluster != expect:
                raise ValueError(
                    f"levels must target C_{n}..C_1 in order; "
                    f"position {pos} targets C_{lm.target_cluster}"
                )
            if sorted(lm.temporal_order) != sorted(self.dims):
                raise ValueError(
                    f"C_{lm.target_cluster}: temporal_order must permute {self.dims}"
                )
            if len(lm.temporal_tile_sizes) != len(self.dims) or len(
                lm.spatial_tile_sizes
            ) != len(self.dims):
                raise ValueError(f"C_{lm.target_cluster}: tile size arity mismatch")
            if any(t < 1 for t in lm.temporal_tile_sizes + lm.spatial_tile_sizes):
                raise ValueError(f"C_{lm.target_cluster}: tile sizes must be >= 1")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level(self, index: int) -> LevelMapping:
        return self.levels[self.n_levels - index]

    def tt(self, index: int) -> dict[str, int]:
        lm = self.level(index)
        return dict(zip(self.dims, lm.temporal_tile_sizes))

    def st(self, index: int) -> dict[str, int]:
        lm = self.level(index)
        return dict(zip(self.dims, lm.spatial_tile_sizes))

    def sort_key(self):
        """Canonical total order: lexicographic over per-level directives."""
        return tuple(
            (lm.temporal_order, lm.temporal_tile_sizes, lm.spatial_tile_sizes)
            for lm in self.levels
        )


@dataclass(frozen=True)
class RuleViolation:
    rule: str  # "R1" | "R2" | "R3" | "R4"
    message: str
    level: int
    dim: str = ""

    def __str__(self):
        return f"{self.rule}@C_{self.level}: {self.message}"


def _check_shapes(m: Mapping, p: ProblemInstance, a: Architecture) -> None:
    if set(m.dims) != set(p.dim_names):
        raise ValueError(f"mapping dims {m.dims} do not match problem dims {p.dim_names}")
    if m.n_levels != a.n_levels:
        raise ValueError(
            f"mapping has {m.n_levels} levels, architecture has {a.n_levels}"
        )


def check_legality(
    m: Mapping, p: ProblemInstance, a: Architecture
) -> list[RuleViolation]:
    """All R1-R4 violations of the mapping; empty list means legal."""
    _check_shapes(m, p, a)
    violations: list[RuleViolation] = []
    sizes = p.dim_sizes
    n = a.n_levels

    incoming = dict(sizes)  # ST of the (virtual) level n+1 = full problem
    for i in range(n, 0, -1):
        tt, st = m.tt(i), m.st(i)
        for d in m.dims:
            # The incoming tile is the full problem at the top, the spatial
            # tile of level i+1 otherwise; R1 owns the "too small" case there.
            if i < n and incoming[d] < tt[d]:
                violations.append(
                    RuleViolation(
                        "R1",
                        f"spatial tile {incoming[d]} of {d} at C_{i + 1} is smaller "
                        f"than temporal tile {tt[d]} at C_{i}",
                        i + 1,
                        d,
                    )
                )
            elif incoming[d] % tt[d] != 0:
                violations.append(
                    RuleViolation(
                        "R4",
                        f"temporal tile {tt[d]} of {d} does not divide incoming tile {incoming[d]}",
                        i,
                        d,
                    )
                )
            if st[d] > tt[d]:
                # Spatial splitting cannot grow the tile; fold into coverage.
                violations.append(
                    RuleViolation(
                        "R4",
                        f"spatial tile {st[d]} of {d} exceeds temporal tile {tt[d]}",
                        i,
                        d,
                    )
                )
            elif tt[d] % st[d] != 0:
                violations.append(
                    RuleViolation(
                        "R4",
                        f"spatial tile {st[d]} of {d} does not divide temporal tile {tt[d]}",
                        i,
                        d,
                    )
                )
        # R2: fan-out demanded by this level's parallelism.
        par = math.prod(Fraction(tt[d], st[d]) for d in m.dims)
        if par > a.fanout(i):
            violations.append(
                RuleViolation(
                    "R2",
                    f"parallelism {par} exceeds {a.fanout(i)} sub-clusters",
                    i,
                )
            )
        # R3: temporal tile must fit the physical buffer.
        lvl = a.level(i)
        if not lvl.virtual:
            words = sum(footprint(ds, tt) for ds in p.data_spaces)
            if words > lvl.memory_words:
                violations.append(
                    RuleViolation(
                        "R3",
                        f"temporal tile needs {words} words, {lvl.name} holds {lvl.memory_words}",
                        i,
                    )
                )
        incoming = st
    return violations


def is_legal(m: Mapping, p: ProblemInstance, a: Architecture) -> bool:
    return not check_legality(m, p, a)


def parallelism(m: Mapping, index: int) -> tuple[dict[str, int], int]:
    """Per-dimension and total fan-out used at one cluster level."""
    tt, st = m.tt(index), m.st(index)
    per_dim = {d: tt[d] // st[d] for d in m.dims}
    return per_dim, math.prod(per_dim.values())


def utilized_pes(m: Mapping) -> int:
    total = 1
    for lm in m.levels:
        for t, s in zip(lm.temporal_tile_sizes, lm.spatial_tile_sizes):
            total *= t // s
    return total


def temporal_trips(m: Mapping, p: ProblemInstance, index: int) -> dict[str, int]:
    """Temporal step counts at one level: incoming spatial tile over TT."""
    incoming = p.dim_sizes if index == m.n_levels else m.st(index + 1)
    tt = m.tt(index)
    return {d: incoming[d] // tt[d] for d in m.dims}


def spatial_factors(m: Mapping, index: int) -> dict[str, int]:
    tt, st = m.tt(index), m.st(index)
    return {d: tt[d] // st[d] for d in m.dims}


# ---------------------------------------------------------------------------
# Loop-nest rendering
# ---------------------------------------------------------------------------

def render_loop_nest(m: Mapping, p: ProblemInstance) -> str:
    """Render the mapping as a loop nest: per level, temporal ``for`` loops in
    temporal order, then concurrent ``spatial_for`` loops, with the per-PE
    serial loops innermost.  Trip-count-1 loops are elided."""
    lines: list[str] = []
    depth = 0

    def emit(text: str):
        lines.append("  " * depth + text)

    n = m.n_levels
    for i in range(n, 0, -1):
        lm = m.level(i)
        trips = temporal_trips(m, p, i)
        emit(f"# cluster C_{i}")
        for d in lm.temporal_order:
            if trips[d] > 1:
                emit(f"for {d} in 0..{trips[d] - 1}:")
                depth += 1
        sf = spatial_factors(m, i)
        concurrent = [d for d in lm.temporal_order if sf[d] > 1]
        for d in concurrent:
            emit(f"spatial_for {d} in 0..{sf[d] - 1}:  # concurrent at C_{i}")
            depth += 1
    leaf = m.level(1)
    serial = dict(zip(m.dims, leaf.spatial_tile_sizes))
    emit("# per-PE serial")
    for d in leaf.temporal_order:
        if serial[d] > 1:
            emit(f"for {d} in 0..{serial[d] - 1}:")
            depth += 1
    out = p.output
    a_ds, b_ds = p.inputs
    emit(f"mac: {out.name} += {a_ds.name} * {b_ds.name}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Mapping file (.map)
# ---------------------------------------------------------------------------

def print_mapping(m: Mapping) -> str:
    lines = ["mapping", "  dims " + " ".join(m.dims)]
    for lm in m.levels:
        lines.append("")
        lines.append(f"level {lm.target_cluster}")
        lines.append("  temporal_order " + " ".join(lm.temporal_order))
        lines.append(
            "  temporal_tile_sizes " + " ".join(str(t) for t in lm.temporal_tile_sizes)
        )
        lines.append(
            "  spatial_tile_sizes " + " ".join(str(t) for t in lm.spatial_tile_sizes)
        )
    return "\n".join(lines) + "\n"


def parse_mapping(text: str) -> Mapping:
    dims: tuple[str, ...] | None = None
    levels: list[LevelMapping] = []
    current: dict | None = None

    def flush():
        nonlocal current
        if current is not None:
            missing = {"temporal_order", "temporal_tile_sizes", "spatial_tile_sizes"} - set(
                current
            )
            if missing:
                raise ValueError(
                    f"level {current['index']}: missing {', '.join(sorted(missing))}"
                )
            levels.append(
                LevelMapping(
                    current["index"],
                    current["temporal_order"],
                    current["temporal_tile_sizes"],
                    current["spatial_tile_sizes"],
                )
            )
        current = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        key, rest = fields[0], fields[1:]
        if key == "mapping":
            continue
        if key == "dims":
            dims = tuple(rest)
        elif key == "level":
            flush()
            current = {"index": int(rest[0])}
        elif current is not None and key == "temporal_order":
            current["temporal_order"] = tuple(rest)
        elif current is not None and key in ("temporal_tile_sizes", "spatial_tile_sizes"):
            current[key] = tuple(int(v) for v in rest)
        else:
            raise ValueError(f"line {lineno}: unexpected {key!r}")
    flush()
    if dims is None:
        raise ValueError("mapping file missing dims header")
    for lm in levels:
        for d in lm.temporal_order:
            if d not in dims:
                raise ValueError(f"level {lm.target_cluster}: unknown dimension {d!r}")
    return Mapping(dims, tuple(levels))


def full_mapping_for(p: ProblemInstance, a: Architecture) -> Mapping:
    """The trivial mapping: every level holds the full problem, parallelism 1."""
    sizes = tuple(d.size for d in p.dimensions)
    names = p.dim_names
    levels = tuple(
        LevelMapping(a.level_index(pos), names, sizes, sizes)
        for pos in range(a.n_levels)
    )
    return Mapping(names, levels)
