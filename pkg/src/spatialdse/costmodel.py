"""Analytical cost model: per-boundary access counts, latency, energy, EDP.

Counting conventions (mirrored exactly by the brute-force simulator):

* A level's buffer holds its temporal tile; the tile's identity is its
  per-dimension block coordinate.  Every install of a tile counts its full
  footprint as fills, for inputs and output alike.
* A tile is reinstalled only when a relevant loop index changes: the number
  of installs equals the product of trip counts of every temporal loop
  at-or-outside the innermost relevant (trip > 1) temporal loop enclosing the
  level, or 1 if no such loop exists.
* Spatial fan-out over dimensions irrelevant to a data space multicasts: one
  parent read feeds all sub-clusters sharing the tile.  Fan-out over relevant
  dimensions multiplies distinct child tiles and therefore parent reads.
* The output data space writes its tile back on every eviction (and at the
  end), and each written-back word is merged read-modify-write into the
  parent: writebacks at a level equal its fills, and the parent's updates
  equal the children's writebacks.  Spatially distributed reduction
  dimensions thus pay one merge per partial per output word at the parent of
  the distributing level.
* Compute accesses land on the innermost level: one read per input operand
  and one output update per MAC.

Latency is the max of compute cycles (one MAC per utilized PE per cycle) and
each boundary's transfer cycles (fills after multicast plus writebacks, over
the level's aggregate fill bandwidth).  Energy sums counter totals times
per-level word energies, boundary words times per-level link energies, and
MACs times the MAC energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from spatialdse.arch import Architecture
from spatialdse.mapping import (
    Mapping,
    check_legality,
    spatial_factors,
    temporal_trips,
    utilized_pes,
)
from spatialdse.problem import (
    DataSpace,
    ProblemInstance,
    Role,
    footprint,
    relevant_dimensions,
    total_macs,
)


class IllegalMappingError(ValueError):
    pass


@dataclass
class Counts:
    fills: int = 0
    reads: int = 0
    updates: int = 0
    writebacks: int = 0

    def total(self) -> int:
        return self.fills + self.reads + self.updates + self.writebacks

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.fills, self.reads, self.updates, self.writebacks)


@dataclass
class AccessCounts:
    """Per (cluster level name, data space name) word counters."""

    counters: dict[tuple[str, str], Counts] = field(default_factory=dict)

    @classmethod
    def zero(cls, level_names, ds_names) -> "AccessCounts":
        return cls({(l, d): Counts() for l in level_names for d in ds_names})

    def at(self, level: str, ds: str) -> Counts:
        return self.counters.setdefault((level, ds), Counts())

    def total_words(self) -> int:
        return sum(c.total() for c in self.counters.values())

    def as_dict(self) -> dict[tuple[str, str], tuple[int, int, int, int]]:
        return {k: c.as_tuple() for k, c in sorted(self.counters.items())}


COUNTER_NAMES = ("fills", "reads", "updates", "writebacks")


def refetch_count(
    loops: list[tuple[str, int]], relevant: frozenset[str]
) -> int:
    """Tile installs for a loop list (outer to inner) of (dim, trip) pairs.

    Equals the product of trips at-or-outside the innermost relevant loop
    with trip > 1; a constant coordinate is installed exactly once.
    """
    last = -1
    for idx, (dim, trip) in enumerate(loops):
        if dim in relevant and trip > 1:
            last = idx
    if last < 0:
        return 1
    return math.prod(trip for _, trip in loops[: last + 1])


@dataclass(frozen=True)
class CostReport:
    latency_cycles: float
    latency_seconds: float
    energy: float
    edp: float
    utilization: float
    utilized_pes: int
    access_counts: AccessCounts
    bound: str  # "compute" or "memory:<level name>"
    compute_cycles: int
    transfer_cycles: dict[str, float]
    boundary_words: dict[str, int]
    total_macs: int

    def csv_row(self) -> dict[str, object]:
        return {
            "latency_cycles": self.latency_cycles,
            "latency_seconds": self.latency_seconds,
            "energy": self.energy,
            "edp": self.edp,
            "utilization": self.utilization,
            "utilized_pes": self.utilized_pes,
            "bound": self.bound,
            "compute_cycles": self.compute_cycles,
            "total_macs": self.total_macs,
        }


def edp(r: CostReport) -> float:
    return r.energy * r.latency_seconds


def evaluate(m: Mapping, p: ProblemInstance, a: Architecture) -> CostReport:
    violations = check_legality(m, p, a)
    if violations:
        raise IllegalMappingError("; ".join(str(v) for v in violations))

    n = a.n_levels
    dims = m.dims
    trips = {i: temporal_trips(m, p, i) for i in range(1, n + 1)}
    sfac = {i: spatial_factors(m, i) for i in range(1, n + 1)}
    par = {i: math.prod(sfac[i].values()) for i in range(1, n + 1)}
    used_pes = utilized_pes(m)
    macs = total_macs(p)
    compute_cycles = macs // used_pes

    def instances(i: int) -> int:
        return math.prod(par[j] for j in range(i + 1, n + 1))

    # Temporal loop list, outermost level first, per-level temporal order.
    per_level_loops: dict[int, list[tuple[str, int]]] = {
        i: [(d, trips[i][d]) for d in m.level(i).temporal_order]
        for i in range(1, n + 1)
    }

    def loops_enclosing(i: int) -> list[tuple[str, int]]:
        out: list[tuple[str, int]] = []
        for j in range(n, i - 1, -1):
            out.extend(per_level_loops[j])
        return out

    nonvirt = a.non_virtual_indices()
    level_names = {i: a.level(i).name for i in nonvirt}
    counts = AccessCounts.zero(level_names.values(), (ds.name for ds in p.data_spaces))
    boundary_words: dict[str, int] = {level_names[i]: 0 for i in nonvirt if i != n}

    for v in p.data_spaces:
        rel = relevant_dimensions(v)
        for i in nonvirt:
            parent = a.parent_index(i)
            if parent is None:
                continue  # backing store: no fills into the top level
            fp = footprint(v, m.tt(i))
            installs = refetch_count(loops_enclosing(i), rel)
            fills = instances(i) * installs * fp
            counts.at(level_names[i], v.name).fills += fills
            # Multicast: children differing only in irrelevant spatial factors
            # share one parent read per install.
            srel = math.prod(
                sfac[j][d] for j in range(i + 1, parent + 1) for d in dims if d in rel
            )
            merged = instances(parent) * installs * srel * fp
            counts.at(level_names[parent], v.name).reads += merged
            boundary_words[level_names[i]] += merged
            if v.role is Role.READ_WRITE:
                counts.at(level_names[i], v.name).writebacks += fills
                counts.at(level_names[parent], v.name).updates += fills
                boundary_words[level_names[i]] += fills

    # Compute accesses at the innermost physical level.
    serving = level_names[nonvirt[-1]]
    for v in p.data_spaces:
        if v.role is Role.READ_WRITE:
            counts.at(serving, v.name).updates += macs
        else:
            counts.at(serving, v.name).reads += macs

    transfer_cycles: dict[str, float] = {}
    for i in nonvirt:
        if i == n:
            continue
        lvl = a.level(i)
        transfer_cycles[level_names[i]] = boundary_words[level_names[i]] / lvl.fill_bandwidth_wpc

    worst_name, worst_cycles = "", 0.0
    for name, cyc in transfer_cycles.items():
        if cyc > worst_cycles:
            worst_name, worst_cycles = name, cyc
    if compute_cycles >= worst_cycles:
        latency_cycles: float = float(compute_cycles)
        bound = "compute"
    else:
        latency_cycles = worst_cycles
        bound = f"memory:{worst_name}"

    energy = macs * a.energy_per_mac
    for (lname, _), c in counts.counters.items():
        lvl = next(l for l in a.levels if l.name == lname)
        energy += c.total() * lvl.energy_per_word
    for i in nonvirt:
        if i == n:
            continue
        lvl = a.level(i)
        if lvl.link_energy_per_word:
            energy += boundary_words[level_names[i]] * lvl.link_energy_per_word

    latency_seconds = latency_cycles / a.clock_hz
    return CostReport(
        latency_cycles=latency_cycles,
        latency_seconds=latency_seconds,
        energy=energy,
        edp=energy * latency_seconds,
        utilization=used_pes / a.total_pes,
        utilized_pes=used_pes,
        access_counts=counts,
        bound=bound,
        compute_cycles=compute_cycles,
        transfer_cycles=transfer_cycles,
        boundary_words=boundary_words,
        total_macs=macs,
    )
