"""Brute-force loop-nest simulator: ground truth for the analytical model.

The simulator replays the rendered mapping tick by tick (one tick per
combination of all temporal loop indices), keeps the resident tile of every
buffer instance for every data space, and counts fills, reads, updates and
writebacks word-for-word under the same conventions the analytical model
states.  It is deliberately dumb and slow; instance sizes are capped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from spatialdse.arch import Architecture
from spatialdse.costmodel import AccessCounts, COUNTER_NAMES, CostReport, IllegalMappingError
from spatialdse.mapping import (
    Mapping,
    check_legality,
    spatial_factors,
    temporal_trips,
)
from spatialdse.problem import (
    ProblemInstance,
    Role,
    footprint,
    relevant_dimensions,
    total_macs,
)

DEFAULT_MAC_CAP = 4096


class SimulationCapError(ValueError):
    pass


@dataclass
class SimTrace:
    access_counts: AccessCounts
    pe_macs: dict[tuple, int]
    iteration_vectors: set[tuple]

    @property
    def total_macs(self) -> int:
        return sum(self.pe_macs.values())


def simulate(
    m: Mapping, p: ProblemInstance, a: Architecture, cap: int = DEFAULT_MAC_CAP
) -> SimTrace:
    macs = total_macs(p)
    if macs > cap:
        raise SimulationCapError(f"problem has {macs} MACs, simulator cap is {cap}")
    violations = check_legality(m, p, a)
    if violations:
        raise IllegalMappingError("; ".join(str(v) for v in violations))

    n = a.n_levels
    dims = m.dims
    trips = {i: temporal_trips(m, p, i) for i in range(1, n + 1)}
    sfac = {i: spatial_factors(m, i) for i in range(1, n + 1)}
    tt = {i: m.tt(i) for i in range(1, n + 1)}
    st = {i: m.st(i) for i in range(1, n + 1)}
    serial = st[1]

    # Global nesting order: level n outermost, per-level temporal order.
    tentries = [
        (i, d, trips[i][d]) for i in range(n, 0, -1) for d in m.level(i).temporal_order
    ]
    sentries = [
        (i, d, sfac[i][d]) for i in range(n, 0, -1) for d in m.level(i).temporal_order
    ]

    nonvirt = a.non_virtual_indices()
    names = {i: a.level(i).name for i in nonvirt}
    counts = AccessCounts.zero(names.values(), (ds.name for ds in p.data_spaces))

    # Buffer instances of level i are addressed by the spatial indices of all
    # levels above i; one PE per combination of every spatial index.
    def instance_keys(min_level: int) -> list[tuple[int, ...]]:
        ranges = [range(t) for (lv, _, t) in sentries if lv > min_level]
        return [tuple(v) for v in itertools.product(*ranges)]

    def static_offsets(min_level: int) -> dict[tuple, dict[str, int]]:
        positions = [k for k, (lv, _, _) in enumerate(sentries) if lv > min_level]
        out = {}
        for key in instance_keys(min_level):
            off = {d: 0 for d in dims}
            for key_pos, entry_pos in enumerate(positions):
                lv, d, _ = sentries[entry_pos]
                off[d] += key[key_pos] * st[lv][d]
            out[key] = off
        return out

    tracked = [i for i in nonvirt if i != n]  # the top level is the backing store
    level_keys = {i: instance_keys(i) for i in tracked}
    level_offsets = {i: static_offsets(i) for i in tracked}
    # Parent instance key = the sub-tuple of spatial indices above the parent.
    parent_of = {i: a.parent_index(i) for i in tracked}
    parent_key_positions: dict[int, list[int]] = {}
    for i in tracked:
        positions = [q for q, (lv, _, _) in enumerate(sentries) if lv > i]
        parent_key_positions[i] = [
            k for k, q in enumerate(positions) if sentries[q][0] > parent_of[i]
        ]

    pe_keys = instance_keys(0)
    pe_offsets = static_offsets(0)
    serving = names[nonvirt[-1]]

    rel = {ds.name: sorted(relevant_dimensions(ds)) for ds in p.data_spaces}
    fp = {
        (i, ds.name): footprint(ds, tt[i]) for i in tracked for ds in p.data_spaces
    }
    out_name = p.output.name

    resident: dict[tuple, tuple | None] = {
        (i, key, ds.name): None
        for i in tracked
        for key in level_keys[i]
        for ds in p.data_spaces
    }

    pe_macs = {key: 0 for key in pe_keys}
    iteration_vectors: set[tuple] = set()
    serial_space = list(
        itertools.product(*[range(serial[d]) for d in dims])
    )

    for tvals in itertools.product(*[range(t) for (_, _, t) in tentries]):
        tpoint = {d: 0 for d in dims}
        for (lv, d, _), v in zip(tentries, tvals):
            tpoint[d] += v * tt[lv][d]

        # Tile residency per level instance; group same-coordinate installs
        # for one multicast read at the parent.
        multicast_groups: set[tuple] = set()
        for i in tracked:
            for key in level_keys[i]:
                off = level_offsets[i][key]
                coords = {}
                for ds in p.data_spaces:
                    coords[ds.name] = tuple(
                        (tpoint[d] + off[d]) // tt[i][d] for d in rel[ds.name]
                    )
                for ds_name, coord in coords.items():
                    state_key = (i, key, ds_name)
                    old = resident[state_key]
                    if old == coord:
                        continue
                    if old is not None and ds_name == out_name:
                        counts.at(names[i], ds_name).writebacks += fp[(i, ds_name)]
                        counts.at(names[parent_of[i]], ds_name).updates += fp[(i, ds_name)]
                    counts.at(names[i], ds_name).fills += fp[(i, ds_name)]
                    parent_key = tuple(key[k] for k in parent_key_positions[i])
                    multicast_groups.add((i, ds_name, parent_key, coord))
                    resident[state_key] = coord
        for (i, ds_name, _, _) in multicast_groups:
            counts.at(names[parent_of[i]], ds_name).reads += fp[(i, ds_name)]

        # Compute: each PE walks its serial tile, one MAC per point.
        for key in pe_keys:
            off = pe_offsets[key]
            base = {d: tpoint[d] + off[d] for d in dims}
            for combo in serial_space:
                iteration_vectors.add(
                    tuple(base[d] + c for d, c in zip(dims, combo))
                )
            pe_macs[key] += len(serial_space)
        tick_macs = len(serial_space) * len(pe_keys)
        for ds in p.data_spaces:
            if ds.role is Role.READ_WRITE:
                counts.at(serving, ds.name).updates += tick_macs
            else:
                counts.at(serving, ds.name).reads += tick_macs

    # Final flush: surviving output tiles drain to their parents.
    for i in tracked:
        for key in level_keys[i]:
            if resident[(i, key, out_name)] is not None:
                counts.at(names[i], out_name).writebacks += fp[(i, out_name)]
                counts.at(names[parent_of[i]], out_name).updates += fp[(i, out_name)]

    return SimTrace(counts, pe_macs, iteration_vectors)


def diff(trace: SimTrace, report: CostReport) -> list[str]:
    """Exact counter comparison; empty list means the model matches."""
    mismatches: list[str] = []
    keys = sorted(set(trace.access_counts.counters) | set(report.access_counts.counters))
    for level, ds in keys:
        got = trace.access_counts.at(level, ds).as_tuple()
        want = report.access_counts.at(level, ds).as_tuple()
        for name, g, w in zip(COUNTER_NAMES, got, want):
            if g != w:
                mismatches.append(
                    f"{level}/{ds}/{name}: oracle={g} model={w}"
                )
    if trace.total_macs != report.total_macs:
        mismatches.append(
            f"total MACs: oracle={trace.total_macs} model={report.total_macs}"
        )
    return mismatches
