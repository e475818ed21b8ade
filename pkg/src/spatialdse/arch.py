"""Logical cluster-target architecture abstraction.

An architecture is an ordered list of cluster levels, outermost first.  Level
indices count down from C_n (backing store, e.g. DRAM) to C_1 (a processing
element holding an L1 buffer and one MAC unit).  A level either owns a
physical buffer or is virtual: virtual levels carry no storage and exist only
to express intermediate tiling and spatial distribution.

Buffer sizes are stored in words and fill bandwidths in aggregate
words/cycle across all instances of a level's parent boundary.  File inputs
use KB and GB/s; conversion assumes 8-bit words and the architecture clock.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class Axis(enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"
    NONE = "none"


@dataclass(frozen=True)
class ClusterLevel:
    name: str
    memory_words: int
    fill_bandwidth_wpc: float
    sub_cluster_count: int
    axis: Axis = Axis.NONE
    virtual: bool = False
    has_compute: bool = False
    energy_per_word: float = 1.0
    link_energy_per_word: float = 0.0


@dataclass(frozen=True)
class Architecture:
    levels: tuple[ClusterLevel, ...]  # outermost (C_n) first
    clock_hz: float = 1e9
    energy_per_mac: float = 0.5

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level(self, index: int) -> ClusterLevel:
        """Cluster level by index; C_1 is innermost, C_n outermost."""
        if not 1 <= index <= self.n_levels:
            raise IndexError(f"no cluster level C_{index}")
        return self.levels[self.n_levels - index]

    def level_index(self, pos: int) -> int:
        return self.n_levels - pos

    @property
    def total_pes(self) -> int:
        return math.prod(l.sub_cluster_count for l in self.levels)

    def fanout(self, index: int) -> int:
        return self.level(index).sub_cluster_count

    def parent_index(self, index: int) -> int | None:
        """Nearest non-virtual level above ``index``, or None at the top."""
        for i in range(index + 1, self.n_levels + 1):
            if not self.level(i).virtual:
                return i
        return None

    def non_virtual_indices(self) -> tuple[int, ...]:
        """Indices of physical levels, outermost first."""
        return tuple(
            self.level_index(pos) for pos, l in enumerate(self.levels) if not l.virtual
        )


def validate(a: Architecture) -> list[str]:
    """Return human-readable invariant violations; empty means valid."""
    violations: list[str] = []
    names = [l.name for l in a.levels]
    if len(set(names)) != len(names):
        violations.append("cluster level names must be unique")
    if not a.levels:
        return ["architecture has no cluster levels"]
    for l in a.levels:
        if l.virtual and l.memory_words != 0:
            violations.append(f"{l.name}: virtual level must have memory_words = 0")
        if not l.virtual and l.memory_words <= 0:
            violations.append(f"{l.name}: physical level needs memory_words > 0")
        if l.sub_cluster_count < 1:
            violations.append(f"{l.name}: sub_cluster_count must be >= 1")
        if (l.axis is Axis.NONE) != (l.sub_cluster_count == 1):
            violations.append(
                f"{l.name}: axis must be none exactly when sub_cluster_count is 1"
            )
    if a.levels[0].virtual:
        violations.append("outermost level (backing store) must not be virtual")
    for l in a.levels[1:]:
        if not l.virtual and l.fill_bandwidth_wpc <= 0:
            violations.append(f"{l.name}: physical level below the top needs fill bandwidth")
    innermost = a.levels[-1]
    if innermost.virtual:
        violations.append("innermost level must own a physical buffer to feed its MAC")
    compute = [l.name for l in a.levels if l.has_compute]
    if compute != [innermost.name]:
        violations.append("exactly the innermost level must have compute")
    if innermost.sub_cluster_count != 1:
        violations.append("innermost level has no sub-clusters")
    return violations


DEFAULT_ENERGY = {"dram": 200.0, "l2": 6.0, "l1": 1.0}
CHIPLET_LINK_ENERGY = 80.0
DRAM_WORDS = 1 << 40  # effectively unbounded backing store


def make_grid_arch(
    rows: int,
    cols: int,
    l1_kb: float = 0.5,
    l2_kb: float = 100.0,
    noc_gbps: float = 32.0,
    chiplets: int = 1,
    l2_fill_gbps: float | None = None,
    clock_hz: float = 1e9,
) -> Architecture:
    """Canonical rows x cols PE-grid accelerator, optionally replicated into
    chiplets (each with its own L2 global buffer fed from DRAM).

    ``noc_gbps`` is the per-chip NoC bandwidth feeding the L1s;
    ``l2_fill_gbps`` is the per-chiplet DRAM-to-global-buffer bandwidth
    (defaults to ``noc_gbps``).  Bandwidths are converted to aggregate
    words/cycle assuming 8-bit words at the given clock.
    """
    if rows < 1 or cols < 1 or chiplets < 1:
        raise ValueError("rows, cols and chiplets must all be >= 1")
    gbps_to_wpc = 1e9 / clock_hz  # 1 byte words
    if l2_fill_gbps is None:
        l2_fill_gbps = noc_gbps
    levels: list[ClusterLevel] = [
        ClusterLevel(
            name="DRAM",
            memory_words=DRAM_WORDS,
            fill_bandwidth_wpc=0.0,
            sub_cluster_count=chiplets,
            axis=Axis.Z if chiplets > 1 else Axis.NONE,
            energy_per_word=DEFAULT_ENERGY["dram"],
        ),
        ClusterLevel(
            name="L2",
            memory_words=int(l2_kb * 1024),
            fill_bandwidth_wpc=l2_fill_gbps * chiplets * gbps_to_wpc,
            sub_cluster_count=rows,
            axis=Axis.Y if rows > 1 else Axis.NONE,
            energy_per_word=DEFAULT_ENERGY["l2"],
            link_energy_per_word=CHIPLET_LINK_ENERGY if chiplets > 1 else 0.0,
        ),
    ]
    if cols > 1:
        levels.append(
            ClusterLevel(
                name="V1",
                memory_words=0,
                fill_bandwidth_wpc=0.0,
                sub_cluster_count=cols,
                axis=Axis.X,
                virtual=True,
            )
        )
    levels.append(
        ClusterLevel(
            name="L1",
            memory_words=int(l1_kb * 1024),
            fill_bandwidth_wpc=noc_gbps * chiplets * gbps_to_wpc,
            sub_cluster_count=1,
            has_compute=True,
            energy_per_word=DEFAULT_ENERGY["l1"],
        )
    )
    arch = Architecture(tuple(levels), clock_hz=clock_hz)
    problems = validate(arch)
    if problems:
        raise ValueError("; ".join(problems))
    return arch


def edge_arch(rows: int = 16, cols: int = 16, **kw) -> Architecture:
    """256-PE edge accelerator: 0.5 KB L1, 100 KB L2, 32 GB/s NoC."""
    return make_grid_arch(rows, cols, l1_kb=0.5, l2_kb=100.0, noc_gbps=32.0, **kw)


def cloud_arch(rows: int = 32, cols: int = 64, **kw) -> Architecture:
    """2048-PE cloud accelerator: 0.5 KB L1, 800 KB L2, 256 GB/s NoC."""
    return make_grid_arch(rows, cols, l1_kb=0.5, l2_kb=800.0, noc_gbps=256.0, **kw)


def chiplet_arch(
    chiplets: int = 16, rows: int = 16, cols: int = 16, l2_fill_gbps: float = 32.0, **kw
) -> Architecture:
    """Multi-chiplet accelerator: each chiplet is one edge-style grid with its
    own global buffer filled from DRAM at ``l2_fill_gbps`` per chiplet."""
    return make_grid_arch(
        rows,
        cols,
        l1_kb=0.5,
        l2_kb=100.0,
        noc_gbps=32.0,
        chiplets=chiplets,
        l2_fill_gbps=l2_fill_gbps,
        **kw,
    )


# ---------------------------------------------------------------------------
# Architecture file (.arch)
# ---------------------------------------------------------------------------

def print_arch(a: Architecture) -> str:
    lines = ["arch", f"  clock_hz {a.clock_hz:g}", f"  energy_per_mac {a.energy_per_mac:g}"]
    for l in a.levels:
        lines.append("")
        lines.append(f"level {l.name}")
        if l.virtual:
            lines.append("  virtual true")
        else:
            lines.append(f"  memory_words {l.memory_words}")
            lines.append(f"  fill_bandwidth_wpc {l.fill_bandwidth_wpc:g}")
        lines.append(f"  fanout {l.sub_cluster_count}")
        if l.axis is not Axis.NONE:
            lines.append(f"  axis {l.axis.value}")
        if l.has_compute:
            lines.append("  compute true")
        if not l.virtual:
            lines.append(f"  energy_per_word {l.energy_per_word:g}")
        if l.link_energy_per_word:
            lines.append(f"  link_energy_per_word {l.link_energy_per_word:g}")
    return "\n".join(lines) + "\n"


def parse_arch(text: str) -> Architecture:
    """Parse the .arch format; levels appear outermost first.

    Sizes may be given as ``memory_words`` or ``memory_kb`` (8-bit words);
    bandwidth as ``fill_bandwidth_wpc`` or ``fill_bandwidth_gbps``.
    """
    clock_hz = 1e9
    energy_per_mac = 0.5
    levels: list[dict] = []
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(None, 1)
        key = fields[0]
        rest = fields[1].strip() if len(fields) > 1 else ""
        if key == "arch":
            section = "arch"
        elif key == "level":
            section = "level"
            levels.append({"name": rest})
        elif section == "arch":
            if key == "clock_hz":
                clock_hz = float(rest)
            elif key == "energy_per_mac":
                energy_per_mac = float(rest)
            else:
                raise ValueError(f"line {lineno}: unknown arch key {key!r}")
        elif section == "level":
            levels[-1][key] = rest
        else:
            raise ValueError(f"line {lineno}: content outside any section")

    built: list[ClusterLevel] = []
    gbps_to_wpc = 1e9 / clock_hz
    for spec in levels:
        virtual = spec.get("virtual", "false").lower() == "true"
        if "memory_words" in spec:
            mem = int(spec["memory_words"])
        elif "memory_kb" in spec:
            mem = int(float(spec["memory_kb"]) * 1024)
        else:
            mem = 0
        if "fill_bandwidth_wpc" in spec:
            bw = float(spec["fill_bandwidth_wpc"])
        elif "fill_bandwidth_gbps" in spec:
            bw = float(spec["fill_bandwidth_gbps"]) * gbps_to_wpc
        else:
            bw = 0.0
        built.append(
            ClusterLevel(
                name=spec["name"],
                memory_words=0 if virtual else mem,
                fill_bandwidth_wpc=bw,
                sub_cluster_count=int(spec.get("fanout", 1)),
                axis=Axis(spec.get("axis", "none")),
                virtual=virtual,
                has_compute=spec.get("compute", "false").lower() == "true",
                energy_per_word=float(spec.get("energy_per_word", 1.0)),
                link_energy_per_word=float(spec.get("link_energy_per_word", 0.0)),
            )
        )
    arch = Architecture(tuple(built), clock_hz=clock_hz, energy_per_mac=energy_per_mac)
    problems = validate(arch)
    if problems:
        raise ValueError("invalid architecture: " + "; ".join(problems))
    return arch
