"""Unified problem abstraction: dimensions, data spaces, projections, footprints.

A tensor operation is modelled as a set of named iteration dimensions plus one
data space per tensor.  Each data space carries a projection: one subscript
expression per tensor rank, where a subscript is an integer-weighted sum of at
most two dimensions (the two-term form covers sliding-window subscripts such
as ``stride*x + r``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping


class OperationTag(enum.Enum):
    CONV2D = "CONV2D"
    GEMM = "GEMM"
    TC = "TC"
    GENERIC = "GENERIC"


class Role(enum.Enum):
    READ_ONLY = "readonly"
    READ_WRITE = "readwrite"


@dataclass(frozen=True)
class Dimension:
    name: str
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"dimension {self.name}: size must be >= 1, got {self.size}")


@dataclass(frozen=True)
class Term:
    """One ``coeff * dim`` addend of a subscript expression."""

    coeff: int
    dim: str

    def __post_init__(self):
        if self.coeff < 1:
            raise ValueError(f"subscript coefficient must be >= 1, got {self.coeff}")


@dataclass(frozen=True)
class SubscriptExpr:
    """Affine subscript: one term (direct) or two terms (compound window)."""

    terms: tuple[Term, ...]

    def __post_init__(self):
        if not 1 <= len(self.terms) <= 2:
            raise ValueError("subscript must have 1 or 2 terms")
        names = [t.dim for t in self.terms]
        if len(set(names)) != len(names):
            raise ValueError("subscript terms must reference distinct dimensions")

    @property
    def is_direct(self) -> bool:
        return len(self.terms) == 1 and self.terms[0].coeff == 1

    def dims(self) -> tuple[str, ...]:
        return tuple(t.dim for t in self.terms)

    def extent(self, tile: Mapping[str, int]) -> int:
        """Rank extent for the given per-dimension tile extents.

        Direct subscripts span the tile extent itself; two-term subscripts
        span the contiguous window ``c1*(t1-1) + c2*(t2-1) + 1``.  For
        coefficient pairs with gaps (both coefficients > 1) this over-counts
        by treating the window as contiguous.
        """
        if len(self.terms) == 1:
            t = self.terms[0]
            e = tile[t.dim]
            return e if t.coeff == 1 else t.coeff * (e - 1) + 1
        acc = 1
        for t in self.terms:
            acc += t.coeff * (tile[t.dim] - 1)
        return acc


@dataclass(frozen=True)
class Projection:
    subscripts: tuple[SubscriptExpr, ...]

    def dims(self) -> frozenset[str]:
        return frozenset(d for s in self.subscripts for d in s.dims())


@dataclass(frozen=True)
class DataSpace:
    name: str
    role: Role
    projection: Projection


def relevant_dimensions(ds: DataSpace) -> frozenset[str]:
    """Dimensions appearing in any subscript of the data space."""
    return ds.projection.dims()


def footprint(ds: DataSpace, tile: Mapping[str, int]) -> int:
    """Distinct words a tile of the given extents touches in this data space."""
    words = 1
    for sub in ds.projection.subscripts:
        for t in sub.terms:
            if t.dim not in tile:
                raise ValueError(f"tile extent missing for dimension {t.dim}")
            if tile[t.dim] < 1:
                raise ValueError(f"tile extent for {t.dim} out of range: {tile[t.dim]}")
        words *= sub.extent(tile)
    return words


@dataclass(frozen=True)
class ProblemInstance:
    dimensions: tuple[Dimension, ...]
    data_spaces: tuple[DataSpace, ...]
    operation: OperationTag
    word_bits: int = 8

    def __post_init__(self):
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ValueError("dimension names must be unique")
        if self.word_bits not in (8, 16, 32):
            raise ValueError(f"word_bits must be 8, 16 or 32, got {self.word_bits}")
        known = set(names)
        outputs = [ds for ds in self.data_spaces if ds.role is Role.READ_WRITE]
        if len(outputs) != 1:
            raise ValueError("exactly one read-write data space required")
        ds_names = [ds.name for ds in self.data_spaces]
        if len(set(ds_names)) != len(ds_names):
            raise ValueError("data space names must be unique")
        for ds in self.data_spaces:
            for d in relevant_dimensions(ds):
                if d not in known:
                    raise ValueError(f"data space {ds.name} references unknown dimension {d}")

    @property
    def dim_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dimensions)

    @property
    def dim_sizes(self) -> dict[str, int]:
        return {d.name: d.size for d in self.dimensions}

    @property
    def output(self) -> DataSpace:
        return next(ds for ds in self.data_spaces if ds.role is Role.READ_WRITE)

    @property
    def inputs(self) -> tuple[DataSpace, ...]:
        return tuple(ds for ds in self.data_spaces if ds.role is Role.READ_ONLY)

    def data_space(self, name: str) -> DataSpace:
        for ds in self.data_spaces:
            if ds.name == name:
                return ds
        raise KeyError(name)

    def footprint(self, ds: DataSpace | str, tile: Mapping[str, int]) -> int:
        """Footprint with extents validated against the dimension sizes."""
        if isinstance(ds, str):
            ds = self.data_space(ds)
        sizes = self.dim_sizes
        for d in relevant_dimensions(ds):
            if d not in tile:
                raise ValueError(f"tile extent missing for dimension {d}")
            if not 1 <= tile[d] <= sizes[d]:
                raise ValueError(f"tile extent for {d} out of range: {tile[d]}")
        return footprint(ds, tile)


def total_macs(p: ProblemInstance) -> int:
    """Scalar multiply-accumulate count: product of all dimension sizes."""
    return math.prod(d.size for d in p.dimensions)


# ---------------------------------------------------------------------------
# Problem file (.prob) round-trip
# ---------------------------------------------------------------------------

def print_problem(p: ProblemInstance) -> str:
    lines = ["problem"]
    lines.append(f"  operation {p.operation.value}")
    lines.append(f"  word_bits {p.word_bits}")
    lines.append("")
    lines.append("dimensions")
    for d in p.dimensions:
        lines.append(f"  {d.name} {d.size}")
    for ds in p.data_spaces:
        lines.append("")
        lines.append(f"data_space {ds.name}")
        lines.append(f"  role {ds.role.value}")
        subs = " | ".join(_print_subscript(s) for s in ds.projection.subscripts)
        lines.append(f"  subscripts {subs}")
    return "\n".join(lines) + "\n"


def _print_subscript(s: SubscriptExpr) -> str:
    return " + ".join(f"{t.coeff}*{t.dim}" if t.coeff != 1 else t.dim for t in s.terms)


def _parse_subscript(text: str) -> SubscriptExpr:
    terms = []
    for part in text.split("+"):
        part = part.strip()
        if "*" in part:
            coeff_s, dim = part.split("*", 1)
            terms.append(Term(int(coeff_s.strip()), dim.strip()))
        else:
            terms.append(Term(1, part))
    return SubscriptExpr(tuple(terms))


def parse_problem(text: str) -> ProblemInstance:
    """Parse the .prob file format written by :func:`print_problem`."""
    operation = OperationTag.GENERIC
    word_bits = 8
    dims: list[Dimension] = []
    spaces: list[DataSpace] = []
    section: str | None = None
    ds_name = ""
    ds_role: Role | None = None
    ds_subs: tuple[SubscriptExpr, ...] | None = None

    def flush_ds():
        nonlocal ds_name, ds_role, ds_subs
        if section == "data_space":
            if ds_role is None or ds_subs is None:
                raise ValueError(f"data_space {ds_name}: missing role or subscripts")
            spaces.append(DataSpace(ds_name, ds_role, Projection(ds_subs)))
        ds_name, ds_role, ds_subs = "", None, None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(None, 1)
        key = fields[0]
        rest = fields[1].strip() if len(fields) > 1 else ""
        if key in ("problem", "dimensions"):
            flush_ds()
            section = key
        elif key == "data_space":
            flush_ds()
            section = key
            ds_name = rest
        elif section == "problem":
            if key == "operation":
                operation = OperationTag(rest)
            elif key == "word_bits":
                word_bits = int(rest)
            else:
                raise ValueError(f"line {lineno}: unknown problem key {key!r}")
        elif section == "dimensions":
            dims.append(Dimension(key, int(rest)))
        elif section == "data_space":
            if key == "role":
                ds_role = Role(rest)
            elif key == "subscripts":
                ds_subs = tuple(_parse_subscript(s) for s in rest.split("|"))
            else:
                raise ValueError(f"line {lineno}: unknown data_space key {key!r}")
        else:
            raise ValueError(f"line {lineno}: content outside any section")
    flush_ds()
    return ProblemInstance(tuple(dims), tuple(spaces), operation, word_bits)
