"""Map space: the factored set of legal mappings for (problem, arch, constraints).

Tile choices are divisor chains: at each level the temporal tile divides the
incoming tile (the spatial tile of the level above, or the full problem at the
top) and the spatial tile divides the temporal tile, so coverage (R4) holds by
construction.  Fan-out (R2) and capacity (R3) prune per level, user
constraints and utilization bounds prune per element.

Enumeration is a level-major depth-first walk emitting mappings in the
canonical lexicographic order over per-level (temporal order, temporal tiles,
spatial tiles).  Temporal orders are canonicalized: only the relative order of
loops with trip count > 1 distinguishes mappings, so permutations are drawn
over those dims with the trip-1 dims appended in problem order.

Sampling draws each factor uniformly from its locally valid set (tile chains
top-down, then spatial factors within the level's fan-out budget), which is
reproducible per (seed, draw index) and independent of worker count.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

from spatialdse.arch import Architecture, Axis
from spatialdse.mapping import LevelMapping, Mapping, check_legality, utilized_pes
from spatialdse.problem import ProblemInstance, footprint


class MapSpaceError(ValueError):
    pass


class MapSpaceTooLarge(MapSpaceError):
    pass


class EmptyMapSpace(MapSpaceError):
    pass


def divisors(n: int) -> tuple[int, ...]:
    small, large = [], []
    for i in range(1, int(math.isqrt(n)) + 1):
        if n % i == 0:
            small.append(i)
            if i != n // i:
                large.append(n // i)
    return tuple(small + large[::-1])


@dataclass(frozen=True)
class LevelConstraint:
    allowed_orders: tuple[tuple[str, ...], ...] | None = None
    forced_parallel: frozenset[str] = frozenset()
    forbidden_parallel: frozenset[str] = frozenset()
    fixed_temporal: tuple[tuple[str, int], ...] = ()
    fixed_spatial: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class ConstraintSet:
    levels: tuple[tuple[int, LevelConstraint], ...] = ()
    forced_parallel_dims: frozenset[str] = frozenset()
    forbidden_parallel_dims: frozenset[str] = frozenset()
    min_utilization: float = 0.0
    max_utilization: float = 1.0
    axis_fanout: tuple[tuple[Axis, int], ...] = ()
    single_parallel_dim_per_level: bool = False
    distinct_parallel_dims: bool = False

    def __post_init__(self):
        if not 0.0 <= self.min_utilization <= 1.0:
            raise ValueError("min_utilization must lie in [0, 1]")
        if not 0.0 <= self.max_utilization <= 1.0:
            raise ValueError("max_utilization must lie in [0, 1]")

    def level(self, index: int) -> LevelConstraint:
        for i, lc in self.levels:
            if i == index:
                return lc
        return LevelConstraint()


PARTITIONED_PRESET = ConstraintSet(
    single_parallel_dim_per_level=True,
    distinct_parallel_dims=True,
)


def parse_constraints(text: str) -> ConstraintSet:
    """Parse the .cons format; an absent file means unconstrained."""
    globals_: dict = {}
    levels: list[tuple[int, dict]] = []
    section: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(None, 1)
        key, rest = fields[0], fields[1].strip() if len(fields) > 1 else ""
        if key == "constraints":
            section = globals_
        elif key == "level":
            levels.append((int(rest), {}))
            section = levels[-1][1]
        elif section is None:
            raise ValueError(f"line {lineno}: content outside any section")
        else:
            section[key] = rest

    def parse_fixed(value: str) -> tuple[tuple[str, int], ...]:
        pairs = []
        for item in value.split():
            name, _, size = item.partition("=")
            pairs.append((name, int(size)))
        return tuple(pairs)

    level_constraints = []
    for index, spec in levels:
        orders = None
        if "allowed_orders" in spec and spec["allowed_orders"] != "any":
            orders = tuple(
                tuple(o.split()) for o in spec["allowed_orders"].split("|")
            )
        level_constraints.append(
            (
                index,
                LevelConstraint(
                    allowed_orders=orders,
                    forced_parallel=frozenset(spec.get("forced_parallel", "").split()),
                    forbidden_parallel=frozenset(spec.get("forbidden_parallel", "").split()),
                    fixed_temporal=parse_fixed(spec.get("fixed_temporal", "")),
                    fixed_spatial=parse_fixed(spec.get("fixed_spatial", "")),
                ),
            )
        )
    axis = tuple(
        (Axis(name), int(value))
        for name, _, value in (
            item.partition("=") for item in globals_.get("aspect_ratio", "").split()
        )
    )
    return ConstraintSet(
        levels=tuple(level_constraints),
        forced_parallel_dims=frozenset(globals_.get("forced_parallel", "").split()),
        forbidden_parallel_dims=frozenset(globals_.get("forbidden_parallel", "").split()),
        min_utilization=float(globals_.get("min_utilization", 0.0)),
        max_utilization=float(globals_.get("max_utilization", 1.0)),
        axis_fanout=axis,
        single_parallel_dim_per_level=globals_.get(
            "single_parallel_dim_per_level", "false"
        ).lower()
        == "true",
        distinct_parallel_dims=globals_.get("distinct_parallel_dims", "false").lower()
        == "true",
    )


@dataclass
class MapSpace:
    problem: ProblemInstance
    arch: Architecture
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    _size: int | None = field(default=None, repr=False)

    def __post_init__(self):
        unknown = (
            set(self.constraints.forced_parallel_dims)
            | set(self.constraints.forbidden_parallel_dims)
        ) - set(self.problem.dim_names)
        if unknown:
            raise MapSpaceError(f"constraints reference unknown dims {sorted(unknown)}")

    # -- enumeration --------------------------------------------------------

    def _level_tilings(
        self, index: int, incoming: dict[str, int], cap: int | None
    ) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
        """All (TT, ST) pairs at one level given the incoming tile, sorted."""
        dims = self.problem.dim_names
        lc = self.constraints.level(index)
        fixed_t, fixed_s = dict(lc.fixed_temporal), dict(lc.fixed_spatial)
        fanout = self.arch.fanout(index)
        leaf = index == 1
        per_dim: list[list[tuple[int, int]]] = []
        for d in dims:
            options = []
            tts = [fixed_t[d]] if d in fixed_t else divisors(incoming[d])
            for tt in tts:
                if incoming[d] % tt:
                    continue
                if leaf:
                    sts = [tt]
                elif d in fixed_s:
                    sts = [fixed_s[d]] if tt % fixed_s[d] == 0 else []
                else:
                    sts = [s for s in divisors(tt) if tt // s <= fanout]
                for st in sts:
                    f = tt // st
                    if f > 1 and (
                        d in lc.forbidden_parallel
                        or d in self.constraints.forbidden_parallel_dims
                    ):
                        continue
                    options.append((tt, st))
            if not options:
                return []
            per_dim.append(options)

        total = math.prod(len(o) for o in per_dim)
        if cap is not None and total > cap:
            raise MapSpaceTooLarge(
                f"level C_{index} has {total} tiling combinations; "
                "enumerate a smaller space or use sampling"
            )
        lvl = self.arch.level(index)
        out = []
        for combo in itertools.product(*per_dim):
            factors = [tt // st for tt, st in combo]
            if math.prod(factors) > fanout:
                continue
            parallel = {d for d, f in zip(dims, factors) if f > 1}
            if self.constraints.single_parallel_dim_per_level and len(parallel) > 1:
                continue
            if lc.forced_parallel and not lc.forced_parallel <= parallel:
                continue
            if not lvl.virtual:
                tt_map = {d: tt for d, (tt, _) in zip(dims, combo)}
                words = sum(footprint(ds, tt_map) for ds in self.problem.data_spaces)
                if words > lvl.memory_words:
                    continue
            out.append((tuple(t for t, _ in combo), tuple(s for _, s in combo)))
        out.sort()
        return out

    def _level_orders(
        self, index: int, trips: dict[str, int]
    ) -> list[tuple[str, ...]]:
        dims = self.problem.dim_names
        lc = self.constraints.level(index)
        if lc.allowed_orders is not None:
            return [o for o in lc.allowed_orders if sorted(o) == sorted(dims)]
        active = [d for d in dims if trips[d] > 1]
        inactive = [d for d in dims if trips[d] <= 1]
        return sorted(
            tuple(p) + tuple(inactive) for p in itertools.permutations(active)
        )

    def _element_ok(self, m: Mapping) -> bool:
        c = self.constraints
        util = utilized_pes(m) / self.arch.total_pes
        if not c.min_utilization <= util <= c.max_utilization + 1e-12:
            return False
        dims = self.problem.dim_names
        parallel_levels: dict[str, int] = {}
        axis_used: dict[Axis, int] = {}
        for lm in m.levels:
            i = lm.target_cluster
            axis = self.arch.level(i).axis
            used = 1
            dims_here = 0
            for d, tt, st in zip(dims, lm.temporal_tile_sizes, lm.spatial_tile_sizes):
                f = tt // st
                used *= f
                if f > 1:
                    dims_here += 1
                    parallel_levels[d] = parallel_levels.get(d, 0) + 1
            if c.single_parallel_dim_per_level and dims_here > 1:
                return False
            if axis is not Axis.NONE:
                axis_used[axis] = axis_used.get(axis, 1) * used
        if c.distinct_parallel_dims and any(v > 1 for v in parallel_levels.values()):
            return False
        if not c.forced_parallel_dims <= set(parallel_levels):
            return False
        for axis, pin in c.axis_fanout:
            if axis_used.get(axis, 1) != pin:
                return False
        return True

    def enumerate(self, cap: int | None = 2_000_000):
        """Yield every legal constraint-satisfying mapping in canonical order."""
        dims = self.problem.dim_names
        n = self.arch.n_levels
        sizes = self.problem.dim_sizes

        def walk(index: int, incoming: dict[str, int], acc: list[LevelMapping]):
            if index == 0:
                m = Mapping(dims, tuple(acc))
                if self._element_ok(m):
                    yield m
                return
            choices = []
            for tt, st in self._level_tilings(index, incoming, cap):
                trips = {d: incoming[d] // t for d, t in zip(dims, tt)}
                for order in self._level_orders(index, trips):
                    choices.append((order, tt, st))
            choices.sort()
            for order, tt, st in choices:
                acc.append(LevelMapping(index, order, tt, st))
                yield from walk(index - 1, dict(zip(dims, st)), acc)
                acc.pop()

        yield from walk(n, dict(sizes), [])

    @property
    def size(self) -> int:
        if self._size is None:
            self._size = sum(1 for _ in self.enumerate())
        return self._size

    def is_empty(self) -> bool:
        return next(iter(self.enumerate()), None) is None

    # -- sampling ------------------------------------------------------------

    def sample_one(self, rng: random.Random, attempts: int = 500) -> Mapping:
        dims = self.problem.dim_names
        sizes = self.problem.dim_sizes
        n = self.arch.n_levels
        c = self.constraints
        for _ in range(attempts):
            incoming = dict(sizes)
            acc: list[LevelMapping] = []
            ok = True
            remaining_forced = set(c.forced_parallel_dims)
            used_parallel: set[str] = set()
            for i in range(n, 0, -1):
                drawn = self._sample_level(
                    rng, i, incoming, remaining_forced, used_parallel
                )
                if drawn is None:
                    ok = False
                    break
                tt, st, order = drawn
                acc.append(LevelMapping(i, order, tt, st))
                incoming = dict(zip(dims, st))
            if not ok:
                continue
            m = Mapping(dims, tuple(acc))
            if self._element_ok(m) and not check_legality(m, self.problem, self.arch):
                return m
        raise EmptyMapSpace(
            "could not sample a legal constraint-satisfying mapping "
            f"after {attempts} attempts"
        )

    def _sample_level(self, rng, index, incoming, remaining_forced, used_parallel):
        dims = self.problem.dim_names
        lc = self.constraints.level(index)
        c = self.constraints
        fixed_t, fixed_s = dict(lc.fixed_temporal), dict(lc.fixed_spatial)
        lvl = self.arch.level(index)
        fanout = lvl.sub_cluster_count
        leaf = index == 1

        for _ in range(60):
            tt = {}
            for d in dims:
                if d in fixed_t:
                    tt[d] = fixed_t[d]
                    if incoming[d] % tt[d]:
                        return None
                else:
                    tt[d] = rng.choice(divisors(incoming[d]))
            if not lvl.virtual:
                words = sum(footprint(ds, tt) for ds in self.problem.data_spaces)
                if words > lvl.memory_words:
                    continue

            st = dict(tt)
            if not leaf and fanout > 1:
                forbidden = (
                    set(lc.forbidden_parallel) | set(c.forbidden_parallel_dims)
                )
                if c.distinct_parallel_dims:
                    forbidden |= used_parallel
                eligible = [d for d in dims if d not in forbidden]
                must_local = [d for d in eligible if d in lc.forced_parallel]
                must_global = sorted(set(remaining_forced) & set(eligible))
                budget = fanout
                if c.single_parallel_dim_per_level:
                    pool = must_local or must_global or eligible + [None]
                    pick = rng.choice(sorted(pool, key=str))
                    chosen = [pick] if pick is not None else []
                else:
                    chosen = [
                        d
                        for d in eligible
                        if rng.random() < 0.5 or d in must_local or d in must_global
                    ]
                rng.shuffle(chosen)
                for d in chosen:
                    opts = [f for f in divisors(tt[d]) if f <= budget]
                    f = rng.choice(opts)
                    if f == 1 and (d in lc.forced_parallel or d in must_global):
                        bigger = [o for o in opts if o > 1]
                        if not bigger and d in lc.forced_parallel:
                            return None
                        if bigger:
                            f = rng.choice(bigger)
                    st[d] = tt[d] // f
                    budget //= f
                    if f > 1:
                        used_parallel.add(d)
                        remaining_forced.discard(d)
            for d in fixed_s:
                if tt[d] % fixed_s[d]:
                    return None
                st[d] = fixed_s[d]
            if lc.forced_parallel and not all(tt[d] // st[d] > 1 for d in lc.forced_parallel):
                continue
            if lc.allowed_orders:
                order = lc.allowed_orders[rng.randrange(len(lc.allowed_orders))]
            else:
                order = self._random_order(rng, incoming, tt)
            return (
                tuple(tt[d] for d in dims),
                tuple(st[d] for d in dims),
                order,
            )
        return None

    def _random_order(self, rng, incoming, tt) -> tuple[str, ...]:
        dims = self.problem.dim_names
        active = [d for d in dims if incoming[d] // tt[d] > 1]
        inactive = [d for d in dims if incoming[d] // tt[d] <= 1]
        rng.shuffle(active)
        return tuple(active) + tuple(inactive)

    def sample(self, n: int, seed: int) -> list[Mapping]:
        """n seeded draws; the k-th draw depends only on (seed, k), so results
        are identical no matter how draws are split across workers."""
        out = []
        for k in range(n):
            rng = random.Random(1_000_003 * seed + k)
            out.append(self.sample_one(rng))
        return out


def build(
    p: ProblemInstance, a: Architecture, c: ConstraintSet | None = None
) -> MapSpace:
    return MapSpace(p, a, c or ConstraintSet())


# ---------------------------------------------------------------------------
# Utilization analysis and seeds
# ---------------------------------------------------------------------------

def top_utilization_patterns(
    space: MapSpace, k: int = 8, node_cap: int = 500_000
) -> list[tuple[int, dict[int, dict[str, int]]]]:
    """The k best spatial patterns ({level: {dim: factor}}) by utilized-PE
    count, honoring the space's constraints; exact for the search budget."""
    a, p, c = space.arch, space.problem, space.constraints
    dims = p.dim_names
    sizes = p.dim_sizes
    level_indices = [i for i in range(a.n_levels, 0, -1)]

    found: dict[tuple, int] = {}
    state = {"floor": 0, "nodes": 0}

    def pattern_key(pattern) -> tuple:
        return tuple(
            (i, tuple(sorted(factors.items())))
            for i, factors in sorted(pattern.items())
            if factors
        )

    def assignments(index: int, remaining: dict[str, int]):
        lc = c.level(index)
        fanout = a.fanout(index)
        forbidden = set(lc.forbidden_parallel) | set(c.forbidden_parallel_dims)
        eligible = [d for d in dims if d not in forbidden]
        if c.single_parallel_dim_per_level:
            yield {}
            for d in eligible:
                for f in divisors(remaining[d]):
                    if 1 < f <= fanout:
                        yield {d: f}
        else:
            per_dim = [
                [(d, f) for f in divisors(remaining[d]) if f <= fanout]
                for d in eligible
            ]
            for combo in itertools.product(*per_dim):
                factors = {d: f for d, f in combo if f > 1}
                if math.prod(factors.values() or [1]) <= fanout:
                    yield factors

    def walk(pos: int, remaining: dict[str, int], used: set[str], pattern, pes: int):
        state["nodes"] += 1
        if state["nodes"] > node_cap:
            return
        if pes * math.prod(a.fanout(i) for i in level_indices[pos:]) <= state["floor"]:
            return  # cannot reach the current top-k floor
        if pos == len(level_indices):
            if c.forced_parallel_dims <= used:
                found[pattern_key(pattern)] = pes
                if len(found) > 4 * k:
                    keep = dict(
                        sorted(found.items(), key=lambda kv: (-kv[1], kv[0]))[: 2 * k]
                    )
                    found.clear()
                    found.update(keep)
                if len(found) >= k:
                    state["floor"] = sorted(found.values(), reverse=True)[k - 1]
            return
        index = level_indices[pos]
        for factors in assignments(index, remaining):
            if c.distinct_parallel_dims and set(factors) & used:
                continue
            lc = c.level(index)
            if lc.forced_parallel and not set(lc.forced_parallel) <= set(factors):
                continue
            nxt = dict(remaining)
            for d, f in factors.items():
                nxt[d] //= f
            pattern[index] = factors
            walk(
                pos + 1,
                nxt,
                used | set(factors),
                pattern,
                pes * math.prod(factors.values() or [1]),
            )
            del pattern[index]

    walk(0, dict(sizes), set(), {}, 1)
    if not found:
        raise EmptyMapSpace("no spatial pattern satisfies the constraints")
    ranked = sorted(found.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return [
        (pes, {i: dict(factors) for i, factors in key})
        for key, pes in ranked
    ]


def max_utilization_pattern(space: MapSpace) -> tuple[int, dict[int, dict[str, int]]]:
    """Exact maximum achievable utilized-PE count and one pattern attaining it."""
    pes, pattern = top_utilization_patterns(space, k=1)[0]
    full = {i: pattern.get(i, {}) for i in range(1, space.arch.n_levels + 1)}
    return pes, full


def _fit_temporal(
    space: MapSpace, index: int, incoming: dict[str, int], reserved: dict[str, int]
) -> dict[str, int]:
    """Largest temporal tile (multiple of reserved spatial factors) fitting R3."""
    lvl = space.arch.level(index)
    tt = dict(incoming)
    if lvl.virtual:
        return tt

    def words() -> int:
        return sum(footprint(ds, tt) for ds in space.problem.data_spaces)

    while words() > lvl.memory_words:
        candidates = [d for d in tt if tt[d] // reserved[d] > 1]
        if not candidates:
            raise EmptyMapSpace(
                f"{lvl.name}: even minimal tiles exceed {lvl.memory_words} words"
            )
        d = max(candidates, key=lambda d: tt[d] // reserved[d])
        quotient = tt[d] // reserved[d]
        prime = next(q for q in range(2, quotient + 1) if quotient % q == 0)
        tt[d] //= prime
    return tt


def utilization_seed(space: MapSpace, pattern: dict[int, dict[str, int]]) -> Mapping:
    """Concrete legal mapping realizing a spatial pattern with greedy temporal
    tiles (as large as each buffer allows)."""
    p, a = space.problem, space.arch
    dims = p.dim_names
    n = a.n_levels
    reserved_below: dict[int, dict[str, int]] = {}
    running = {d: 1 for d in dims}
    for i in range(1, n + 1):
        for d, f in pattern.get(i, {}).items():
            running[d] *= f
        reserved_below[i] = dict(running)

    incoming = dict(p.dim_sizes)
    levels = []
    for i in range(n, 0, -1):
        tt = _fit_temporal(space, i, incoming, reserved_below[i])
        st = dict(tt)
        for d, f in pattern.get(i, {}).items():
            st[d] = tt[d] // f
        levels.append(
            LevelMapping(
                i,
                dims,
                tuple(tt[d] for d in dims),
                tuple(st[d] for d in dims),
            )
        )
        incoming = st
    m = Mapping(dims, tuple(levels))
    violations = check_legality(m, p, a)
    if violations:
        raise EmptyMapSpace(
            "utilization seed infeasible: " + "; ".join(str(v) for v in violations)
        )
    return m
