"""Exact grid-fractal generators.

Sets are unions of level-n base-b grid cubes in [0,1]^d, stored as
integer cell indices, so box counts are exact set cardinalities.  Every
generator has a closed-form cell count (used when materializing would be
too large) and materialization is cross-checked against the closed form
in the tests.

Conventions fixed here and relied on by the tests:
  * a point with coordinate exactly 1 maps to the top cell (index b^n-1);
  * `segment` keeps every cell whose *closed* cube meets the *closed*
    segment, so boundary-touching cells are included (over-covering by a
    bounded factor, which never changes a dimension estimate).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .exactla import RationalLike, as_rational


@dataclass(frozen=True)
class CubeSet:
    """Finite union of level-`level` base-`base` grid cubes in [0,1]^dim."""

    base: int
    level: int
    dim: int
    cells: frozenset[tuple[int, ...]]

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")
        if self.level < 0:
            raise ValueError("level must be >= 0")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        side = self.base ** self.level
        for c in self.cells:
            if len(c) != self.dim or any(not 0 <= k < side for k in c):
                raise ValueError(f"cell {c} outside the level-{self.level} grid")

    @property
    def count(self) -> int:
        return len(self.cells)

    def coarsen(self, to_level: int) -> "CubeSet":
        """Image of the cell set at a coarser level (integer-divide indices)."""
        if to_level > self.level:
            raise ValueError("can only coarsen to a smaller level")
        if to_level == self.level:
            return self
        q = self.base ** (self.level - to_level)
        cells = frozenset(tuple(k // q for k in c) for c in self.cells)
        return CubeSet(self.base, to_level, self.dim, cells)

    def sorted_cells(self) -> list[tuple[int, ...]]:
        return sorted(self.cells)


def cubeset_to_text(x: CubeSet) -> str:
    """Header `b n d`, then one cell per line, sorted lexicographically."""
    lines = [f"{x.base} {x.level} {x.dim}"]
    lines.extend(" ".join(str(k) for k in c) for c in x.sorted_cells())
    return "\n".join(lines) + "\n"


def cubeset_from_text(text: str) -> CubeSet:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise ValueError("empty cube-set text")
    try:
        base, level, dim = (int(tok) for tok in lines[0].split())
    except ValueError as e:
        raise ValueError(f"bad cube-set header {lines[0]!r}") from e
    cells = set()
    for ln in lines[1:]:
        cell = tuple(int(tok) for tok in ln.split())
        if len(cell) != dim:
            raise ValueError(f"cell {cell} does not have {dim} coordinates")
        cells.add(cell)
    return CubeSet(base, level, dim, frozenset(cells))


def grid_interval_cells(lo: Fraction, hi: Fraction, base: int, level: int) -> range:
    """Indices of level cells whose closed cube meets the closed interval [lo, hi].

    The interval is clipped to [0,1]; touching at a single boundary point
    counts as meeting (the closed-intersection convention).
    """
    if hi < lo:
        raise ValueError("empty interval")
    side = base ** level
    t_lo = lo * side
    t_hi = hi * side
    k_min = math.ceil(t_lo) - 1 if t_lo == math.ceil(t_lo) else math.floor(t_lo)
    k_max = math.floor(t_hi)
    k_min = max(k_min, 0)
    k_max = min(k_max, side - 1)
    return range(k_min, k_max + 1)


# --- digit-restricted generators ---------------------------------------


def cantor_digits(base: int, digits: Iterable[int], level: int) -> CubeSet:
    """Level-n cells of the base-b set with digits restricted to `digits`."""
    dset = sorted(set(digits))
    if base < 2:
        raise ValueError("base must be >= 2")
    if not dset:
        raise ValueError("digit set must be nonempty")
    if any(not 0 <= d < base for d in dset):
        raise ValueError(f"digits must lie in [0, {base})")
    if level < 0:
        raise ValueError("level must be >= 0")
    cells = set()
    for combo in itertools.product(dset, repeat=level):
        value = 0
        for d in combo:
            value = value * base + d
        cells.add((value,))
    return CubeSet(base, level, 1, frozenset(cells))


def cantor_count(digits: Iterable[int], level: int) -> int:
    return len(set(digits)) ** level


@dataclass(frozen=True)
class DigitSchedule:
    """Per-level digit restrictions: level j draws its digit from per_level_digits[j]."""

    base: int
    per_level_digits: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")
        for j, dset in enumerate(self.per_level_digits):
            if not dset:
                raise ValueError(f"level {j + 1} digit set is empty")
            if any(not 0 <= d < self.base for d in dset):
                raise ValueError(f"level {j + 1} digit set leaves [0, {self.base})")

    @property
    def levels(self) -> int:
        return len(self.per_level_digits)

    def prefix(self, level: int) -> "DigitSchedule":
        if not 0 <= level <= self.levels:
            raise ValueError(f"prefix level {level} outside schedule of {self.levels}")
        return DigitSchedule(self.base, self.per_level_digits[:level])


def schedule_count(schedule: DigitSchedule, level: int | None = None) -> int:
    """Closed-form cell count of the level-n schedule set."""
    n = schedule.levels if level is None else level
    count = 1
    for dset in schedule.per_level_digits[:n]:
        count *= len(dset)
    return count


def schedule_set(schedule: DigitSchedule, level: int | None = None) -> CubeSet:
    n = schedule.levels if level is None else level
    if n > schedule.levels:
        raise ValueError("level exceeds the schedule length")
    cells = set()
    for combo in itertools.product(*(sorted(d) for d in schedule.per_level_digits[:n])):
        value = 0
        for d in combo:
            value = value * schedule.base + d
        cells.add((value,))
    return CubeSet(schedule.base, n, 1, frozenset(cells))


def interleaved_family(dim: int, block_growth: int, num_blocks: int) -> list[DigitSchedule]:
    """Base-2 schedules whose large scales are interleaved round-robin.

    Blocks have lengths K, K^2, ..., K^num_blocks.  Within block t
    (1-indexed) the schedule with index (t-1) mod dim gets the full digit
    set {0,1}; all others get the singleton {0}.  At every level exactly
    one schedule is unrestricted, so the product of all dim sets has
    exactly 2^n cells at every level n, while each factor's count grows
    only on its own sparse blocks.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if block_growth < 2:
        raise ValueError("block_growth must be >= 2")
    if num_blocks < dim:
        raise ValueError("num_blocks must be >= dim")
    full = frozenset({0, 1})
    frozen = frozenset({0})
    per_set: list[list[frozenset[int]]] = [[] for _ in range(dim)]
    for t in range(1, num_blocks + 1):
        length = block_growth ** t
        owner = (t - 1) % dim
        for i in range(dim):
            per_set[i].extend([full if i == owner else frozen] * length)
    return [DigitSchedule(2, tuple(levels)) for levels in per_set]


# --- geometric generators ----------------------------------------------


def product(parts: Sequence[CubeSet]) -> CubeSet:
    """Cartesian product; factors must share base and level."""
    if not parts:
        raise ValueError("product needs at least one part")
    base, level = parts[0].base, parts[0].level
    if any(p.base != base or p.level != level for p in parts):
        raise ValueError("product parts must share base and level")
    if len(parts) == 1:
        return parts[0]
    dim = sum(p.dim for p in parts)
    cells = frozenset(
        tuple(itertools.chain.from_iterable(combo))
        for combo in itertools.product(*(p.cells for p in parts))
    )
    return CubeSet(base, level, dim, cells)


def point_cell(point: Sequence[Fraction], base: int, level: int) -> tuple[int, ...]:
    side = base ** level
    cell = []
    for x in point:
        if not 0 <= x <= 1:
            raise ValueError(f"coordinate {x} outside [0,1]")
        cell.append(min(math.floor(x * side), side - 1))
    return tuple(cell)


def finite_points(points: Sequence[Sequence[RationalLike]], base: int, level: int) -> CubeSet:
    """Containing cells of finitely many rational points (deduplicated)."""
    pts = [tuple(as_rational(x) for x in p) for p in points]
    if not pts:
        raise ValueError("need at least one point")
    dim = len(pts[0])
    if any(len(p) != dim for p in pts):
        raise ValueError("points must share a dimension")
    cells = frozenset(point_cell(p, base, level) for p in pts)
    return CubeSet(base, level, dim, cells)


def segment(p: Sequence[RationalLike], q: Sequence[RationalLike],
            base: int, level: int) -> CubeSet:
    """All level-n cells whose closed cube meets the closed segment [p, q].

    Exact parametric march: collect every parameter where the segment
    crosses a grid plane, take the unique interior cell between
    consecutive crossings, and at each crossing add every cell containing
    the crossing point (this realizes the closed-intersection convention,
    including cells the segment only touches at a face or corner).
    """
    pf = tuple(as_rational(x) for x in p)
    qf = tuple(as_rational(x) for x in q)
    if pf == qf:
        raise ValueError("segment endpoints must differ")
    dim = len(pf)
    if len(qf) != dim:
        raise ValueError("endpoint dimensions differ")
    for point in (pf, qf):
        for x in point:
            if not 0 <= x <= 1:
                raise ValueError(f"coordinate {x} outside [0,1]")
    v = tuple(b - a for a, b in zip(pf, qf))
    side = base ** level
    tvals = {Fraction(0), Fraction(1)}
    for j in range(dim):
        if v[j] == 0:
            continue
        lo = min(pf[j], qf[j]) * side
        hi = max(pf[j], qf[j]) * side
        for m in range(math.ceil(lo), math.floor(hi) + 1):
            t = (Fraction(m, side) - pf[j]) / v[j]
            if 0 <= t <= 1:
                tvals.add(t)
    ts = sorted(tvals)

    def at(t: Fraction) -> tuple[Fraction, ...]:
        return tuple(a + t * w for a, w in zip(pf, v))

    cells: set[tuple[int, ...]] = set()
    for t in ts:
        per_axis = []
        for x in at(t):
            s = x * side
            fl = math.floor(s)
            if s == fl:
                per_axis.append([k for k in (fl - 1, fl) if 0 <= k < side])
            else:
                per_axis.append([fl])
        for combo in itertools.product(*per_axis):
            cells.add(combo)
    for ta, tb in zip(ts, ts[1:]):
        x = at((ta + tb) / 2)
        cells.add(tuple(min(math.floor(xj * side), side - 1) for xj in x))
    return CubeSet(base, level, dim, frozenset(cells))


# --- generator specs ----------------------------------------------------
#
# A GeneratorSpec names a generator plus its parameters, supplies exact
# closed-form counts where available, and materializes cells on demand.
# Scenario files describe sets with the same dictionaries parsed by
# `generator_from_dict`.


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    base: int
    dim: int

    def count_at(self, level: int) -> int:
        raise NotImplementedError

    def build(self, level: int) -> CubeSet:
        raise NotImplementedError


@dataclass(frozen=True)
class CantorSpec(GeneratorSpec):
    digits: tuple[int, ...]

    @classmethod
    def of(cls, base: int, digits: Iterable[int]) -> "CantorSpec":
        return cls("cantor", base, 1, tuple(sorted(set(digits))))

    def count_at(self, level: int) -> int:
        return len(self.digits) ** level

    def build(self, level: int) -> CubeSet:
        return cantor_digits(self.base, self.digits, level)


@dataclass(frozen=True)
class ScheduleSpec(GeneratorSpec):
    schedule: DigitSchedule

    @classmethod
    def of(cls, schedule: DigitSchedule) -> "ScheduleSpec":
        return cls("schedule", schedule.base, 1, schedule)

    def count_at(self, level: int) -> int:
        if level > self.schedule.levels:
            raise ValueError("level exceeds the schedule length")
        return schedule_count(self.schedule, level)

    def build(self, level: int) -> CubeSet:
        return schedule_set(self.schedule, level)


@dataclass(frozen=True)
class ProductSpec(GeneratorSpec):
    parts: tuple[GeneratorSpec, ...]

    @classmethod
    def of(cls, parts: Sequence[GeneratorSpec]) -> "ProductSpec":
        if not parts:
            raise ValueError("product needs at least one part")
        base = parts[0].base
        if any(p.base != base for p in parts):
            raise ValueError("product parts must share a base")
        return cls("product", base, sum(p.dim for p in parts), tuple(parts))

    def count_at(self, level: int) -> int:
        n = 1
        for p in self.parts:
            n *= p.count_at(level)
        return n

    def build(self, level: int) -> CubeSet:
        return product([p.build(level) for p in self.parts])

    def project_axes(self, axes: Sequence[int]) -> GeneratorSpec:
        """Closed-form coordinate projection for products of 1-D factors."""
        if any(p.dim != 1 for p in self.parts):
            raise ValueError("axis projection needs 1-dimensional factors")
        kept = [self.parts[a] for a in axes]
        if len(kept) == 1:
            return kept[0]
        return ProductSpec.of(kept)


@dataclass(frozen=True)
class PointsSpec(GeneratorSpec):
    points: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def of(cls, base: int, points: Sequence[Sequence[RationalLike]]) -> "PointsSpec":
        pts = tuple(tuple(as_rational(x) for x in p) for p in points)
        if not pts:
            raise ValueError("need at least one point")
        return cls("finite_points", base, len(pts[0]), pts)

    def count_at(self, level: int) -> int:
        return self.build(level).count

    def build(self, level: int) -> CubeSet:
        return finite_points(self.points, self.base, level)


@dataclass(frozen=True)
class SegmentSpec(GeneratorSpec):
    p: tuple[Fraction, ...]
    q: tuple[Fraction, ...]

    @classmethod
    def of(cls, base: int, p: Sequence[RationalLike], q: Sequence[RationalLike]) -> "SegmentSpec":
        pf = tuple(as_rational(x) for x in p)
        qf = tuple(as_rational(x) for x in q)
        return cls("segment", base, len(pf), pf, qf)

    def count_at(self, level: int) -> int:
        return self.build(level).count

    def build(self, level: int) -> CubeSet:
        return segment(self.p, self.q, self.base, level)


@dataclass(frozen=True)
class InterleavedSpec(GeneratorSpec):
    """Interleaved-scale family: one factor (factor >= 1) or the full product."""

    block_growth: int
    num_blocks: int
    factor: int | None
    schedules: tuple[DigitSchedule, ...]

    @classmethod
    def of(cls, dim: int, block_growth: int, num_blocks: int,
           factor: int | None = None) -> "InterleavedSpec":
        schedules = tuple(interleaved_family(dim, block_growth, num_blocks))
        if factor is not None and not 1 <= factor <= dim:
            raise ValueError(f"factor must lie in 1..{dim}")
        out_dim = 1 if factor is not None else dim
        return cls("interleaved_family", 2, out_dim, block_growth, num_blocks, factor, schedules)

    @property
    def total_levels(self) -> int:
        return self.schedules[0].levels

    def count_at(self, level: int) -> int:
        if self.factor is not None:
            return schedule_count(self.schedules[self.factor - 1], level)
        n = 1
        for s in self.schedules:
            n *= schedule_count(s, level)
        return n

    def build(self, level: int) -> CubeSet:
        if self.factor is not None:
            return schedule_set(self.schedules[self.factor - 1], level)
        return product([schedule_set(s, level) for s in self.schedules])

    def factor_spec(self, factor: int) -> "ScheduleSpec":
        return ScheduleSpec.of(self.schedules[factor - 1])


def generator_from_dict(spec: dict) -> GeneratorSpec:
    """Parse the scenario-file generator description."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("generator spec must be a mapping with a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "cantor":
            return CantorSpec.of(int(spec["base"]), [int(d) for d in spec["digits"]])
        if kind == "schedule":
            sched = DigitSchedule(int(spec["base"]),
                                  tuple(frozenset(int(d) for d in ds) for ds in spec["digit_sets"]))
            return ScheduleSpec.of(sched)
        if kind == "product":
            return ProductSpec.of([generator_from_dict(p) for p in spec["parts"]])
        if kind == "finite_points":
            return PointsSpec.of(int(spec["base"]), spec["points"])
        if kind == "segment":
            return SegmentSpec.of(int(spec["base"]), spec["from"], spec["to"])
        if kind == "interleaved_family":
            return InterleavedSpec.of(int(spec["dim"]), int(spec["block_growth"]),
                                      int(spec["num_blocks"]),
                                      int(spec["factor"]) if "factor" in spec and spec["factor"] is not None else None)
    except KeyError as e:
        raise ValueError(f"generator kind {kind!r} is missing key {e.args[0]!r}") from e
    raise ValueError(f"unknown generator kind {kind!r}")
