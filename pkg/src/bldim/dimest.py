"""Box counts, finite-scale dimension estimates, and inequality verdicts.

Finite-scale surrogates: the upper box estimate over a window is the
maximum per-level slope ln N(n) / (n ln b), the lower box estimate the
minimum; this matches the limsup/liminf semantics at desk scale while
staying exactly computable from counts.  A Verdict compares one
left-hand estimate against a weighted sum of right-hand estimates within
a tolerance: 1e-6 for verdicts backed by exact cell counts (only log
rounding enters), 0.05 for estimator-backed verdicts such as nonlinear
images and localized covering counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Context
from typing import Callable, Iterable, Sequence

from .fracgen import CubeSet

Mode = str

EXACT_TOLERANCE = 1e-6
ESTIMATOR_TOLERANCE = 0.05

#: Default verdict tolerances.  Modes backed by exact cell counts get the
#: tight tolerance; sampled/nonlinear estimators get the loose one.
DEFAULT_TOLERANCES: dict[Mode, float] = {
    "upper_box": EXACT_TOLERANCE,
    "packing_as_upper": EXACT_TOLERANCE,
    "lower_box": EXACT_TOLERANCE,
    "mixed_lower": EXACT_TOLERANCE,
    "self_product_lower": EXACT_TOLERANCE,
    "sumset_upper": EXACT_TOLERANCE,
    "assouad": ESTIMATOR_TOLERANCE,
    "nonlinear_upper": ESTIMATOR_TOLERANCE,
    "radial": ESTIMATOR_TOLERANCE,
}


@dataclass(frozen=True)
class CountTable:
    """Per-level box counts N(n) at strictly increasing levels n >= 1."""

    base: int
    rows: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")
        if not self.rows:
            raise ValueError("count table needs at least one row")
        prev = 0
        for n, count in self.rows:
            if n <= prev:
                raise ValueError("levels must be strictly increasing and >= 1")
            if count < 1:
                raise ValueError("counts must be >= 1")
            prev = n

    def validate_against_dim(self, dim: int) -> None:
        """Check the growth bound N(n') <= b^(d (n'-n)) N(n) between rows."""
        for (n0, c0), (n1, c1) in zip(self.rows, self.rows[1:]):
            if c1 > c0 * self.base ** (dim * (n1 - n0)):
                raise ValueError(
                    f"count jump {c0}@{n0} -> {c1}@{n1} exceeds the b^(d dn) bound")

    def slope(self, level: int, count: int) -> float:
        return math.log(count) / (level * math.log(self.base))

    def slopes(self) -> tuple[tuple[int, float], ...]:
        return tuple((n, self.slope(n, c)) for n, c in self.rows)

    def window_rows(self, window: tuple[int, int]) -> tuple[tuple[int, int], ...]:
        lo, hi = window
        if lo > hi:
            raise ValueError("empty window")
        rows = tuple((n, c) for n, c in self.rows if lo <= n <= hi)
        if not rows:
            raise ValueError(f"window {window} selects no table rows")
        return rows


def box_counts(sets_by_level: Callable[[int], CubeSet], levels: Sequence[int]) -> CountTable:
    """Materialize counts for each requested level; bases must agree."""
    rows = []
    base = None
    for n in sorted(levels):
        x = sets_by_level(n)
        if base is None:
            base = x.base
        elif x.base != base:
            raise ValueError(f"inconsistent base at level {n}: {x.base} != {base}")
        rows.append((n, x.count))
    if base is None:
        raise ValueError("no levels requested")
    return CountTable(base, tuple(rows))


def table_for_cubeset(x: CubeSet, levels: Sequence[int] | None = None) -> CountTable:
    """Counts of a single cube set coarsened to each level <= its own."""
    levels = list(levels) if levels is not None else list(range(1, x.level + 1))
    if any(n > x.level for n in levels):
        raise ValueError("cannot refine a cube set beyond its level")
    return box_counts(lambda n: x.coarsen(n), levels)


@dataclass(frozen=True)
class DimEstimate:
    mode: Mode  # upper_box | lower_box
    value: float
    window: tuple[int, int]
    per_level_slope: tuple[tuple[int, float], ...]


def estimate_dim(table: CountTable, mode: Mode, window: tuple[int, int]) -> DimEstimate:
    """Windowed slope extremum: max for upper_box, min for lower_box."""
    if mode not in ("upper_box", "lower_box"):
        raise ValueError(f"unknown estimate mode {mode!r}")
    rows = table.window_rows(window)
    slopes = tuple((n, table.slope(n, c)) for n, c in rows)
    values = [s for _, s in slopes]
    value = max(values) if mode == "upper_box" else min(values)
    return DimEstimate(mode, value, tuple(window), slopes)


@dataclass(frozen=True)
class AssouadEstimate:
    value: float
    coarse_level: int
    fine_level: int
    witness_cell: tuple[int, ...]


def assouad_estimate(x: CubeSet, coarse_level: int) -> AssouadEstimate:
    """Worst local refinement exponent over level-m cells.

    Grid cells play the role of balls (R = b^-m, r = b^-n); the value is
    the largest ln(descendants) / ((n-m) ln b) over all occupied coarse
    cells, with the cell attaining it recorded as witness.
    """
    n = x.level
    if not 0 < coarse_level < n:
        raise ValueError(f"coarse level must satisfy 0 < m < {n}")
    q = x.base ** (n - coarse_level)
    per_coarse: dict[tuple[int, ...], int] = {}
    for cell in x.cells:
        key = tuple(k // q for k in cell)
        per_coarse[key] = per_coarse.get(key, 0) + 1
    denom = (n - coarse_level) * math.log(x.base)
    best_cell, best_count = min(
        per_coarse.items(), key=lambda kv: (-kv[1], kv[0]))
    return AssouadEstimate(
        value=math.log(best_count) / denom,
        coarse_level=coarse_level,
        fine_level=n,
        witness_cell=best_cell,
    )


@dataclass(frozen=True)
class Verdict:
    mode: Mode
    lhs: float
    rhs: float
    slack: float  # rhs - lhs
    holds: bool   # lhs <= rhs + tolerance
    tolerance: float


def verdict(mode: Mode, lhs_estimate: float,
            weighted_terms: Iterable[tuple[float, float]],
            tolerance: float | None = None) -> Verdict:
    """Render one inequality check: lhs <= sum of weight*estimate terms.

    `mixed_lower` is the one-lower-box-term variant: the caller supplies
    the lower-box estimate for the chosen index and upper-box estimates
    for all other terms; this function only combines them.
    """
    terms = list(weighted_terms)
    if any(w <= 0 for w, _ in terms):
        raise ValueError("weights must be positive")
    if tolerance is None:
        tolerance = DEFAULT_TOLERANCES.get(mode, ESTIMATOR_TOLERANCE)
    rhs = float(sum(float(w) * float(e) for w, e in terms))
    lhs = float(lhs_estimate)
    slack = rhs - lhs
    return Verdict(mode, lhs, rhs, slack, lhs <= rhs + tolerance, tolerance)


# --- CSV serialization ---------------------------------------------------

_CTX12 = Context(prec=12)


def fmt12(value) -> str:
    """Serialize a number with 12 significant digits (exact ints pass through)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        if abs(value) < 10 ** 12:
            return str(value)
        return format(_CTX12.create_decimal(value), "e")
    return format(float(value), ".12g")


def counts_csv(table: CountTable) -> str:
    lines = ["level,count,slope"]
    for n, c in table.rows:
        lines.append(f"{n},{fmt12(c)},{fmt12(table.slope(n, c))}")
    return "\n".join(lines) + "\n"


def verdicts_csv(verdicts: Sequence[Verdict]) -> str:
    lines = ["mode,lhs,rhs,slack,holds,tolerance"]
    for v in verdicts:
        lines.append(",".join([
            v.mode, fmt12(v.lhs), fmt12(v.rhs), fmt12(v.slack),
            "true" if v.holds else "false", fmt12(v.tolerance),
        ]))
    return "\n".join(lines) + "\n"
