"""Brascamp-Lieb datum validation and weight optimization.

A datum is a family of rational linear surjections P_i: Q^d -> Q^{d_i}
with positive weights c_i.  Admissibility requires the scaling identity
sum_i c_i d_i = d and the dimension condition dim V <= sum_i c_i dim P_i(V)
for all subspaces V.  The universal quantifier is replaced by a finite
test family (kernel lattice, coordinate subspaces, seeded random
falsifiers); every verdict is therefore relative to the family it was
tested against, and reports carry the family size and truncation flag.

Weight optimization minimizes sum_i c_i s_i over the polytope of
admissible weights using the exact rational simplex, so optima are exact
vertices, never rounded.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .exactla import (
    ClosureResult,
    QMatrix,
    QSubspace,
    as_rational,
    image_dim,
    kernel_basis,
    lattice_closure,
    matrix_from_text,
    matrix_to_text,
    rank,
    subspace_intersect,
)
from .simplex import solve_lp

RealLike = Union[int, float, str, Fraction]


def real_to_rational(value: RealLike) -> Fraction:
    """Exact decimal reading of a real's serialized form.

    Floats go through their shortest round-trip decimal representation,
    so 0.1 becomes 1/10 (the decimal someone wrote), not the binary
    5404319552844595/2**54.
    """
    if isinstance(value, float):
        return Fraction(str(value))
    return as_rational(value)


@dataclass(frozen=True)
class LinearSurjection:
    """Surjective linear map Q^d -> Q^{d_i}, stored as a full-rank matrix."""

    matrix: QMatrix

    def __post_init__(self):
        if self.matrix.rows < 1:
            raise ValueError("a surjection needs at least one row")
        if self.matrix.rows > self.matrix.cols:
            raise ValueError("target dimension exceeds ambient dimension")
        if rank(self.matrix) != self.matrix.rows:
            raise ValueError("matrix rows are not independent; not a surjection")

    @property
    def target_dim(self) -> int:
        return self.matrix.rows

    @property
    def ambient_dim(self) -> int:
        return self.matrix.cols

    @property
    def kernel(self) -> QSubspace:
        return kernel_basis(self.matrix)

    def coordinate_axes(self) -> tuple[int, ...] | None:
        """Kept axes if this is a coordinate-subset projection, else None."""
        axes = []
        for row in self.matrix.entries:
            hits = [j for j, x in enumerate(row) if x != 0]
            if len(hits) != 1 or row[hits[0]] != 1:
                return None
            axes.append(hits[0])
        return tuple(axes) if len(set(axes)) == len(axes) else None


def coordinate_projection(ambient_dim: int, axes: Sequence[int]) -> LinearSurjection:
    """Projection of Q^d onto the listed coordinate axes."""
    rows = []
    for a in axes:
        if not 0 <= a < ambient_dim:
            raise ValueError(f"axis {a} outside ambient dimension {ambient_dim}")
        row = [Fraction(0)] * ambient_dim
        row[a] = Fraction(1)
        rows.append(row)
    return LinearSurjection(QMatrix.from_rows(rows))


@dataclass(frozen=True)
class BLDatum:
    """Projection family with positive rational weights."""

    projections: tuple[LinearSurjection, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.projections:
            raise ValueError("datum needs at least one projection")
        d = self.projections[0].ambient_dim
        if any(p.ambient_dim != d for p in self.projections):
            raise ValueError("projections do not share an ambient dimension")
        if len(self.weights) != len(self.projections):
            raise ValueError("one weight per projection required")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be strictly positive")

    @classmethod
    def of(cls, projections: Sequence[LinearSurjection], weights: Sequence[RealLike]) -> "BLDatum":
        return cls(tuple(projections), tuple(real_to_rational(w) for w in weights))

    @property
    def ambient_dim(self) -> int:
        return self.projections[0].ambient_dim


@dataclass(frozen=True)
class ConditionReport:
    scaling_ok: bool
    dimension_ok: bool
    violating_subspace: QSubspace | None
    family_size: int
    family_truncated: bool


@dataclass(frozen=True)
class WeightSolution:
    weights: tuple[Fraction, ...]
    objective: Fraction | float  # Fraction when feasible, math.inf otherwise
    feasible: bool
    all_positive: bool
    violating_subspace: QSubspace | None = None  # structural witness when the polytope is empty


def check_scaling(datum: BLDatum) -> bool:
    """Exact test of the identity sum_i c_i d_i = d."""
    total = sum((w * p.target_dim for w, p in zip(datum.weights, datum.projections)), Fraction(0))
    return total == datum.ambient_dim


def check_dimension_condition(datum: BLDatum, family: Sequence[QSubspace],
                              family_truncated: bool = False) -> ConditionReport:
    """Verify dim V <= sum_i c_i dim P_i(V) exactly for every V in family."""
    violator = None
    for v in family:
        if v.ambient_dim != datum.ambient_dim:
            raise ValueError("family subspace has a different ambient dimension")
        rhs = sum((w * image_dim(p.matrix, v) for w, p in zip(datum.weights, datum.projections)),
                  Fraction(0))
        if v.dim > rhs:
            violator = v
            break
    return ConditionReport(
        scaling_ok=check_scaling(datum),
        dimension_ok=violator is None,
        violating_subspace=violator,
        family_size=len(family),
        family_truncated=family_truncated,
    )


def _coordinate_subspaces(d: int) -> list[QSubspace]:
    out = []
    for mask in range(2 ** d):
        axes = [j for j in range(d) if mask >> j & 1]
        if not axes:
            out.append(QSubspace.zero(d))
            continue
        vectors = []
        for a in axes:
            e = [Fraction(0)] * d
            e[a] = Fraction(1)
            vectors.append(e)
        out.append(QSubspace.from_vectors(d, vectors))
    return out


def _random_subspace(rng: random.Random, d: int) -> QSubspace:
    k = rng.randint(1, max(1, d - 1))
    vectors = [[Fraction(rng.randint(-4, 4), rng.randint(1, 4)) for _ in range(d)]
               for _ in range(k)]
    return QSubspace.from_vectors(d, vectors)


def critical_subspaces(projections: Sequence[LinearSurjection],
                       include_coordinate: bool = True,
                       random_samples: int = 0,
                       cap: int = 512,
                       seed: int = 0) -> ClosureResult:
    """Finite test family for the dimension condition.

    Lattice closure of the projection kernels, plus (for d <= 6) the 2^d
    coordinate subspaces, plus seeded pseudo-random falsifier subspaces.
    Deduplicated, sorted, capped; hitting the cap sets the truncated flag.
    """
    if not projections:
        raise ValueError("need at least one projection")
    d = projections[0].ambient_dim
    if any(p.ambient_dim != d for p in projections):
        raise ValueError("projections do not share an ambient dimension")
    kernels = [p.kernel for p in projections]
    closure = lattice_closure(kernels, cap=cap)
    found = set(closure.subspaces)
    truncated = closure.truncated
    extras: list[QSubspace] = []
    if include_coordinate and d <= 6:
        extras.extend(_coordinate_subspaces(d))
    rng = random.Random(seed)
    extras.extend(_random_subspace(rng, d) for _ in range(random_samples))
    for s in extras:
        if s not in found:
            if len(found) >= cap:
                truncated = True
                break
            found.add(s)
    out = sorted(found, key=QSubspace.sort_key)[:cap]
    return ClosureResult(out, truncated)


def _kernel_intersection(projections: Sequence[LinearSurjection]) -> QSubspace:
    acc = projections[0].kernel
    for p in projections[1:]:
        acc = subspace_intersect(acc, p.kernel)
    return acc


def _dimension_rows(projections, family):
    rows, rhs = [], []
    for v in family:
        rows.append([Fraction(image_dim(p.matrix, v)) for p in projections])
        rhs.append(Fraction(v.dim))
    return rows, rhs


def optimize_weights(projections: Sequence[LinearSurjection],
                     s: Sequence[RealLike],
                     family: Sequence[QSubspace]) -> WeightSolution:
    """Minimize sum_i c_i s_i over the admissible-weight polytope.

    The LP is exact end-to-end: s entries are read as exact decimals and
    the simplex runs over Fractions.  Weights are relaxed to c_i >= 0 and
    strict positivity of the returned vertex is reported separately; an
    empty polytope yields objective +inf rather than an error.
    """
    if len(s) != len(projections):
        raise ValueError("one s entry per projection required")
    if not family:
        raise ValueError("family must be nonempty")
    d = projections[0].ambient_dim
    cost = [real_to_rational(x) for x in s]
    a_ge, b_ge = _dimension_rows(projections, family)
    a_eq = [[Fraction(p.target_dim) for p in projections]]
    b_eq = [Fraction(d)]
    res = solve_lp(cost, a_ge, b_ge, a_eq, b_eq)
    if res.status != "optimal":
        witness = _kernel_intersection(projections)
        return WeightSolution(
            weights=(),
            objective=math.inf,
            feasible=False,
            all_positive=False,
            violating_subspace=witness if witness.dim > 0 else None,
        )
    weights = tuple(res.x)
    return WeightSolution(
        weights=weights,
        objective=res.objective,
        feasible=True,
        all_positive=all(w > 0 for w in weights),
    )


def is_bl_feasible(projections: Sequence[LinearSurjection],
                   family: Sequence[QSubspace]) -> bool:
    """True iff some strictly positive weight vector is admissible.

    Maximizes an auxiliary lower bound t <= min_i c_i over the relaxed
    polytope; the family admits positive weights iff the optimum t is
    strictly positive.
    """
    if not family:
        raise ValueError("family must be nonempty")
    m = len(projections)
    d = projections[0].ambient_dim
    cost = [Fraction(0)] * m + [Fraction(-1)]  # maximize t
    a_ge, b_ge = _dimension_rows(projections, family)
    a_ge = [row + [Fraction(0)] for row in a_ge]
    for i in range(m):
        row = [Fraction(0)] * (m + 1)
        row[i] = Fraction(1)
        row[m] = Fraction(-1)
        a_ge.append(row)  # c_i - t >= 0
        b_ge.append(Fraction(0))
    a_eq = [[Fraction(p.target_dim) for p in projections] + [Fraction(0)]]
    b_eq = [Fraction(d)]
    res = solve_lp(cost, a_ge, b_ge, a_eq, b_eq)
    return res.status == "optimal" and res.objective < 0


# --- datum text format ------------------------------------------------
#
#   ambient <d>
#   projection
#   <p/q> ... <p/q>        (one line per matrix row)
#   projection
#   ...
#   weights <w> ... <w>    (optional)
#
# Blank lines and `#` comments are ignored.  Entries serialize as p/q,
# so files round-trip losslessly.


def datum_to_text(projections: Sequence[LinearSurjection],
                  weights: Sequence[Fraction] | None = None) -> str:
    lines = [f"ambient {projections[0].ambient_dim}"]
    for p in projections:
        lines.append("projection")
        lines.append(matrix_to_text(p.matrix))
    if weights is not None:
        lines.append("weights " + " ".join(f"{w.numerator}/{w.denominator}" for w in weights))
    return "\n".join(lines) + "\n"


class DatumParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def datum_from_text(text: str) -> tuple[list[LinearSurjection], list[Fraction] | None]:
    ambient: int | None = None
    projections: list[LinearSurjection] = []
    weights: list[Fraction] | None = None
    pending_rows: list[str] = []
    pending_start = 0

    def flush(line_no: int):
        if pending_rows:
            try:
                m = matrix_from_text("\n".join(pending_rows))
            except ValueError as e:
                raise DatumParseError(pending_start, str(e)) from e
            if ambient is None:
                raise DatumParseError(pending_start, "projection before ambient line")
            if m.cols != ambient:
                raise DatumParseError(pending_start,
                                      f"projection has {m.cols} columns, ambient is {ambient}")
            projections.append(LinearSurjection(m))
            pending_rows.clear()

    in_projection = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0]
        if head == "ambient":
            flush(line_no)
            in_projection = False
            try:
                ambient = int(line.split()[1])
            except (IndexError, ValueError) as e:
                raise DatumParseError(line_no, "ambient expects a positive integer") from e
        elif head == "projection":
            flush(line_no)
            in_projection = True
            pending_start = line_no
        elif head == "weights":
            flush(line_no)
            in_projection = False
            try:
                weights = [Fraction(tok) for tok in line.split()[1:]]
            except ValueError as e:
                raise DatumParseError(line_no, f"bad weight token: {e}") from e
        elif in_projection:
            pending_rows.append(line)
        else:
            raise DatumParseError(line_no, f"unexpected line: {raw.strip()!r}")
    flush(len(text.splitlines()) + 1)
    if ambient is None:
        raise DatumParseError(1, "missing ambient line")
    if not projections:
        raise DatumParseError(1, "no projection blocks found")
    if weights is not None and len(weights) != len(projections):
        raise DatumParseError(1, "weights count does not match projections")
    return projections, weights
