"""Cube-set transforms: projections, constrained products, constrained
sumsets, nonlinear images, and Jacobian rank checks.

Exactness boundary: anything linear-rational (coordinate dropping,
bounding-box covers of rational projections, membership in constrained
products, incidence guards) is computed over Fractions; nonlinear maps
are evaluated in floating point at cell centers with an empirical
Lipschitz padding, which is why nonlinear verdicts carry the loose
estimator tolerance.

Fixed affine charts (documented here, relied on by tests):
  * linear maps: each output coordinate is rescaled from its exact range
    over [0,1]^d onto [0,1] (coordinate-subset projections are untouched);
  * modulus-scaled pair maps |z|*(z_j, z_k): divide by 2 (range is
    within (0, sqrt(3)] on the unit cube);
  * coordinate-product pair maps (xy, xz) etc.: identity;
  * radial maps in the plane: angle chart u = (atan2 + pi) / (2 pi);
  * radial maps in 3-space: two-chart stereographic atlas with per-point
    chart selection by hemisphere; the lower hemisphere maps through the
    north-pole chart into [0,1/2] x [0,1], the upper one through the
    south-pole chart into [1/2,1] x [0,1], so the two charts never
    conflate cells;
  * coordinate sums: divide by the domain dimension.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .bldatum import LinearSurjection, coordinate_projection
from .exactla import QMatrix, QSubspace, RationalLike, as_rational
from .fracgen import CubeSet, grid_interval_cells

DEFAULT_CELL_BUDGET = 8_000_000


class DomainError(ValueError):
    """A cell violates a map's domain requirements."""


class BudgetExceeded(RuntimeError):
    def __init__(self, bound: int, budget: int):
        super().__init__(f"enumeration bound {bound} exceeds the cell budget {budget}")
        self.bound = bound
        self.budget = budget


# --- map specifications --------------------------------------------------


@dataclass(frozen=True)
class MapSpec:
    """A map from [0,1]^domain_dim into the [0,1]^target_dim chart window."""

    kind: str  # linear | norm_scaled_pair | coordinate_products | radial | sum_coordinates
    domain_dim: int
    target_dim: int
    matrix: QMatrix | None = None
    component: int | None = None
    pin: tuple[Fraction, ...] | None = None

    def describe(self) -> str:
        if self.kind == "linear":
            return f"linear {self.matrix.rows}x{self.matrix.cols}"
        if self.kind in ("norm_scaled_pair", "coordinate_products"):
            return f"{self.kind}[{self.component}]"
        if self.kind == "radial":
            return "radial pin=(" + ", ".join(str(c) for c in self.pin) + ")"
        return self.kind


def linear_map(matrix: QMatrix | LinearSurjection) -> MapSpec:
    m = matrix.matrix if isinstance(matrix, LinearSurjection) else matrix
    return MapSpec("linear", m.cols, m.rows, matrix=m)


def norm_scaled_pair(component: int) -> MapSpec:
    """z -> |z| * (pair of coordinates omitting coordinate `component`)."""
    if component not in (1, 2, 3):
        raise ValueError("component must be 1, 2 or 3")
    return MapSpec("norm_scaled_pair", 3, 2, component=component)


def coordinate_products(component: int) -> MapSpec:
    """Component 1: (xy, xz); 2: (xy, yz); 3: (xz, yz)."""
    if component not in (1, 2, 3):
        raise ValueError("component must be 1, 2 or 3")
    return MapSpec("coordinate_products", 3, 2, component=component)


def radial_map(pin: Sequence[RationalLike]) -> MapSpec:
    p = tuple(as_rational(c) for c in pin)
    if len(p) not in (2, 3):
        raise ValueError("radial maps are provided for dimensions 2 and 3")
    return MapSpec("radial", len(p), len(p) - 1, pin=p)


def sum_coordinates(domain_dim: int) -> MapSpec:
    return MapSpec("sum_coordinates", domain_dim, 1)


_PAIR_AXES = {1: (1, 2), 2: (0, 2), 3: (0, 1)}
_PRODUCT_PAIRS = {1: ((0, 1), (0, 2)), 2: ((0, 1), (1, 2)), 3: ((0, 2), (1, 2))}


def _linear_range(matrix: QMatrix) -> tuple[list[Fraction], list[Fraction]]:
    """Exact per-row range of M x over the unit cube [0,1]^cols."""
    lows, highs = [], []
    for row in matrix.entries:
        lows.append(sum((min(x, Fraction(0)) for x in row), Fraction(0)))
        highs.append(sum((max(x, Fraction(0)) for x in row), Fraction(0)))
    return lows, highs


def evaluate(spec: MapSpec, points: np.ndarray) -> np.ndarray:
    """Chart-normalized float evaluation at an (N, domain_dim) array."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != spec.domain_dim:
        raise ValueError(f"expected points of shape (N, {spec.domain_dim})")
    if spec.kind == "linear":
        m = np.array([[float(x) for x in row] for row in spec.matrix.entries])
        lo, hi = _linear_range(spec.matrix)
        lo = np.array([float(v) for v in lo])
        hi = np.array([float(v) for v in hi])
        raw = pts @ m.T
        return (raw - lo) / (hi - lo)
    if spec.kind == "norm_scaled_pair":
        a, b = _PAIR_AXES[spec.component]
        norm = np.linalg.norm(pts, axis=1)
        return np.stack([norm * pts[:, a], norm * pts[:, b]], axis=1) / 2.0
    if spec.kind == "coordinate_products":
        (a1, b1), (a2, b2) = _PRODUCT_PAIRS[spec.component]
        return np.stack([pts[:, a1] * pts[:, b1], pts[:, a2] * pts[:, b2]], axis=1)
    if spec.kind == "sum_coordinates":
        return (pts.sum(axis=1) / spec.domain_dim)[:, None]
    if spec.kind == "radial":
        pin = np.array([float(c) for c in spec.pin])
        diff = pts - pin
        norm = np.linalg.norm(diff, axis=1)
        u = diff / norm[:, None]
        if spec.domain_dim == 2:
            angle = np.arctan2(u[:, 1], u[:, 0])
            return ((angle + math.pi) / (2 * math.pi))[:, None]
        north = u[:, 2] <= 0
        denom = np.where(north, 1.0 - u[:, 2], 1.0 + u[:, 2])
        sx = u[:, 0] / denom
        sy = u[:, 1] / denom
        x = np.where(north, (sx + 1.0) / 4.0, 0.5 + (sx + 1.0) / 4.0)
        y = (sy + 1.0) / 2.0
        return np.stack([x, y], axis=1)
    raise ValueError(f"unknown map kind {spec.kind!r}")


# --- linear projection of cube sets (exact) ------------------------------


def project_cubes(p: LinearSurjection, x: CubeSet) -> CubeSet:
    """Level-n cover of P(X).

    Coordinate-subset projections drop coordinates exactly.  For general
    rational matrices every source cell contributes the target cells
    meeting the bounding box of its corner images (computed exactly and
    rescaled by the documented range normalization), so the output always
    covers the true image with count distortion bounded by a constant
    depending only on P.
    """
    if p.ambient_dim != x.dim:
        raise ValueError(f"projection expects dimension {p.ambient_dim}, set has {x.dim}")
    axes = p.coordinate_axes()
    if axes is not None:
        cells = frozenset(tuple(c[a] for a in axes) for c in x.cells)
        return CubeSet(x.base, x.level, len(axes), cells)
    side = x.base ** x.level
    s = Fraction(1, side)
    lows, highs = _linear_range(p.matrix)
    spans = [hi - lo for lo, hi in zip(lows, highs)]
    rows = p.matrix.entries
    neg_sum = [sum((e for e in row if e < 0), Fraction(0)) for row in rows]
    pos_sum = [sum((e for e in row if e > 0), Fraction(0)) for row in rows]
    out: set[tuple[int, ...]] = set()
    for cell in x.cells:
        ranges = []
        for j, row in enumerate(rows):
            base_val = sum((row[k] * cell[k] for k in range(len(cell))), Fraction(0))
            rmin = (base_val + neg_sum[j]) * s
            rmax = (base_val + pos_sum[j]) * s
            u_lo = (rmin - lows[j]) / spans[j]
            u_hi = (rmax - lows[j]) / spans[j]
            ranges.append(grid_interval_cells(u_lo, u_hi, x.base, x.level))
        out.update(itertools.product(*ranges))
    return CubeSet(x.base, x.level, p.target_dim, frozenset(out))


# --- constrained products -------------------------------------------------


def _coordinate_setup(projections: Sequence[LinearSurjection], sets: Sequence[CubeSet]):
    if len(projections) != len(sets):
        raise ValueError("one cube set per projection required")
    if not projections:
        raise ValueError("need at least one projection")
    d = projections[0].ambient_dim
    if any(p.ambient_dim != d for p in projections):
        raise ValueError("projections do not share an ambient dimension")
    base, level = sets[0].base, sets[0].level
    if any(xs.base != base or xs.level != level for xs in sets):
        raise ValueError("cube sets must share base and level")
    axes_list = []
    for p, xs in zip(projections, sets):
        axes = p.coordinate_axes()
        if axes is None:
            raise ValueError(
                "constrained_product needs coordinate-subset projections; "
                "use constrained_product_outer for general rational maps")
        if len(axes) != xs.dim:
            raise ValueError("cube-set dimension does not match its projection")
        axes_list.append(axes)
    covered = set().union(*axes_list)
    if covered != set(range(d)):
        raise ValueError("projections must jointly cover every coordinate")
    return d, base, level, axes_list


def constrained_product_bound(projections: Sequence[LinearSurjection],
                              sets: Sequence[CubeSet]) -> int:
    """Upper bound on the backtracking enumeration (product of per-coordinate candidates)."""
    d, _, _, axes_list = _coordinate_setup(projections, sets)
    cand = _coordinate_candidates(d, axes_list, sets)
    bound = 1
    for values in cand:
        bound *= len(values)
    return bound


def _coordinate_candidates(d, axes_list, sets) -> list[set[int]]:
    cand: list[set[int] | None] = [None] * d
    for axes, xs in zip(axes_list, sets):
        for pos, a in enumerate(axes):
            values = {c[pos] for c in xs.cells}
            cand[a] = values if cand[a] is None else cand[a] & values
    return [c if c is not None else set() for c in cand]


def iter_constrained_product(projections: Sequence[LinearSurjection],
                             sets: Sequence[CubeSet],
                             budget: int | None = DEFAULT_CELL_BUDGET) -> Iterator[tuple[int, ...]]:
    """Stream the cells of the constrained product (largest set with
    prescribed coordinate-projection images).

    Backtracks over coordinates with per-projection prefix pruning; the
    a-priori enumeration bound is checked against `budget` first.
    """
    d, base, level, axes_list = _coordinate_setup(projections, sets)
    cand = _coordinate_candidates(d, axes_list, sets)
    if budget is not None:
        bound = 1
        for values in cand:
            bound *= len(values)
        if bound > budget:
            raise BudgetExceeded(bound, budget)
    # prefix_sets[i][t]: partial tuples of X_i over the row positions whose
    # axis is <= t; checked whenever coordinate t belongs to projection i.
    prefix_positions: list[dict[int, list[int]]] = []
    prefix_sets: list[dict[int, set[tuple[int, ...]]]] = []
    for axes, xs in zip(axes_list, sets):
        positions: dict[int, list[int]] = {}
        table: dict[int, set[tuple[int, ...]]] = {}
        for t in sorted(set(axes)):
            pos = [j for j, a in enumerate(axes) if a <= t]
            positions[t] = pos
            table[t] = {tuple(c[j] for j in pos) for c in xs.cells}
        prefix_positions.append(positions)
        prefix_sets.append(table)
    owners: list[list[int]] = [[] for _ in range(d)]
    for i, axes in enumerate(axes_list):
        for a in axes:
            owners[a].append(i)
    ordered_cand = [sorted(values) for values in cand]
    assigned = [0] * d

    def admissible(t: int) -> bool:
        for i in owners[t]:
            pos = prefix_positions[i][t]
            key = tuple(assigned[axes_list[i][j]] for j in pos)
            if key not in prefix_sets[i][t]:
                return False
        return True

    def rec(t: int) -> Iterator[tuple[int, ...]]:
        if t == d:
            yield tuple(assigned)
            return
        for v in ordered_cand[t]:
            assigned[t] = v
            if admissible(t):
                yield from rec(t + 1)

    yield from rec(0)


def constrained_product(projections: Sequence[LinearSurjection],
                        sets: Sequence[CubeSet],
                        budget: int | None = DEFAULT_CELL_BUDGET) -> CubeSet:
    """Materialized constrained product; may legitimately be empty."""
    d, base, level, _ = _coordinate_setup(projections, sets)
    cells = frozenset(iter_constrained_product(projections, sets, budget=budget))
    return CubeSet(base, level, d, cells)


def constrained_product_outer(projections: Sequence[LinearSurjection],
                              sets: Sequence[CubeSet]) -> CubeSet:
    """Outer approximation of the constrained product for general rational maps.

    A cell is kept iff the bounding-box cover of its image meets X_i for
    every i, so the result over-approximates by a constant factor only;
    outputs from this variant should be labelled `outer` in reports.
    """
    if len(projections) != len(sets):
        raise ValueError("one cube set per projection required")
    d = projections[0].ambient_dim
    base, level = sets[0].base, sets[0].level
    if any(xs.base != base or xs.level != level for xs in sets):
        raise ValueError("cube sets must share base and level")
    ranges_data = []
    for p, xs in zip(projections, sets):
        if p.ambient_dim != d:
            raise ValueError("projections do not share an ambient dimension")
        lows, highs = _linear_range(p.matrix)
        spans = [hi - lo for lo, hi in zip(lows, highs)]
        ranges_data.append((p.matrix.entries, lows, spans, xs))

    def box_admissible(cell: tuple[int, ...], lvl: int) -> bool:
        s = Fraction(1, base ** lvl)
        for rows, lows, spans, xs in ranges_data:
            idx_ranges = []
            for j, row in enumerate(rows):
                rmin = sum((row[k] * (cell[k] + (1 if row[k] < 0 else 0)) for k in range(d)),
                           Fraction(0)) * s
                rmax = sum((row[k] * (cell[k] + (1 if row[k] > 0 else 0)) for k in range(d)),
                           Fraction(0)) * s
                u_lo = (rmin - lows[j]) / spans[j]
                u_hi = (rmax - lows[j]) / spans[j]
                idx_ranges.append(grid_interval_cells(u_lo, u_hi, base, level))
            size = 1
            for r in idx_ranges:
                size *= len(r)
            if size <= len(xs.cells):
                if not any(c in xs.cells for c in itertools.product(*idx_ranges)):
                    return False
            else:
                bounds = [(r.start, r.stop) for r in idx_ranges]
                if not any(all(lo <= c[j] < hi for j, (lo, hi) in enumerate(bounds))
                           for c in xs.cells):
                    return False
        return True

    out: set[tuple[int, ...]] = set()
    stack: list[tuple[int, tuple[int, ...]]] = [(0, (0,) * d)]
    while stack:
        lvl, cell = stack.pop()
        if not box_admissible(cell, lvl):
            continue
        if lvl == level:
            out.add(cell)
            continue
        for offs in itertools.product(range(base), repeat=d):
            stack.append((lvl + 1, tuple(k * base + o for k, o in zip(cell, offs))))
    return CubeSet(base, level, d, frozenset(out))


def constrained_sumset(x: CubeSet, sum_dim: int,
                       budget: int | None = DEFAULT_CELL_BUDGET) -> CubeSet:
    """Constrained sumset: sums over tuples all of whose k-dimensional
    coordinate projections land in X, rescaled by 1/sum_dim into [0,1].

    Streams the constrained product of C(d,k) copies of X without
    materializing it; each product cell contributes the level-n cover of
    its exact sum interval.
    """
    k = x.dim
    d = sum_dim
    if not d > k >= 1:
        raise ValueError("need sum_dim > set dimension >= 1")
    projections = [coordinate_projection(d, axes)
                   for axes in itertools.combinations(range(d), k)]
    sets = [x] * len(projections)
    sums: set[int] = set()
    for cell in iter_constrained_product(projections, sets, budget=budget):
        sums.add(sum(cell))
    side = x.base ** x.level
    cells: set[tuple[int, ...]] = set()
    for total in sums:
        lo = Fraction(total, d * side)
        hi = Fraction(total + d, d * side)
        for idx in grid_interval_cells(lo, hi, x.base, x.level):
            cells.add((idx,))
    return CubeSet(x.base, x.level, 1, frozenset(cells))


# --- nonlinear images -----------------------------------------------------


@dataclass(frozen=True)
class ImageOptions:
    """pad_cells is extra padding on top of the Lipschitz-derived radius."""

    pad_cells: int = 0
    lipschitz_safety: float = 2.0

    def __post_init__(self):
        if self.pad_cells < 0:
            raise ValueError("pad_cells must be >= 0")
        if self.lipschitz_safety < 1:
            raise ValueError("lipschitz_safety must be >= 1")


def _check_domain(spec: MapSpec, x: CubeSet) -> None:
    side = x.base ** x.level
    if spec.kind in ("norm_scaled_pair", "coordinate_products"):
        for cell in x.cells:
            if min(cell) < 1:
                raise DomainError(
                    f"cell {cell} touches the boundary of the positive orthant "
                    f"(level {x.level}); shift the set away from 0")
    elif spec.kind == "radial":
        min_gap = Fraction(2, side)
        for cell in x.cells:
            dist_sq = Fraction(0)
            for j, k in enumerate(cell):
                lo = Fraction(k, side)
                hi = Fraction(k + 1, side)
                gap = max(lo - spec.pin[j], spec.pin[j] - hi, Fraction(0))
                dist_sq += gap * gap
            if dist_sq < min_gap * min_gap:
                raise DomainError(
                    f"cell {cell} is within 2 grid cells of the pin "
                    f"({', '.join(str(c) for c in spec.pin)})")


def _lipschitz_estimate(spec: MapSpec, centers: np.ndarray, values: np.ndarray) -> float:
    """Max finite-difference stretch over sampled cell pairs (restricted to X)."""
    n = len(centers)
    if n < 2:
        return 0.0
    stride = max(1, n // 256)
    idx = np.arange(0, n, stride)
    pairs = [(idx[i], idx[i + 1]) for i in range(len(idx) - 1)]
    third = max(1, len(idx) // 3)
    pairs += [(idx[i], idx[(i + third) % len(idx)]) for i in range(len(idx))]
    best = 0.0
    for a, b in pairs:
        if a == b:
            continue
        dc = float(np.linalg.norm(centers[a] - centers[b]))
        if dc == 0.0:
            continue
        du = float(np.linalg.norm(values[a] - values[b]))
        best = max(best, du / dc)
    return best


def nonlinear_image(spec: MapSpec, x: CubeSet,
                    opts: ImageOptions = ImageOptions()) -> CubeSet:
    """Cover of T(X) on the level-n target grid.

    Evaluates T at every cell center and marks the containing target cell
    plus a padding radius of ceil(lipschitz_safety * L) cells, where L is
    the maximum finite-difference stretch observed over sampled pairs of
    X's cells (the stretch restricted to X is what controls the cover,
    so maps that collapse X pad by nothing even when their ambient
    Lipschitz constant is large).
    """
    if spec.domain_dim != x.dim:
        raise ValueError(f"map expects dimension {spec.domain_dim}, set has {x.dim}")
    _check_domain(spec, x)
    side = x.base ** x.level
    cells = np.array(x.sorted_cells(), dtype=np.int64)
    centers = (cells + 0.5) / side
    values = evaluate(spec, centers)
    stretch = _lipschitz_estimate(spec, centers, values)
    pad = opts.pad_cells + math.ceil(opts.lipschitz_safety * stretch)
    idx = np.clip(np.floor(values * side).astype(np.int64), 0, side - 1)
    idx = np.unique(idx, axis=0)
    k = spec.target_dim
    if pad == 0:
        padded = idx
    else:
        offsets = np.array(list(itertools.product(range(-pad, pad + 1), repeat=k)),
                           dtype=np.int64)
        stacked = (idx[:, None, :] + offsets[None, :, :]).reshape(-1, k)
        in_range = ((stacked >= 0) & (stacked < side)).all(axis=1)
        padded = np.unique(stacked[in_range], axis=0)
    out = frozenset(tuple(int(v) for v in row) for row in padded)
    return CubeSet(x.base, x.level, k, out)


def jacobian_rank(spec: MapSpec, point: Sequence, h: float = 1e-5, tol: float = 1e-6) -> int:
    """Numerical rank of the central-difference Jacobian at `point`."""
    if h <= 0:
        raise ValueError("step h must be positive")
    x = np.array([float(c) for c in point], dtype=float)
    if x.shape != (spec.domain_dim,):
        raise ValueError(f"point must have {spec.domain_dim} coordinates")
    if spec.kind in ("norm_scaled_pair", "coordinate_products") and (x - h <= 0).any():
        raise DomainError(f"point {point} is not interior to the positive orthant at step {h}")
    if spec.kind == "radial":
        pin = np.array([float(c) for c in spec.pin])
        if np.linalg.norm(x - pin) <= 2 * h:
            raise DomainError(f"point {point} is too close to the pin")
    probes = np.repeat(x[None, :], 2 * spec.domain_dim, axis=0)
    for j in range(spec.domain_dim):
        probes[2 * j, j] += h
        probes[2 * j + 1, j] -= h
    vals = evaluate(spec, probes)
    jac = np.stack([(vals[2 * j] - vals[2 * j + 1]) / (2 * h)
                    for j in range(spec.domain_dim)], axis=1)
    singular = np.linalg.svd(jac, compute_uv=False)
    return int((singular > tol).sum())


# --- exact incidence guards ------------------------------------------------


def cube_contains_point(cell: tuple[int, ...], base: int, level: int,
                        point: Sequence[Fraction]) -> bool:
    side = base ** level
    for k, x in zip(cell, point):
        if not Fraction(k, side) <= x <= Fraction(k + 1, side):
            return False
    return True


def cube_meets_line(cell: tuple[int, ...], base: int, level: int,
                    p0: Sequence[Fraction], direction: Sequence[Fraction]) -> bool:
    """Exact slab test for the (unbounded) line p0 + t * direction."""
    side = base ** level
    t_lo: Fraction | None = None
    t_hi: Fraction | None = None
    for j, k in enumerate(cell):
        lo = Fraction(k, side)
        hi = Fraction(k + 1, side)
        v = direction[j]
        if v == 0:
            if not lo <= p0[j] <= hi:
                return False
            continue
        a = (lo - p0[j]) / v
        b = (hi - p0[j]) / v
        if a > b:
            a, b = b, a
        t_lo = a if t_lo is None or a > t_lo else t_lo
        t_hi = b if t_hi is None or b < t_hi else t_hi
        if t_lo is not None and t_hi is not None and t_lo > t_hi:
            return False
    return True


def affine_span_witness(x: CubeSet, points: Sequence[Sequence[RationalLike]]) -> tuple[int, ...] | None:
    """First cell of X whose closed cube meets the affine span of `points`.

    Supports spans of dimension 0 (a point) and 1 (a line), which covers
    every proper pin subset in the shipped ambient dimensions (d <= 3).
    """
    pts = [tuple(as_rational(c) for c in p) for p in points]
    if not pts:
        raise ValueError("need at least one point")
    if any(len(p) != x.dim for p in pts):
        raise ValueError("point dimension does not match the cube set")
    base_pt = pts[0]
    raw_directions = [tuple(a - b for a, b in zip(p, base_pt)) for p in pts[1:]]
    raw_directions = [d for d in raw_directions if any(c != 0 for c in d)]
    if raw_directions:
        span = QSubspace.from_vectors(x.dim, raw_directions)
        if span.dim > 1:
            raise NotImplementedError("affine spans of dimension >= 2 are not needed at desk scale")
        direction = span.basis.entries[0]
    else:
        direction = None
    for cell in sorted(x.cells):
        if direction is not None:
            if cube_meets_line(cell, x.base, x.level, base_pt, direction):
                return cell
        elif cube_contains_point(cell, x.base, x.level, base_pt):
            return cell
    return None
