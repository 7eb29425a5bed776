"""Config-driven experiment runner and command-line interface.

Scenarios are YAML files (tree-structured, human-readable; the schema is
documented in the README) that wire generators, projections, datum
checks, weight optimization, and verdicts into named experiments.
Reports are byte-reproducible given the same scenario file and seed: no
timestamps, sorted cells, fixed 12-significant-digit number formatting.

Exit codes: 0 success, 1 verdict mismatch, 2 input error, 3 budget
exceeded.  Expected-fail checks are first class: a scenario passes when
every check matches its declared expectation, including the inequalities
that are supposed to fail.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .bldatum import (
    BLDatum,
    LinearSurjection,
    check_dimension_condition,
    check_scaling,
    critical_subspaces,
    datum_from_text,
    is_bl_feasible,
    optimize_weights,
    real_to_rational,
)
from .dimest import (
    CountTable,
    Verdict,
    assouad_estimate,
    counts_csv,
    estimate_dim,
    fmt12,
    table_for_cubeset,
    verdict,
    verdicts_csv,
)
from .exactla import QMatrix, QSubspace, as_rational, matrix_from_text
from .fracgen import (
    CubeSet,
    GeneratorSpec,
    InterleavedSpec,
    ProductSpec,
    cubeset_from_text,
    cubeset_to_text,
    generator_from_dict,
    product,
)
from .setops import (
    BudgetExceeded,
    DEFAULT_CELL_BUDGET,
    DomainError,
    ImageOptions,
    affine_span_witness,
    constrained_sumset,
    coordinate_products,
    jacobian_rank,
    nonlinear_image,
    norm_scaled_pair,
    project_cubes,
    radial_map,
)


class ScenarioError(ValueError):
    """Scenario file is malformed; the message names the offending key."""


class DomainGuardError(ValueError):
    """An experiment's domain hypotheses fail outside expected-fail mode."""


EXIT_OK = 0
EXIT_VERDICT_MISMATCH = 1
EXIT_INPUT_ERROR = 2
EXIT_BUDGET = 3


# --- direction sweeps -----------------------------------------------------

_SCALE = 1 << 20


@dataclass(frozen=True)
class SweepResult:
    angles: tuple          # direction parameters (angles in 2d, (azimuth, z) in 3d)
    estimates: tuple[float, ...]
    threshold: float       # effective threshold: fraction * est(X) - margin
    below_threshold_count: int


def _estimate_from_covered(covered: np.ndarray, base: int, level: int, dim: int) -> float:
    """Upper box estimate (max slope over levels 1..level) of a covered index set."""
    best = 0.0
    logb = math.log(base)
    for lvl in range(1, level + 1):
        q = base ** (level - lvl)
        if dim == 1:
            count = np.unique(covered // q).size
        else:
            coarse = covered // q
            side = base ** lvl
            count = np.unique(coarse[:, 0] * side + coarse[:, 1]).size
        best = max(best, math.log(count) / (lvl * logb))
    return best


def _sweep_estimate_2d(cells: np.ndarray, base: int, level: int, angle: float) -> float:
    a = round(math.cos(angle) * _SCALE)
    c = round(math.sin(angle) * _SCALE)
    side = base ** level
    base_val = a * cells[:, 0] + c * cells[:, 1]
    vmin = base_val + min(a, 0) + min(c, 0)
    vmax = base_val + max(a, 0) + max(c, 0)
    gmin = side * (min(a, 0) + min(c, 0))
    span = side * (abs(a) + abs(c))
    t_lo = (vmin - gmin) * side
    t_hi = (vmax - gmin) * side
    ilow = np.where(t_lo % span == 0, t_lo // span - 1, t_lo // span)
    ilow = np.maximum(ilow, 0)
    ihigh = np.minimum(t_hi // span, side - 1)
    widths = ihigh - ilow + 1
    pieces = [ilow[widths > w] + w for w in range(int(widths.max()))]
    covered = np.unique(np.concatenate(pieces))
    return _estimate_from_covered(covered, base, level, 1)


def _plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([0.0, 0.0, 1.0])
    if abs(normal @ helper) > 0.9:
        helper = np.array([1.0, 0.0, 0.0])
    u = np.cross(normal, helper)
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    return u, v


def _sweep_estimate_3d(cells: np.ndarray, base: int, level: int,
                       u: np.ndarray, v: np.ndarray) -> float:
    side = base ** level
    idx_pairs = []
    for row in (u, v):
        base_val = cells @ row
        vmin = base_val + np.minimum(row, 0).sum()
        vmax = base_val + np.maximum(row, 0).sum()
        gmin = side * np.minimum(row, 0).sum()
        gmax = side * np.maximum(row, 0).sum()
        span = gmax - gmin
        ilow = np.maximum(np.floor((vmin - gmin) * side / span - 1e-9), 0).astype(np.int64)
        ihigh = np.minimum(np.floor((vmax - gmin) * side / span + 1e-9), side - 1).astype(np.int64)
        idx_pairs.append((ilow, ihigh))
    (xl, xh), (yl, yh) = idx_pairs
    pieces = []
    for wx in range(int((xh - xl).max()) + 1):
        for wy in range(int((yh - yl).max()) + 1):
            mask = (xl + wx <= xh) & (yl + wy <= yh)
            if mask.any():
                pieces.append(np.stack([xl[mask] + wx, yl[mask] + wy], axis=1))
    covered = np.unique(np.concatenate(pieces), axis=0)
    return _estimate_from_covered(covered, base, level, 2)


def sweep_directions(x: CubeSet, num_directions: int, threshold_fraction: float,
                     margin: float = 0.05) -> SweepResult:
    """Project X onto equally spaced directions and estimate each image.

    In the plane the directions are lines at angles k*pi/N (the projection
    is exact integer interval covering at 2^-20 direction resolution); in
    3-space they are planes whose unit normals follow a golden-angle
    spiral over the upper hemisphere.  A direction counts as below
    threshold when its image estimate is smaller than
    threshold_fraction * est(X) - margin; the margin absorbs finite-scale
    slack in these limsup-type estimates.
    """
    if num_directions < 3:
        raise ValueError("need at least 3 directions")
    if x.dim not in (2, 3):
        raise ValueError("direction sweeps are provided for dimensions 2 and 3")
    cells = np.array(x.sorted_cells(), dtype=np.int64)
    est_x = max(s for _, s in table_for_cubeset(x).slopes())
    threshold = threshold_fraction * est_x - margin
    params = []
    estimates = []
    if x.dim == 2:
        for k in range(num_directions):
            angle = k * math.pi / num_directions
            params.append(angle)
            estimates.append(_sweep_estimate_2d(cells, x.base, x.level, angle))
    else:
        golden = math.pi * (3.0 - math.sqrt(5.0))
        for k in range(num_directions):
            z = (k + 0.5) / num_directions
            azimuth = k * golden
            r = math.sqrt(1.0 - z * z)
            normal = np.array([r * math.cos(azimuth), r * math.sin(azimuth), z])
            u, v = _plane_basis(normal)
            params.append((azimuth % (2 * math.pi), z))
            estimates.append(_sweep_estimate_3d(cells.astype(float), x.base, x.level, u, v))
    below = sum(1 for e in estimates if e < threshold)
    return SweepResult(tuple(params), tuple(estimates), threshold, below)


# --- radial experiments -----------------------------------------------------


@dataclass(frozen=True)
class RadialReport:
    estimates: tuple[float, ...]
    lhs: float
    check: Verdict
    witness_pin: int
    witness_ok: bool
    guard_violations: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    general_position: bool
    source_level: int
    image_level: int


def _pins_general_position(pins: list[tuple[Fraction, ...]]) -> bool:
    d = len(pins[0])
    diffs = [tuple(a - b for a, b in zip(p, pins[0])) for p in pins[1:]]
    diffs = [v for v in diffs if any(c != 0 for c in v)]
    if len(diffs) < d - 1:
        return False
    return QSubspace.from_vectors(d, diffs).dim == d - 1


def radial_experiment(x: CubeSet, pins: Sequence[Sequence], mode: str = "expect-holds",
                      image_level: int | None = None,
                      opts: ImageOptions | None = None,
                      tolerance: float | None = None) -> RadialReport:
    """Pinned direction-map experiment.

    Requires exactly d pins in general position and checks, by exact
    incidence tests, that X avoids the affine spans of proper pin
    subsets; when that domain guard trips outside expect-fail mode the
    experiment refuses to run.  Images are computed at X's level (the
    source level) and counted at `image_level`, so a refined source
    sharpens the image cover at the counting scale.  Per-pin estimates
    are single-scale slopes at the counting level.
    """
    if mode not in ("expect-holds", "expect-fail"):
        raise ValueError(f"unknown mode {mode!r}")
    d = x.dim
    pin_pts = [tuple(as_rational(c) for c in p) for p in pins]
    if len(pin_pts) != d:
        raise ValueError(f"need exactly {d} pins, got {len(pin_pts)}")
    if any(len(p) != d for p in pin_pts):
        raise ValueError("pin dimension does not match the set")
    general_position = _pins_general_position(pin_pts)
    if not general_position and mode != "expect-fail":
        raise DomainGuardError("pins are not in general position")
    violations = []
    for size in range(1, d):
        for subset in _subsets(range(d), size):
            witness = affine_span_witness(x, [pin_pts[i] for i in subset])
            if witness is not None:
                violations.append((tuple(subset), witness))
    if violations and mode != "expect-fail":
        subset, cell = violations[0]
        raise DomainGuardError(
            f"set meets the affine span of pins {subset} at cell {cell}; "
            "the inequality's hypotheses fail (rerun in expect-fail mode to exhibit it)")
    level = x.level if image_level is None else image_level
    if not 1 <= level <= x.level:
        raise ValueError("image_level must lie in 1..X.level")
    options = opts or ImageOptions()
    logb = math.log(x.base)
    estimates = []
    for pin in pin_pts:
        image = nonlinear_image(radial_map(pin), x, options)
        count = image.coarsen(level).count
        estimates.append(math.log(count) / (level * logb))
    lhs = math.log(x.coarsen(level).count) / (level * logb)
    w = 1.0 / (d - 1)
    vd = verdict("radial", lhs, [(w, e) for e in estimates], tolerance)
    witness_pin = max(range(d), key=lambda i: estimates[i])
    witness_ok = estimates[witness_pin] >= (d - 1) / d * lhs - vd.tolerance
    return RadialReport(
        estimates=tuple(estimates),
        lhs=lhs,
        check=vd,
        witness_pin=witness_pin,
        witness_ok=witness_ok,
        guard_violations=tuple(violations),
        general_position=general_position,
        source_level=x.level,
        image_level=level,
    )


def _subsets(items, size):
    import itertools
    return itertools.combinations(items, size)


# --- scenarios --------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    seed: int = 0
    budget_cells: int = DEFAULT_CELL_BUDGET
    set_spec: GeneratorSpec | None = None
    window: tuple[int, int] = (1, 6)
    levels: tuple[int, ...] = ()
    projections: tuple[LinearSurjection, ...] = ()
    weights: tuple[Fraction, ...] = ()
    datum_s: tuple[Fraction, ...] | None = None
    random_samples: int = 0
    checks: tuple[dict, ...] = ()
    out_dir: str | None = None


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ScenarioError(f"missing key {key!r} in {context}")
    return mapping[key]


def _parse_window(raw, context: str) -> tuple[int, int]:
    if isinstance(raw, dict):
        return int(_require(raw, "min", context)), int(_require(raw, "max", context))
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        return int(raw[0]), int(raw[1])
    raise ScenarioError(f"key {context!r} must be a min/max mapping or a pair")


def _parse_datum(raw: dict, base_dir: Path) -> tuple[tuple[LinearSurjection, ...], tuple[Fraction, ...]]:
    if "file" in raw:
        path = base_dir / raw["file"]
        try:
            projections, weights = datum_from_text(path.read_text())
        except OSError as e:
            raise ScenarioError(f"datum file {path}: {e}") from e
        file_weights = tuple(weights) if weights else ()
    else:
        ambient = int(_require(raw, "ambient", "datum"))
        projections = []
        for k, block in enumerate(_require(raw, "projections", "datum")):
            rows = _require(block, "rows", f"datum.projections[{k}]")
            m = QMatrix.from_rows([[as_rational(v) for v in row] for row in rows])
            if m.cols != ambient:
                raise ScenarioError(
                    f"datum.projections[{k}] has {m.cols} columns, ambient is {ambient}")
            projections.append(LinearSurjection(m))
        file_weights = ()
    if "weights" in raw:
        weights = tuple(real_to_rational(w) for w in raw["weights"])
    else:
        weights = file_weights
    return tuple(projections), weights


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ScenarioError(f"cannot parse {path}{where}: {e}") from e
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path} does not contain a mapping")
    name = _require(raw, "name", "scenario")
    scenario = Scenario(name=str(name))
    scenario.seed = int(raw.get("seed", 0))
    scenario.budget_cells = int(raw.get("budget_cells", DEFAULT_CELL_BUDGET))
    if "set" in raw:
        try:
            scenario.set_spec = generator_from_dict(raw["set"])
        except ValueError as e:
            raise ScenarioError(f"key 'set': {e}") from e
    if "window" in raw:
        scenario.window = _parse_window(raw["window"], "window")
    if "levels" in raw:
        levels_raw = raw["levels"]
        if isinstance(levels_raw, dict):
            lo, hi = _parse_window(levels_raw, "levels")
            scenario.levels = tuple(range(lo, hi + 1))
        else:
            scenario.levels = tuple(int(v) for v in levels_raw)
    else:
        scenario.levels = tuple(range(scenario.window[0], scenario.window[1] + 1))
    if "datum" in raw:
        scenario.projections, scenario.weights = _parse_datum(raw["datum"], path.parent)
        if "s" in raw["datum"]:
            scenario.datum_s = tuple(real_to_rational(v) for v in raw["datum"]["s"])
        scenario.random_samples = int(raw["datum"].get("random_samples", 0))
    checks = raw.get("checks", [])
    if not isinstance(checks, list):
        raise ScenarioError("key 'checks' must be a list")
    for k, check in enumerate(checks):
        if not isinstance(check, dict) or "mode" not in check:
            raise ScenarioError(f"checks[{k}] must be a mapping with a 'mode' key")
        if check.get("expect", "holds") not in ("holds", "fails"):
            raise ScenarioError(f"checks[{k}].expect must be 'holds' or 'fails'")
    scenario.checks = tuple(checks)
    scenario.out_dir = raw.get("out_dir")
    return scenario


# --- scenario execution -----------------------------------------------------


@dataclass
class CheckOutcome:
    label: str
    result: Verdict
    expect: str
    ok: bool
    notes: tuple[str, ...] = ()


@dataclass
class ScenarioReport:
    name: str
    outcomes: list[CheckOutcome]
    out_dir: Path
    exit_code: int
    summary_path: Path


def _closed_form_table(spec: GeneratorSpec, levels: Sequence[int], budget: int) -> CountTable:
    rows = []
    for n in sorted(levels):
        rows.append((n, spec.count_at(n)))
    return CountTable(spec.base, tuple(rows))


def _build_with_budget(spec: GeneratorSpec, level: int, budget: int) -> CubeSet:
    try:
        expected = spec.count_at(level)
    except Exception:
        expected = None
    if expected is not None and expected > budget:
        raise BudgetExceeded(expected, budget)
    built = spec.build(level)
    if built.count > budget:
        raise BudgetExceeded(built.count, budget)
    return built


def _projection_table(scenario: Scenario, proj: LinearSurjection,
                      levels: Sequence[int]) -> CountTable:
    spec = scenario.set_spec
    axes = proj.coordinate_axes()
    if axes is not None and isinstance(spec, ProductSpec):
        return _closed_form_table(spec.project_axes(axes), levels, scenario.budget_cells)
    if axes is not None and isinstance(spec, InterleavedSpec) and spec.factor is None:
        parts = ProductSpec.of([spec.factor_spec(i + 1) for i in range(len(spec.schedules))])
        return _closed_form_table(parts.project_axes(axes), levels, scenario.budget_cells)
    top = max(levels)
    x = _build_with_budget(spec, top, scenario.budget_cells)
    image = project_cubes(proj, x)
    return table_for_cubeset(image, sorted(levels))


def _scenario_x_table(scenario: Scenario, levels: Sequence[int]) -> CountTable:
    spec = scenario.set_spec
    if spec is None:
        raise ScenarioError("this check needs a 'set' generator")
    if isinstance(spec, (ProductSpec, InterleavedSpec)) or spec.kind in ("cantor", "schedule"):
        return _closed_form_table(spec, levels, scenario.budget_cells)
    top = max(levels)
    x = _build_with_budget(spec, top, scenario.budget_cells)
    return table_for_cubeset(x, sorted(levels))


def _weights_or_error(scenario: Scenario, check: dict) -> tuple[Fraction, ...]:
    if "weights" in check:
        return tuple(real_to_rational(w) for w in check["weights"])
    if scenario.weights:
        return scenario.weights
    raise ScenarioError(f"check {check.get('mode')} needs weights (datum or check-level)")


def _run_projection_check(scenario: Scenario, check: dict) -> CheckOutcome:
    mode = check["mode"]
    window = _parse_window(check["window"], "check.window") if "window" in check else scenario.window
    weights = _weights_or_error(scenario, check)
    if not scenario.projections:
        raise ScenarioError(f"check {mode} needs a datum with projections")
    x_table = _scenario_x_table(scenario, scenario.levels)
    lhs_mode = "lower_box" if mode in ("lower_box", "mixed_lower") else "upper_box"
    lhs = estimate_dim(x_table, lhs_mode, window).value
    lower_index = int(check.get("lower_index", 1))
    terms = []
    for i, (proj, w) in enumerate(zip(scenario.projections, weights), start=1):
        table = _projection_table(scenario, proj, scenario.levels)
        if mode == "lower_box":
            term_mode = "lower_box"
        elif mode == "mixed_lower":
            term_mode = "lower_box" if i == lower_index else "upper_box"
        else:
            term_mode = "upper_box"
        terms.append((float(w), estimate_dim(table, term_mode, window).value))
    result = verdict(mode, lhs, terms, check.get("tolerance"))
    return _outcome(check, result)


def _run_assouad_check(scenario: Scenario, check: dict) -> CheckOutcome:
    level = int(_require(check, "level", "assouad check"))
    coarse = int(_require(check, "coarse_level", "assouad check"))
    weights = _weights_or_error(scenario, check)
    if not scenario.projections:
        raise ScenarioError("assouad check needs a datum with projections")
    x = _build_with_budget(scenario.set_spec, level, scenario.budget_cells)
    lhs = assouad_estimate(x, coarse).value
    terms = []
    for proj, w in zip(scenario.projections, weights):
        image = project_cubes(proj, x)
        terms.append((float(w), assouad_estimate(image, coarse).value))
    result = verdict("assouad", lhs, terms, check.get("tolerance"))
    return _outcome(check, result)


def _run_self_product_check(scenario: Scenario, check: dict) -> CheckOutcome:
    spec = scenario.set_spec
    if not isinstance(spec, InterleavedSpec):
        raise ScenarioError("self_product_lower checks need an interleaved_family set")
    copies = [int(c) for c in _require(check, "copies", "self_product_lower check")]
    window = _parse_window(check["window"], "check.window") if "window" in check else scenario.window
    factor_tables = {c: _closed_form_table(spec.factor_spec(c), scenario.levels,
                                           scenario.budget_cells) for c in set(copies)}
    rows = []
    for n in sorted(scenario.levels):
        count = 1
        for c in copies:
            count *= spec.factor_spec(c).count_at(n)
        rows.append((n, count))
    product_table = CountTable(spec.base, tuple(rows))
    lhs = estimate_dim(product_table, "lower_box", window).value
    terms = [(1.0, estimate_dim(factor_tables[c], "lower_box", window).value) for c in copies]
    result = verdict("self_product_lower", lhs, terms, check.get("tolerance"))
    return _outcome(check, result)


def _run_sumset_check(scenario: Scenario, check: dict) -> CheckOutcome:
    sum_dim = int(_require(check, "sum_dim", "sumset check"))
    level = int(check.get("level", max(scenario.levels)))
    window = _parse_window(check["window"], "check.window") if "window" in check else scenario.window
    x = _build_with_budget(scenario.set_spec, level, scenario.budget_cells)
    delta = constrained_sumset(x, sum_dim, budget=scenario.budget_cells)
    delta_table = table_for_cubeset(delta, [n for n in scenario.levels if n <= level])
    x_table = _scenario_x_table(scenario, [n for n in scenario.levels if n <= level])
    window = (min(window[0], level), min(window[1], level))
    lhs = estimate_dim(delta_table, "upper_box", window).value
    ratio = sum_dim / x.dim
    rhs_est = estimate_dim(x_table, "upper_box", window).value
    result = verdict("sumset_upper", lhs, [(ratio, rhs_est)], check.get("tolerance"))
    notes = (f"sumset_cells={delta.count}",)
    return _outcome(check, result, notes)


_MAP_FAMILIES = {
    "norm_scaled_pair": norm_scaled_pair,
    "coordinate_products": coordinate_products,
}


def _run_nonlinear_check(scenario: Scenario, check: dict) -> CheckOutcome:
    family = _require(check, "maps", "nonlinear check")
    if family not in _MAP_FAMILIES:
        raise ScenarioError(f"unknown map family {family!r}")
    level = int(_require(check, "level", "nonlinear check"))
    window = _parse_window(check["window"], "check.window") if "window" in check else scenario.window
    window = (min(window[0], level), min(window[1], level))
    weights = _weights_or_error(scenario, check)
    if len(weights) != 3:
        raise ScenarioError("nonlinear checks use three maps, so three weights")
    x = _build_with_budget(scenario.set_spec, level, scenario.budget_cells)
    maps = [_MAP_FAMILIES[family](i) for i in (1, 2, 3)]
    levels = [n for n in scenario.levels if n <= level]
    x_table = table_for_cubeset(x, levels)
    lhs = estimate_dim(x_table, "upper_box", window).value
    terms = []
    rank_notes = []
    rng_cells = x.sorted_cells()
    probe_cells = rng_cells[:: max(1, len(rng_cells) // 5)][:5]
    side = x.base ** x.level
    for spec_map, w in zip(maps, weights):
        image = nonlinear_image(spec_map, x)
        table = table_for_cubeset(image, levels)
        terms.append((float(w), estimate_dim(table, "upper_box", window).value))
        ranks = {jacobian_rank(spec_map, [(k + 0.5) / side for k in cell]) for cell in probe_cells}
        rank_notes.append(f"{spec_map.describe()} ranks={sorted(ranks)}")
    result = verdict("nonlinear_upper", lhs, terms, check.get("tolerance"))
    return _outcome(check, result, tuple(rank_notes))


def _run_radial_check(scenario: Scenario, check: dict) -> CheckOutcome:
    pins = _require(check, "pins", "radial check")
    source_level = int(check.get("source_level", max(scenario.levels)))
    image_level = int(check.get("image_level", source_level))
    expect = check.get("expect", "holds")
    x = _build_with_budget(scenario.set_spec, source_level, scenario.budget_cells)
    report = radial_experiment(
        x, pins,
        mode="expect-fail" if expect == "fails" else "expect-holds",
        image_level=image_level,
        tolerance=check.get("tolerance"),
    )
    notes = [f"pin[{i}] estimate={fmt12(e)}" for i, e in enumerate(report.estimates)]
    if report.guard_violations:
        subset, cell = report.guard_violations[0]
        notes.append(f"domain guard tripped: pins {subset} span meets cell {cell}")
    notes.append(f"witness pin={report.witness_pin} ok={report.witness_ok}")
    return _outcome(check, report.check, tuple(notes))


def _outcome(check: dict, result: Verdict, notes: tuple[str, ...] = ()) -> CheckOutcome:
    expect = check.get("expect", "holds")
    ok = result.holds if expect == "holds" else not result.holds
    label = check.get("label", result.mode)
    return CheckOutcome(label, result, expect, ok, notes)


_CHECK_RUNNERS = {
    "upper_box": _run_projection_check,
    "packing_as_upper": _run_projection_check,
    "lower_box": _run_projection_check,
    "mixed_lower": _run_projection_check,
    "assouad": _run_assouad_check,
    "self_product_lower": _run_self_product_check,
    "sumset_upper": _run_sumset_check,
    "nonlinear_upper": _run_nonlinear_check,
    "radial": _run_radial_check,
}

_CHECK_DESCRIPTIONS = {
    "upper_box": "weighted projection bound for upper box estimates",
    "packing_as_upper": "packing reported as upper box (trivial decomposition for shipped generators)",
    "lower_box": "all-lower-box bound (no theory backs it; expected to fail)",
    "mixed_lower": "one lower-box term, upper-box elsewhere",
    "assouad": "localized covering-count bound",
    "self_product_lower": "lower-box bound for constrained self-products",
    "sumset_upper": "constrained sumset bound dim <= (d/k) dim X",
    "nonlinear_upper": "weighted nonlinear-image bound",
    "radial": "pinned direction-map bound",
}


def _datum_report(scenario: Scenario) -> str:
    lines = []
    if not scenario.projections:
        return "no datum configured\n"
    family = critical_subspaces(scenario.projections, random_samples=scenario.random_samples,
                                seed=scenario.seed)
    lines.append(f"ambient {scenario.projections[0].ambient_dim}")
    lines.append(f"projections {len(scenario.projections)}")
    lines.append(f"family_size {len(family.subspaces)}")
    lines.append(f"family_truncated {'true' if family.truncated else 'false'}")
    if scenario.weights:
        datum = BLDatum(scenario.projections, scenario.weights)
        report = check_dimension_condition(datum, family.subspaces, family.truncated)
        lines.append(f"scaling_ok {'true' if report.scaling_ok else 'false'}")
        lines.append(f"dimension_ok {'true' if report.dimension_ok else 'false'}")
        if report.violating_subspace is not None:
            basis = "; ".join(
                " ".join(f"{v.numerator}/{v.denominator}" for v in row)
                for row in report.violating_subspace.basis.entries)
            lines.append(f"violating_subspace [{basis}]")
        else:
            lines.append("violating_subspace none")
    feasible = is_bl_feasible(scenario.projections, family.subspaces)
    lines.append(f"bl_feasible {'true' if feasible else 'false'}")
    if scenario.datum_s is not None:
        sol = optimize_weights(scenario.projections, scenario.datum_s, family.subspaces)
        lines.append("s " + " ".join(fmt12(float(v)) for v in scenario.datum_s))
        if sol.feasible:
            lines.append("optimal_weights " +
                         " ".join(f"{w.numerator}/{w.denominator}" for w in sol.weights))
            obj = sol.objective
            lines.append(f"objective {obj.numerator}/{obj.denominator}")
            lines.append(f"all_positive {'true' if sol.all_positive else 'false'}")
        else:
            lines.append("optimal_weights none")
            lines.append("objective inf")
            if sol.violating_subspace is not None:
                basis = "; ".join(
                    " ".join(f"{v.numerator}/{v.denominator}" for v in row)
                    for row in sol.violating_subspace.basis.entries)
                lines.append(f"violating_subspace [{basis}]")
    return "\n".join(lines) + "\n"


def run_scenario(source: str | Path | Scenario, out_dir: str | Path | None = None,
                 seed: int | None = None, budget: int | None = None) -> ScenarioReport:
    """Execute a scenario and write its report bundle.

    Writes counts.csv, verdict.csv, datum_report.txt, and summary.txt into
    the output directory.  The exit code is 0 iff every check matched its
    declared expectation.
    """
    scenario = source if isinstance(source, Scenario) else load_scenario(source)
    if seed is not None:
        scenario.seed = seed
    if budget is not None:
        scenario.budget_cells = budget
    target = Path(out_dir) if out_dir is not None else Path(scenario.out_dir or f"out/{scenario.name}")
    target.mkdir(parents=True, exist_ok=True)

    if scenario.projections and scenario.weights:
        datum = BLDatum(scenario.projections, scenario.weights)
        if not check_scaling(datum):
            raise ScenarioError("datum fails the scaling identity; refusing to run counts")

    outcomes: list[CheckOutcome] = []
    for check in scenario.checks:
        mode = check["mode"]
        runner = _CHECK_RUNNERS.get(mode)
        if runner is None:
            raise ScenarioError(f"unknown check mode {mode!r}")
        outcomes.append(runner(scenario, check))

    if scenario.set_spec is not None:
        table = _scenario_x_table(scenario, scenario.levels)
        (target / "counts.csv").write_text(counts_csv(table))
    (target / "verdict.csv").write_text(verdicts_csv([o.result for o in outcomes]))
    (target / "datum_report.txt").write_text(_datum_report(scenario))

    lines = [f"scenario: {scenario.name}", f"seed: {scenario.seed}"]
    all_ok = True
    for o in outcomes:
        all_ok &= o.ok
        v = o.result
        desc = _CHECK_DESCRIPTIONS.get(v.mode, v.mode)
        lines.append(
            f"check {o.label} [{desc}]: lhs={fmt12(v.lhs)} rhs={fmt12(v.rhs)} "
            f"slack={fmt12(v.slack)} holds={'true' if v.holds else 'false'} "
            f"expected={o.expect} {'ok' if o.ok else 'MISMATCH'}")
        for note in o.notes:
            lines.append(f"  note: {note}")
    lines.append(f"overall: {'PASS' if all_ok else 'FAIL'}")
    summary = target / "summary.txt"
    summary.write_text("\n".join(lines) + "\n")
    return ScenarioReport(
        name=scenario.name,
        outcomes=outcomes,
        out_dir=target,
        exit_code=EXIT_OK if all_ok else EXIT_VERDICT_MISMATCH,
        summary_path=summary,
    )


# --- command-line interface -------------------------------------------------


def _parse_rational_tuple(text: str) -> tuple:
    return tuple(Fraction(tok) for tok in text.split(","))


def _read_cubeset(path: str) -> CubeSet:
    return cubeset_from_text(Path(path).read_text())


def _write_cubeset(x: CubeSet, out: str | None) -> None:
    text = cubeset_to_text(x)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_gen(args) -> int:
    kind = args.kind
    if kind == "cantor":
        spec = {"kind": "cantor", "base": args.base, "digits": [int(d) for d in args.digits.split(",")]}
    elif kind == "segment":
        spec = {"kind": "segment", "base": args.base,
                "from": args.from_point.split(","), "to": args.to_point.split(",")}
    elif kind == "points":
        spec = {"kind": "finite_points", "base": args.base,
                "points": [p.split(",") for p in args.point]}
    elif kind == "interleaved":
        spec = {"kind": "interleaved_family", "dim": args.dim, "block_growth": args.growth,
                "num_blocks": args.blocks, "factor": args.factor}
    elif kind == "product":
        parts = [_read_cubeset(p) for p in args.part]
        _write_cubeset(product(parts), args.out)
        return EXIT_OK
    else:
        raise ValueError(f"unknown generator kind {kind!r}")
    gen = generator_from_dict(spec)
    budget = args.budget_cells or DEFAULT_CELL_BUDGET
    x = _build_with_budget(gen, args.level, budget)
    _write_cubeset(x, args.out)
    return EXIT_OK


def _cmd_project(args) -> int:
    x = _read_cubeset(args.input)
    if args.axes:
        from .bldatum import coordinate_projection
        proj = coordinate_projection(x.dim, [int(a) for a in args.axes.split(",")])
    elif args.matrix:
        proj = LinearSurjection(matrix_from_text(Path(args.matrix).read_text()))
    else:
        raise ValueError("project needs --axes or --matrix")
    _write_cubeset(project_cubes(proj, x), args.out)
    return EXIT_OK


def _cmd_blcheck(args) -> int:
    projections, weights = datum_from_text(Path(args.datum).read_text())
    family = critical_subspaces(projections, random_samples=args.random_samples,
                                cap=args.cap, seed=args.seed or 0)
    print(f"family_size {len(family.subspaces)}")
    print(f"family_truncated {'true' if family.truncated else 'false'}")
    feasible = is_bl_feasible(projections, family.subspaces)
    print(f"bl_feasible {'true' if feasible else 'false'}")
    ok = feasible
    if weights:
        datum = BLDatum(tuple(projections), tuple(weights))
        report = check_dimension_condition(datum, family.subspaces, family.truncated)
        print(f"scaling_ok {'true' if report.scaling_ok else 'false'}")
        print(f"dimension_ok {'true' if report.dimension_ok else 'false'}")
        if report.violating_subspace is not None:
            print(f"violating_subspace dim={report.violating_subspace.dim}")
        ok = report.scaling_ok and report.dimension_ok
    return EXIT_OK if ok else EXIT_VERDICT_MISMATCH


def _cmd_blopt(args) -> int:
    projections, _ = datum_from_text(Path(args.datum).read_text())
    family = critical_subspaces(projections, random_samples=args.random_samples,
                                seed=args.seed or 0)
    s = [Fraction(tok) for tok in args.s.split(",")]
    sol = optimize_weights(projections, s, family.subspaces)
    if sol.feasible:
        print("weights " + " ".join(f"{w.numerator}/{w.denominator}" for w in sol.weights))
        obj = sol.objective
        print(f"objective {obj.numerator}/{obj.denominator}")
        print(f"all_positive {'true' if sol.all_positive else 'false'}")
    else:
        print("objective inf")
        if sol.violating_subspace is not None:
            print(f"violating_subspace dim={sol.violating_subspace.dim}")
    return EXIT_OK


def _cmd_dim(args) -> int:
    x = _read_cubeset(args.input)
    window = _parse_window([int(t) for t in args.window.split(":")], "window") \
        if args.window else (1, x.level)
    table = table_for_cubeset(x, list(range(1, x.level + 1)))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "counts.csv").write_text(counts_csv(table))
    upper = estimate_dim(table, "upper_box", window)
    lower = estimate_dim(table, "lower_box", window)
    print(f"upper_box {fmt12(upper.value)}")
    print(f"lower_box {fmt12(lower.value)}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    terms = []
    for t in args.term:
        w, e = t.split(":")
        terms.append((float(Fraction(w)), float(e)))
    result = verdict(args.mode, args.lhs, terms, args.tolerance)
    print(f"mode {result.mode}")
    print(f"lhs {fmt12(result.lhs)}")
    print(f"rhs {fmt12(result.rhs)}")
    print(f"slack {fmt12(result.slack)}")
    print(f"holds {'true' if result.holds else 'false'}")
    expected = args.expect == "holds"
    return EXIT_OK if result.holds == expected else EXIT_VERDICT_MISMATCH


def _cmd_sweep(args) -> int:
    x = _read_cubeset(args.input)
    result = sweep_directions(x, args.directions, args.threshold, args.margin)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["parameter,estimate"]
        for p, e in zip(result.angles, result.estimates):
            key = fmt12(p) if isinstance(p, float) else "|".join(fmt12(v) for v in p)
            lines.append(f"{key},{fmt12(e)}")
        (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    print(f"threshold {fmt12(result.threshold)}")
    print(f"below_threshold_count {result.below_threshold_count}")
    return EXIT_OK


def _cmd_radial(args) -> int:
    x = _read_cubeset(args.input)
    pins = [_parse_rational_tuple(p) for p in args.pin]
    report = radial_experiment(
        x, pins,
        mode="expect-fail" if args.expect_fail else "expect-holds",
        image_level=args.image_level,
    )
    for i, e in enumerate(report.estimates):
        print(f"pin[{i}] estimate {fmt12(e)}")
    print(f"lhs {fmt12(report.lhs)}")
    print(f"rhs {fmt12(report.check.rhs)}")
    print(f"holds {'true' if report.check.holds else 'false'}")
    print(f"witness_pin {report.witness_pin}")
    if report.guard_violations:
        subset, cell = report.guard_violations[0]
        print(f"guard_violation pins={subset} cell={' '.join(str(c) for c in cell)}")
    expected_holds = not args.expect_fail
    return EXIT_OK if report.check.holds == expected_holds else EXIT_VERDICT_MISMATCH


def _cmd_run(args) -> int:
    report = run_scenario(args.scenario, out_dir=args.out_dir, seed=args.seed,
                          budget=args.budget_cells)
    print(Path(report.summary_path).read_text(), end="")
    return report.exit_code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bldim",
        description="numerical laboratory for Brascamp-Lieb dimension inequalities")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized falsifiers")
    parser.add_argument("--out-dir", default=None, help="directory for report files")
    parser.add_argument("--budget-cells", type=int, default=None,
                        help="hard cap on enumerated cells (default 8000000)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a cube set")
    gen.add_argument("kind", choices=["cantor", "segment", "points", "product", "interleaved"])
    gen.add_argument("--base", type=int, default=2)
    gen.add_argument("--level", type=int, default=4)
    gen.add_argument("--digits", default="0,2", help="cantor digit set, comma separated")
    gen.add_argument("--from", dest="from_point", default="0,0")
    gen.add_argument("--to", dest="to_point", default="1,1")
    gen.add_argument("--point", action="append", default=[])
    gen.add_argument("--part", action="append", default=[], help="cube-set files to multiply")
    gen.add_argument("--dim", type=int, default=2)
    gen.add_argument("--growth", type=int, default=4)
    gen.add_argument("--blocks", type=int, default=4)
    gen.add_argument("--factor", type=int, default=None)
    gen.add_argument("--out", default=None)
    gen.set_defaults(func=_cmd_gen)

    proj = sub.add_parser("project", help="project a cube set")
    proj.add_argument("input")
    proj.add_argument("--axes", default=None, help="comma-separated axes to keep")
    proj.add_argument("--matrix", default=None, help="file with a rational matrix")
    proj.add_argument("--out", default=None)
    proj.set_defaults(func=_cmd_project)

    blc = sub.add_parser("blcheck", help="check a datum's scaling and dimension conditions")
    blc.add_argument("datum")
    blc.add_argument("--random-samples", type=int, default=0)
    blc.add_argument("--cap", type=int, default=512)
    blc.set_defaults(func=_cmd_blcheck)

    blo = sub.add_parser("blopt", help="optimize weights over the admissible polytope")
    blo.add_argument("datum")
    blo.add_argument("--s", required=True, help="comma-separated objective values")
    blo.add_argument("--random-samples", type=int, default=0)
    blo.set_defaults(func=_cmd_blopt)

    dim = sub.add_parser("dim", help="box counts and dimension estimates")
    dim.add_argument("input")
    dim.add_argument("--window", default=None, help="lo:hi slope window")
    dim.set_defaults(func=_cmd_dim)

    ver = sub.add_parser("verify", help="render a verdict from estimates")
    ver.add_argument("--mode", required=True)
    ver.add_argument("--lhs", type=float, required=True)
    ver.add_argument("--term", action="append", required=True, help="weight:estimate")
    ver.add_argument("--tolerance", type=float, default=None)
    ver.add_argument("--expect", choices=["holds", "fails"], default="holds")
    ver.set_defaults(func=_cmd_verify)

    swp = sub.add_parser("sweep", help="direction sweep for projection estimates")
    swp.add_argument("input")
    swp.add_argument("--directions", type=int, default=60)
    swp.add_argument("--threshold", type=float, default=0.5)
    swp.add_argument("--margin", type=float, default=0.05)
    swp.set_defaults(func=_cmd_sweep)

    rad = sub.add_parser("radial", help="pinned direction-map experiment")
    rad.add_argument("input")
    rad.add_argument("--pin", action="append", required=True)
    rad.add_argument("--image-level", type=int, default=None)
    rad.add_argument("--expect-fail", action="store_true")
    rad.set_defaults(func=_cmd_radial)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario")
    run.set_defaults(func=_cmd_run)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ScenarioError, DomainError, DomainGuardError, ValueError, OSError,
            NotImplementedError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
