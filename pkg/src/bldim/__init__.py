"""Desk-scale laboratory for Brascamp-Lieb inequalities between fractal dimensions.

Exact rational datum checking and weight optimization over the
Brascamp-Lieb polytope, grid fractal generators with closed-form box
counts, finite-scale dimension estimators, set transforms (projections,
constrained products and sumsets, nonlinear images), and a scenario
runner that renders each inequality as a pass/fail verdict.
"""

from .exactla import (
    ClosureResult,
    QMatrix,
    QSubspace,
    Rational,
    as_rational,
    image_dim,
    kernel_basis,
    lattice_closure,
    matrix_from_text,
    matrix_to_text,
    rank,
    subspace_intersect,
    subspace_sum,
)
from .bldatum import (
    BLDatum,
    ConditionReport,
    LinearSurjection,
    WeightSolution,
    check_dimension_condition,
    check_scaling,
    coordinate_projection,
    critical_subspaces,
    datum_from_text,
    datum_to_text,
    is_bl_feasible,
    optimize_weights,
    real_to_rational,
)
from .fracgen import (
    CubeSet,
    DigitSchedule,
    GeneratorSpec,
    cantor_digits,
    cubeset_from_text,
    cubeset_to_text,
    finite_points,
    generator_from_dict,
    interleaved_family,
    product,
    schedule_count,
    schedule_set,
    segment,
)
from .dimest import (
    AssouadEstimate,
    CountTable,
    DimEstimate,
    Verdict,
    assouad_estimate,
    box_counts,
    estimate_dim,
    table_for_cubeset,
    verdict,
)
from .setops import (
    BudgetExceeded,
    DomainError,
    ImageOptions,
    MapSpec,
    constrained_product,
    constrained_product_outer,
    constrained_sumset,
    coordinate_products,
    jacobian_rank,
    linear_map,
    nonlinear_image,
    norm_scaled_pair,
    project_cubes,
    radial_map,
    sum_coordinates,
)
from .labcli import (
    RadialReport,
    Scenario,
    SweepResult,
    load_scenario,
    radial_experiment,
    run_scenario,
    sweep_directions,
)

__version__ = "0.1.0"
