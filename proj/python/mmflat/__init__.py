"""Multiscale flatness coefficients and packing audits on finite metric-measure samples."""

from mmflat._mmflat import (
    Chart,
    CoefficientEntry,
    CoefficientField,
    Cube,
    CubeTree,
    GeneratedSpace,
    MetricSpaceSample,
    alpha,
    ball_mass,
    build_tree,
    carleson_constant,
    compute_field,
    generate,
    load_tree,
    md,
    osc,
    packing_sum,
    rtilde_check,
    run_pipeline,
    save_tree,
    transport_distance,
    verify_cube_axioms,
)

__all__ = [
    "Chart",
    "CoefficientEntry",
    "CoefficientField",
    "Cube",
    "CubeTree",
    "GeneratedSpace",
    "MetricSpaceSample",
    "alpha",
    "ball_mass",
    "build_tree",
    "carleson_constant",
    "compute_field",
    "generate",
    "load_tree",
    "md",
    "osc",
    "packing_sum",
    "rtilde_check",
    "run_pipeline",
    "save_tree",
    "transport_distance",
    "verify_cube_axioms",
]
