"""Curve families, complexified fields and their Blaschke structure."""
from .family import (
    DiscPoint,
    PolarizedFamily,
    as_complex,
    euclidean_lines,
    family_from_dict,
    get_family,
    hyperbolic_geodesics,
    load_family,
)
from .fields import (
    ComplexifiedCoeffs,
    GridField,
    apply_X,
    apply_X_perp,
    directional_derivative,
    eval_coeffs,
    jacobian_ds,
    mu_ratio,
    xperp_s,
)
from .typeh import CheckResult, TypeHReport, check_type_h
from .zeros import (
    ZeroCache,
    ZeroSet,
    count_zeros,
    count_zeros_fn,
    find_zeros,
    find_zeros_batch,
    find_zeros_fn,
    winding_number,
)
