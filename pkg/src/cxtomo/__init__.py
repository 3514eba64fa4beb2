"""Complexification-based inversion of ray transforms over curve families in the disc."""
from . import errors
from .geometry import (
    DiscPoint,
    PolarizedFamily,
    check_type_h,
    count_zeros,
    eval_coeffs,
    find_zeros,
    get_family,
    jacobian_ds,
    mu_ratio,
)

__version__ = "0.1.0"
