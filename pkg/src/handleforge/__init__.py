"""handleforge: strongly pseudoconvex handlebody profiles in C^n.

Construction of the explicit outer/inner radial handles and the quadratic
cap model, plus grid certification of the strong-pseudoconvexity
differential inequalities and independent restricted-Levi-form checks.
"""

from . import errors
from .constructors import (
    BuildOptions,
    HandleConstruction,
    QuadraticHandle,
    build_inner_handle,
    build_outer_handle,
    build_quadratic_handle,
    derive_constants_inner,
    derive_constants_outer,
    handle_from_dict,
    handle_to_dict,
    membership,
    rescale_outer,
)
from .levi import (
    BoundaryPoint,
    canonical_levi_value,
    fd_hessian,
    quadratic_tau_hessian,
    restricted_levi_spectrum,
    rotational_gradient,
    rotational_hessian,
    tangent_frame,
)
from .profiles import (
    CallableProfile,
    RadialProfile,
    f_of_theta,
    integrate_derivative,
    invert_monotone,
    profile_from_json,
    profile_to_csv,
    profile_to_json,
    sqrt_quadratic,
    theta_of_f,
)
from .pseudoconvexity import (
    Condition,
    classify,
    duality_check,
    f_condition,
    levi_dichotomy_check,
    sweep,
    theta_condition,
)
from .smoothing import mollify_breakpoints, reverify

__version__ = "0.1.0"

__all__ = [
    "errors",
    "BuildOptions",
    "HandleConstruction",
    "QuadraticHandle",
    "build_inner_handle",
    "build_outer_handle",
    "build_quadratic_handle",
    "derive_constants_inner",
    "derive_constants_outer",
    "handle_from_dict",
    "handle_to_dict",
    "membership",
    "rescale_outer",
    "BoundaryPoint",
    "canonical_levi_value",
    "fd_hessian",
    "quadratic_tau_hessian",
    "restricted_levi_spectrum",
    "rotational_gradient",
    "rotational_hessian",
    "tangent_frame",
    "CallableProfile",
    "RadialProfile",
    "f_of_theta",
    "integrate_derivative",
    "invert_monotone",
    "profile_from_json",
    "profile_to_csv",
    "profile_to_json",
    "sqrt_quadratic",
    "theta_of_f",
    "Condition",
    "classify",
    "duality_check",
    "f_condition",
    "levi_dichotomy_check",
    "sweep",
    "theta_condition",
    "mollify_breakpoints",
    "reverify",
]
