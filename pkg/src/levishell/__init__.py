"""Numerical checks of Hessian and Levi-form positivity for the boundary distance function."""

__version__ = "0.1.0"

from .catalog import catalog_names, make_catalog_spec, parse_domain_arg
from .distance import (
    AdaptedFrame,
    BoundaryPoint,
    ShellSample,
    D_forms,
    adapted_frame,
    boundary_delta_hessian,
    delta_gradient,
    delta_hessian,
    project_many,
    project_to_boundary,
    sample_boundary_points,
    sample_shell,
    shell_sample,
    signed_distance,
)
from .errors import (
    AccuracyError,
    AmbiguityError,
    ArgumentError,
    ConvergenceError,
    DomainError,
    LeviShellError,
    NumericalError,
    SamplingError,
    SingularPointError,
    SpecError,
)
from .forms import (
    ConeSpec,
    PositivityReport,
    TangentFrame,
    classify_boundary,
    cone_membership,
    cone_min,
    max_gamma,
    restricted_min_eig,
    tangent_frame,
)
from .geometry import (
    DefiningFunction,
    DomainSpec,
    HessianForms,
    apply_form,
    check_4L_identity,
    eval_derivatives,
    hessian_forms,
    taylor_residual,
    unitary_transform,
)
from .specfile import parse_domain_spec, spec_from_dict, spec_to_dict
from .theorems import (
    DFResult,
    TheoremReport,
    cone_minimizer_check,
    df_exponent,
    df_verify,
    largest_passing_eta,
    levi_power,
    theorem_slack,
    verify_levi_power,
    verify_theorem,
)
