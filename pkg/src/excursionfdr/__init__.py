"""False discovery rate confidence regions for excursion sets of noisy images.

Given repeated noisy observations of an image on a regular lattice, this
package builds inner and outer confidence regions for the excursion set
{v : mu(v) > c} by running multiple-testing step-up procedures on
per-location one-sided t statistics. The inner region's false discovery
rate and the outer region's false non-discovery rate are controlled at a
user-chosen level, either separately per side or jointly with a single
pooled pass.
"""

from .estimator import ExcursionRegions
from .fieldfile import (
    BadMagicError,
    DimensionError,
    FieldFileError,
    MaskBlockError,
    TruncatedPayloadError,
    VersionMismatchError,
    read_field_file,
    write_field_file,
)
from .lattice import (
    LatticeShape,
    Mask,
    RegionSet,
    SampleStack,
    ScalarField,
    excursion_set,
    region_confusion,
    set_cardinalities,
)
from .multitest import (
    AdaptiveConfig,
    StepUpResult,
    TwoStageResult,
    bh_step_up,
    f_kappa,
    generic_step_up,
    rejected_fraction_multiplier,
    retained_fraction_multiplier,
    two_stage_adaptive,
)
from .regions import (
    ConfidenceRegions,
    ErrorProportions,
    Method,
    error_proportions,
    from_sample_stack,
    joint_cr,
    lower_cr,
    point_estimate_set,
    upper_cr,
)
from .simulate import (
    NoiseSpec,
    SignalSpec,
    SimulationConfig,
    SimulationResult,
    gaussian_kernel_1d,
    generate_noise_field,
    generate_sample_stack,
    generate_signal,
    run_simulation,
    smooth_field,
)
from .stats import (
    ConvergenceError,
    PValueField,
    lower_p_field,
    regularized_incomplete_beta,
    sample_moments,
    student_t_cdf,
    t_statistic_field,
    upper_p_field,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveConfig",
    "BadMagicError",
    "ConfidenceRegions",
    "ConvergenceError",
    "DimensionError",
    "ErrorProportions",
    "ExcursionRegions",
    "FieldFileError",
    "LatticeShape",
    "Mask",
    "MaskBlockError",
    "Method",
    "NoiseSpec",
    "PValueField",
    "RegionSet",
    "SampleStack",
    "ScalarField",
    "SignalSpec",
    "SimulationConfig",
    "SimulationResult",
    "StepUpResult",
    "TruncatedPayloadError",
    "TwoStageResult",
    "VersionMismatchError",
    "bh_step_up",
    "error_proportions",
    "excursion_set",
    "f_kappa",
    "from_sample_stack",
    "gaussian_kernel_1d",
    "generate_noise_field",
    "generate_sample_stack",
    "generate_signal",
    "generic_step_up",
    "joint_cr",
    "lower_cr",
    "lower_p_field",
    "point_estimate_set",
    "read_field_file",
    "region_confusion",
    "regularized_incomplete_beta",
    "rejected_fraction_multiplier",
    "retained_fraction_multiplier",
    "run_simulation",
    "sample_moments",
    "set_cardinalities",
    "smooth_field",
    "student_t_cdf",
    "t_statistic_field",
    "two_stage_adaptive",
    "upper_cr",
    "upper_p_field",
    "write_field_file",
    "__version__",
]
