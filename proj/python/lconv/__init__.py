"""Python bindings for the lconv C++ library."""

from ._core import (
    ConfigError,
    DimensionError,
    LconvError,
    TrainingFailure,
    UnsupportedGroupError,
    __version__,
    approx_group_element,
    cnn_equivalence_check,
    cosine_correlation,
    gen_fixed_angle_dataset,
    helmholtz_convergence,
    lconv_forward,
    loss_decomposition,
    rotation_matrix_bilinear,
    shift_approximation_sweep,
    single_step_errors,
    sw_rotation_generator,
    sw_shift_generator,
    sw_shift_matrix,
    train_fixed_angle,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "LconvError",
    "TrainingFailure",
    "UnsupportedGroupError",
    "__version__",
    "approx_group_element",
    "cnn_equivalence_check",
    "cosine_correlation",
    "gen_fixed_angle_dataset",
    "helmholtz_convergence",
    "lconv_forward",
    "loss_decomposition",
    "rotation_matrix_bilinear",
    "shift_approximation_sweep",
    "single_step_errors",
    "sw_rotation_generator",
    "sw_shift_generator",
    "sw_shift_matrix",
    "train_fixed_angle",
]
