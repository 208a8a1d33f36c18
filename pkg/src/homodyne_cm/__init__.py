"""Covariance-matrix reconstruction of two-mode states with a single homodyne detector."""

from .diagnostics import StateDiagnostics, diagnose, epr_variance, log_negativity, ppt_min_symplectic_eig, purity
from .gaussian import (
    TwoModeGaussianState,
    add_thermal_noise,
    char_function,
    displace,
    is_physical,
    quadrature_moments,
    random_state,
    symplectic_eigenvalues,
    two_mode_squeezed_state,
    vacuum_state,
    williamson,
)
from .measurement import Dataset, HomodyneConfig, MomentSet, QuadratureRecord, exact_moment_set, run_schedule, sample_quadrature
from .optics import (
    ModeLabel,
    OpticalSetting,
    QuadraturePhase,
    measurement_schedule,
    quadrature_vector,
    selected_mode_coefficients,
    setting_for_mode,
)
from .reconstruction import (
    ReconstructionOptions,
    ReconstructionResult,
    build_mean_matrix,
    build_variance_matrix,
    estimate_moment_set,
    project_to_physical,
    reconstruct_covariance,
)

__version__ = "0.1.0"
