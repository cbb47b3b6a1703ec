"""Simulation and bound-verification toolkit for anisotropic pure-jump processes."""

from .bounds import (
    SandwichWindow,
    corner_exit_bound,
    dirichlet_bound,
    exit_prob_bound,
    green_bound,
    green_bound_1d,
    green_refined_upper,
    hke_bound,
    large_time_bound,
    mean_exit_ball_window,
    psi_decay,
    survival_bound,
)
from .config import ExperimentConfig, load_config, parse_config, serialize_config
from .errors import (
    ConfigError,
    NoBoundaryError,
    NumericalError,
    RegimeError,
    ValidationError,
)
from .estimate import (
    BoundReport,
    CsvRow,
    EigenvalueFit,
    MCEstimate,
    fit_eigenvalue,
    mc_exit_time,
    mc_green,
    mc_green_profile,
    mc_heat_kernel,
    mc_heat_kernel_profile,
    mc_survival,
    ratio_report,
    write_csv,
)
from .geometry import (
    C11Chars,
    DGammaReport,
    Domain,
    c11_chars,
    check_D_gamma,
    corner_path,
    dist_to_boundary,
    inward_normal,
    nearest_boundary_point,
    rho_Q,
    sample_interior,
)
from .oracle import cdf_1d, density_1d, generator_pv, product_density
from .presets import PRESETS, describe_presets, get_preset, preset_names
from .scalefn import (
    ScaleFunction,
    WeakScalingCert,
    char_exponent,
    pruitt_h,
    validate_ws,
)
from .simulate import (
    EnsembleResult,
    KappaSpec,
    KilledPathResult,
    SimConfig,
    exit_decomposition,
    iter_killed_blocks,
    jump_rate,
    sample_general_increment,
    sample_stable_increment,
    set_worker_count,
    simulate_killed_ensemble,
    simulate_killed_path,
    small_jump_variance_rate,
)

__all__ = [
    "BoundReport",
    "C11Chars",
    "ConfigError",
    "CsvRow",
    "DGammaReport",
    "Domain",
    "EigenvalueFit",
    "EnsembleResult",
    "ExperimentConfig",
    "KappaSpec",
    "KilledPathResult",
    "MCEstimate",
    "NoBoundaryError",
    "NumericalError",
    "PRESETS",
    "RegimeError",
    "SandwichWindow",
    "ScaleFunction",
    "SimConfig",
    "ValidationError",
    "WeakScalingCert",
    "c11_chars",
    "cdf_1d",
    "char_exponent",
    "check_D_gamma",
    "corner_exit_bound",
    "corner_path",
    "density_1d",
    "describe_presets",
    "dirichlet_bound",
    "dist_to_boundary",
    "exit_decomposition",
    "exit_prob_bound",
    "fit_eigenvalue",
    "generator_pv",
    "get_preset",
    "green_bound",
    "green_bound_1d",
    "green_refined_upper",
    "hke_bound",
    "inward_normal",
    "iter_killed_blocks",
    "jump_rate",
    "large_time_bound",
    "load_config",
    "mc_exit_time",
    "mc_green",
    "mc_green_profile",
    "mc_heat_kernel",
    "mc_heat_kernel_profile",
    "mc_survival",
    "mean_exit_ball_window",
    "nearest_boundary_point",
    "parse_config",
    "preset_names",
    "product_density",
    "pruitt_h",
    "psi_decay",
    "ratio_report",
    "rho_Q",
    "sample_general_increment",
    "sample_interior",
    "sample_stable_increment",
    "serialize_config",
    "set_worker_count",
    "simulate_killed_ensemble",
    "simulate_killed_path",
    "small_jump_variance_rate",
    "survival_bound",
    "validate_ws",
    "write_csv",
]

__version__ = "0.1.0"
