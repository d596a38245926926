"""spectralopt: matrix-aware optimizers built on spectral filtering.

Core pieces: an exact one-sided Jacobi SVD substrate, odd-quintic scalar
filter schedules applied at the matrix level without explicit SVDs, the
optimizer family that consumes them, numerical fitting of the low-pass
schedule, spectral/SNR diagnostics, and a reproducible experiment harness.

`spectralopt.plotting` is intentionally not imported here; pull it in
explicitly when figures are needed so that headless use never pays the
matplotlib import.
"""

from .diagnostics import (
    RlvrSnrParams,
    SnrEstimate,
    SpectrumReport,
    empirical_snr,
    erank,
    head_norm_variance,
    kappa_g,
    q_nd,
    rho_g,
    snr_grpo,
    snr_ratio_full,
    snr_sft,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateInputError,
    DegenerateVarianceError,
    ExperimentError,
    FitFailureError,
    ShapeError,
    SpectralOptError,
)
from .experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    RunRecord,
    balanced_head_basis,
    experiment_config_from_dict,
    experiment_config_to_dict,
    load_experiment_config,
    planted_signal,
    resolve_output_path,
    run_erank_demo,
    run_experiment,
    run_filter_profile,
    run_headvar_demo,
    run_lowrank_stream,
    run_noisy_quadratic,
    save_experiment_config,
    synthetic_gradient,
    write_csv,
)
from .filters import (
    DEFAULT_EPS,
    MUON_NS,
    PION_TOTAL_STEPS,
    PROMOTION,
    SUPPRESSION,
    FilterSchedule,
    QuinticOdd,
    apply_filter,
    derive_promotion,
    derive_suppression,
    eval_derivative,
    eval_scalar,
    eval_schedule,
    high_pass_schedule,
    muon_schedule,
    ns_matrix_step,
    promotion_slope_range,
)
from .lowpass import (
    BandGrid,
    FitConfig,
    FitResult,
    ReferenceRow,
    build_bands,
    fit,
    fit_loss,
    fit_result_from_dict,
    load_fit_result_json,
    polish_reference_row,
    reference_row,
    reference_table,
    save_fit_result_json,
    warm_start,
)
from .matrix import (
    SvdResult,
    frobenius_norm,
    load_matrix_csv,
    load_matrix_json,
    matrix_from_json_dict,
    matrix_to_json_dict,
    msign_exact,
    require_matrix,
    save_matrix_csv,
    save_matrix_json,
    singular_values,
    svd_compact,
)
from .optim import (
    ALGORITHMS,
    AdamState,
    HeadLayout,
    MomentumState,
    OptimizerConfig,
    OptimizerState,
    adamw_step,
    config_from_dict,
    config_to_dict,
    init_state,
    load_state_json,
    lpmuon_step,
    lrmuon_step,
    momentum_update,
    muon_step,
    per_head_merge,
    per_head_split,
    pion_step,
    save_state_json,
    state_from_dict,
    state_to_dict,
    step,
    update_direction,
)
from .rng import (
    STREAM_FIXTURE,
    STREAM_INIT,
    STREAM_NOISE,
    STREAM_RESTART,
    STREAM_SIGNAL,
    STREAM_SPECTRUM,
    stream,
)
from .verify import verify_all

__version__ = "0.1.0"

import types as _types

__all__ = sorted(
    name
    for name, value in list(globals().items())
    if not name.startswith("_") and not isinstance(value, _types.ModuleType)
)
