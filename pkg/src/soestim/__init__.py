"""soestim: sparsity order estimation from compressed measurements.

A single measurement vector b = A x + n, taken with a sensing matrix
that carries column-wise Kronecker structure, can be reshaped into a
matrix whose rank equals the sparsity order of x. This package
provides the linear-algebra kernels, the Vandermonde-based
low-coherence matrix designs with certified coherence brackets, the
calibrated rank test that survives noise, a greedy decoder whose step
count the estimate can steer, and a Monte-Carlo harness with a CLI.
"""

from .errors import (
    BudgetExceededError,
    ConfigError,
    ConvergenceError,
    DimensionMismatch,
    InfeasibleError,
    RankDeficientError,
    SoestimError,
    ZeroColumnError,
)
from .estimators import OmpDecoder, SparsityOrderEstimator
from .harness import (
    ScenarioConfig,
    SweepTable,
    TrialRecord,
    add_noise,
    load_config,
    run_guided_omp_sweep,
    run_soe_sweep,
    run_structure_cost_sweep,
    run_vander_comparison,
    sample_signal,
    scenario_matrix,
    snr_to_variance,
    write_csv,
)
from .linalg import (
    coherence,
    khatri_rao,
    kron,
    kruskal_rank,
    least_squares,
    normalize_columns,
    numerical_rank,
    singular_values,
)
from .matrixio import dump_matrix, load_matrix, parse_matrix, save_matrix
from .recovery import (
    RecoveryResult,
    SparseSignal,
    kmax_from_coherence,
    l2_error,
    omp,
    support_success,
)
from .soe import (
    BlockingScheme,
    CalibrationCache,
    DesignReport,
    MeasurementDesign,
    ThresholdCalibration,
    blocking_params,
    build_nonoverlap_design,
    build_overlap_design,
    calibrate_thresholds,
    design_matrix,
    estimate_order,
    estimate_order_noiseless,
    extract_blocks,
    load_calibration,
    noise_gram_check,
    save_calibration,
    verify_design,
)
from .vandermonde import (
    CoherenceCertificate,
    EnvelopeParams,
    VandermondeSpec,
    coherence_bounds,
    correlation_envelopes,
    design_low_coherence,
    geometric_sum,
    materialize,
    optimal_radius,
    orthogonal_design,
    pair_correlation_sq,
)

__version__ = "0.1.0"

__all__ = [
    "BlockingScheme",
    "BudgetExceededError",
    "CalibrationCache",
    "CoherenceCertificate",
    "ConfigError",
    "ConvergenceError",
    "DesignReport",
    "DimensionMismatch",
    "EnvelopeParams",
    "InfeasibleError",
    "MeasurementDesign",
    "OmpDecoder",
    "RankDeficientError",
    "RecoveryResult",
    "ScenarioConfig",
    "SoestimError",
    "SparseSignal",
    "SparsityOrderEstimator",
    "SweepTable",
    "ThresholdCalibration",
    "TrialRecord",
    "VandermondeSpec",
    "ZeroColumnError",
    "add_noise",
    "blocking_params",
    "build_nonoverlap_design",
    "build_overlap_design",
    "calibrate_thresholds",
    "coherence",
    "coherence_bounds",
    "correlation_envelopes",
    "design_low_coherence",
    "design_matrix",
    "dump_matrix",
    "estimate_order",
    "estimate_order_noiseless",
    "extract_blocks",
    "geometric_sum",
    "khatri_rao",
    "kmax_from_coherence",
    "kron",
    "kruskal_rank",
    "l2_error",
    "least_squares",
    "load_calibration",
    "load_config",
    "load_matrix",
    "materialize",
    "noise_gram_check",
    "normalize_columns",
    "numerical_rank",
    "omp",
    "optimal_radius",
    "orthogonal_design",
    "pair_correlation_sq",
    "parse_matrix",
    "run_guided_omp_sweep",
    "run_soe_sweep",
    "run_structure_cost_sweep",
    "run_vander_comparison",
    "sample_signal",
    "save_calibration",
    "save_matrix",
    "scenario_matrix",
    "singular_values",
    "snr_to_variance",
    "support_success",
    "verify_design",
    "write_csv",
]
