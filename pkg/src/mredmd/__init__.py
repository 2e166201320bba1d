"""Koopman operator approximation from partially and non-uniformly sampled
state data.

The pipeline has two steps: per-component Hankel DMD reconstructs the full
state at a common pair of instants from each component's own sampling
schedule, then standard EDMD on the reconstructed pairs yields the Koopman
matrix, its generator, spectra, and trajectory predictions.
"""

__version__ = "0.1.0"

from .dynamics import (
    ComponentSeries,
    SamplingSchedule,
    TrajectoryRecord,
    VectorField,
    export_ensemble,
    import_ensemble,
    integrate,
    linear_field,
    lorenz_field,
    sample_ensemble,
)
from .edmd import (
    KoopmanModel,
    StatePairEnsemble,
    build_edmd_matrices,
    fit_koopman,
    fit_model,
    generator_spectrum,
    predict,
    save_model,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    derive_schedules,
    emit_comparison,
    emit_report,
    evaluate_prediction,
    ideal_noise_floor,
    lcm_of_rates,
    run,
    run_multirate,
    run_single_state,
    run_sweep,
)
from .hankel import (
    ComponentOperator,
    HankelDataMatrices,
    build_hankel_matrices,
    estimate_component_at,
    estimated_components,
    fit_component_operator,
    fit_component_operators,
    rational_power_estimate,
    reconstruct_states,
)
from .linalg import (
    cast_real,
    eigenvalues,
    matrix_exp,
    matrix_log,
    pinv,
    spectrum_distance,
)
from .observables import Dictionary, coordinate_readout, monomial_dictionary

__all__ = [
    "__version__",
    # dynamics
    "ComponentSeries",
    "SamplingSchedule",
    "TrajectoryRecord",
    "VectorField",
    "export_ensemble",
    "import_ensemble",
    "integrate",
    "linear_field",
    "lorenz_field",
    "sample_ensemble",
    # observables
    "Dictionary",
    "coordinate_readout",
    "monomial_dictionary",
    # linalg
    "cast_real",
    "eigenvalues",
    "matrix_exp",
    "matrix_log",
    "pinv",
    "spectrum_distance",
    # hankel
    "ComponentOperator",
    "HankelDataMatrices",
    "build_hankel_matrices",
    "estimate_component_at",
    "estimated_components",
    "fit_component_operator",
    "fit_component_operators",
    "rational_power_estimate",
    "reconstruct_states",
    # edmd
    "KoopmanModel",
    "StatePairEnsemble",
    "build_edmd_matrices",
    "fit_koopman",
    "fit_model",
    "generator_spectrum",
    "predict",
    "save_model",
    # experiments
    "ExperimentConfig",
    "ExperimentReport",
    "derive_schedules",
    "emit_comparison",
    "emit_report",
    "evaluate_prediction",
    "ideal_noise_floor",
    "lcm_of_rates",
    "run",
    "run_multirate",
    "run_single_state",
    "run_sweep",
]
