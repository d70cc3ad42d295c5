"""Diffusive conditioned trajectories of Markovian open quantum systems.

The package simulates every diffusive way of conditioning a
finite-dimensional Lindblad master equation on continuous measurement
records.  A single complex symmetric matrix ``u`` with spectral norm at
most 1 labels the correlations of the record noise; fixing it selects
standard schemes (single- and two-phase quadrature detection,
uncorrelated records) as special cases, and state-derived choices give
conditioned dynamics independent of how the Lindblad operators are
written.  Deterministic master-equation integration and ensemble
statistics are included for validating that trajectory averages
reproduce the unconditioned state.
"""

from .fluorescence import (
    FIGURE_HEADER,
    KET_EXCITED,
    KET_GROUND,
    SCENARIOS,
    SIGMA_MINUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    AtomParams,
    bloch,
    build_atom,
    plus_x_state,
    scenario_expected_current,
    scenario_spec,
    sme_u1_decomposed_step,
    write_figure_csvs,
    z_drift_residual,
)
from .operators import (
    LindbladModel,
    check_density_matrix,
    check_pure_state,
    expectation,
    liouvillian_apply,
    matrix_from_pairs,
    matrix_to_pairs,
    projector,
    rotate_lindblads,
    shift_lindblads,
    transition_rate,
    transition_rate_operator,
)
from .oracle import (
    DegenerateSteadyStateError,
    EnsembleSummary,
    ensemble_summary,
    integrate_master,
    liouvillian_matrix,
    steady_state,
    trace_distance,
)
from .trajectory import (
    EnsembleRun,
    MeasurementRecord,
    NormCollapseError,
    TrajectoryConfig,
    VanishingLikelihoodError,
    apply_measurement,
    effective_hamiltonian,
    expected_current,
    gauge_transform_step,
    measurement_operator,
    run_ensemble,
    run_trajectory,
    step_linear,
    step_nonlinear_sse,
    step_sme,
    trajectory_stream,
)
from .unravelings import (
    AsymmetricUMatrixError,
    CovarianceError,
    FixedU,
    Heterodyne,
    Homodyne,
    InvariantStateDep,
    InvariantTrace,
    NormExceededError,
    UMatrixError,
    UnravelingSpec,
    extremal_R,
    homodyne_u,
    is_valid_u,
    real_embedding,
    sample_increments,
    spec_from_dict,
    spectral_norm,
    u_state_dependent,
    u_trace,
    validate_u,
)
from .verify import CheckResult, format_report, run_all

__version__ = "0.1.0"

__all__ = [
    "AsymmetricUMatrixError",
    "AtomParams",
    "CheckResult",
    "CovarianceError",
    "DegenerateSteadyStateError",
    "EnsembleRun",
    "EnsembleSummary",
    "FixedU",
    "Heterodyne",
    "Homodyne",
    "InvariantStateDep",
    "InvariantTrace",
    "LindbladModel",
    "MeasurementRecord",
    "NormCollapseError",
    "NormExceededError",
    "FIGURE_HEADER",
    "KET_EXCITED",
    "KET_GROUND",
    "SCENARIOS",
    "SIGMA_MINUS",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "TrajectoryConfig",
    "UMatrixError",
    "UnravelingSpec",
    "VanishingLikelihoodError",
    "apply_measurement",
    "bloch",
    "build_atom",
    "check_density_matrix",
    "check_pure_state",
    "effective_hamiltonian",
    "ensemble_summary",
    "expectation",
    "expected_current",
    "extremal_R",
    "format_report",
    "gauge_transform_step",
    "homodyne_u",
    "integrate_master",
    "is_valid_u",
    "liouvillian_apply",
    "liouvillian_matrix",
    "matrix_from_pairs",
    "matrix_to_pairs",
    "measurement_operator",
    "plus_x_state",
    "projector",
    "real_embedding",
    "rotate_lindblads",
    "run_all",
    "run_ensemble",
    "run_trajectory",
    "sample_increments",
    "scenario_expected_current",
    "scenario_spec",
    "shift_lindblads",
    "sme_u1_decomposed_step",
    "spec_from_dict",
    "spectral_norm",
    "steady_state",
    "step_linear",
    "step_nonlinear_sse",
    "step_sme",
    "trace_distance",
    "trajectory_stream",
    "transition_rate",
    "transition_rate_operator",
    "u_state_dependent",
    "u_trace",
    "validate_u",
    "write_figure_csvs",
    "z_drift_residual",
]
