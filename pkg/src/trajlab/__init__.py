"""Trajectory ensembles, measures on them, and worked physical systems.

The package treats a dynamical theory as a set of allowed trajectories and
a statistical theory as a measure on that set. ``core`` holds the shared
vocabulary (trajectories, experiments, rates, measures, boundary maps);
the remaining modules each realize one worked system on top of it.
"""

from .errors import (
    TrajlabError,
    NoTrialsError,
    EmptyEnsembleError,
    DegenerateMeasureError,
    PushforwardError,
    PrecisionExhaustedError,
    IntegrationError,
    NoSolutionError,
    NotAMinimumError,
    ZeroFieldError,
    UnconditionedSettingError,
    AbsorbedRayError,
    UnsupportedInputError,
    SchemaError,
)
from .core import (
    ConfigurationPoint,
    Event,
    Trajectory,
    SampledTrajectory,
    Segment,
    PiecewiseTrajectory,
    Experiment,
    RateResult,
    RateStatistics,
    evaluate_rates,
    ensemble_statistics,
    is_well_defined,
    MeasureSpec,
    point_mass,
    HistogramMeasure,
    BoundaryMap,
    validate_jacobian,
    pushforward,
    check_determinism,
)
from .rng import stream, trajectory_stream
from .bernoulli import (
    BernoulliState,
    bernoulli_step,
    orbit,
    orbit_rate,
    BernoulliTrajectory,
    ThresholdExperiment,
    bit_sequence_measure,
    biased_measure,
    lebesgue_ensemble_rate,
)
from .scattering import (
    Potential,
    HardSphere,
    RepulsivePower,
    ScreenedCoulomb,
    turning_radius,
    deflection_angle,
    DeflectionFunction,
    transfer_density,
    inverse_transfer_density,
    isotropic_source_density,
    transverse_mass,
    solid_angle_mass,
    EncounterRecord,
    FlipperScene,
    random_scene,
    FlipperTrajectory,
    trace_flipper,
    bin_edges,
    AngleBinExperiment,
    entry_measure,
    flipper_trajectory_builder,
    cross_sections_from_rates,
    FlipperResult,
    flipper_cross_section,
)
from .decay import (
    DecayMasses,
    DecayBoundary,
    DecayVertex,
    decay_action,
    action_gradient,
    action_hessian,
    solve_decay_vertex,
    conservation_residuals,
    symmetric_decay_time,
    sample_boundary,
    boundary_measure,
    exponential_life_measure,
    uniform_life_measure,
    mean_life,
    decay_trajectory,
    rest_decay_family,
)
from .spin_epr import (
    SpinVariable,
    PhysicalConstants,
    FieldMap,
    validate_field_map,
    SGDevice,
    EPRSettings,
    spin_lagrangian,
    align_spin,
    branch_weights,
    propagate_sg,
    planar_setting,
    chsh_optimal_angles,
    singlet_measure,
    global_epr_measure,
    epr_conditional_probabilities,
    correlator,
    chsh_value,
    cells_from_outcomes,
    sample_epr_counts,
    chsh_estimate,
    deterministic_strategies,
    chsh_of_strategy,
)
from .interference import (
    BiprismScene,
    standard_bench,
    biprism_deflection,
    ScreenDensity,
    fringe_target_density,
    envelope_target_density,
    uniform_target_density,
    emission_measure_from_screen,
    screen_density_from_emission,
    fringe_visibility,
    estimate_fringe_spacing,
    emission_tv_distance,
    GaussianPairPotential,
    CompactBumpPotential,
    NBodySystem,
    AsymptoticVelocityResult,
    asymptotic_velocity,
    velocity_boundary_map,
    free_quantum_momentum_measure,
    InterferenceDecomposition,
    interference_decomposition,
)

__version__ = "0.1.0"
