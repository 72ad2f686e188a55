//! Sparse time-frequency optimal control of bilinear Schrödinger dynamics.
//!
//! The library propagates driven quantum systems with a Strang-split unitary
//! stepper, represents controls as measures (Dirac atoms on a frequency grid
//! carrying complex envelopes), synthesizes real control fields through one
//! of six operators with exact discrete adjoints, and minimizes a
//! Huber-smoothed sparsity-promoting objective with L-BFGS. See the
//! `examples/` directory for runnable entry points per capability.

pub mod control;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod models;
pub mod numeric;
pub mod objective;
pub mod optimizer;
pub mod synthesis;

pub use control::{
    base_envelope, envelope_inner, envelope_norm, huber_value, measure_norm,
    random_initial_control, support, ControlMeasure, Envelope, EnvelopeSpace, HuberParams,
};
pub use dynamics::{
    coupling_pairing, propagate, propagate_adjoint, CVector, QuantumState, QuantumSystem,
    SampledField, StateTrajectory,
};
pub use error::{Error, Result};
pub use experiments::{
    reference_config, reference_configs, run_restarts, run_scenario, run_sweep, write_artifacts,
    ArtifactPaths, ModelConfig, OptimizerConfig, ScenarioConfig,
};
pub use grid::{FrequencyGrid, TimeGrid};
pub use models::{
    build_three_level, build_two_level, eigen_gaps, surface_gaps, FiniteLevelSystem, TwoPesSpec,
    TwoPesSystem,
};
pub use objective::{
    AdjointCache, ControlProblem, CostKind, ObjectiveBreakdown, OptimalityReport,
};
pub use optimizer::{
    continuation_sweep, initial_control, minimize, minimize_with_restarts, sweep_summary,
    IterationRecord, LbfgsOptions, RunResult, SweepRecord, TerminationReason,
};
pub use synthesis::{
    build_window, gaussian_kernel_matrix, spectrogram, GaborWindow, OperatorKind,
    SynthesisOperator,
};
