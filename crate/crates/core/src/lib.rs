//! Markovian random products of maps on compact boxes.
//!
//! The crate covers the driving Markov shift ([`shift`]), maps and their
//! compositions ([`maps`]), the splitting condition ([`splitting`]), an exact
//! cylinder-enumeration oracle ([`oracle`]), the Markov operator on
//! state-tagged measures ([`operator`]) and synchronization experiments
//! ([`sync`]). [`systems`] builds the reference systems used by the tests
//! and the shipped configs.

pub mod error;
pub mod field;
pub mod maps;
pub mod operator;
pub mod oracle;
pub mod shift;
pub mod splitting;
pub mod sync;
pub mod systems;

pub use error::{Error, Result};
pub use field::{parse_exact, Field};
pub use maps::{IntervalBox, MapDefinition, MapKind, MapSpec, MapSystem, MonotoneType, Sign, SignTable};
pub use operator::{
    apply_operator, estimate_target, estimate_target_from, resample, stability_experiment, weak_star_distance,
    Particle, StabilityParams, StabilityReport, StabilityRow, StateTaggedMeasure, TargetEstimate,
};
pub use oracle::{
    geometric_bounds, measure_sigma, substitute_f, verify_bounds, verify_bounds_exact, verify_bounds_f64, OracleParams,
    OracleReport, OracleRun, OracleSystem, Verdict,
};
pub use shift::{
    classify_matrix, inverse_transition, stationary_vector, Classification, Direction, MarkovShift, Start,
    StationaryVector, TransitionMatrix, Word,
};
pub use splitting::{
    certify, check_monotone_split, normalize_witness, search_witness, verify_split_horizon, Certificate, HorizonReport,
    HorizonSampling, HorizonStatus, NormalizeMode, NormalizedPair, SplitWitness,
};
pub use sync::{
    coding_point, ergodic_average, fit_decay, fit_decay_rate, image_diameter_curve, invariance_residual,
    measure_contraction_experiment, sync_experiment, weak_hyperbolicity_experiment, CodingPoint, DecayCurve, DecayFit,
    ErgodicReport, SyncReport, TestFunction, WeakHyperbolicityReport,
};
