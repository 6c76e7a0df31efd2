//! Multitype sticky particle dynamics for one-dimensional diagonal
//! hyperbolic systems with nondecreasing initial data.
//!
//! Type indices γ and particle indices k are zero-based throughout the API;
//! [`ParticleId`] prints the usual one-based `γ:k` label.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod configuration;
pub mod error;
pub mod fields;
pub mod measures;
pub mod mspd;
pub mod quadrature;
pub mod solution;
pub mod spd;

pub use analysis::{
    check_rarefaction_spacing, check_stability, classify_configuration, config_lp_distance,
    random_affine_field, random_configuration, stability_constants, stability_for_pair, tbar_bound,
    Classification, Goodness, SpacingReport, StabilityReport, StabilitySettings, TrialRow,
};
pub use configuration::{Configuration, ParticleId};
pub use error::{Error, Result};
pub use fields::{validate_constants, Field, FieldConstants, FieldSpec};
pub use measures::{
    discretise, empirical_from_positions, wasserstein_p, wasserstein_vec, MeasureVector, ProbMeasure1D,
    QuantilePiece,
};
pub use mspd::{
    crossing_count, crossing_set, first_cross_time, initial_velocities, mspd_flow, mspd_trajectories, ranks,
    Event, EventKind, FirstCross, PathPoint, TrajectoryBundle,
};
pub use solution::{
    characteristic_residual, empirical_cdf, lambda_brace, riemann_solve, solve_system, InitialProfile,
    RiemannFan, ScalarOracle, SolutionSnapshot,
};
pub use spd::{initial_clusters, spd_flow, Cluster, MergeEvent, ScalarState};
