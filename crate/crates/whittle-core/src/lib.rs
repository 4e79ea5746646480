//! Restless-bandit engine: exact Whittle indices by average-reward dynamic
//! programming, an online two-timescale Q-learning estimator for the same
//! indices, and a simulation harness that plays index policies on
//! multi-armed instances and records reward/convergence metrics.
//!
//! Layout:
//! - [`model`]: validated two-action arm models and multi-arm instances.
//! - [`oracle`]: relative value iteration + bisection for exact indices,
//!   indexability scans.
//! - [`learner`]: tabular two-timescale Q-learning with per-state subsidy
//!   estimates.
//! - [`schedule`]: step-size schedules for the two timescales.
//! - [`policy`]: epsilon-greedy top-M index policies.
//! - [`sim`]: seeded arm-state simulation.
//! - [`harness`]: replicated experiments, metrics CSV, baselines.
//! - [`config`]: TOML model/experiment schemas with override support.
//! - [`checkpoint`]: versioned binary snapshots of learner + RNG state.
//! - [`benchmarks`]: the two built-in example models.

pub mod benchmarks;
pub mod checkpoint;
pub mod config;
pub mod harness;
pub mod learner;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod schedule;
pub mod sim;

pub use model::{ArmModel, BanditInstance, ModelError};
pub use oracle::{OracleError, OracleOptions, OracleSolution};
pub use schedule::StepSchedule;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
