//! Device-independent verification and certification of multipartite
//! quantum states from nonlocal-game statistics.
//!
//! The crate is layered bottom-up: [`linalg`] (dense states and
//! measurements), [`games`] (nonlocal games, strategies, robustness
//! constants), [`bounds`] (finite-sample tail bounds and planners),
//! [`sources`] (IID and mixture sources with conditional updates),
//! [`protocols`] (verification and certification runs) and [`experiments`]
//! (exact oracles, Monte Carlo and figure datasets).

// Parameter guards use `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod games;
pub mod linalg;
pub mod protocols;
pub mod sources;

pub use error::{Error, Result};
pub use games::{
    NonlocalGame, OutcomeTable, QuantumStrategy, RobustnessModel, RoundRecord, StandardGame, ViolationConvention,
};
pub use linalg::{BinaryMeasurement, ComplexMatrix, DensityOperator, StateVector};
pub use protocols::{CertificationPlan, Outcome, Plan, Transcript, Verdict, VerificationPlan};
pub use sources::{BoundSource, SourceModel, SourceSpec, SourceState};
