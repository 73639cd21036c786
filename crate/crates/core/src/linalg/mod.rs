//! Dense complex linear algebra for few-qubit states and measurements.
//!
//! Registers are ordered with party 1 as the most significant tensor factor,
//! so the basis index of `|o₁ o₂ … oₙ⟩` is `o₁·2ⁿ⁻¹ + … + oₙ`. Every
//! operation is a pure function over immutable values.

mod matrix;
mod state;

pub use matrix::{pauli, ComplexMatrix, MAX_DIMENSION, TOLERANCE};
pub use state::{
    born_probabilities, depolarize, fidelity_with_pure, partial_trace, partial_trace_matrix, spectral_gap,
    standard_state, tensor_product, trace_distance, BinaryMeasurement, DensityOperator, MatrixRecord, PreparedState,
    StandardState, StateVector,
};
