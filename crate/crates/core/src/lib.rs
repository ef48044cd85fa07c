//! Sequential-measurement correlations of finite-dimensional quantum systems.
//!
//! The crate simulates random qudit realizations of sequential measurement scenarios,
//! builds the subspace spanned by their moment matrices, and bounds what dimension-`d`
//! systems can produce with semidefinite programs over that subspace.

pub mod basis;
pub mod certify;
pub mod experiments;
pub mod linalg;
pub mod quantum;
pub mod scenario;
pub mod sdp;

pub use quantum::{
    behavior_of, born_probability, haar_unitary, luders_update, moment_matrix, random_measurements,
    random_state, sequence_operator, Behavior, MeasurementSet, MomentMatrix, QuantumError,
    StatePrep,
};
pub use scenario::{Letter, Scenario, Word, WordError, WordIndex};
