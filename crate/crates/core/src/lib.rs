//! Conditional first-exit-time laws for finite mixtures of Markov jump
//! processes with overlapping stochastically closed sets.

// index loops read closest to the matrix algebra; `!(x > 0.0)` is meant to
// catch NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod inference;
pub mod matcore;
pub mod model;
pub mod presets;
pub mod quadrature;
pub mod simulator;

pub use error::{Error, Result};
pub use inference::{InformationScenario, PathRecord};
pub use matcore::{Matrix, Spectrum, Tolerances};
pub use model::{ClosedSetFamily, MixtureModel, PhaseBlocks, StructuredBlocks, ValidationReport};
