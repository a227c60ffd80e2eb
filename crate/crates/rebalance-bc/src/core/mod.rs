//! Shared domain types and math primitives.
//!
//! Everything in here is a pure function over immutable inputs and is safe to
//! call from any number of concurrent workers.

pub mod io;
pub mod math;
pub mod types;

pub use math::{centered, kl_gaussian, normalize_states, simplex_project_step};
pub use types::{DeltaReport, LabeledDataset, StateActionPair, WeightVector};
