//! Tools for diagnosing and correcting behavior imbalance in demonstration
//! datasets for behavior cloning.
//!
//! Demonstration datasets are usually mixtures: a handful of distinct
//! behaviors, each owning part of the state space, each represented by a
//! different share of the samples. Training a single policy on such a mixture
//! with every sample weighted equally biases the policy toward the most
//! common behaviors. This crate provides:
//!
//! - closed-form analysis of that bias for linear-Gaussian behaviors
//!   ([`analytic`]), plus synthetic data generators and a toy point-mass
//!   environment to observe it end to end ([`datagen`]);
//! - a weighted behavior-cloning trainer with per-group loss tracking
//!   ([`trainer`]) over linear and MLP policies ([`policy`]);
//! - rebalancing strategies: equal per-behavior weighting, importance
//!   weights, min-max reweighting against reference losses, and
//!   prediction-error upsampling ([`rebalance`]);
//! - meta-gradient estimation of the lowest achievable loss per behavior,
//!   used as reference targets for the min-max loop ([`metaref`]);
//! - a seeded experiment harness with Welch-t reporting ([`harness`]) and
//!   reproduction suites ([`repro`]) behind a small CLI ([`cli`]).
//!
//! Start with the runnable examples in `examples/` — one per capability.

pub mod analytic;
pub mod core;
pub mod error;
pub mod policy;

pub use error::{Error, Result};
