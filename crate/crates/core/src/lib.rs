//! Player-profile classification workbench.
//!
//! Pipeline pieces: a profile-driven gameplay [`simulator`], per-decision
//! [`features`], windowing and class balancing in [`dataset`], from-scratch
//! bidirectional LSTM classifiers in [`models`], and the experiment ladder in
//! [`eval`].

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod seed;
pub mod simulator;
pub mod taxonomy;

pub use error::{Error, Result};
