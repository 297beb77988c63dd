//! Length-of-stay prediction toolkit.
//!
//! The crate covers the whole modelling path for a binary "prolonged stay"
//! outcome on tabular clinical data: ingestion and encoding ([`data`]),
//! missing-data handling ([`prep`]), correlation-based feature selection
//! ([`featsel`]), from-scratch tree and linear learners ([`learners`]), a
//! soft-voting stack with a Gaussian Naive Bayes meta-learner ([`ensemble`]),
//! evaluation and bootstrap model comparison ([`eval`]), Shapley-value
//! attributions ([`explain`]) and a synthetic generator with planted ground
//! truth ([`synth`]).
//!
//! All randomness is driven by explicit `u64` seeds; sub-seeds are derived
//! with [`rng::derive_seed`] so parallel and serial execution agree bit for bit.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod explain;
pub mod featsel;
pub mod learners;
pub mod prep;
pub mod rng;
pub mod serde_util;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
