//! Privacy-preference prediction under limited data.
//!
//! The crate covers the whole experiment: a persona-mixture simulator
//! ([`datagen`]), a privacy-preserving preprocessing pipeline ([`preprocess`]),
//! naive Bayes, perceptron and rule-baseline classifiers ([`models`]), tabular
//! Q-learning ([`rl`]) and a seeded evaluation harness ([`eval`]). The
//! `privpref` binary exposes the same stages as subcommands ([`cli`]).

pub mod cli;
pub mod data;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod models;
pub mod preprocess;
pub mod rl;
pub mod seed;

pub use error::{Error, Result};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of a value's compact JSON form.
pub fn digest_json<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serializable");
    hex::encode(Sha256::digest(&json))
}
