//! Success-history adaptive differential evolution with sinusoidal scale
//! factor schedules and trigonometric mutation, plus an architecture-search
//! driver that runs it over continuous encodings of discrete spaces.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod codec;
pub mod de_core;
pub mod error;
pub mod experiment;
pub mod nas;
pub mod objectives;
pub mod shsade;
pub mod trace;

pub use error::{Error, Result};

/// Seeded generator used throughout the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
