//! Error exponents and finite-blocklength random-coding bounds for joint
//! source-channel coding over discrete memoryless pairs.
//!
//! The crate computes Gallager- and Csiszar-style joint source-channel
//! exponents (including the concave-hull dual form over sets of input
//! distributions), realizes the two-class random-coding construction that
//! attains them, evaluates exact finite-blocklength bounds, and validates
//! everything against exhaustive or Monte Carlo channel-coding ensembles.
//!
//! All computation is carried out in nats; convert at the display boundary
//! with [`nats_to_bits`].

pub mod composition;
pub mod ensemble;
pub mod error;
pub mod exponents;
pub mod finite_length;
pub mod gallager;
pub mod hull;
pub mod logdomain;
pub mod prob;
mod search;

pub use error::{Error, Result};

/// Conversion for display purposes; internals stay in nats.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}
