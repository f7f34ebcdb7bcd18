//! Bouc-Wen hysteresis toolkit for piezoelectric actuators.
//!
//! The crate covers the model family end to end: the classical Bouc-Wen
//! form and its normalized reparameterization, the polynomial-asymmetric
//! fractional-order extension, and a second-order comparison model; plus
//! Grünwald-Letnikov fractional differentiation, differential-evolution
//! parameter identification, and inverse-multiplicative feedforward
//! compensators with a closed-cascade evaluation harness.
//!
//! All solvers are deterministic: fixed association orders in the numeric
//! kernels and a seeded RNG in the identifier make every result
//! reproducible bit for bit.

pub mod compensate;
pub mod csv;
pub mod error;
pub mod fracdiff;
pub mod identify;
pub mod models;
pub mod signals;

pub use error::{Error, Result};
