//! Extended Maxwell operator on periodic cells.
//!
//! The crate evaluates the 8-component first-order operator acting on
//! `(E, H, φ, ψ)`, its factorization into a vector Schrödinger operator,
//! Bloch fiber spectra, and the constructive resolvent built on the free
//! multiplier. Everything is discretized by Fourier collocation on a uniform
//! grid; [`field::FiniteDifference4`] provides an independent derivative
//! backend used as a cross-check.

pub mod bloch;
pub mod error;
pub mod field;
pub mod identities;
pub mod linalg;
pub mod medium;
pub mod operators;
pub mod par;
pub mod resolvent;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
