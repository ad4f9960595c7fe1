//! Weighted composition operators `C f = w * (f o phi)` on finite atomic
//! measure spaces.
//!
//! The crate computes the Radon-Nikodym derivative `h`, conditional
//! expectations, adjoints and polar decompositions, classifies operators
//! (quasinormal, hyponormal, normal), and certifies subnormality by checking
//! the consistency condition for a family of probability measures and
//! building the quasinormal extension on the product space.

pub mod calculus;
pub mod cli;
pub mod error;
pub mod operator;
pub mod oracle;
pub mod space;
pub mod structure;
pub mod subnormality;
pub mod tolerance;

pub use error::{Result, WcoError};
pub use tolerance::Tolerances;

pub type C64 = num_complex::Complex64;

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
