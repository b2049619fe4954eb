//! Exact mixing analysis of the shelf shuffler.
//!
//! The m-shelf shuffle measure on permutations of `n` cards depends on a
//! permutation only through its number of valleys, so every distance to the
//! uniform measure reduces to a comparison of two distributions on
//! `0..=floor((n - 1) / 2)`. This crate computes those distributions exactly
//! with big rationals, evaluates the large-deck normal approximation, and
//! provides an enumeration oracle and a seeded sampler for cross-checking.
//!
//! ```
//! use shelfmix_core::tvmetrics::tv_exact;
//!
//! let report = tv_exact(52, 52).unwrap();
//! assert_eq!(report.tv_exact_decimal, "0.14721");
//! ```

pub mod error;
pub mod exactnum;
pub mod permstat;
pub mod shelfmeasure;
pub mod simulator;
pub mod tvmetrics;

pub use error::{Error, Result};
pub use exactnum::BigRat;
pub use permstat::{Permutation, ValleyTable};
pub use shelfmeasure::{QTable, TiltBounds, TiltedDist};
pub use tvmetrics::{ShuffleSpec, TVReport};
