//! Spectral toolkit for one-frequency quasi-periodic Schrödinger operators.
//!
//! Transfer-matrix cocycles, subordinacy matrices, Weyl m-functions, the
//! integrated density of states, resonance arithmetic, scaling predictors and
//! an explicit Anosov–Katok cocycle construction.

pub mod anosov_katok;
pub mod arithmetic;
pub mod cocycle;
pub mod error;
pub mod fixed;
pub mod fourier;
pub mod ids;
pub mod linalg2;
pub mod scaling;
pub mod subordinacy;
pub mod weyl;

pub use error::{QpError, Result};
