//! Numerical toolkit for puzzle and parapuzzle pieces of `z^2 + c`.

pub mod cli;
pub mod conformal;
pub mod error;
pub mod geometry;
pub(crate) mod points;
pub mod parapuzzle;
pub mod puzzle;
pub mod quaddyn;
pub mod scalelab;

pub use error::{Error, Result};
pub use num_complex::Complex64;
