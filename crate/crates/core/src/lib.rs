//! Discrete Gaussian kernels on Z^d, their Fourier multipliers, variation
//! seminorms, fractional-derivative machinery and an inequality-certification
//! harness, all evaluated with certified series truncation.

pub mod certify;
pub mod error;
pub mod fractional;
pub mod seminorms;
pub mod special;
pub mod lattice;
pub mod multipliers;
pub mod theta;

pub use error::{Error, Result};
