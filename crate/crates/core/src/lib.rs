//! Free random variables for non-Hermitian sums: quaternion Green's and Blue's
//! functions, an addition-law solver, closed-form models, Monte-Carlo
//! ensembles, and spectral comparison tools.

pub mod engine;
pub mod ensembles;
pub mod error;
pub mod green;
pub mod models;
pub mod quaternion;
pub mod solver;
pub mod spectra;

pub use error::{Error, Result};
pub use num_complex::Complex64 as Complex;
pub use quaternion::Quaternion;
