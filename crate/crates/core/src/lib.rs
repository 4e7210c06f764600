//! Weighted heat kernels for Kohn-type Laplacians on polynomial model domains.

pub mod duhamel;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod harness;
pub mod qse;
pub mod solver;
pub mod synthesis;

pub use error::{Error, Result};
