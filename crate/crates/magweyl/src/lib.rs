//! Magnetic Weyl calculus on truncated grids.

pub mod error;
pub mod evolution;
pub mod field_geometry;
pub mod linalg;
pub mod moyal_product;
pub mod operator_calculus;
pub mod quantization;
pub mod quadrature;
pub mod symbol_space;

pub use error::{MagweylError, Result};
