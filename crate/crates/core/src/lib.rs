//! Numerical workbench for modulus bounds of satellite polynomial-like
//! renormalizations in the quadratic family.

pub mod bounds;
pub mod cache;
pub mod cli;
pub mod error;
pub mod dynamics;
pub mod extremal;
pub mod fmt;
pub mod geom;
pub mod hyperbolic;
pub mod lavaurs;
pub mod modulus;
pub mod specfun;
pub mod svg;

pub use error::{Error, Result};
pub use num_complex::Complex64;
