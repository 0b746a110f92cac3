pub mod canonical_model;
pub mod error;
pub mod experiment;
pub mod extrapolation;
pub mod hardy_sphere;
pub mod inverse;
pub mod multiindex;
pub mod reduction;
pub mod spectral;
pub mod toric;

pub use error::{Error, Result};
