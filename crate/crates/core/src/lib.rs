//! Numerical laboratory for geodesic and frame flows on geometrically finite
//! hyperbolic manifolds.

pub mod covers;
pub mod error;
pub mod fit;
pub mod flow;
pub mod group;
pub mod isometry;
pub mod report;
pub mod spectral;
pub mod statistics;

#[cfg(test)]
mod testutil;

pub use error::{GeoError, Result};
