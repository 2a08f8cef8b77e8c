//! Homogeneous-kernel potentials, maximal potentials, singular integrals and
//! spherical maximal operators on a regular grid in two and three dimensions.

pub mod analysis;
pub mod catalog;
pub mod error;
pub mod grid;
pub mod io;
pub mod operators;
pub mod sphere;
pub mod sum;

pub use catalog::{sample_catalog, CatalogId, Params};
pub use error::{Error, Result};
pub use grid::{Field, Grid, NormSettings};
pub use operators::{RadiusLadder, TruncationPolicy};
pub use sphere::{KernelSpec, SphereQuadrature, SphereSymbol};
