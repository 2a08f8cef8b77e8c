//! Symbols on the unit sphere, the homogeneous kernels they generate and
//! spherical quadrature.

pub mod kernel;
pub mod quadrature;
pub mod symbol;

pub use kernel::{
    boundary_constants, grad_ktilde, grad_zero_mean_residual, ksing_eval, ktilde_eval,
    BoundaryConstants, Degree, KernelSpec,
};
pub use quadrature::{default_order, sphere_quadrature, SphereQuadrature};
pub use symbol::{symbol_integral, SphereSymbol, SymbolKind};
