//! Barycenter-based natural maps for measurable cocycles of lattices in the
//! isometry group of real hyperbolic space.

pub mod barycenter;
pub mod cocycle;
pub mod degree;
pub mod error;
pub mod hyperboloid;
pub mod io;
pub mod lattice;
pub mod measure;
pub mod natural_map;
pub mod quadrature;
pub mod volume;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use hyperboloid::{HBoundaryPoint, HIsometry, HPoint, HTangent};
pub use lattice::{FundamentalDomain, GroupPresentation};
pub use measure::BoundaryMeasure;
pub use quadrature::SphereQuadrature;
