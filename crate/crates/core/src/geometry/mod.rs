//! Domains, grids, and operator coefficients.

mod coefficients;
mod domain;
mod grid;

pub use coefficients::{singular_coefficients, CoefficientSet, SingularProfile, SymTensor};
pub use domain::{Domain, DomainPreset};
pub use grid::{build_grid, Grid, NodeKind};
