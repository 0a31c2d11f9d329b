//! Numerical laboratory for planar Dirichlet problems
//! `−div(A∇u) + b·∇u + μu = ν`, `u = g` on the boundary, with drift and
//! zeroth-order coefficients that blow up like negative powers of the
//! boundary distance.
//!
//! The crate measures data in distance-weighted Morrey norms, verifies the
//! capacity density condition of a domain by sweeping condensers along its
//! boundary, builds solutions either by a Neumann series in the Morrey norm
//! or by a coupled direct solve, and quantifies global Hölder regularity of
//! the results by fitting moduli of continuity.

pub mod analysis;
pub mod capacity;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod geometry;
mod linalg;
pub mod measure;
pub mod perturbation;
pub mod verification;

pub use analysis::{
    holder_fit, holder_fit_samples, holder_norm, holder_norm_samples, oscillation,
    weak_harnack_ratio, HarnackReport, HolderFit, HolderNorm,
};
pub use capacity::{
    ball_plate, capacity, cdc_ratio, cdc_sweep, CapacityResult, CdcOutcome, CdcReport, CdcSweep,
    CdcWarning,
};
pub use elliptic::{
    assemble, caccioppoli_check, gradient, green_apply, harmonic_extension, OperatorMatrix,
};
pub use error::{Error, Result};
pub use field::DiscreteField;
pub use geometry::{
    build_grid, singular_coefficients, CoefficientSet, Domain, DomainPreset, Grid, NodeKind,
    SymTensor,
};
pub use measure::{
    drift_morrey_exponent, measure_axpy, morrey_exponent, morrey_norm, DiscreteMeasure,
    MorreyNormResult, DEFAULT_SCAN_DEPTH,
};
pub use perturbation::{
    apply_lower_order, direct_solve, lower_order_image, neumann_solve, solve_bvp, SolveOptions,
    SolveReport, Strategy,
};
