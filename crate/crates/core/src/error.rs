use thiserror::Error;

use crate::perturbation::SolveReport;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate polygon: {reason}")]
    DegeneratePolygon { reason: &'static str },

    #[error("resolution must be at least 8, got {0}")]
    ResolutionTooCoarse(u32),

    #[error("exponent beta must lie in (0, 1), got {0}")]
    InvalidBeta(f64),

    #[error(
        "ellipticity violated at node {node}: eigenvalues [{min_eig:.6}, {max_eig:.6}] \
         outside [1, {upper}]"
    )]
    EllipticityViolated {
        node: usize,
        min_eig: f64,
        max_eig: f64,
        upper: f64,
    },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error(
        "ball of radius {radius} around ({x}, {y}) exits the domain \
         (distance to boundary {delta})"
    )]
    BallExitsDomain {
        x: f64,
        y: f64,
        radius: f64,
        delta: f64,
    },

    #[error("tensors with off-diagonal entries are not supported by the five-point stencil")]
    UnsupportedAnisotropy,

    #[error("linear solver failed: relative residual {residual:.3e} after {iterations} iterations")]
    SolverBreakdown { residual: f64, iterations: usize },

    #[error("series did not contract after {} terms", report.iterate_norms.len().saturating_sub(1))]
    NonContractive { report: Box<SolveReport> },

    #[error("homogeneous problem appears to admit a nontrivial solution: {detail}")]
    FredholmCaseOne { detail: String },

    #[error("condenser plate touches the outer boundary or lies outside it")]
    PlateTouchesBoundary,

    #[error("need at least {needed} nodes, got {got}")]
    NotEnoughNodes { needed: usize, got: usize },

    #[error("field is negative on the requested ball (min {min:.3e})")]
    NegativeOnBall { min: f64 },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
