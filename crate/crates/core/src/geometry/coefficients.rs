//! Operator coefficients: diffusion tensor, drift, and zeroth-order measure.
//!
//! The singular profiles scale like negative powers of the boundary distance:
//! `|b(x)| = b_scale · δ(x)^{β−1}` and the zeroth-order density
//! `c(x) = c_scale · δ(x)^{β−2}` with `β ∈ (0,1)`. Within half a cell of the
//! boundary, δ is clamped below by `h/2` so the discrete cell masses stay
//! finite; the norm scans only look at balls with radius below `δ(x)/2`, so
//! the clamp is invisible at resolved scales.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

use super::grid::Grid;

/// Symmetric 2×2 tensor stored by unique entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor {
    pub fn identity() -> Self {
        SymTensor {
            xx: 1.0,
            xy: 0.0,
            yy: 1.0,
        }
    }

    pub fn diagonal(xx: f64, yy: f64) -> Self {
        SymTensor { xx, xy: 0.0, yy }
    }

    /// Eigenvalue interval `[λmin, λmax]`.
    pub fn eigen_bounds(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let det = self.xx * self.yy - self.xy * self.xy;
        let disc = (mean * mean - det).max(0.0).sqrt();
        (mean - disc, mean + disc)
    }
}

/// Descriptor of the boundary-singular coefficient family.
#[derive(Debug, Clone, Copy)]
pub struct SingularProfile {
    pub beta: f64,
    pub b_scale: f64,
    pub c_scale: f64,
    /// Unit direction of the drift field; the profiles only constrain |b|.
    pub direction: [f64; 2],
}

/// The data (A, b, μ) of the operator on a fixed grid.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    grid: Arc<Grid>,
    tensor: Vec<SymTensor>,
    ellipticity_upper: f64,
    drift: Vec<[f64; 2]>,
    mu: DiscreteMeasure,
    profile: Option<SingularProfile>,
    beta_hint: Option<f64>,
}

impl CoefficientSet {
    /// Identity diffusion, no drift, no zeroth-order term.
    pub fn laplace(grid: &Arc<Grid>) -> Self {
        CoefficientSet {
            grid: Arc::clone(grid),
            tensor: vec![SymTensor::identity(); grid.num_nodes()],
            ellipticity_upper: 1.0,
            drift: vec![[0.0, 0.0]; grid.num_nodes()],
            mu: DiscreteMeasure::zero(grid),
            profile: None,
            beta_hint: None,
        }
    }

    /// General constructor; verifies `|ξ|² ≤ A(x)ξ·ξ ≤ L|ξ|²` nodewise.
    pub fn new(
        grid: &Arc<Grid>,
        tensor: impl Fn([f64; 2]) -> SymTensor,
        ellipticity_upper: f64,
        drift: impl Fn([f64; 2]) -> [f64; 2],
        mu: DiscreteMeasure,
    ) -> Result<Self> {
        if !grid.same_layout(mu.grid()) {
            return Err(Error::GridMismatch);
        }
        let mut tensors = vec![SymTensor::identity(); grid.num_nodes()];
        let mut drifts = vec![[0.0, 0.0]; grid.num_nodes()];
        for &i in grid.interior_nodes() {
            let i = i as usize;
            let p = grid.node_pos(i);
            let a = tensor(p);
            let (lo, hi) = a.eigen_bounds();
            if lo < 1.0 - 1e-12 || hi > ellipticity_upper + 1e-12 {
                return Err(Error::EllipticityViolated {
                    node: i,
                    min_eig: lo,
                    max_eig: hi,
                    upper: ellipticity_upper,
                });
            }
            tensors[i] = a;
            drifts[i] = drift(p);
        }
        Ok(CoefficientSet {
            grid: Arc::clone(grid),
            tensor: tensors,
            ellipticity_upper,
            drift: drifts,
            mu,
            profile: None,
            beta_hint: None,
        })
    }

    /// Attaches a zeroth-order measure to an existing coefficient set.
    pub fn with_mu(mut self, mu: DiscreteMeasure) -> Result<Self> {
        if !self.grid.same_layout(mu.grid()) {
            return Err(Error::GridMismatch);
        }
        self.mu = mu;
        Ok(self)
    }

    /// Records the Hölder/Morrey exponent the data is measured against.
    pub fn with_beta_hint(mut self, beta: f64) -> Self {
        self.beta_hint = Some(beta);
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn tensor(&self, node: usize) -> SymTensor {
        self.tensor[node]
    }

    pub fn ellipticity_upper(&self) -> f64 {
        self.ellipticity_upper
    }

    pub fn drift(&self, node: usize) -> [f64; 2] {
        self.drift[node]
    }

    pub fn max_drift(&self) -> f64 {
        self.drift
            .iter()
            .map(|b| b[0].hypot(b[1]))
            .fold(0.0, f64::max)
    }

    pub fn mu(&self) -> &DiscreteMeasure {
        &self.mu
    }

    pub fn profile(&self) -> Option<&SingularProfile> {
        self.profile.as_ref()
    }

    pub fn beta_hint(&self) -> Option<f64> {
        self.beta_hint.or(self.profile.map(|p| p.beta))
    }

    pub fn has_lower_order(&self) -> bool {
        self.max_drift() > 0.0 || self.mu.total_variation() > 0.0
    }

    /// The squared-drift measure `|b|² m`, whose Morrey norm controls the
    /// drift perturbation.
    pub fn drift_square_measure(&self) -> DiscreteMeasure {
        let vol = self.grid.cell_volume();
        let mut masses = vec![0.0; self.grid.num_nodes()];
        for &i in self.grid.interior_nodes() {
            let i = i as usize;
            let b = self.drift[i];
            masses[i] = (b[0] * b[0] + b[1] * b[1]) * vol;
        }
        DiscreteMeasure::from_masses(&self.grid, masses).expect("interior-only masses")
    }
}

/// Builds the δ-power coefficient family: identity diffusion, drift of
/// magnitude `b_scale · δ^{β−1}` in a fixed unit direction, and a
/// cell measure with density `c_scale · δ^{β−2}`.
pub fn singular_coefficients(
    grid: &Arc<Grid>,
    beta: f64,
    b_scale: f64,
    c_scale: f64,
    direction: [f64; 2],
) -> Result<CoefficientSet> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::InvalidBeta(beta));
    }
    let norm = direction[0].hypot(direction[1]);
    let dir = if norm > 0.0 {
        [direction[0] / norm, direction[1] / norm]
    } else {
        [1.0, 0.0]
    };
    let floor = grid.spacing() / 2.0;
    let vol = grid.cell_volume();

    let mut drift = vec![[0.0, 0.0]; grid.num_nodes()];
    let mut masses = vec![0.0; grid.num_nodes()];
    for &i in grid.interior_nodes() {
        let i = i as usize;
        let delta = grid.delta(i).max(floor);
        let magnitude = b_scale * delta.powf(beta - 1.0);
        drift[i] = [magnitude * dir[0], magnitude * dir[1]];
        masses[i] = c_scale * delta.powf(beta - 2.0) * vol;
    }

    Ok(CoefficientSet {
        grid: Arc::clone(grid),
        tensor: vec![SymTensor::identity(); grid.num_nodes()],
        ellipticity_upper: 1.0,
        drift,
        mu: DiscreteMeasure::from_masses(grid, masses).expect("interior-only masses"),
        profile: Some(SingularProfile {
            beta,
            b_scale,
            c_scale,
            direction: dir,
        }),
        beta_hint: Some(beta),
    })
}
