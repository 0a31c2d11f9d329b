//! Nodal scalar fields on a grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Grid, NodeKind};

/// A scalar function sampled at lattice nodes.
///
/// Values at exterior nodes are zero and ignored by all reductions. Fields
/// produced by a solve additionally carry the Dirichlet values used at the
/// operator's boundary crossing points (`dirichlet`), so lower-order
/// operators can be applied consistently afterwards.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    dirichlet: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        DiscreteField {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.num_nodes()],
            dirichlet: Vec::new(),
        }
    }

    /// Samples `f` at every interior and boundary node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values = vec![0.0; grid.num_nodes()];
        for (i, value) in values.iter_mut().enumerate() {
            if grid.node_kind(i) != NodeKind::Exterior {
                *value = f(grid.node_pos(i));
            }
        }
        DiscreteField {
            grid: Arc::clone(grid),
            values,
            dirichlet: Vec::new(),
        }
    }

    pub(crate) fn from_parts(grid: &Arc<Grid>, values: Vec<f64>, dirichlet: Vec<f64>) -> Self {
        DiscreteField {
            grid: Arc::clone(grid),
            values,
            dirichlet,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Dirichlet values at the producing operator's boundary crossings.
    pub fn dirichlet_values(&self) -> &[f64] {
        &self.dirichlet
    }

    /// Iterator over (node, position, value) for interior and boundary nodes.
    pub fn active(&self) -> impl Iterator<Item = (usize, [f64; 2], f64)> + '_ {
        (0..self.grid.num_nodes()).filter(|&i| self.grid.node_kind(i) != NodeKind::Exterior).map(|i| (i, self.grid.node_pos(i), self.values[i]))
    }

    pub fn sup_norm(&self) -> f64 {
        self.active().map(|(_, _, v)| v.abs()).fold(0.0, f64::max)
    }

    pub fn min_active(&self) -> f64 {
        self.active()
            .map(|(_, _, v)| v)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_active(&self) -> f64 {
        self.active()
            .map(|(_, _, v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise linear combination `a·self + other`; Dirichlet values combine too.
    pub fn axpy(&self, a: f64, other: &DiscreteField) -> Result<DiscreteField> {
        if !self.grid.same_layout(other.grid()) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + y)
            .collect();
        let dirichlet = if self.dirichlet.len() == other.dirichlet.len() {
            self.dirichlet
                .iter()
                .zip(&other.dirichlet)
                .map(|(x, y)| a * x + y)
                .collect()
        } else if other.dirichlet.is_empty() {
            self.dirichlet.iter().map(|x| a * x).collect()
        } else if self.dirichlet.is_empty() {
            other.dirichlet.clone()
        } else {
            return Err(Error::GridMismatch);
        };
        Ok(DiscreteField {
            grid: Arc::clone(&self.grid),
            values,
            dirichlet,
        })
    }

    /// Largest absolute difference over interior and boundary nodes.
    pub fn sup_distance(&self, other: &DiscreteField) -> Result<f64> {
        if !self.grid.same_layout(other.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .active()
            .map(|(i, _, v)| (v - other.values[i]).abs())
            .fold(0.0, f64::max))
    }
}
