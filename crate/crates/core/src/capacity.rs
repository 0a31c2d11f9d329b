//! Variational capacity of discrete condensers and the capacity density
//! condition swept over boundary points and scales.
//!
//! The capacitary potential minimizes the edge Dirichlet energy
//! `Σ (Δu)²·h/ℓ` over lattice edges (arms cut at the outer boundary carry
//! weight `h/ℓ = 1/θ`), subject to `u = 1` on the plate and `u = 0` on the
//! outer boundary. The reported value is the energy of that minimizer, which
//! makes monotonicity in the plate an exact discrete inequality.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::geometry::{build_grid, Domain, Grid, NodeKind};
use crate::linalg::{solve_refined, Ilu0, SparseMatrix};

/// Result of a condenser capacity computation.
#[derive(Debug)]
pub struct CapacityResult {
    /// Dirichlet energy of the capacitary potential.
    pub value: f64,
    /// The potential: 1 on the plate, 0 on the outer boundary, harmonic between.
    pub potential: DiscreteField,
    pub plate_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdcWarning {
    None,
    /// The grid cannot resolve any complement nodes inside the ball.
    EmptyComplement,
    /// The rasterized complement is thinner than four cells.
    ThinComplement,
}

impl CdcWarning {
    pub fn label(&self) -> &'static str {
        match self {
            CdcWarning::None => "",
            CdcWarning::EmptyComplement => "empty_complement",
            CdcWarning::ThinComplement => "thin_complement",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CdcOutcome {
    pub ratio: f64,
    pub warning: CdcWarning,
}

/// Ratios at one boundary point over the scanned radii.
#[derive(Debug, Clone)]
pub struct CdcReport {
    pub point: [f64; 2],
    pub entries: Vec<(f64, CdcOutcome)>,
}

#[derive(Debug, Clone)]
pub struct CdcSweep {
    pub reports: Vec<CdcReport>,
    /// Minimum observed ratio over all scanned points and radii.
    pub gamma_hat: f64,
    /// The radii actually certified by the scan.
    pub radii: Vec<f64>,
}

enum EdgeEnd {
    Free(u32),
    Plate,
    /// Outer Dirichlet boundary, potential zero.
    Ground,
}

struct Edge {
    from: u32, // free-node unknown id
    to: EdgeEnd,
    weight: f64,
}

/// Walks every energy-carrying edge once: full interior-interior edges are
/// owned by their west/south endpoint; arms cut by the boundary are owned by
/// the node they leave (each side of a slit carries its own stub).
///
/// The callback receives `(owner_node, other_end, weight)` with
/// `other_end = None` for arms grounded on the outer boundary and
/// `weight = h/ℓ` for an arm of length ℓ.
fn for_each_edge(grid: &Grid, mut f: impl FnMut(usize, Option<usize>, f64)) {
    let h = grid.spacing();
    let domain = grid.domain();
    for &node in grid.interior_nodes() {
        let node = node as usize;
        let p = grid.node_pos(node);
        let delta = grid.delta(node);
        for (d, dir) in [[1, 0], [-1, 0], [0, 1], [0, -1]].iter().enumerate() {
            let forward = d % 2 == 0;
            let q = [p[0] + dir[0] as f64 * h, p[1] + dir[1] as f64 * h];
            let neighbor = grid.neighbor(node, dir[0], dir[1]);
            let neighbor_interior =
                neighbor.is_some_and(|j| grid.node_kind(j) == NodeKind::Interior);

            if neighbor_interior && delta > h * (1.0 + 1e-12) {
                if forward {
                    f(node, neighbor, 1.0);
                }
                continue;
            }
            match domain.first_crossing(p, q) {
                Some((t, _)) if t < 1.0 - 1e-9 || !neighbor_interior => {
                    f(node, None, 1.0 / t.max(1e-9));
                }
                _ if neighbor_interior => {
                    if forward {
                        f(node, neighbor, 1.0);
                    }
                }
                _ => f(node, None, 1.0),
            }
        }
    }
}

/// Interior lattice nodes within the closed ball `B̄(center, radius)`.
pub fn ball_plate(grid: &Arc<Grid>, center: [f64; 2], radius: f64) -> Vec<usize> {
    let tol = 1.0 + 1e-12;
    grid.interior_nodes()
        .iter()
        .map(|&i| i as usize)
        .filter(|&i| {
            let p = grid.node_pos(i);
            (p[0] - center[0]).hypot(p[1] - center[1]) <= radius * tol
        })
        .collect()
}

/// Capacity of the condenser (plate, grid domain).
///
/// `plate` holds lattice node indices of the compact set; they must be
/// interior nodes of the grid. An empty plate has capacity zero.
pub fn capacity(grid: &Arc<Grid>, plate: &[usize]) -> Result<CapacityResult> {
    if plate.is_empty() {
        return Ok(CapacityResult {
            value: 0.0,
            potential: DiscreteField::zeros(grid),
            plate_nodes: 0,
        });
    }
    let mut in_plate = vec![false; grid.num_nodes()];
    for &i in plate {
        if grid.node_kind(i) != NodeKind::Interior {
            return Err(Error::PlateTouchesBoundary);
        }
        in_plate[i] = true;
    }

    // Free unknowns: interior nodes off the plate.
    let mut free_id = vec![-1i64; grid.num_nodes()];
    let mut free_nodes = Vec::new();
    for &i in grid.interior_nodes() {
        let i = i as usize;
        if !in_plate[i] {
            free_id[i] = free_nodes.len() as i64;
            free_nodes.push(i);
        }
    }

    let mut edges: Vec<Edge> = Vec::new();
    for_each_edge(grid, |node, end, weight| {
        // Classify the two ends; plate-plate edges carry no potential drop.
        let from_free = !in_plate[node];
        match end {
            Some(j) => {
                let j_plate = in_plate[j];
                match (from_free, j_plate) {
                    (true, true) => edges.push(Edge {
                        from: free_id[node] as u32,
                        to: EdgeEnd::Plate,
                        weight,
                    }),
                    (true, false) => edges.push(Edge {
                        from: free_id[node] as u32,
                        to: EdgeEnd::Free(free_id[j] as u32),
                        weight,
                    }),
                    (false, false) => edges.push(Edge {
                        from: free_id[j] as u32,
                        to: EdgeEnd::Plate,
                        weight,
                    }),
                    (false, true) => {}
                }
            }
            None => {
                if from_free {
                    edges.push(Edge {
                        from: free_id[node] as u32,
                        to: EdgeEnd::Ground,
                        weight,
                    });
                } else {
                    // Plate node grounded straight to the outer boundary:
                    // fixed potential drop of 1 with no unknown involved.
                    edges.push(Edge {
                        from: u32::MAX,
                        to: EdgeEnd::Ground,
                        weight,
                    });
                }
            }
        }
    });

    let n = free_nodes.len();
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::with_capacity(5); n];
    let mut rhs = vec![0.0; n];
    let mut diag = vec![0.0; n];
    for e in &edges {
        if e.from == u32::MAX {
            continue;
        }
        let r = e.from as usize;
        match e.to {
            EdgeEnd::Free(c) => {
                diag[r] += e.weight;
                diag[c as usize] += e.weight;
                rows[r].push((c, -e.weight));
                rows[c as usize].push((e.from, -e.weight));
            }
            EdgeEnd::Plate => {
                diag[r] += e.weight;
                rhs[r] += e.weight;
            }
            EdgeEnd::Ground => {
                diag[r] += e.weight;
            }
        }
    }
    for (r, d) in diag.iter().enumerate() {
        rows[r].push((r as u32, *d));
    }

    let x = if n > 0 {
        let matrix = SparseMatrix::from_rows(rows);
        let precond = Ilu0::factor(&matrix)?;
        let (x, _) = solve_refined(&matrix, &precond, &rhs, 1e-12, 50_000, true)?;
        x
    } else {
        Vec::new()
    };

    let mut values = vec![0.0; grid.num_nodes()];
    for &i in plate {
        values[i] = 1.0;
    }
    for (r, &node) in free_nodes.iter().enumerate() {
        values[node] = x[r];
    }
    let potential = DiscreteField::from_parts(grid, values, Vec::new());

    let mut energy = 0.0;
    for e in &edges {
        let u_from = if e.from == u32::MAX {
            1.0
        } else {
            x[e.from as usize]
        };
        let u_to = match e.to {
            EdgeEnd::Free(c) => x[c as usize],
            EdgeEnd::Plate => 1.0,
            EdgeEnd::Ground => 0.0,
        };
        let d = u_from - u_to;
        energy += e.weight * d * d;
    }

    Ok(CapacityResult {
        value: energy,
        potential,
        plate_nodes: plate.len(),
    })
}

/// Dirichlet energy of an arbitrary admissible potential on the same
/// condenser, using the same edge quadrature as [`capacity`]. Used to verify
/// first-order optimality of the returned potential.
pub fn condenser_energy(grid: &Arc<Grid>, plate: &[usize], values: &[f64]) -> f64 {
    let mut in_plate = vec![false; grid.num_nodes()];
    for &i in plate {
        in_plate[i] = true;
    }
    let mut energy = 0.0;
    for_each_edge(grid, |node, end, weight| {
        let u_from = if in_plate[node] { 1.0 } else { values[node] };
        let u_to = match end {
            Some(j) => {
                if in_plate[j] {
                    1.0
                } else {
                    values[j]
                }
            }
            None => 0.0,
        };
        let d = u_from - u_to;
        energy += weight * d * d;
    });
    energy
}

fn sub_resolution(h: f64, radius: f64) -> u32 {
    let mut res = ((4.0 * radius / h).round() as u32).max(16);
    if res % 2 == 1 {
        res += 1;
    }
    res
}

/// Rasterized complement thinner than ~4 cells raises the thin warning: no
/// complement node has a fully-covered Euclidean 2-cell neighborhood.
fn complement_is_thin(grid: &Grid, plate: &[usize], in_plate: &[bool]) -> bool {
    let offsets: Vec<(i32, i32)> = (-2..=2)
        .flat_map(|dx| (-2..=2).map(move |dy| (dx, dy)))
        .filter(|&(dx, dy)| dx * dx + dy * dy <= 4)
        .collect();
    !plate.iter().any(|&i| {
        offsets.iter().all(|&(dx, dy)| {
            grid.neighbor(i, dx, dy)
                .is_some_and(|j| in_plate[j])
        })
    })
}

/// The capacity ratio of eqn-style condensers at one boundary point and scale:
/// complement plate over full-ball plate, both relative to the doubled ball.
pub fn cdc_ratio(base: &Arc<Grid>, xi: [f64; 2], radius: f64) -> Result<CdcOutcome> {
    let den = condenser_denominator(base, xi, radius)?;
    cdc_ratio_with_denominator(base, xi, radius, den)
}

/// Denominator condenser `cap(B̄(ξ,R), B(ξ,2R))`; independent of ξ up to
/// translation, so sweeps compute it once per radius.
pub fn condenser_denominator(base: &Arc<Grid>, xi: [f64; 2], radius: f64) -> Result<f64> {
    let sub = condenser_grid(base, xi, radius)?;
    let plate = ball_plate(&sub, xi, radius);
    Ok(capacity(&sub, &plate)?.value)
}

fn condenser_grid(base: &Arc<Grid>, xi: [f64; 2], radius: f64) -> Result<Arc<Grid>> {
    let h = base.spacing();
    if radius <= 2.0 * h {
        return Err(Error::InvalidInput(format!(
            "cdc radius {radius} must exceed twice the grid spacing {h}"
        )));
    }
    build_grid(Domain::disk(xi, 2.0 * radius), sub_resolution(h, radius))
}

fn cdc_ratio_with_denominator(
    base: &Arc<Grid>,
    xi: [f64; 2],
    radius: f64,
    denominator: f64,
) -> Result<CdcOutcome> {
    let domain = base.domain();
    if !domain.on_boundary(xi) {
        return Err(Error::InvalidInput(format!(
            "cdc point ({}, {}) is not on the boundary",
            xi[0], xi[1]
        )));
    }
    let sub = condenser_grid(base, xi, radius)?;
    let full = ball_plate(&sub, xi, radius);
    let complement: Vec<usize> = full
        .iter()
        .copied()
        .filter(|&i| !domain.contains(sub.node_pos(i)))
        .collect();
    if complement.is_empty() {
        return Ok(CdcOutcome {
            ratio: 0.0,
            warning: CdcWarning::EmptyComplement,
        });
    }
    let mut in_plate = vec![false; sub.num_nodes()];
    for &i in &complement {
        in_plate[i] = true;
    }
    let warning = if complement_is_thin(&sub, &complement, &in_plate) {
        CdcWarning::ThinComplement
    } else {
        CdcWarning::None
    };
    let num = capacity(&sub, &complement)?.value;
    Ok(CdcOutcome {
        ratio: (num / denominator).min(1.0),
        warning,
    })
}

/// Sweeps boundary points (uniform in arclength) and radii; `gamma_hat` is
/// the minimum observed ratio. A grid can only certify the scanned radii,
/// which are recorded in the result.
pub fn cdc_sweep(base: &Arc<Grid>, n_points: usize, radii: &[f64]) -> Result<CdcSweep> {
    if n_points < 4 {
        return Err(Error::InvalidInput(format!(
            "cdc sweep needs at least 4 boundary points, got {n_points}"
        )));
    }
    let points = base.domain().boundary_sample(n_points);
    let mut denominators: HashMap<u64, f64> = HashMap::new();
    for &r in radii {
        let key = r.to_bits();
        if let std::collections::hash_map::Entry::Vacant(e) = denominators.entry(key) {
            e.insert(condenser_denominator(base, points[0], r)?);
        }
    }

    let reports: Result<Vec<CdcReport>> = points
        .par_iter()
        .map(|&xi| {
            let mut entries = Vec::with_capacity(radii.len());
            for &r in radii {
                let den = denominators[&r.to_bits()];
                let outcome = cdc_ratio_with_denominator(base, xi, r, den)?;
                entries.push((r, outcome));
            }
            Ok(CdcReport { point: xi, entries })
        })
        .collect();
    let reports = reports?;

    let gamma_hat = reports
        .iter()
        .flat_map(|rep| rep.entries.iter().map(|(_, o)| o.ratio))
        .fold(f64::INFINITY, f64::min);

    Ok(CdcSweep {
        reports,
        gamma_hat,
        radii: radii.to_vec(),
    })
}
