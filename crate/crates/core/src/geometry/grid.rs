//! Uniform lattice over a domain's bounding box with exact boundary distances.

use std::sync::Arc;

use crate::error::{Error, Result};

use super::domain::Domain;

/// Classification of a lattice node relative to the open domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    /// Lies on the boundary (within geometric tolerance); Dirichlet data lives here.
    Boundary,
    Exterior,
}

/// Immutable uniform grid. Construct with [`build_grid`]; share via `Arc`.
#[derive(Debug)]
pub struct Grid {
    domain: Domain,
    resolution: u32,
    h: f64,
    nx: usize,
    ny: usize,
    origin: [f64; 2],
    kind: Vec<NodeKind>,
    delta: Vec<f64>,
    interior: Vec<u32>,
    boundary: Vec<u32>,
    unknown: Vec<i32>,
}

/// Builds a uniform grid with spacing `h = characteristic_size / resolution`.
///
/// Every lattice node is classified against the domain and `delta` (distance
/// to the boundary) is computed analytically against the boundary primitives.
pub fn build_grid(domain: Domain, resolution: u32) -> Result<Arc<Grid>> {
    if resolution < 8 {
        return Err(Error::ResolutionTooCoarse(resolution));
    }
    let h = domain.characteristic_size() / resolution as f64;
    let bbox = domain.bbox();
    let width = bbox[1][0] - bbox[0][0];
    let height = bbox[1][1] - bbox[0][1];
    let cells_x = ((width / h) - 1e-9).ceil().max(1.0) as usize;
    let cells_y = ((height / h) - 1e-9).ceil().max(1.0) as usize;
    let nx = cells_x + 1;
    let ny = cells_y + 1;
    let origin = bbox[0];

    let n = nx * ny;
    let mut kind = vec![NodeKind::Exterior; n];
    let mut delta = vec![0.0; n];
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut unknown = vec![-1i32; n];

    for iy in 0..ny {
        for ix in 0..nx {
            let i = iy * nx + ix;
            let p = [origin[0] + ix as f64 * h, origin[1] + iy as f64 * h];
            let d = domain.boundary_distance(p);
            if d <= domain.geometric_tolerance() {
                kind[i] = NodeKind::Boundary;
                boundary.push(i as u32);
            } else if domain.contains(p) {
                kind[i] = NodeKind::Interior;
                delta[i] = d;
                unknown[i] = interior.len() as i32;
                interior.push(i as u32);
            }
        }
    }

    Ok(Arc::new(Grid {
        domain,
        resolution,
        h,
        nx,
        ny,
        origin,
        kind,
        delta,
        interior,
        boundary,
        unknown,
    }))
}

impl Grid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Cell volume associated with each node-centered cell.
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h
    }

    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn node_kind(&self, node: usize) -> NodeKind {
        self.kind[node]
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.kind[node] == NodeKind::Interior
    }

    pub fn node_pos(&self, node: usize) -> [f64; 2] {
        let ix = node % self.nx;
        let iy = node / self.nx;
        [
            self.origin[0] + ix as f64 * self.h,
            self.origin[1] + iy as f64 * self.h,
        ]
    }

    /// Distance to the boundary; positive on interior nodes, zero elsewhere.
    pub fn delta(&self, node: usize) -> f64 {
        self.delta[node]
    }

    /// Lattice indices of interior nodes, in row-major order.
    pub fn interior_nodes(&self) -> &[u32] {
        &self.interior
    }

    /// Lattice indices of nodes lying on the boundary.
    pub fn boundary_nodes(&self) -> &[u32] {
        &self.boundary
    }

    pub fn num_unknowns(&self) -> usize {
        self.interior.len()
    }

    /// Unknown index of an interior node, if any.
    pub fn unknown_index(&self, node: usize) -> Option<usize> {
        let u = self.unknown[node];
        (u >= 0).then_some(u as usize)
    }

    /// Lattice node of an unknown.
    pub fn node_of_unknown(&self, unknown: usize) -> usize {
        self.interior[unknown] as usize
    }

    /// Lattice neighbor in direction (dx, dy) ∈ {−1, 0, 1}², if inside the lattice.
    pub fn neighbor(&self, node: usize, dx: i32, dy: i32) -> Option<usize> {
        let ix = (node % self.nx) as i64 + dx as i64;
        let iy = (node / self.nx) as i64 + dy as i64;
        if ix < 0 || iy < 0 || ix >= self.nx as i64 || iy >= self.ny as i64 {
            None
        } else {
            Some(iy as usize * self.nx + ix as usize)
        }
    }

    /// Nearest lattice node to an arbitrary point.
    pub fn node_near(&self, p: [f64; 2]) -> usize {
        let ix = (((p[0] - self.origin[0]) / self.h).round() as i64).clamp(0, self.nx as i64 - 1);
        let iy = (((p[1] - self.origin[1]) / self.h).round() as i64).clamp(0, self.ny as i64 - 1);
        iy as usize * self.nx + ix as usize
    }

    /// Visits every lattice node strictly inside the open ball `B(center, r)`.
    pub fn for_nodes_in_ball(&self, center: [f64; 2], r: f64, mut f: impl FnMut(usize, [f64; 2])) {
        let r2 = r * r;
        let iy_lo = (((center[1] - r - self.origin[1]) / self.h).ceil().max(0.0)) as usize;
        let iy_hi = ((center[1] + r - self.origin[1]) / self.h).floor() as i64;
        let iy_hi = iy_hi.clamp(-1, self.ny as i64 - 1);
        if iy_hi < 0 {
            return;
        }
        for iy in iy_lo..=(iy_hi as usize) {
            let y = self.origin[1] + iy as f64 * self.h;
            let dy2 = (y - center[1]) * (y - center[1]);
            if dy2 >= r2 {
                continue;
            }
            let half = (r2 - dy2).sqrt();
            let ix_lo = (((center[0] - half - self.origin[0]) / self.h).ceil().max(0.0)) as usize;
            let ix_hi = ((center[0] + half - self.origin[0]) / self.h).floor() as i64;
            let ix_hi = ix_hi.clamp(-1, self.nx as i64 - 1);
            if ix_hi < 0 {
                continue;
            }
            for ix in ix_lo..=(ix_hi as usize) {
                let x = self.origin[0] + ix as f64 * self.h;
                let dx2 = (x - center[0]) * (x - center[0]);
                if dx2 + dy2 < r2 {
                    f(iy * self.nx + ix, [x, y]);
                }
            }
        }
    }

    /// Structural identity: same domain label, resolution, and spacing.
    pub fn same_layout(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other)
            || (self.resolution == other.resolution
                && self.nx == other.nx
                && self.ny == other.ny
                && self.h == other.h
                && self.origin == other.origin
                && self.domain.label() == other.domain.label())
    }
}
