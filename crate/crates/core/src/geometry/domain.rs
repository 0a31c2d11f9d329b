//! Bounded planar domains with piecewise-analytic boundaries.
//!
//! A domain is described by its boundary primitives (straight segments and
//! full circles). All geometric queries — membership, distance to the
//! boundary, first crossing of a segment — are answered analytically against
//! those primitives, never by lattice propagation. Slits are segments carried
//! in addition to the outer polygon; they count as boundary.

use crate::error::{Error, Result};

/// Named domain presets selectable from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainPreset {
    UnitSquare,
    UnitDisk,
    LShape,
    SlitSquare,
    Annulus,
}

impl DomainPreset {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "unit_square" => Some(Self::UnitSquare),
            "unit_disk" => Some(Self::UnitDisk),
            "l_shape" => Some(Self::LShape),
            "slit_square" => Some(Self::SlitSquare),
            "annulus" => Some(Self::Annulus),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::UnitSquare => "unit_square",
            Self::UnitDisk => "unit_disk",
            Self::LShape => "l_shape",
            Self::SlitSquare => "slit_square",
            Self::Annulus => "annulus",
        }
    }
}

/// One boundary primitive.
#[derive(Debug, Clone, Copy)]
enum Piece {
    Segment { a: [f64; 2], b: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
}

#[derive(Debug, Clone)]
enum Shape {
    /// Simple polygon (CCW); slit segments live in the boundary pieces only.
    Polygon { vertices: Vec<[f64; 2]> },
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Annulus {
        center: [f64; 2],
        outer: f64,
        inner: f64,
    },
}

/// A bounded open domain in the plane.
#[derive(Debug, Clone)]
pub struct Domain {
    shape: Shape,
    pieces: Vec<Piece>,
    bbox: [[f64; 2]; 2],
    diam: f64,
    label: String,
}

impl Domain {
    pub fn from_preset(preset: DomainPreset) -> Self {
        match preset {
            DomainPreset::UnitSquare => Self::unit_square(),
            DomainPreset::UnitDisk => Self::unit_disk(),
            DomainPreset::LShape => Self::l_shape(),
            DomainPreset::SlitSquare => Self::slit_square(),
            DomainPreset::Annulus => Self::annulus(),
        }
    }

    /// The open square (0,1)².
    pub fn unit_square() -> Self {
        Self::polygon_impl(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![],
            "unit_square",
        )
        .expect("unit square is non-degenerate")
    }

    /// The open disk of radius 1 centered at the origin.
    pub fn unit_disk() -> Self {
        Self::disk([0.0, 0.0], 1.0)
    }

    /// Disk of arbitrary center and radius.
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        assert!(radius > 0.0, "disk radius must be positive");
        let pieces = vec![Piece::Circle { center, radius }];
        let bbox = [
            [center[0] - radius, center[1] - radius],
            [center[0] + radius, center[1] + radius],
        ];
        Domain {
            shape: Shape::Disk { center, radius },
            pieces,
            bbox,
            diam: 2.0 * radius,
            label: "disk".to_string(),
        }
    }

    /// (−1,1)² minus the closed upper-right quadrant [0,1]², reentrant corner at the origin.
    pub fn l_shape() -> Self {
        Self::polygon_impl(
            vec![
                [-1.0, -1.0],
                [1.0, -1.0],
                [1.0, 0.0],
                [0.0, 0.0],
                [0.0, 1.0],
                [-1.0, 1.0],
            ],
            vec![],
            "l_shape",
        )
        .expect("l-shape is non-degenerate")
    }

    /// (−1,1)² minus the closed slit [0,1]×{0}; the slit counts as boundary.
    pub fn slit_square() -> Self {
        Self::polygon_impl(
            vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
            vec![[[0.0, 0.0], [1.0, 0.0]]],
            "slit_square",
        )
        .expect("slit square is non-degenerate")
    }

    /// Annulus centered at the origin with radii 0.5 and 1.
    pub fn annulus() -> Self {
        let pieces = vec![
            Piece::Circle {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            Piece::Circle {
                center: [0.0, 0.0],
                radius: 0.5,
            },
        ];
        Domain {
            shape: Shape::Annulus {
                center: [0.0, 0.0],
                outer: 1.0,
                inner: 0.5,
            },
            pieces,
            bbox: [[-1.0, -1.0], [1.0, 1.0]],
            diam: 2.0,
            label: "annulus".to_string(),
        }
    }

    /// Custom simple polygon. Rejects degenerate (zero-area) input.
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        Self::polygon_impl(vertices, vec![], "polygon")
    }

    fn polygon_impl(
        mut vertices: Vec<[f64; 2]>,
        slits: Vec<[[f64; 2]; 2]>,
        label: &str,
    ) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon {
                reason: "fewer than 3 vertices",
            });
        }
        let area2 = shoelace2(&vertices);
        let scale: f64 = vertices
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, &c| m.max(c.abs()))
            .max(1e-300);
        if area2.abs() < 1e-12 * scale * scale {
            return Err(Error::DegeneratePolygon { reason: "zero area" });
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        let mut pieces = Vec::with_capacity(vertices.len() + slits.len());
        for i in 0..vertices.len() {
            pieces.push(Piece::Segment {
                a: vertices[i],
                b: vertices[(i + 1) % vertices.len()],
            });
        }
        for s in &slits {
            pieces.push(Piece::Segment { a: s[0], b: s[1] });
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let mut diam = 0.0f64;
        for i in 0..vertices.len() {
            for j in (i + 1)..vertices.len() {
                diam = diam.max(dist(vertices[i], vertices[j]));
            }
        }
        Ok(Domain {
            shape: Shape::Polygon { vertices },
            pieces,
            bbox: [lo, hi],
            diam,
            label: label.to_string(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Axis-aligned bounding box `[[xmin, ymin], [xmax, ymax]]`.
    pub fn bbox(&self) -> [[f64; 2]; 2] {
        self.bbox
    }

    /// Euclidean diameter of the closure.
    pub fn diam(&self) -> f64 {
        self.diam
    }

    /// Largest bounding-box side; grid spacing is this divided by the resolution.
    pub fn characteristic_size(&self) -> f64 {
        (self.bbox[1][0] - self.bbox[0][0]).max(self.bbox[1][1] - self.bbox[0][1])
    }

    /// Relative tolerance for boundary-membership decisions.
    pub fn geometric_tolerance(&self) -> f64 {
        1e-9 * self.characteristic_size()
    }

    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Polygon { vertices, .. } => shoelace2(vertices).abs() / 2.0,
            Shape::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Shape::Annulus { outer, inner, .. } => {
                std::f64::consts::PI * (outer * outer - inner * inner)
            }
        }
    }

    /// Distance from `p` to the boundary (including slits). Zero on the boundary.
    pub fn boundary_distance(&self, p: [f64; 2]) -> f64 {
        let mut d = f64::INFINITY;
        for piece in &self.pieces {
            let pd = match piece {
                Piece::Segment { a, b } => segment_distance(p, *a, *b),
                Piece::Circle { center, radius } => (dist(p, *center) - radius).abs(),
            };
            d = d.min(pd);
        }
        d
    }

    pub fn on_boundary(&self, p: [f64; 2]) -> bool {
        self.boundary_distance(p) <= self.geometric_tolerance()
    }

    /// Strict membership in the open set; boundary points (within tolerance) excluded.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        if self.on_boundary(p) {
            return false;
        }
        match &self.shape {
            Shape::Polygon { vertices, .. } => point_in_polygon(p, vertices),
            Shape::Disk { center, radius } => dist(p, *center) < *radius,
            Shape::Annulus {
                center,
                outer,
                inner,
            } => {
                let r = dist(p, *center);
                r > *inner && r < *outer
            }
        }
    }

    /// First crossing of the open segment `(from, to]` with the boundary.
    ///
    /// Returns the smallest parameter `t ∈ (0, 1]` and the crossing point.
    pub fn first_crossing(&self, from: [f64; 2], to: [f64; 2]) -> Option<(f64, [f64; 2])> {
        let d = [to[0] - from[0], to[1] - from[1]];
        let mut best: Option<f64> = None;
        for piece in &self.pieces {
            let t = match piece {
                Piece::Segment { a, b } => segment_segment_crossing(from, d, *a, *b),
                Piece::Circle { center, radius } => {
                    segment_circle_crossing(from, d, *center, *radius)
                }
            };
            if let Some(t) = t {
                best = Some(match best {
                    Some(cur) => cur.min(t),
                    None => t,
                });
            }
        }
        best.map(|t| {
            let t = t.min(1.0);
            (t, [from[0] + t * d[0], from[1] + t * d[1]])
        })
    }

    /// Total boundary length, slits counted once.
    pub fn boundary_length(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| match p {
                Piece::Segment { a, b } => dist(*a, *b),
                Piece::Circle { radius, .. } => 2.0 * std::f64::consts::PI * radius,
            })
            .sum()
    }

    /// `n` points spread uniformly along the boundary arclength.
    pub fn boundary_sample(&self, n: usize) -> Vec<[f64; 2]> {
        let total = self.boundary_length();
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let s = (j as f64 + 0.5) * total / n as f64;
            out.push(self.boundary_point_at(s));
        }
        out
    }

    fn boundary_point_at(&self, mut s: f64) -> [f64; 2] {
        for piece in &self.pieces {
            let len = match piece {
                Piece::Segment { a, b } => dist(*a, *b),
                Piece::Circle { radius, .. } => 2.0 * std::f64::consts::PI * radius,
            };
            if s <= len {
                return match piece {
                    Piece::Segment { a, b } => {
                        let t = s / len;
                        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
                    }
                    Piece::Circle { center, radius } => {
                        let theta = s / radius;
                        [
                            center[0] + radius * theta.cos(),
                            center[1] + radius * theta.sin(),
                        ]
                    }
                };
            }
            s -= len;
        }
        // Rounding pushed s past the last piece; return its endpoint.
        match self.pieces.last().expect("domain has boundary pieces") {
            Piece::Segment { b, .. } => *b,
            Piece::Circle { center, radius } => [center[0] + radius, center[1]],
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Twice the signed area of a polygon.
fn shoelace2(vertices: &[[f64; 2]]) -> f64 {
    let mut acc = 0.0;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Crossing parameter of `from + t d`, `t ∈ (0, 1]`, with the segment `[a, b]`.
fn segment_segment_crossing(from: [f64; 2], d: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<f64> {
    let e = [b[0] - a[0], b[1] - a[1]];
    let denom = d[0] * e[1] - d[1] * e[0];
    let f = [a[0] - from[0], a[1] - from[1]];
    let d_len = d[0].hypot(d[1]);
    let e_len = e[0].hypot(e[1]);
    let s_tol = 1e-9;
    let t_tol = 1e-9;
    if denom.abs() <= 1e-12 * d_len * e_len {
        // Parallel. A collinear overlap still crosses (arms running into a
        // slit tip along the slit's own line); project the endpoints.
        let off_line = (f[0] * d[1] - f[1] * d[0]).abs() / d_len.max(1e-300);
        if off_line > 1e-9 * (d_len + e_len) {
            return None;
        }
        let d2 = d_len * d_len;
        let ta = (f[0] * d[0] + f[1] * d[1]) / d2;
        let tb = ((b[0] - from[0]) * d[0] + (b[1] - from[1]) * d[1]) / d2;
        let mut best: Option<f64> = None;
        for t in [ta, tb] {
            if t > 1e-12 && t <= 1.0 + t_tol {
                best = Some(best.map_or(t, |cur: f64| cur.min(t)));
            }
        }
        // The segment may also straddle the arm: then the earliest covered
        // parameter inside (0, 1] is the entry point max(min(ta,tb), 0⁺).
        if best.is_none() && ta.min(tb) < 0.0 && ta.max(tb) > 0.0 {
            // from lies inside the covered span, which contradicts the caller
            // holding an interior point; treat as immediate contact.
            best = Some(1e-12);
        }
        return best;
    }
    let t = (f[0] * e[1] - f[1] * e[0]) / denom;
    let s = (f[0] * d[1] - f[1] * d[0]) / denom;
    if s >= -s_tol && s <= 1.0 + s_tol && t > 1e-12 && t <= 1.0 + t_tol {
        Some(t)
    } else {
        None
    }
}

/// Smallest crossing parameter of `from + t d`, `t ∈ (0, 1]`, with a circle.
fn segment_circle_crossing(from: [f64; 2], d: [f64; 2], center: [f64; 2], radius: f64) -> Option<f64> {
    let g = [from[0] - center[0], from[1] - center[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    if a == 0.0 {
        return None;
    }
    let b = 2.0 * (g[0] * d[0] + g[1] * d[1]);
    let c = g[0] * g[0] + g[1] * g[1] - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let mut best: Option<f64> = None;
    for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
        if t > 1e-12 && t <= 1.0 + 1e-9 {
            best = Some(match best {
                Some(cur) => cur.min(t),
                None => t,
            });
        }
    }
    best
}

/// Ray-casting membership test; points on the boundary are resolved elsewhere.
fn point_in_polygon(p: [f64; 2], vertices: &[[f64; 2]]) -> bool {
    let mut inside = false;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x_int = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x_int {
                inside = !inside;
            }
        }
    }
    inside
}
