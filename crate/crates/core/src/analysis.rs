//! Hölder norms, exponent fitting via the modulus of continuity, oscillation,
//! and weak-Harnack ratios.
//!
//! Pair maximizations are subsampled with a deterministic stream plus anchor
//! pairs around value extremes and steep lattice gradients; results are
//! certified lower bounds, and enlarging the pair budget never decreases
//! them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::geometry::NodeKind;

const PAIR_SEED: u64 = 0x4d6f_6472_6579;
pub const DEFAULT_PAIR_BUDGET: usize = 100_000;

/// Hölder norm split into its two terms:
/// `value = sup|u| + diam(E)^β · sup |u(x)−u(y)|/|x−y|^β`.
#[derive(Debug, Clone, Copy)]
pub struct HolderNorm {
    pub value: f64,
    pub sup: f64,
    /// The raw difference-quotient supremum (translation invariant).
    pub seminorm: f64,
    /// Diameter lower bound used for the scaling factor.
    pub diam: f64,
}

/// Least-squares fit of the modulus of continuity on log-log axes.
#[derive(Debug, Clone, Copy)]
pub struct HolderFit {
    pub beta_hat: f64,
    /// Modulus prefactor: ω(r) ≈ seminorm_hat · r^beta_hat.
    pub seminorm_hat: f64,
    pub fit_r2: f64,
    pub scale_range: (f64, f64),
    /// Set for constant fields, where the exponent is undefined.
    pub degenerate: bool,
}

/// Per-ball weak Harnack data.
#[derive(Debug, Clone, Copy)]
pub struct HarnackEntry {
    pub center: usize,
    pub radius: f64,
    /// (cell average over the ball) / (minimum over the ball).
    pub ratio: f64,
    /// Minimum was clamped at 1e−14 to avoid division blowup.
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct HarnackReport {
    pub entries: Vec<HarnackEntry>,
    pub max_ratio: f64,
}

fn active_samples(u: &DiscreteField, subset: Option<&[usize]>) -> Vec<([f64; 2], f64)> {
    match subset {
        Some(nodes) => nodes
            .iter()
            .map(|&i| (u.grid().node_pos(i), u.value(i)))
            .collect(),
        None => u.active().map(|(_, p, v)| (p, v)).collect(),
    }
}

/// Hölder norm of a field over a node subset (all active nodes by default).
pub fn holder_norm(
    u: &DiscreteField,
    beta: f64,
    subset: Option<&[usize]>,
    budget: usize,
) -> Result<HolderNorm> {
    let samples = active_samples(u, subset);
    let anchors = if subset.is_none() {
        lattice_anchor_pairs(u, samples.len())
    } else {
        Vec::new()
    };
    holder_norm_with_anchors(&samples, beta, budget, &anchors)
}

/// Hölder norm of scattered samples (used for boundary traces).
pub fn holder_norm_samples(
    samples: &[([f64; 2], f64)],
    beta: f64,
    budget: usize,
) -> Result<HolderNorm> {
    holder_norm_with_anchors(samples, beta, budget, &[])
}

fn holder_norm_with_anchors(
    samples: &[([f64; 2], f64)],
    beta: f64,
    budget: usize,
    anchor_pairs: &[(usize, usize)],
) -> Result<HolderNorm> {
    if !(0.0 < beta && beta <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "Hölder exponent must lie in (0, 1], got {beta}"
        )));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::NotEnoughNodes { needed: 2, got: n });
    }
    let sup = samples.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);

    let mut seminorm = 0.0f64;
    let mut diam = 0.0f64;
    let consider = |i: usize, j: usize, seminorm: &mut f64, diam: &mut f64| {
        if i == j {
            return;
        }
        let (pi, vi) = samples[i];
        let (pj, vj) = samples[j];
        let d = (pi[0] - pj[0]).hypot(pi[1] - pj[1]);
        if d == 0.0 {
            return;
        }
        *diam = d.max(*diam);
        let q = (vi - vj).abs() / d.powf(beta);
        *seminorm = q.max(*seminorm);
    };

    // Value extremes always participate.
    let mut lo = 0;
    let mut hi = 0;
    for (k, (_, v)) in samples.iter().enumerate() {
        if *v < samples[lo].1 {
            lo = k;
        }
        if *v > samples[hi].1 {
            hi = k;
        }
    }
    for &(i, j) in anchor_pairs {
        consider(i, j, &mut seminorm, &mut diam);
    }

    let total_pairs = n * (n - 1) / 2;
    if total_pairs <= budget {
        for i in 0..n {
            for j in (i + 1)..n {
                consider(i, j, &mut seminorm, &mut diam);
            }
        }
    } else {
        for k in 0..n {
            consider(lo, k, &mut seminorm, &mut diam);
            consider(hi, k, &mut seminorm, &mut diam);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED);
        for _ in 0..budget {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            consider(i, j, &mut seminorm, &mut diam);
        }
    }

    Ok(HolderNorm {
        value: sup + diam.powf(beta) * seminorm,
        sup,
        seminorm,
        diam,
    })
}

/// Lattice-neighbor pairs around the steepest local variations; these catch
/// boundary singularities that uniform pair sampling would miss. Pair
/// indices refer to the `active()` sample ordering.
fn lattice_anchor_pairs(u: &DiscreteField, n_samples: usize) -> Vec<(usize, usize)> {
    let grid = u.grid();
    let mut sample_of = vec![usize::MAX; grid.num_nodes()];
    let mut k = 0;
    for (i, slot) in sample_of.iter_mut().enumerate() {
        if grid.node_kind(i) != NodeKind::Exterior {
            *slot = k;
            k += 1;
        }
    }
    debug_assert_eq!(k, n_samples);

    let mut steep: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..grid.num_nodes() {
        if grid.node_kind(i) == NodeKind::Exterior {
            continue;
        }
        for (dx, dy) in [(1, 0), (0, 1)] {
            if let Some(j) = grid.neighbor(i, dx, dy) {
                if grid.node_kind(j) != NodeKind::Exterior {
                    let d = (u.value(i) - u.value(j)).abs();
                    if d > 0.0 {
                        steep.push((d, i, j));
                    }
                }
            }
        }
    }
    steep.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    steep
        .into_iter()
        .take(64)
        .map(|(_, i, j)| (sample_of[i], sample_of[j]))
        .collect()
}

/// Fits the Hölder exponent of a field from its modulus of continuity.
///
/// ω(r) is estimated per log-spaced distance bin as the maximum difference
/// over probed pairs; the regression runs over `scale_range`, defaulting to
/// `(4h, diam/4)`: below 4h discretization noise dominates, above diam/4 the
/// modulus saturates.
pub fn holder_fit(u: &DiscreteField, scale_range: Option<(f64, f64)>) -> Result<HolderFit> {
    let grid = u.grid().clone();
    let h = grid.spacing();
    let diam = grid.domain().diam();
    let (r_min, r_max) = scale_range.unwrap_or((4.0 * h, diam / 4.0));
    if r_min <= 2.0 * h * (1.0 - 1e-12) || r_max > diam / 2.0 + 1e-12 || r_min >= r_max {
        return Err(Error::InvalidInput(format!(
            "fit range ({r_min}, {r_max}) must lie within (2h, diam/2) = ({}, {})",
            2.0 * h,
            diam / 2.0
        )));
    }

    let samples = active_samples(u, None);
    if samples.len() < 2 {
        return Err(Error::NotEnoughNodes {
            needed: 2,
            got: samples.len(),
        });
    }

    const BINS: usize = 20;
    let log_lo = r_min.ln();
    let log_hi = r_max.ln();
    let bin_radius =
        |bin: usize| (log_lo + (bin as f64 + 0.5) / BINS as f64 * (log_hi - log_lo)).exp();
    // Per-bin maximizer: (distance, |Δu|).
    let mut best: Vec<Option<(f64, f64)>> = vec![None; BINS];
    let mut record = |pa: [f64; 2], va: f64, pb: [f64; 2], vb: f64| {
        let d = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
        if d < r_min || d > r_max || d == 0.0 {
            return;
        }
        let idx = ((d.ln() - log_lo) / (log_hi - log_lo) * BINS as f64) as usize;
        let idx = idx.min(BINS - 1);
        let diff = (va - vb).abs();
        match best[idx] {
            Some((_, cur)) if cur >= diff => {}
            _ => best[idx] = Some((d, diff)),
        }
    };

    // Anchor probes around the steepest lattice gradients and value extremes.
    let mut anchors: Vec<usize> = lattice_anchor_pairs(u, samples.len())
        .iter()
        .take(48)
        .map(|&(i, _)| i)
        .collect();
    let mut lo = 0;
    let mut hi = 0;
    for (k, (_, v)) in samples.iter().enumerate() {
        if *v < samples[lo].1 {
            lo = k;
        }
        if *v > samples[hi].1 {
            hi = k;
        }
    }
    anchors.push(lo);
    anchors.push(hi);

    const DIRS: usize = 16;
    for &a in &anchors {
        let (pa, va) = samples[a];
        for bin in 0..BINS {
            let r = bin_radius(bin);
            for k in 0..DIRS {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / DIRS as f64;
                let target = [pa[0] + r * theta.cos(), pa[1] + r * theta.sin()];
                let j = grid.node_near(target);
                if grid.node_kind(j) != NodeKind::Exterior {
                    record(pa, va, grid.node_pos(j), u.value(j));
                }
            }
        }
    }

    // Deterministic distance-stratified random probes.
    let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED ^ 0x5f17);
    const PROBES_PER_BIN: usize = 800;
    for bin in 0..BINS {
        let r = bin_radius(bin);
        for _ in 0..PROBES_PER_BIN {
            let a = rng.gen_range(0..samples.len());
            let theta: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
            let (pa, va) = samples[a];
            let target = [pa[0] + r * theta.cos(), pa[1] + r * theta.sin()];
            let j = grid.node_near(target);
            if grid.node_kind(j) != NodeKind::Exterior {
                record(pa, va, grid.node_pos(j), u.value(j));
            }
        }
    }

    Ok(regress_modulus(&best, u.sup_norm(), (r_min, r_max)))
}

/// Hölder fit over an arbitrary point cloud, e.g. a field re-read from CSV.
/// The scale range is mandatory because the cloud carries no grid spacing.
pub fn holder_fit_samples(
    samples: &[([f64; 2], f64)],
    scale_range: (f64, f64),
) -> Result<HolderFit> {
    let (r_min, r_max) = scale_range;
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(Error::InvalidInput(format!(
            "fit range ({r_min}, {r_max}) must be positive and increasing"
        )));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::NotEnoughNodes { needed: 2, got: n });
    }
    const BINS: usize = 20;
    let log_lo = r_min.ln();
    let log_hi = r_max.ln();
    let mut best: Vec<Option<(f64, f64)>> = vec![None; BINS];
    let mut record = |i: usize, j: usize| {
        let (pa, va) = samples[i];
        let (pb, vb) = samples[j];
        let d = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
        if d < r_min || d > r_max {
            return;
        }
        let idx = (((d.ln() - log_lo) / (log_hi - log_lo)) * BINS as f64) as usize;
        let idx = idx.min(BINS - 1);
        let diff = (va - vb).abs();
        match best[idx] {
            Some((_, cur)) if cur >= diff => {}
            _ => best[idx] = Some((d, diff)),
        }
    };
    let budget: usize = 500_000;
    if n * (n - 1) / 2 <= budget {
        for i in 0..n {
            for j in (i + 1)..n {
                record(i, j);
            }
        }
    } else {
        let mut lo = 0;
        let mut hi = 0;
        for (k, (_, v)) in samples.iter().enumerate() {
            if *v < samples[lo].1 {
                lo = k;
            }
            if *v > samples[hi].1 {
                hi = k;
            }
        }
        for k in 0..n {
            record(lo, k);
            record(hi, k);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED ^ 0x2b2b);
        for _ in 0..budget {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                record(i, j);
            }
        }
    }
    let scale = samples.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    Ok(regress_modulus(&best, scale, scale_range))
}

/// Log-log least squares over per-bin modulus maxima.
fn regress_modulus(
    best: &[Option<(f64, f64)>],
    value_scale: f64,
    scale_range: (f64, f64),
) -> HolderFit {
    let degenerate_fit = |seminorm: f64, r2: f64| HolderFit {
        beta_hat: f64::NAN,
        seminorm_hat: seminorm,
        fit_r2: r2,
        scale_range,
        degenerate: true,
    };
    let points: Vec<(f64, f64)> = best
        .iter()
        .flatten()
        .filter(|(_, w)| *w > 1e-14 * value_scale.max(1e-300))
        .map(|(d, w)| (d.ln(), w.ln()))
        .collect();
    if points.len() < 4 || value_scale == 0.0 {
        return degenerate_fit(0.0, 0.0);
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return degenerate_fit(0.0, 0.0);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let y_mean = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - y_mean).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let fit_r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        0.0
    };
    if slope <= 0.0 {
        return degenerate_fit(intercept.exp(), fit_r2);
    }
    HolderFit {
        beta_hat: slope.min(1.0),
        seminorm_hat: intercept.exp(),
        fit_r2,
        scale_range,
        degenerate: false,
    }
}

/// `sup − inf` over a node subset (all active nodes by default).
pub fn oscillation(u: &DiscreteField, subset: Option<&[usize]>) -> Result<f64> {
    let samples = active_samples(u, subset);
    if samples.is_empty() {
        return Err(Error::NotEnoughNodes { needed: 1, got: 0 });
    }
    let max = samples.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Weak-Harnack ratios `(avg over B(x,r)) / (min over B(x,r))` on a list of
/// balls with `B(x,2r) ⊂ Ω`. The field must be nonnegative on each ball.
pub fn weak_harnack_ratio(u: &DiscreteField, balls: &[(usize, f64)]) -> Result<HarnackReport> {
    let grid = u.grid();
    let mut entries = Vec::with_capacity(balls.len());
    let mut max_ratio = 0.0f64;
    for &(center, radius) in balls {
        let delta = grid.delta(center);
        let pos = grid.node_pos(center);
        if 2.0 * radius > delta {
            return Err(Error::BallExitsDomain {
                x: pos[0],
                y: pos[1],
                radius: 2.0 * radius,
                delta,
            });
        }
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut min = f64::INFINITY;
        grid.for_nodes_in_ball(pos, radius, |j, _| {
            let v = u.value(j);
            sum += v;
            count += 1;
            min = min.min(v);
        });
        if count == 0 {
            return Err(Error::NotEnoughNodes { needed: 1, got: 0 });
        }
        if min < -1e-12 {
            return Err(Error::NegativeOnBall { min });
        }
        let clamped = min < 1e-14;
        let ratio = (sum / count as f64) / min.max(1e-14);
        max_ratio = max_ratio.max(ratio);
        entries.push(HarnackEntry {
            center,
            radius,
            ratio,
            clamped,
        });
    }
    Ok(HarnackReport { entries, max_ratio })
}
