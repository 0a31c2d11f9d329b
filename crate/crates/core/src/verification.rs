//! The acceptance battery: oracle- and property-based checks with pinned
//! tolerances, runnable from the test suite and from the CLI.
//!
//! Each criterion returns an observed/required pair so failures are
//! diagnosable from the summary line alone. Tolerances live here as named
//! constants; nothing is calibrated at run time.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{holder_fit, oscillation};
use crate::elliptic::{assemble, green_apply, harmonic_extension};
use crate::error::Result;
use crate::field::DiscreteField;
use crate::geometry::{build_grid, singular_coefficients, CoefficientSet, Domain, Grid};
use crate::measure::{
    drift_morrey_exponent, measure_axpy, morrey_exponent, morrey_norm, DiscreteMeasure,
};
use crate::perturbation::{direct_solve, neumann_solve, solve_bvp, SolveOptions, Strategy};

/// Closed form of the Morrey norm of the Lebesgue measure on the unit square
/// at q = 4/3: ball mass πr², maximand πr^{3/2} increasing in r, largest
/// admissible radius 1/4 at the center, diameter √2. Value 2^{1/4}·π/8 ≈ 0.4670.
pub fn morrey_lebesgue_square() -> f64 {
    2f64.powf(0.25) * std::f64::consts::PI / 8.0
}
/// Relative tolerance on the Morrey oracle at resolution 256, scan depth 6.
pub const MORREY_ORACLE_RTOL: f64 = 0.05;
/// Wall-clock budget for the Morrey oracle scan.
pub const MORREY_ORACLE_SECONDS: f64 = 10.0;

/// Concentric condenser capacity cap(B̄_R, B_2R) = 2π/ln 2 in the plane.
pub const CONCENTRIC_CAPACITY: f64 = 9.064720283654388;
/// Relative tolerance on the condenser oracle at resolution 256.
pub const CAPACITY_ORACLE_RTOL: f64 = 0.02;

/// Lower bound on the square's observed capacity-density constant.
pub const SQUARE_GAMMA_MIN: f64 = 0.1;
/// Relative spread allowed for edge-midpoint ratios across dyadic radii.
pub const CDC_SCALE_SPREAD: f64 = 0.10;

/// Minimum observed convergence order of the Green operator on the disk
/// oracle — or exact reproduction below this absolute error, which the
/// cut-arm stencil achieves because the oracle is quadratic.
pub const GREEN_ORDER_MIN: f64 = 1.8;
pub const GREEN_EXACT_FLOOR: f64 = 1e-9;
/// Discrete maximum-principle slack (iterative solver tolerance).
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-10;

/// Hölder window for the slit branch exponent 1/2.
pub const SLIT_BETA_WINDOW: (f64, f64) = (0.45, 0.55);

/// Sup-norm gap between the series and the coupled solve when both converge.
pub const SERIES_DIRECT_GAP: f64 = 1e-6;

/// Allowed spread factor of the empirical perturbation-bound constant.
pub const GAIN_SPREAD_FACTOR: f64 = 3.0;

/// Zero-data uniqueness threshold.
pub const UNIQUENESS_SUP: f64 = 1e-10;

/// Exponent stability between resolutions 128 and 256 in the global demo.
pub const DEMO_BETA_DRIFT: f64 = 0.05;
/// Relative stability of the empirical global-estimate constant.
pub const DEMO_RATIO_DRIFT: f64 = 0.25;

/// Manufactured-solution recovery threshold.
pub const MANUFACTURED_SUP: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub observed: String,
    pub requirement: String,
    pub passed: bool,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn summary_line(&self) -> String {
        format!(
            "criterion {:2} [{}] {} — observed {} (requires {}) [{:.1}s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.requirement,
            self.seconds
        )
    }
}

pub const NUM_CRITERIA: u32 = 11;

pub fn run_all() -> Vec<CriterionResult> {
    (1..=NUM_CRITERIA).map(run_criterion).collect()
}

pub fn run_criterion(id: u32) -> CriterionResult {
    let start = Instant::now();
    let outcome = match id {
        1 => morrey_oracle(),
        2 => norm_axioms(),
        3 => capacity_oracle(),
        4 => cdc_sweeps(),
        5 => green_convergence(),
        6 => boundary_lift(),
        7 => series_direct_equivalence(),
        8 => bound_shape(),
        9 => zero_data_uniqueness(),
        10 => global_holder_demo(),
        11 => manufactured_exactness(),
        _ => panic!("unknown criterion {id}"),
    };
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((name, observed, requirement, passed)) => CriterionResult {
            id,
            name,
            observed,
            requirement,
            passed,
            seconds,
        },
        Err(e) => CriterionResult {
            id,
            name: "criterion errored",
            observed: format!("error: {e}"),
            requirement: "clean run".to_string(),
            passed: false,
            seconds,
        },
    }
}

type Outcome = Result<(&'static str, String, String, bool)>;

fn square_grid(res: u32) -> Result<Arc<Grid>> {
    build_grid(Domain::unit_square(), res)
}

fn random_measure(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> DiscreteMeasure {
    let mut masses = vec![0.0; grid.num_nodes()];
    for &i in grid.interior_nodes() {
        if rng.gen_bool(0.2) {
            masses[i as usize] = rng.gen_range(-1.0..1.0);
        }
    }
    DiscreteMeasure::from_masses(grid, masses).expect("interior masses")
}

/// Random smooth boundary trace built from a few plane waves.
fn random_trace(rng: &mut ChaCha8Rng) -> impl Fn([f64; 2]) -> f64 {
    let mut terms = Vec::new();
    for _ in 0..4 {
        let amp: f64 = rng.gen_range(-1.0..1.0);
        let kx: f64 = rng.gen_range(-3.0..3.0);
        let ky: f64 = rng.gen_range(-3.0..3.0);
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        terms.push((amp, kx, ky, phase));
    }
    move |p: [f64; 2]| {
        terms
            .iter()
            .map(|(a, kx, ky, ph)| a * (kx * p[0] + ky * p[1] + ph).sin())
            .sum()
    }
}

fn slit_branch(p: [f64; 2]) -> f64 {
    let r = p[0].hypot(p[1]);
    let t = p[1].atan2(p[0]);
    let theta = if t <= 0.0 {
        t + 2.0 * std::f64::consts::PI
    } else {
        t
    };
    r.sqrt() * (theta / 2.0).sin()
}

fn morrey_oracle() -> Outcome {
    let clock = Instant::now();
    let grid = square_grid(256)?;
    let nu = DiscreteMeasure::lebesgue(&grid);
    let result = morrey_norm(&nu, 4.0 / 3.0, 6)?;
    let elapsed = clock.elapsed().as_secs_f64();
    let oracle = morrey_lebesgue_square();
    let rel = (result.value - oracle).abs() / oracle;
    let passed = rel <= MORREY_ORACLE_RTOL && elapsed <= MORREY_ORACLE_SECONDS;
    Ok((
        "Morrey norm oracle (Lebesgue on the unit square)",
        format!("value {:.6}, rel err {:.4}, {:.2}s", result.value, rel, elapsed),
        format!(
            "within {:.0}% of {:.4} in under {}s",
            MORREY_ORACLE_RTOL * 100.0,
            oracle,
            MORREY_ORACLE_SECONDS
        ),
        passed,
    ))
}

fn norm_axioms() -> Outcome {
    let grid = square_grid(64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_triangle = 0.0f64;
    let mut worst_homog = 0.0f64;
    let mut monotone_ok = true;
    let mut zero_iff_ok = true;
    for _ in 0..50 {
        let a = random_measure(&grid, &mut rng);
        let b = random_measure(&grid, &mut rng);
        let na = morrey_norm(&a, 4.0 / 3.0, 5)?.value;
        let nb = morrey_norm(&b, 4.0 / 3.0, 5)?.value;
        let ns = morrey_norm(&measure_axpy(1.0, &a, &b)?, 4.0 / 3.0, 5)?.value;
        worst_triangle = worst_triangle.max(ns - (na + nb));
        let c: f64 = rng.gen_range(0.1..5.0);
        let nc = morrey_norm(&a.scaled(-c), 4.0 / 3.0, 5)?.value;
        if na > 0.0 {
            worst_homog = worst_homog.max((nc - c * na).abs() / (c * na));
        }
        let n_low = morrey_norm(&a, 4.0 / 3.0, 5)?.value;
        let n_mid = morrey_norm(&a, 2.0, 5)?.value;
        let n_high = morrey_norm(&a, 4.0, 5)?.value;
        monotone_ok &= n_low <= n_mid * (1.0 + 1e-12) && n_mid <= n_high * (1.0 + 1e-12);
        zero_iff_ok &= (na == 0.0) == (a.total_variation() == 0.0);
    }
    // Cauchy proxy: ν_j = (1 − 2^{−j})ν converges with exact geometric rate.
    let nu = DiscreteMeasure::lebesgue(&grid);
    let base = morrey_norm(&nu, 4.0 / 3.0, 5)?.value;
    let mut geometric_ok = true;
    for j in 1..=10 {
        let nu_j = nu.scaled(1.0 - 2f64.powi(-j));
        let diff = measure_axpy(-1.0, &nu_j, &nu)?;
        let d = morrey_norm(&diff, 4.0 / 3.0, 5)?.value;
        geometric_ok &= (d - 2f64.powi(-j) * base).abs() <= 1e-10 * base;
    }
    let passed = worst_triangle <= 1e-12
        && worst_homog <= 1e-12
        && monotone_ok
        && zero_iff_ok
        && geometric_ok;
    Ok((
        "norm axioms, exponent monotonicity, Cauchy proxy",
        format!(
            "triangle excess {worst_triangle:.2e}, homogeneity err {worst_homog:.2e}, \
             monotone {monotone_ok}, zero-iff {zero_iff_ok}, geometric {geometric_ok}"
        ),
        "exact to 1e-12 on 50 random measures".to_string(),
        passed,
    ))
}

fn capacity_oracle() -> Outcome {
    let mut errors = Vec::new();
    for res in [64u32, 128, 256] {
        let grid = build_grid(Domain::disk([0.0, 0.0], 1.0), res)?;
        let plate = crate::capacity::ball_plate(&grid, [0.0, 0.0], 0.5);
        let cap = crate::capacity::capacity(&grid, &plate)?;
        errors.push((cap.value - CONCENTRIC_CAPACITY).abs() / CONCENTRIC_CAPACITY);
    }
    let converging = errors[2] < errors[0];
    let passed = errors[2] <= CAPACITY_ORACLE_RTOL && converging;
    Ok((
        "condenser capacity oracle 2π/ln 2",
        format!(
            "rel errors {:.4} / {:.4} / {:.4} at 64/128/256",
            errors[0], errors[1], errors[2]
        ),
        format!(
            "final within {:.0}% and decreasing",
            CAPACITY_ORACLE_RTOL * 100.0
        ),
        passed,
    ))
}

fn cdc_sweeps() -> Outcome {
    let radii = [0.05, 0.1, 0.2];
    let mut gammas = Vec::new();
    let mut all_positive = true;
    for domain in [Domain::unit_square(), Domain::l_shape(), Domain::slit_square()] {
        let label = domain.label().to_string();
        let grid = build_grid(domain, 256)?;
        let sweep = crate::capacity::cdc_sweep(&grid, 16, &radii)?;
        all_positive &= sweep.gamma_hat > 0.0;
        gammas.push((label, sweep.gamma_hat));
    }
    let square_gamma = gammas[0].1;

    // Scale uniformity at the square's edge midpoint.
    let grid = square_grid(256)?;
    let mut ratios = Vec::new();
    for &r in &radii {
        ratios.push(crate::capacity::cdc_ratio(&grid, [0.5, 0.0], r)?.ratio);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios
        .iter()
        .map(|r| (r - mean).abs() / mean)
        .fold(0.0, f64::max);

    let passed = all_positive && square_gamma > SQUARE_GAMMA_MIN && spread <= CDC_SCALE_SPREAD;
    Ok((
        "capacity density condition sweeps",
        format!(
            "gamma_hat {:?}, edge-midpoint ratios {:?} (spread {:.3})",
            gammas, ratios, spread
        ),
        format!(
            "all positive, square > {SQUARE_GAMMA_MIN}, spread <= {CDC_SCALE_SPREAD}"
        ),
        passed,
    ))
}

fn green_convergence() -> Outcome {
    let mut errors = Vec::new();
    let mut worst_min = 0.0f64;
    for res in [64u32, 128, 256] {
        let grid = build_grid(Domain::unit_disk(), res)?;
        let coeffs = CoefficientSet::laplace(&grid);
        let nu = DiscreteMeasure::lebesgue(&grid);
        let (u, _) = green_apply(&grid, &coeffs, &nu)?;
        let exact = DiscreteField::from_fn(&grid, |p| (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0);
        errors.push(u.sup_distance(&exact)?);
        worst_min = worst_min.min(u.min_active());
    }
    let max_err = errors.iter().cloned().fold(0.0f64, f64::max);
    let order = (errors[0] / errors[2]).ln() / 4f64.ln();
    // The disk oracle is quadratic, which the cut-arm stencil reproduces
    // exactly; solver-precision errors certify the order trivially.
    let order_ok = order >= GREEN_ORDER_MIN || max_err <= GREEN_EXACT_FLOOR;
    let principle_ok = worst_min >= -MAX_PRINCIPLE_SLACK;
    Ok((
        "Green operator disk oracle",
        format!(
            "sup errors {:.2e}/{:.2e}/{:.2e}, order {:.2}, min value {:.2e}",
            errors[0], errors[1], errors[2], order, worst_min
        ),
        format!(
            "order >= {GREEN_ORDER_MIN} (or errors <= {GREEN_EXACT_FLOOR:.0e}), \
             min >= -{MAX_PRINCIPLE_SLACK:.0e}"
        ),
        order_ok && principle_ok,
    ))
}

fn boundary_lift() -> Outcome {
    let grid = square_grid(64)?;
    let coeffs = CoefficientSet::laplace(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut comparison_ok = true;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..10 {
        let g = random_trace(&mut rng);
        let (w, _) = harmonic_extension(&grid, &coeffs, &g)?;
        let boundary: Vec<usize> = grid.boundary_nodes().iter().map(|&b| b as usize).collect();
        let g_field = DiscreteField::from_fn(&grid, &g);
        let g_osc = oscillation(&g_field, Some(&boundary))?;
        let w_osc = oscillation(&w, None)?;
        worst_excess = worst_excess.max(w_osc - g_osc);
        comparison_ok &= w_osc <= g_osc + MAX_PRINCIPLE_SLACK;
    }

    let slit = build_grid(Domain::slit_square(), 256)?;
    let slit_coeffs = CoefficientSet::laplace(&slit);
    let (w, _) = harmonic_extension(&slit, &slit_coeffs, &slit_branch)?;
    let fit = holder_fit(&w, None)?;
    let beta_ok =
        !fit.degenerate && fit.beta_hat >= SLIT_BETA_WINDOW.0 && fit.beta_hat <= SLIT_BETA_WINDOW.1;

    Ok((
        "boundary lift: comparison principle and slit exponent",
        format!(
            "max osc excess {:.2e}, slit beta_hat {:.3} (r2 {:.3})",
            worst_excess, fit.beta_hat, fit.fit_r2
        ),
        format!(
            "osc(w) <= osc(g) + {MAX_PRINCIPLE_SLACK:.0e}; beta in [{}, {}]",
            SLIT_BETA_WINDOW.0, SLIT_BETA_WINDOW.1
        ),
        comparison_ok && beta_ok,
    ))
}

fn series_direct_equivalence() -> Outcome {
    let grid = square_grid(64)?;
    let nu = DiscreteMeasure::lebesgue(&grid);
    let opts = SolveOptions {
        series_tol: 1e-12,
        ..SolveOptions::for_beta(0.5)
    };
    let mut worst_gap = 0.0f64;
    for b_scale in [0.05, 0.1, 0.2] {
        for c_scale in [0.05, 0.1, 0.2] {
            let coeffs = singular_coefficients(&grid, 0.5, b_scale, c_scale, [1.0, 0.0])?;
            let (u_series, _) = neumann_solve(&coeffs, &nu, &opts)?;
            let (u_direct, _) = direct_solve(&coeffs, &nu, None, &opts)?;
            worst_gap = worst_gap.max(u_series.sup_distance(&u_direct)?);
        }
    }
    Ok((
        "series/direct equivalence on converging configurations",
        format!("worst sup gap {worst_gap:.2e} over the 3x3 scale grid"),
        format!("<= {SERIES_DIRECT_GAP:.0e}"),
        worst_gap <= SERIES_DIRECT_GAP,
    ))
}

fn bound_shape() -> Outcome {
    let grid = square_grid(64)?;
    let nu = DiscreteMeasure::lebesgue(&grid);
    let beta = 0.5;
    let q = morrey_exponent(beta);
    let qb = drift_morrey_exponent(beta);
    let opts = SolveOptions::for_beta(beta);
    let nu_norm = morrey_norm(&nu, q, opts.scan_depth)?.value;

    // Ten coefficient mixes from pure zeroth-order to pure drift.
    let mut gains = Vec::new();
    for i in 0..10 {
        let t = i as f64 / 9.0;
        let (b_scale, c_scale) = (0.3 * t, 0.3 * (1.0 - t));
        let coeffs = singular_coefficients(&grid, beta, b_scale, c_scale, [1.0, 0.0])?;
        let image = crate::perturbation::apply_lower_order(&coeffs, &nu, &opts)?;
        let t_norm = morrey_norm(&image, q, opts.scan_depth)?.value;
        let drift_norm = morrey_norm(&coeffs.drift_square_measure(), qb, opts.scan_depth)?
            .value
            .sqrt();
        let mu_norm = morrey_norm(coeffs.mu(), q, opts.scan_depth)?.value;
        gains.push(t_norm / ((drift_norm + mu_norm) * nu_norm));
    }
    let max_gain = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_gain = gains.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = max_gain / min_gain;

    // Contraction ratio monotone in the drift scale.
    let mut ratios = Vec::new();
    for b_scale in [0.05, 0.1, 0.2] {
        let coeffs = singular_coefficients(&grid, beta, b_scale, 0.0, [1.0, 0.0])?;
        let (_, report) = neumann_solve(&coeffs, &nu, &opts)?;
        ratios.push(report.contraction_ratio.unwrap_or(f64::NAN));
    }
    let monotone = ratios[0] < ratios[1] && ratios[1] < ratios[2];

    Ok((
        "perturbation bound shape and contraction monotonicity",
        format!(
            "gain spread {spread:.2} (min {min_gain:.3}, max {max_gain:.3}), \
             contraction ratios {ratios:?}"
        ),
        format!("spread <= {GAIN_SPREAD_FACTOR}, ratios increasing"),
        spread <= GAIN_SPREAD_FACTOR && monotone,
    ))
}

fn zero_data_uniqueness() -> Outcome {
    let grid = square_grid(64)?;
    let zero = DiscreteMeasure::zero(&grid);
    let mut worst = 0.0f64;
    for beta in [0.25, 0.5, 0.75] {
        let opts = SolveOptions::for_beta(beta);
        for (b_scale, c_scale) in [(0.0, 0.0), (0.3, 0.3), (1.0, 1.0)] {
            let coeffs = singular_coefficients(&grid, beta, b_scale, c_scale, [1.0, 0.0])?;
            let (u, _) = direct_solve(&coeffs, &zero, None, &opts)?;
            worst = worst.max(u.sup_norm());
            let (u, _) = neumann_solve(&coeffs, &zero, &opts)?;
            worst = worst.max(u.sup_norm());
        }
    }
    Ok((
        "zero-data uniqueness with nonnegative zeroth order",
        format!("worst sup norm {worst:.2e}"),
        format!("<= {UNIQUENESS_SUP:.0e}"),
        worst <= UNIQUENESS_SUP,
    ))
}

fn global_holder_demo() -> Outcome {
    let trace = |p: [f64; 2]| (p[0] - 0.37).abs().sqrt();
    let mut fits = Vec::new();
    let mut ratios = Vec::new();
    let mut sups = Vec::new();
    // Common fit window so the exponents are comparable across resolutions.
    let common_range = (4.0 / 128.0, 2f64.sqrt() / 4.0);
    for res in [128u32, 256] {
        let grid = square_grid(res)?;
        let coeffs = singular_coefficients(&grid, 0.5, 0.3, 0.3, [1.0, 0.0])?;
        let nu = DiscreteMeasure::lebesgue(&grid);
        let opts = SolveOptions {
            with_diagnostics: true,
            ..SolveOptions::for_beta(0.5)
        };
        let (u, report) = solve_bvp(&coeffs, &nu, Some(&trace), Strategy::Direct, &opts)?;
        sups.push(u.sup_norm());
        let fit = holder_fit(&u, Some(common_range))?;
        fits.push(fit);
        ratios.push(report.estimate_ratio.unwrap_or(f64::NAN));
    }
    let bounded = sups.iter().all(|s| s.is_finite() && *s < 1e3);
    let betas_ok = fits.iter().all(|f| !f.degenerate && f.beta_hat > 0.0);
    let beta_drift = (fits[0].beta_hat - fits[1].beta_hat).abs();
    let ratio_drift = (ratios[0] - ratios[1]).abs() / ratios[1].abs();
    let passed = bounded
        && betas_ok
        && beta_drift <= DEMO_BETA_DRIFT
        && ratios.iter().all(|r| r.is_finite())
        && ratio_drift <= DEMO_RATIO_DRIFT;
    Ok((
        "global Hölder solvability demo with singular coefficients",
        format!(
            "sup {:.4}/{:.4}, beta_hat {:.3}/{:.3}, estimate ratio {:.3}/{:.3}",
            sups[0], sups[1], fits[0].beta_hat, fits[1].beta_hat, ratios[0], ratios[1]
        ),
        format!(
            "bounded, beta_hat > 0 stable to {DEMO_BETA_DRIFT}, ratio stable to \
             {:.0}%",
            DEMO_RATIO_DRIFT * 100.0
        ),
        passed,
    ))
}

fn manufactured_exactness() -> Outcome {
    let grid = square_grid(128)?;
    let coeffs = singular_coefficients(&grid, 0.5, 0.5, 0.5, [1.0, 0.0])?;
    let op = assemble(&grid, &coeffs, true)?;
    let solution = |p: [f64; 2]| {
        (std::f64::consts::PI * p[0]).sin() * (std::f64::consts::PI * p[1]).sin()
    };
    let u_star = DiscreteField::from_fn(&grid, solution);
    let dirichlet = op.trace_values(&solution);
    let residual = op.apply(u_star.values(), &dirichlet);
    let vol = grid.cell_volume();
    let mut masses = vec![0.0; grid.num_nodes()];
    for (r, &rho) in residual.iter().enumerate() {
        masses[grid.node_of_unknown(r)] = rho * vol;
    }
    let nu_star = DiscreteMeasure::from_masses(&grid, masses)?;
    let opts = SolveOptions::for_beta(0.5);
    let (u, _) = direct_solve(&coeffs, &nu_star, None, &opts)?;
    let err = u.sup_distance(&u_star)?;
    Ok((
        "manufactured-solution recovery with singular coefficients",
        format!("sup error {err:.2e}"),
        format!("<= {MANUFACTURED_SUP:.0e}"),
        err <= MANUFACTURED_SUP,
    ))
}

/// Trace of the slit-branch harmonic function, exposed for the CLI.
pub fn slit_branch_trace(p: [f64; 2]) -> f64 {
    slit_branch(p)
}
