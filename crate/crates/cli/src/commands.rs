//! Command implementations shared by the binary entry point.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use morrey_lab::{
    ball_plate, build_grid, capacity, cdc_sweep, holder_fit_samples, morrey_norm, solve_bvp,
    verification, DiscreteField, Domain, DomainPreset, Strategy,
};

use crate::config::RunConfig;
use crate::output::{
    artifact_path, field_csv, fmt_opt, measure_csv, report_csv, structured_grid, CsvWriter,
};
use rayon::prelude::*;

pub fn cmd_solve(config: &RunConfig, strategy: Option<&str>, out: Option<&str>) -> Result<()> {
    let mut config = config.clone();
    if let Some(s) = strategy {
        if Strategy::parse(s).is_none() {
            bail!("strategy must be `neumann` or `direct`, got {s}");
        }
        config.solver.strategy = s.to_string();
    }
    let grid = config.build_grid()?;
    let coeffs = config.build_coefficients(&grid)?;
    let nu = config.build_nu(&grid)?;
    let trace = config.build_trace()?;
    let opts = config.solve_options();
    let (u, report) = solve_bvp(
        &coeffs,
        &nu,
        trace.as_ref().map(|g| g.as_ref() as &dyn Fn([f64; 2]) -> f64),
        config.strategy(),
        &opts,
    )?;

    let prefix = out.unwrap_or(&config.output.prefix);
    let context = config.echo();
    let mut solution = field_csv(&context, &u);
    solution.comment(&format!("q: {:.9}", opts.morrey_q));
    solution.write(&artifact_path(prefix, "solution.csv"))?;
    std::fs::write(
        artifact_path(prefix, "solution.dat"),
        structured_grid(&u),
    )
    .context("cannot write structured grid file")?;
    let mut rep = report_csv(&context, &report);
    rep.comment(&format!("q: {:.9}", opts.morrey_q));
    rep.write(&artifact_path(prefix, "report.csv"))?;

    println!(
        "solved ({}) sup {:.6e}, terms {}, residual {:.2e}",
        report.mode.name(),
        report.sup_norm,
        report.terms,
        report.linear_residual
    );
    if let Some(fit) = &report.holder {
        if !fit.degenerate {
            println!(
                "holder fit: beta_hat {:.4}, seminorm {:.4e}, r2 {:.4}",
                fit.beta_hat, fit.seminorm_hat, fit.fit_r2
            );
        }
    }
    println!(
        "artifacts: {} and {}",
        artifact_path(prefix, "solution.csv").display(),
        artifact_path(prefix, "report.csv").display()
    );
    Ok(())
}

pub fn cmd_morrey_norm(config: &RunConfig, out: Option<&str>) -> Result<()> {
    let grid = config.build_grid()?;
    let nu = config.build_nu(&grid)?;
    let q = morrey_lab::morrey_exponent(config.coefficients.beta);
    let result = morrey_norm(&nu, q, config.scan.depth)?;
    let pos = grid.node_pos(result.argmax_center);
    println!(
        "morrey norm (q = {:.6}): {:.9e} attained at ({:.6}, {:.6}) with radius {:.6e}",
        q, result.value, pos[0], pos[1], result.argmax_radius
    );
    if let Some(prefix) = out {
        let mut csv = CsvWriter::new(&config.echo());
        csv.comment(&format!("h: {:.12e}  q: {:.9}", grid.spacing(), q));
        csv.row("q,value,argmax_x,argmax_y,argmax_radius");
        csv.row(&format!(
            "{:.9},{:.12e},{:.12e},{:.12e},{:.12e}",
            q, result.value, pos[0], pos[1], result.argmax_radius
        ));
        csv.write(&artifact_path(prefix, "morrey.csv"))?;
        measure_csv(&config.echo(), &nu).write(&artifact_path(prefix, "measure.csv"))?;
    }
    Ok(())
}

pub fn cmd_capacity(
    inner: f64,
    outer: f64,
    resolution: u32,
    out: Option<&str>,
) -> Result<()> {
    if !(0.0 < inner && inner < outer) {
        bail!("need 0 < inner < outer, got inner {inner}, outer {outer}");
    }
    let grid = build_grid(Domain::disk([0.0, 0.0], outer), resolution)?;
    let plate = ball_plate(&grid, [0.0, 0.0], inner);
    let result = capacity(&grid, &plate)?;
    let log_ratio = (outer / inner).ln();
    let reference = 2.0 * std::f64::consts::PI / log_ratio;
    println!(
        "capacity(B_{inner}, B_{outer}) = {:.9e} over {} plate nodes \
         (concentric closed form {:.9e})",
        result.value,
        result.plate_nodes,
        reference
    );
    if let Some(prefix) = out {
        let context = format!("condenser inner={inner} outer={outer} resolution={resolution}");
        let mut csv = CsvWriter::new(&context);
        csv.row("inner,outer,resolution,value,plate_nodes");
        csv.row(&format!(
            "{:.12e},{:.12e},{},{:.12e},{}",
            inner, outer, resolution, result.value, result.plate_nodes
        ));
        csv.write(&artifact_path(prefix, "capacity.csv"))?;
        field_csv(&context, &result.potential)
            .write(&artifact_path(prefix, "potential.csv"))?;
    }
    Ok(())
}

pub fn cmd_cdc_check(
    domain: &str,
    points: usize,
    radii: &[f64],
    resolution: u32,
    out: Option<&str>,
) -> Result<()> {
    let preset = DomainPreset::parse(domain)
        .ok_or_else(|| anyhow!("unknown domain preset {domain}"))?;
    let grid = build_grid(Domain::from_preset(preset), resolution)?;
    let sweep = cdc_sweep(&grid, points, radii)?;
    println!(
        "cdc sweep over {} points x {} radii: gamma_hat = {:.6}",
        points,
        radii.len(),
        sweep.gamma_hat
    );
    let context = format!(
        "cdc domain={domain} resolution={resolution} points={points} radii={radii:?}"
    );
    let mut csv = CsvWriter::new(&context);
    csv.comment(&format!(
        "gamma_hat: {:.9e}  certified radii: {:?}",
        sweep.gamma_hat, sweep.radii
    ));
    csv.row("xi_x,xi_y,radius,ratio,warning");
    for report in &sweep.reports {
        for (radius, outcome) in &report.entries {
            csv.row(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{}",
                report.point[0],
                report.point[1],
                radius,
                outcome.ratio,
                outcome.warning.label()
            ));
        }
    }
    let prefix = out.unwrap_or("cdc");
    csv.write(&artifact_path(prefix, "cdc.csv"))?;
    Ok(())
}

pub fn cmd_holder_fit(input: &Path, range: (f64, f64), out: Option<&str>) -> Result<()> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("cannot read field file {}", input.display()))?;
    let mut samples = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| anyhow!("line {}: missing column", line_no + 1))?
                .trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("line {}: {e}", line_no + 1))
        };
        let x = parse(parts.next())?;
        let y = parse(parts.next())?;
        let v = parse(parts.next())?;
        samples.push(([x, y], v));
    }
    let fit = holder_fit_samples(&samples, range)?;
    if fit.degenerate {
        println!("holder fit: degenerate (constant or insufficient data)");
    } else {
        println!(
            "holder fit over ({}, {}): beta_hat {:.4}, seminorm {:.4e}, r2 {:.4}",
            range.0, range.1, fit.beta_hat, fit.seminorm_hat, fit.fit_r2
        );
    }
    if let Some(prefix) = out {
        let mut csv = CsvWriter::new(&format!("holder-fit {}", input.display()));
        csv.row("beta_hat,seminorm_hat,fit_r2,scale_min,scale_max,degenerate");
        csv.row(&format!(
            "{},{},{:.6},{:.12e},{:.12e},{}",
            if fit.degenerate {
                String::new()
            } else {
                format!("{:.6}", fit.beta_hat)
            },
            if fit.degenerate {
                String::new()
            } else {
                format!("{:.12e}", fit.seminorm_hat)
            },
            fit.fit_r2,
            fit.scale_range.0,
            fit.scale_range.1,
            fit.degenerate
        ));
        csv.write(&artifact_path(prefix, "holderfit.csv"))?;
    }
    Ok(())
}

/// Runs the pinned acceptance battery and writes the summary CSV.
/// Returns false when any criterion failed.
pub fn cmd_suite(out: &str) -> Result<bool> {
    let results = verification::run_all();
    let mut csv = CsvWriter::new("acceptance suite");
    csv.row("id,name,passed,observed,requirement,seconds");
    let mut all_passed = true;
    for r in &results {
        println!("{}", r.summary_line());
        all_passed &= r.passed;
        csv.row(&format!(
            "{},{},{},\"{}\",\"{}\",{:.2}",
            r.id,
            r.name,
            r.passed,
            r.observed.replace('"', "'"),
            r.requirement.replace('"', "'"),
            r.seconds
        ));
    }
    csv.write(&artifact_path(out, "suite.csv"))?;
    println!(
        "suite: {}/{} criteria passed",
        results.iter().filter(|r| r.passed).count(),
        results.len()
    );
    Ok(all_passed)
}

pub fn cmd_sweep(
    config: &RunConfig,
    param: &str,
    values: &[f64],
    out: Option<&str>,
) -> Result<()> {
    if !matches!(param, "b_scale" | "c_scale" | "beta" | "resolution") {
        bail!(
            "sweep parameter must be one of b_scale, c_scale, beta, resolution; got {param}"
        );
    }
    let context = format!("sweep {param} over {values:?}; base {}", config.echo());
    let mut csv = CsvWriter::new(&context);
    csv.row(
        "parameter,value,status,sup_norm,terms,contraction_ratio,linear_residual,\
         beta_hat,seminorm_hat,fit_r2,estimate_ratio,oracle_error",
    );

    let rows: Vec<String> = values
        .par_iter()
        .map(|&value| {
            let mut run = config.clone();
            match param {
                "b_scale" => run.coefficients.b_scale = value,
                "c_scale" => run.coefficients.c_scale = value,
                "beta" => run.coefficients.beta = value,
                "resolution" => run.domain.resolution = value as u32,
                _ => unreachable!(),
            }
            let metrics = match run_once(&run) {
                Ok(metrics) => metrics,
                // Record the failure and keep sweeping.
                Err(e) => format!("{},,,,,,,,,", failure_status(&e)),
            };
            format!("{param},{value},{metrics}")
        })
        .collect();
    for row in rows {
        csv.row(&row);
    }
    let prefix = out.unwrap_or(&config.output.prefix);
    csv.write(&artifact_path(prefix, "sweep.csv"))?;
    println!(
        "sweep over {param}: {} runs -> {}",
        values.len(),
        artifact_path(prefix, "sweep.csv").display()
    );
    Ok(())
}

fn run_once(config: &RunConfig) -> Result<String> {
    config.validate()?;
    let grid = config.build_grid()?;
    let coeffs = config.build_coefficients(&grid)?;
    let nu = config.build_nu(&grid)?;
    let trace = config.build_trace()?;
    let opts = config.solve_options();
    let (u, report) = solve_bvp(
        &coeffs,
        &nu,
        trace.as_ref().map(|g| g.as_ref() as &dyn Fn([f64; 2]) -> f64),
        config.strategy(),
        &opts,
    )?;
    let oracle_error = disk_poisson_error(config, &u);
    let (beta_hat, seminorm, r2) = match &report.holder {
        Some(f) if !f.degenerate => (
            format!("{:.6}", f.beta_hat),
            format!("{:.6e}", f.seminorm_hat),
            format!("{:.6}", f.fit_r2),
        ),
        _ => (String::new(), String::new(), String::new()),
    };
    Ok(format!(
        "ok,{:.12e},{},{},{:.6e},{},{},{},{},{}",
        report.sup_norm,
        report.terms,
        fmt_opt(report.contraction_ratio),
        report.linear_residual,
        beta_hat,
        seminorm,
        r2,
        fmt_opt(report.estimate_ratio),
        oracle_error.map(|e| format!("{e:.12e}")).unwrap_or_default()
    ))
}

/// Analytic reference for the pure disk Poisson configuration.
fn disk_poisson_error(config: &RunConfig, u: &DiscreteField) -> Option<f64> {
    let is_disk = config.domain.preset.as_deref() == Some("unit_disk");
    let zero_lower =
        config.coefficients.b_scale == 0.0 && config.coefficients.c_scale == 0.0;
    let lebesgue = matches!(&config.data.nu, crate::config::NuSpec::Named(n) if n == "lebesgue");
    let zero_trace = matches!(&config.data.g, crate::config::TraceSpec::Named(n) if n == "zero");
    if !(is_disk && zero_lower && lebesgue && zero_trace) {
        return None;
    }
    let exact = DiscreteField::from_fn(u.grid(), |p| (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0);
    u.sup_distance(&exact).ok()
}

fn failure_status(e: &anyhow::Error) -> &'static str {
    match e.downcast_ref::<morrey_lab::Error>() {
        Some(morrey_lab::Error::NonContractive { .. }) => "non_contractive",
        Some(morrey_lab::Error::FredholmCaseOne { .. }) => "fredholm_case_one",
        Some(morrey_lab::Error::SolverBreakdown { .. }) => "solver_failure",
        _ => "error",
    }
}

/// Comma-separated floats; an empty string yields an empty list.
pub fn parse_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| anyhow!("invalid value `{s}`: {e}"))
        })
        .collect()
}

pub fn parse_radii(list: &str) -> Result<Vec<f64>> {
    let radii = parse_values(list)?;
    if radii.is_empty() {
        bail!("radius list is empty");
    }
    Ok(radii)
}

pub fn parse_range(range: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = range.split(',').collect();
    if parts.len() != 2 {
        bail!("range must be `min,max`, got `{range}`");
    }
    let a = parts[0].trim().parse::<f64>()?;
    let b = parts[1].trim().parse::<f64>()?;
    Ok((a, b))
}

