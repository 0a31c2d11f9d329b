//! CSV artifacts with a provenance comment block.
//!
//! Bodies are deterministic for a fixed configuration; the timestamp line is
//! the only part allowed to vary between identical runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};

use morrey_lab::{DiscreteField, DiscreteMeasure, SolveReport};

pub struct CsvWriter {
    header: String,
    body: String,
}

impl CsvWriter {
    /// `context` is a one-line description of where the data came from
    /// (config echo or flag summary).
    pub fn new(context: &str) -> CsvWriter {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut header = String::new();
        let _ = writeln!(header, "# morrey-lab {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(header, "# timestamp: {timestamp}");
        let _ = writeln!(header, "# context: {context}");
        CsvWriter {
            header,
            body: String::new(),
        }
    }

    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.header, "# {line}");
    }

    pub fn row(&mut self, line: &str) {
        let _ = writeln!(self.body, "{line}");
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("cannot create {}", parent.display()))?;
            }
        }
        std::fs::write(path, format!("{}{}", self.header, self.body))
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}

pub fn artifact_path(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}_{suffix}"))
}

/// Solution export: one `x,y,value` row per interior/boundary node.
pub fn field_csv(context: &str, field: &DiscreteField) -> CsvWriter {
    let mut csv = CsvWriter::new(context);
    let grid = field.grid();
    csv.comment(&format!(
        "h: {:.12e}  nodes: {}",
        grid.spacing(),
        grid.num_nodes()
    ));
    csv.row("x,y,value");
    for (_, p, v) in field.active() {
        csv.row(&format!("{:.12e},{:.12e},{:.12e}", p[0], p[1], v));
    }
    csv
}

/// Measure export: one `cell,x,y,mass` row per cell with nonzero mass.
pub fn measure_csv(context: &str, nu: &DiscreteMeasure) -> CsvWriter {
    let mut csv = CsvWriter::new(context);
    let grid = nu.grid();
    csv.comment(&format!(
        "h: {:.12e}  total_variation: {:.12e}",
        grid.spacing(),
        nu.total_variation()
    ));
    csv.row("cell,x,y,mass");
    for (i, &mass) in nu.masses().iter().enumerate() {
        if mass != 0.0 {
            let p = grid.node_pos(i);
            csv.row(&format!("{},{:.12e},{:.12e},{:.12e}", i, p[0], p[1], mass));
        }
    }
    csv
}

/// Structured-grid export for external plotting: a gnuplot-style matrix of
/// nodal values (one lattice row per line), NaN outside the domain.
pub fn structured_grid(field: &DiscreteField) -> String {
    let grid = field.grid();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# structured grid: nx {} ny {} h {:.12e}",
        grid.nx(),
        grid.ny(),
        grid.spacing()
    );
    for iy in 0..grid.ny() {
        let mut row = Vec::with_capacity(grid.nx());
        for ix in 0..grid.nx() {
            let node = iy * grid.nx() + ix;
            if grid.node_kind(node) == morrey_lab::NodeKind::Exterior {
                row.push("nan".to_string());
            } else {
                row.push(format!("{:.12e}", field.value(node)));
            }
        }
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Per-solve report as key,value rows.
pub fn report_csv(context: &str, report: &SolveReport) -> CsvWriter {
    let mut csv = CsvWriter::new(context);
    csv.row("key,value");
    csv.row(&format!("mode,{}", report.mode.name()));
    csv.row(&format!("terms,{}", report.terms));
    csv.row(&format!("sup_norm,{:.12e}", report.sup_norm));
    csv.row(&format!("linear_residual,{:.12e}", report.linear_residual));
    csv.row(&format!("linear_iterations,{}", report.linear_iterations));
    csv.row(&format!("non_contractive,{}", report.non_contractive));
    csv.row(&format!(
        "contraction_ratio,{}",
        fmt_opt(report.contraction_ratio)
    ));
    csv.row(&format!(
        "iterate_norms,{}",
        report
            .iterate_norms
            .iter()
            .map(|v| format!("{v:.6e}"))
            .collect::<Vec<_>>()
            .join(";")
    ));
    csv.row(&format!(
        "series_direct_gap,{}",
        fmt_opt(report.series_direct_gap)
    ));
    csv.row(&format!(
        "perturbation_gain,{}",
        fmt_opt(report.perturbation_gain)
    ));
    match &report.holder {
        Some(fit) if !fit.degenerate => {
            csv.row(&format!("beta_hat,{:.6}", fit.beta_hat));
            csv.row(&format!("seminorm_hat,{:.6e}", fit.seminorm_hat));
            csv.row(&format!("fit_r2,{:.6}", fit.fit_r2));
            csv.row(&format!(
                "fit_range,{:.6e};{:.6e}",
                fit.scale_range.0, fit.scale_range.1
            ));
        }
        _ => {
            csv.row("beta_hat,");
            csv.row("seminorm_hat,");
            csv.row("fit_r2,");
            csv.row("fit_range,");
        }
    }
    csv.row(&format!("estimate_ratio,{}", fmt_opt(report.estimate_ratio)));
    csv
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.12e}")).unwrap_or_default()
}
