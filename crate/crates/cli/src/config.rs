//! Sectioned key = value experiment configuration (TOML dialect) and the
//! builders that turn it into grids, coefficients, data measures, and traces.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use morrey_lab::{
    build_grid, measure_axpy, morrey_exponent, singular_coefficients, CoefficientSet,
    DiscreteMeasure, Domain, DomainPreset, Grid, SolveOptions, Strategy,
};

/// Boxed boundary trace sampled at arbitrary boundary points.
pub type TraceFn = Box<dyn Fn([f64; 2]) -> f64 + Sync>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    #[serde(default)]
    pub coefficients: CoefficientSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub polygon: Option<Vec<[f64; 2]>>,
    pub resolution: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientSection {
    pub beta: f64,
    pub b_scale: f64,
    pub c_scale: f64,
    pub direction: [f64; 2],
}

impl Default for CoefficientSection {
    fn default() -> Self {
        CoefficientSection {
            beta: 0.5,
            b_scale: 0.0,
            c_scale: 0.0,
            direction: [1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub nu: NuSpec,
    pub g: TraceSpec,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            nu: NuSpec::Named("lebesgue".to_string()),
            g: TraceSpec::Named("zero".to_string()),
        }
    }
}

/// Data measure: a named measure, a named density family, or point masses.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NuSpec {
    Named(String),
    Density {
        density: String,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        power: f64,
        #[serde(default = "half_center")]
        center: [f64; 2],
        #[serde(default = "one_tenth")]
        width: f64,
    },
    Points { points: Vec<[f64; 3]> },
}

/// Boundary trace: a named analytic family sampled on the true boundary.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TraceSpec {
    Named(String),
    Detailed {
        name: String,
        #[serde(default)]
        value: f64,
        #[serde(default)]
        coefficients: Vec<f64>,
        #[serde(default)]
        power: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn one_tenth() -> f64 {
    0.1
}
fn half_center() -> [f64; 2] {
    [0.5, 0.5]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub strategy: String,
    pub series_tol: f64,
    pub max_terms: usize,
    pub linear_tol: f64,
    pub max_linear_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            strategy: "direct".to_string(),
            series_tol: 1e-9,
            max_terms: 200,
            linear_tol: 1e-12,
            max_linear_iterations: 50_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub depth: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection { depth: 6 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub prefix: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            prefix: "out".to_string(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text)
            .with_context(|| format!("config file {} is invalid", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let res = self.domain.resolution;
        if !(8..=1024).contains(&res) || !res.is_power_of_two() {
            bail!("domain.resolution must be a power of two in [8, 1024], got {res}");
        }
        if self.domain.preset.is_some() == self.domain.polygon.is_some() {
            bail!("domain needs exactly one of `preset` or `polygon`");
        }
        if let Some(name) = &self.domain.preset {
            if DomainPreset::parse(name).is_none() {
                bail!(
                    "domain.preset `{name}` unknown; expected one of \
                     unit_square, unit_disk, l_shape, slit_square, annulus"
                );
            }
        }
        let beta = self.coefficients.beta;
        if !(0.0 < beta && beta < 1.0) {
            bail!("coefficients.beta must lie in (0, 1), got {beta}");
        }
        if self.coefficients.b_scale < 0.0 || self.coefficients.c_scale < 0.0 {
            bail!("coefficient scales must be nonnegative");
        }
        if Strategy::parse(&self.solver.strategy).is_none() {
            bail!(
                "solver.strategy must be `neumann` or `direct`, got {}",
                self.solver.strategy
            );
        }
        if self.solver.series_tol <= 0.0 || self.solver.linear_tol <= 0.0 {
            bail!("solver tolerances must be positive");
        }
        self.build_domain()?;
        Ok(())
    }

    pub fn build_domain(&self) -> Result<Domain> {
        if let Some(name) = &self.domain.preset {
            let preset = DomainPreset::parse(name)
                .ok_or_else(|| anyhow!("unknown domain preset {name}"))?;
            Ok(Domain::from_preset(preset))
        } else {
            let vertices = self
                .domain
                .polygon
                .clone()
                .ok_or_else(|| anyhow!("domain.polygon missing"))?;
            Ok(Domain::polygon(vertices)?)
        }
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        Ok(build_grid(self.build_domain()?, self.domain.resolution)?)
    }

    pub fn build_coefficients(&self, grid: &Arc<Grid>) -> Result<CoefficientSet> {
        Ok(singular_coefficients(
            grid,
            self.coefficients.beta,
            self.coefficients.b_scale,
            self.coefficients.c_scale,
            self.coefficients.direction,
        )?)
    }

    pub fn build_nu(&self, grid: &Arc<Grid>) -> Result<DiscreteMeasure> {
        build_measure(&self.data.nu, grid)
    }

    /// Boundary trace closure, or None for homogeneous data.
    pub fn build_trace(&self) -> Result<Option<TraceFn>> {
        build_trace(&self.data.g)
    }

    pub fn strategy(&self) -> Strategy {
        Strategy::parse(&self.solver.strategy).expect("validated strategy")
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            morrey_q: morrey_exponent(self.coefficients.beta),
            scan_depth: self.scan.depth,
            series_tol: self.solver.series_tol,
            max_terms: self.solver.max_terms,
            linear_tol: self.solver.linear_tol,
            linear_max_iter: self.solver.max_linear_iterations,
            with_diagnostics: true,
        }
    }

    /// One-line echo for provenance headers.
    pub fn echo(&self) -> String {
        let domain = match (&self.domain.preset, &self.domain.polygon) {
            (Some(p), _) => p.clone(),
            (None, Some(v)) => format!("polygon[{}]", v.len()),
            _ => "?".to_string(),
        };
        format!(
            "domain={domain} resolution={} beta={} b_scale={} c_scale={} nu={} g={} \
             strategy={} depth={}",
            self.domain.resolution,
            self.coefficients.beta,
            self.coefficients.b_scale,
            self.coefficients.c_scale,
            nu_label(&self.data.nu),
            trace_label(&self.data.g),
            self.solver.strategy,
            self.scan.depth,
        )
    }
}

pub fn nu_label(spec: &NuSpec) -> String {
    match spec {
        NuSpec::Named(n) => n.clone(),
        NuSpec::Density { density, .. } => format!("density:{density}"),
        NuSpec::Points { points } => format!("points[{}]", points.len()),
    }
}

pub fn trace_label(spec: &TraceSpec) -> String {
    match spec {
        TraceSpec::Named(n) => n.clone(),
        TraceSpec::Detailed { name, .. } => name.clone(),
    }
}

fn build_measure(spec: &NuSpec, grid: &Arc<Grid>) -> Result<DiscreteMeasure> {
    match spec {
        NuSpec::Named(name) => match name.as_str() {
            "lebesgue" => Ok(DiscreteMeasure::lebesgue(grid)),
            "zero" => Ok(DiscreteMeasure::zero(grid)),
            other => bail!("data.nu `{other}` unknown; expected `lebesgue` or `zero`"),
        },
        NuSpec::Density {
            density,
            scale,
            power,
            center,
            width,
        } => match density.as_str() {
            "constant" => Ok(DiscreteMeasure::lebesgue(grid).scaled(*scale)),
            "delta_power" => {
                // Boundary-distance power density with the same near-boundary
                // clamp the singular coefficient profiles use.
                let floor = grid.spacing() / 2.0;
                let vol = grid.cell_volume();
                let mut masses = vec![0.0; grid.num_nodes()];
                for &i in grid.interior_nodes() {
                    let i = i as usize;
                    masses[i] = scale * grid.delta(i).max(floor).powf(*power) * vol;
                }
                Ok(DiscreteMeasure::from_masses(grid, masses)?)
            }
            "gaussian" => {
                let c = *center;
                let w = *width;
                let s = *scale;
                Ok(DiscreteMeasure::from_density(grid, move |p| {
                    let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                    s * (-d2 / (2.0 * w * w)).exp()
                }))
            }
            other => bail!(
                "data.nu density `{other}` unknown; expected constant, delta_power, gaussian"
            ),
        },
        NuSpec::Points { points } => {
            let mut total = DiscreteMeasure::zero(grid);
            for &[x, y, mass] in points {
                let node = grid.node_near([x, y]);
                let atom = DiscreteMeasure::point_mass(grid, node, mass)
                    .map_err(|e| anyhow!("point mass at ({x}, {y}): {e}"))?;
                total = measure_axpy(1.0, &atom, &total)?;
            }
            Ok(total)
        }
    }
}

fn build_trace(spec: &TraceSpec) -> Result<Option<TraceFn>> {
    match spec {
        TraceSpec::Named(name) => match name.as_str() {
            "zero" => Ok(None),
            "slit_branch" => Ok(Some(Box::new(morrey_lab::verification::slit_branch_trace))),
            other => bail!("data.g `{other}` unknown; expected `zero` or `slit_branch`"),
        },
        TraceSpec::Detailed {
            name,
            value,
            coefficients,
            power,
            center,
            seed,
            amplitude,
        } => match name.as_str() {
            "constant" => {
                let c = *value;
                Ok(Some(Box::new(move |_| c)))
            }
            "linear" => {
                if coefficients.len() != 3 {
                    bail!("data.g linear needs coefficients = [a, b, c] for a·x + b·y + c");
                }
                let [a, b, c] = [coefficients[0], coefficients[1], coefficients[2]];
                Ok(Some(Box::new(move |p: [f64; 2]| a * p[0] + b * p[1] + c)))
            }
            "abs_power" => {
                if !(0.0 < *power && *power <= 1.0) {
                    bail!("data.g abs_power needs power in (0, 1]");
                }
                let p0 = *center;
                let q = *power;
                Ok(Some(Box::new(move |p: [f64; 2]| {
                    (p[0] - p0[0]).abs().powf(q)
                })))
            }
            "slit_branch" => Ok(Some(Box::new(morrey_lab::verification::slit_branch_trace))),
            "waves" => {
                // Deterministic smooth trace: a handful of plane waves whose
                // parameters derive from the seed by integer mixing.
                let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
                let mut next = move || {
                    state ^= state >> 12;
                    state ^= state << 25;
                    state ^= state >> 27;
                    (state.wrapping_mul(0x2545f4914f6cdd1d) >> 11) as f64 / (1u64 << 53) as f64
                };
                let mut terms = Vec::new();
                for _ in 0..4 {
                    terms.push((
                        2.0 * next() - 1.0,
                        6.0 * next() - 3.0,
                        6.0 * next() - 3.0,
                        std::f64::consts::TAU * next(),
                    ));
                }
                let amp = *amplitude;
                Ok(Some(Box::new(move |p: [f64; 2]| {
                    amp * terms
                        .iter()
                        .map(|(a, kx, ky, ph)| a * (kx * p[0] + ky * p[1] + ph).sin())
                        .sum::<f64>()
                })))
            }
            other => bail!(
                "data.g `{other}` unknown; expected constant, linear, abs_power, \
                 slit_branch, waves"
            ),
        },
    }
}
