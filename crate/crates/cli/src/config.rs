//! Run configuration schema and its validation.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use varfrac_core::{default_gamma, default_tau, GsVariant, OrderConfig, OrderField, OrderKind, WeightSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Solve,
    Apply,
    Extend,
    PenaltyStudy,
    OracleCompare,
    Poincare,
    InequalitySuite,
    ConvergenceStudy,
}

impl Task {
    /// The name used in configuration files.
    pub fn name(self) -> &'static str {
        match self {
            Task::Solve => "solve",
            Task::Apply => "apply",
            Task::Extend => "extend",
            Task::PenaltyStudy => "penalty_study",
            Task::OracleCompare => "oracle_compare",
            Task::Poincare => "poincare",
            Task::InequalitySuite => "inequality_suite",
            Task::ConvergenceStudy => "convergence_study",
        }
    }
}

/// A number or the string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AutoOr {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl Default for AutoOr {
    fn default() -> Self {
        AutoOr::Auto(AutoTag::Auto)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(rename = "N")]
    pub dim: usize,
    pub n_x: usize,
    pub n_y: usize,
    #[serde(default)]
    pub tau: AutoOr,
    #[serde(default)]
    pub gamma: AutoOr,
    /// Decay tolerance used when `tau` is `"auto"`.
    #[serde(default = "default_tau_tol")]
    pub tau_tol: f64,
}

fn default_tau_tol() -> f64 {
    1e-8
}

/// Base data: right-hand side for solves, boundary data otherwise.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Zero,
    One,
    /// `∏ sin(k_i π x_i)`; a single entry applies to every axis.
    SinMode {
        k: Vec<usize>,
    },
    /// Smooth compactly supported bump `exp(1 - 1/(1 - r²))`, `r = |x - c|/radius`.
    Bump {
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "default_bump_radius")]
        radius: f64,
    },
    /// Nodal values on the BASE nodes, one row per node in mesh order.
    NodalCsv {
        path: PathBuf,
    },
}

fn default_bump_radius() -> f64 {
    0.25
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compare {
    #[default]
    None,
    Spectral,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub max_iter: Option<usize>,
    /// Relative Rayleigh-quotient tolerance of the eigen solver.
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_eig_tol() -> f64 {
    1e-8
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: None,
            eig_tol: default_eig_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,
}

fn default_modes() -> usize {
    48
}

fn default_quad_points() -> usize {
    96
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            quad_points: default_quad_points(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    #[serde(default = "default_mu")]
    pub mu: Vec<f64>,
}

fn default_mu() -> Vec<f64> {
    vec![1e2, 1e3, 1e4, 1e5, 1e6]
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self { mu: default_mu() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Trace,
    ImprovedTrace,
    HardyWeighted,
    HardyClassical,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub kind: SuiteKind,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_samples() -> usize {
    200
}

fn default_sigma() -> f64 {
    0.5
}

/// Output file names, relative to the output directory; `null` disables one.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_solution")]
    pub solution: Option<PathBuf>,
    #[serde(default = "default_trace")]
    pub trace: Option<PathBuf>,
    #[serde(default = "default_report")]
    pub report: Option<PathBuf>,
}

fn default_solution() -> Option<PathBuf> {
    Some("solution.vtk".into())
}

fn default_trace() -> Option<PathBuf> {
    Some("trace.csv".into())
}

fn default_report() -> Option<PathBuf> {
    Some("report.csv".into())
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            solution: default_solution(),
            trace: default_trace(),
            report: default_report(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub domain: DomainConfig,
    pub order: OrderConfig,
    #[serde(default = "default_g_variant")]
    pub g_variant: GsVariant,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub data: Option<DataSpec>,
    #[serde(default)]
    pub compare: Compare,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub penalty: PenaltyConfig,
    #[serde(default)]
    pub suite: Option<SuiteConfig>,
    /// Cells per axis for each mesh of a convergence study.
    #[serde(default)]
    pub ladder: Vec<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_g_variant() -> GsVariant {
    GsVariant::Pointwise
}

fn default_p() -> f64 {
    2.0
}

fn default_seed() -> u64 {
    42
}

/// A configuration with every `"auto"` resolved and every cross-field
/// constraint checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cfg: RunConfig,
    pub spec: WeightSpec,
    pub tau: f64,
    pub gamma: f64,
    /// Nodal values read from `nodal_csv` data, if any.
    pub nodal: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    pub fn resolve(self, config_dir: &Path) -> Result<Resolved, CliError> {
        let dim = self.domain.dim;
        let order = OrderField::from_config(dim, &self.order)?;
        let spec = WeightSpec::new(order, self.g_variant, self.p)?;
        let lambda_1 = dim as f64 * std::f64::consts::PI.powi(2);
        let tau = match self.domain.tau {
            AutoOr::Value(t) => t,
            AutoOr::Auto(_) => default_tau(lambda_1, self.domain.tau_tol)?,
        };
        let gamma = match self.domain.gamma {
            AutoOr::Value(g) => g,
            AutoOr::Auto(_) => default_gamma(&spec.order),
        };
        // Let the mesh builder validate sizes before any work happens.
        varfrac_core::build_mesh(dim, self.domain.n_x, self.domain.n_y, tau, gamma)?;
        if !(self.solver.tol > 0.0) || !(self.solver.eig_tol > 0.0) {
            return Err(CliError::Config("solver tolerances must be positive".into()));
        }

        let needs_data = matches!(
            self.task,
            Task::Solve
                | Task::Apply
                | Task::Extend
                | Task::PenaltyStudy
                | Task::OracleCompare
                | Task::ConvergenceStudy
        );
        if needs_data && self.data.is_none() {
            return Err(CliError::Config(format!("task {:?} requires `data`", self.task)));
        }
        if let Some(DataSpec::SinMode { k }) = &self.data {
            if !(k.len() == 1 || k.len() == dim) || k.contains(&0) {
                return Err(CliError::Config("sin_mode needs one positive k or one per axis".into()));
            }
        }
        if let Some(DataSpec::Bump { center, radius }) = &self.data {
            if center.as_ref().is_some_and(|c| c.len() != dim) || !(*radius > 0.0) {
                return Err(CliError::Config(
                    "bump needs a center of length N and radius > 0".into(),
                ));
            }
        }
        let constant_order = matches!(spec.order.kind(), OrderKind::Constant(_));
        if self.task == Task::OracleCompare && !constant_order {
            return Err(CliError::Config("oracle_compare needs a constant order".into()));
        }
        if self.compare == Compare::Spectral && !constant_order {
            return Err(CliError::Config("compare = spectral needs a constant order".into()));
        }
        if self.task == Task::ConvergenceStudy {
            if self.ladder.len() < 2 || self.ladder.windows(2).any(|w| w[1] <= w[0]) || self.ladder[0] < 2 {
                return Err(CliError::Config(
                    "ladder needs at least two increasing cell counts >= 2".into(),
                ));
            }
            if matches!(self.data, Some(DataSpec::NodalCsv { .. })) {
                return Err(CliError::Config(
                    "nodal_csv data is tied to one mesh and cannot drive a ladder".into(),
                ));
            }
            if !constant_order && self.ladder.len() < 3 {
                return Err(CliError::Config(
                    "a variable-order ladder needs at least three meshes".into(),
                ));
            }
        }
        if self.task == Task::PenaltyStudy
            && (self.penalty.mu.is_empty() || self.penalty.mu.iter().any(|m| !(*m > 0.0)))
        {
            return Err(CliError::Config(
                "penalty.mu must be a non-empty list of positive values".into(),
            ));
        }
        if self.task == Task::InequalitySuite {
            let Some(suite) = &self.suite else {
                return Err(CliError::Config("task inequality_suite requires `suite`".into()));
            };
            if suite.samples == 0 {
                return Err(CliError::Config("suite.samples must be positive".into()));
            }
            if suite.kind == SuiteKind::ImprovedTrace && dim != 1 {
                return Err(CliError::Config("the improved trace suite supports N = 1 only".into()));
            }
        }

        let n_x = self.domain.n_x;
        let mut warnings = Vec::new();
        for axis in 0..dim {
            for b in spec.order.step_breakpoints(axis) {
                let cells = b * (n_x - 1) as f64;
                if (cells - cells.round()).abs() > 1e-9 {
                    warnings.push(format!(
                        "step breakpoint {b} on axis {axis} is not on an x-mesh line; cells straddling it use the midpoint order"
                    ));
                }
            }
        }

        let nodal = match &self.data {
            Some(DataSpec::NodalCsv { path }) => Some(read_nodal_csv(&config_dir.join(path), dim, n_x)?),
            _ => None,
        };
        Ok(Resolved {
            cfg: self,
            spec,
            tau,
            gamma,
            nodal,
            warnings,
        })
    }
}

/// Reads `x1[,x2],value` rows and checks them against the BASE node layout.
fn read_nodal_csv(path: &Path, dim: usize, n_x: usize) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let inner = n_x - 2;
    let expected = inner.pow(dim as u32);
    let h = 1.0 / (n_x - 1) as f64;
    let mut values = Vec::with_capacity(expected);
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if record.len() != dim + 1 {
            return Err(CliError::Config(format!(
                "{}: row {} has {} columns, expected {}",
                path.display(),
                row + 1,
                record.len(),
                dim + 1
            )));
        }
        let nums: Vec<f64> = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("{}: row {}: {e}", path.display(), row + 1)))?;
        let mut idx = row;
        for (ax, &x) in nums[..dim].iter().enumerate() {
            let expected_x = (idx % inner + 1) as f64 * h;
            idx /= inner;
            if (x - expected_x).abs() > 1e-9 {
                return Err(CliError::Config(format!(
                    "{}: row {} has x{} = {x}, expected the BASE node at {expected_x}",
                    path.display(),
                    row + 1,
                    ax + 1
                )));
            }
        }
        values.push(nums[dim]);
    }
    if values.len() != expected {
        return Err(CliError::Config(format!(
            "{}: {} rows, expected one per BASE node ({expected})",
            path.display(),
            values.len()
        )));
    }
    Ok(values)
}
