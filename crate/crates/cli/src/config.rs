//! Experiment configuration: TOML parsing, validation and the translation
//! into core problem data.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use noncoercive_core::grid::io::load_field;
use noncoercive_core::solvers::{HChoice, ManufacturedSolution, SolverOptions};
use noncoercive_core::{GradientCoupling, Grid, MatrixField, ProblemData, ScalarField};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Check,
    SolveMin,
    SolveMp,
    SolveBoth,
    SolveGeneral,
    Mms,
    Props,
}

impl Mode {
    /// Modes that search for the mountain-pass solution.
    pub fn needs_multiplicity(self) -> bool {
        matches!(self, Self::SolveMp | Self::SolveBoth)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Check => "check",
            Self::SolveMin => "solve-min",
            Self::SolveMp => "solve-mp",
            Self::SolveBoth => "solve-both",
            Self::SolveGeneral => "solve-general",
            Self::Mms => "mms",
            Self::Props => "props",
        };
        f.write_str(s)
    }
}

/// Interior node counts and box side lengths (default 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
}

impl GridSpec {
    pub fn lengths(&self) -> Vec<f64> {
        self.lengths
            .clone()
            .unwrap_or_else(|| vec![1.0; self.counts.len()])
    }

    pub fn build(&self) -> Result<Grid, ConfigError> {
        Grid::from_lengths(&self.counts, &self.lengths())
            .map_err(|e| invalid("grid", e.to_string()))
    }
}

/// A nodal coefficient from the built-in library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Coefficient {
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`.
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    /// `amplitude * prod_d sin(pi x_d / L_d)`.
    SineProduct {
        amplitude: f64,
    },
    /// A field container written by this tool, relative to the config file.
    File {
        path: PathBuf,
    },
    /// Constant full matrix; only meaningful for `a`.
    Matrix {
        rows: Vec<Vec<f64>>,
    },
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    fn numbers(&self) -> Vec<f64> {
        match self {
            Self::Constant { value } => vec![*value],
            Self::GaussianBump {
                center,
                width,
                amplitude,
            } => center.iter().copied().chain([*width, *amplitude]).collect(),
            Self::SineProduct { amplitude } => vec![*amplitude],
            Self::File { .. } => Vec::new(),
            Self::Matrix { rows } => rows.iter().flatten().copied().collect(),
        }
    }

    fn validate(&self, key: &str, dim: usize, base: &Path) -> Result<(), ConfigError> {
        if self.numbers().iter().any(|v| !v.is_finite()) {
            return Err(invalid(key, "parameters must be finite"));
        }
        match self {
            Self::GaussianBump { center, width, .. } => {
                if center.len() != dim {
                    return Err(invalid(
                        key,
                        format!("center has {} coordinates for a {dim}-d grid", center.len()),
                    ));
                }
                if !(*width > 0.0) {
                    return Err(invalid(key, "width must be positive"));
                }
            }
            Self::File { path } => {
                let full = base.join(path);
                if !full.is_file() {
                    return Err(invalid(
                        key,
                        format!("file {} does not exist", full.display()),
                    ));
                }
            }
            Self::Matrix { rows } => {
                if key != "coefficients.a" {
                    return Err(invalid(key, "a matrix is only allowed for `a`"));
                }
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(invalid(key, format!("matrix must be {dim} x {dim}")));
                }
            }
            Self::Constant { .. } | Self::SineProduct { .. } => {}
        }
        Ok(())
    }

    /// Pointwise value for the analytic shapes; `None` for files and
    /// matrices.
    pub fn eval(&self, x: &[f64], lengths: &[f64]) -> Option<f64> {
        match self {
            Self::Constant { value } => Some(*value),
            Self::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                Some(amplitude * (-r2 / (2.0 * width * width)).exp())
            }
            Self::SineProduct { amplitude } => Some(
                amplitude
                    * x.iter()
                        .zip(lengths)
                        .map(|(a, l)| (PI * a / l).sin())
                        .product::<f64>(),
            ),
            Self::File { .. } | Self::Matrix { .. } => None,
        }
    }

    pub fn sample(&self, key: &str, grid: Grid, base: &Path) -> Result<ScalarField, ConfigError> {
        if let Self::File { path } = self {
            let full = base.join(path);
            let field =
                load_field(&full).map_err(|e| invalid(key, format!("{}: {e}", full.display())))?;
            if *field.grid() != grid {
                return Err(invalid(
                    key,
                    format!("{} was written on a different grid", full.display()),
                ));
            }
            return Ok(field);
        }
        let lengths = grid.lengths();
        let mut failed = false;
        let field = ScalarField::from_fn(grid, |x| {
            self.eval(x, &lengths).unwrap_or_else(|| {
                failed = true;
                f64::NAN
            })
        });
        if failed {
            return Err(invalid(key, "not a scalar coefficient"));
        }
        Ok(field)
    }
}

fn default_a() -> Coefficient {
    Coefficient::constant(1.0)
}

fn default_zero() -> Coefficient {
    Coefficient::constant(0.0)
}

fn default_mu() -> Coefficient {
    Coefficient::constant(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    #[serde(default = "default_a")]
    pub a: Coefficient,
    #[serde(default = "default_zero")]
    pub c0: Coefficient,
    #[serde(default = "default_zero")]
    pub f: Coefficient,
    #[serde(default = "default_mu")]
    pub mu: Coefficient,
    /// Bounds `[lower, upper]` of a variable `mu`; taken from its samples
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_bounds: Option<[f64; 2]>,
}

impl Default for Coefficients {
    fn default() -> Self {
        Self {
            a: default_a(),
            c0: default_zero(),
            f: default_zero(),
            mu: default_mu(),
            mu_bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: f64,
    pub polish_tol: f64,
    pub max_iter: usize,
    pub newton_max_iter: usize,
    pub path_nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            tol: o.tol,
            polish_tol: o.polish_tol,
            max_iter: o.max_iter,
            newton_max_iter: o.newton_max_iter,
            path_nodes: o.path_nodes,
            rho: o.rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct GeneralSpec {
    pub h: HChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmsSpec {
    pub solution: ManufacturedSolution,
    /// Interior nodes per axis on each refinement level.
    pub levels: Vec<usize>,
}

impl Default for MmsSpec {
    fn default() -> Self {
        Self {
            solution: ManufacturedSolution::SineProduct { amplitude: 1.0 },
            levels: vec![15, 31, 63],
        }
    }
}

fn default_p() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Mode,
    pub grid: GridSpec,
    #[serde(default)]
    pub coefficients: Coefficients,
    /// Integrability exponent of `c0`.
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub general: GeneralSpec,
    #[serde(default)]
    pub mms: MmsSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Directory that relative file paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// The shipped multiplicity fixture.
pub const MULTIPLICITY_TOML: &str = include_str!("../configs/multiplicity.toml");

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => line_column(text, span.start),
                None => (0, 0),
            };
            ConfigError::Parse {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Reads and parses a config file without validating it.
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let cfg = Self::read(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn multiplicity_fixture() -> Self {
        Self::parse(MULTIPLICITY_TOML, Path::new("multiplicity.toml"))
            .expect("shipped fixture parses")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let dim = self.grid.counts.len();
        if !(1..=3).contains(&dim) {
            return Err(invalid("grid.counts", "needs 1 to 3 entries"));
        }
        if self.grid.counts.contains(&0) {
            return Err(invalid("grid.counts", "counts must be positive"));
        }
        if let Some(l) = &self.grid.lengths {
            if l.len() != dim || l.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(invalid(
                    "grid.lengths",
                    format!("needs {dim} positive lengths"),
                ));
            }
        }
        let c = &self.coefficients;
        for (key, coef) in [
            ("coefficients.a", &c.a),
            ("coefficients.c0", &c.c0),
            ("coefficients.f", &c.f),
            ("coefficients.mu", &c.mu),
        ] {
            coef.validate(key, dim, &self.base_dir)?;
        }
        if let Coefficient::Constant { value } = c.mu {
            if value == 0.0 {
                let message = if self.mode.needs_multiplicity() {
                    "multiplicity requires μ ≠ 0"
                } else {
                    "the gradient coupling μ must be nonzero"
                };
                return Err(invalid("coefficients.mu", message));
            }
        }
        if let Some([lo, hi]) = c.mu_bounds {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(invalid(
                    "coefficients.mu_bounds",
                    "needs 0 < lower <= upper",
                ));
            }
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(invalid("p", "must be a finite exponent >= 1"));
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.polish_tol > 0.0) {
            return Err(invalid("solver.tol", "tolerances must be positive"));
        }
        if s.path_nodes < 3 {
            return Err(invalid("solver.path_nodes", "needs at least 3 nodes"));
        }
        if let Some(rho) = s.rho {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(invalid("solver.rho", "must be positive"));
            }
        }
        if let HChoice::Clipped { q_max } = self.general.h {
            if !(q_max > 0.0 && q_max.is_finite()) {
                return Err(invalid("general.h.q_max", "must be positive"));
            }
        }
        if self.mode == Mode::Mms {
            if self.mms.levels.is_empty() || self.mms.levels.contains(&0) {
                return Err(invalid("mms.levels", "needs positive node counts"));
            }
            if let ManufacturedSolution::SineProduct { amplitude } = self.mms.solution {
                if !amplitude.is_finite() {
                    return Err(invalid("mms.solution.amplitude", "must be finite"));
                }
            }
            if !matches!(c.mu, Coefficient::Constant { .. }) {
                return Err(invalid("coefficients.mu", "mms needs a constant μ"));
            }
            if matches!(c.c0, Coefficient::File { .. }) {
                return Err(invalid("coefficients.c0", "mms needs an analytic c0"));
            }
            self.mms_diagonal()?;
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions {
            tol: s.tol,
            polish_tol: s.polish_tol,
            max_iter: s.max_iter,
            newton_max_iter: s.newton_max_iter,
            path_nodes: s.path_nodes,
            rho: s.rho,
            seed: self.seed,
        }
    }

    pub fn build_grid(&self) -> Result<Grid, ConfigError> {
        self.grid.build()
    }

    fn build_a(&self, grid: Grid) -> Result<MatrixField, ConfigError> {
        let key = "coefficients.a";
        match &self.coefficients.a {
            Coefficient::Matrix { rows } => {
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                MatrixField::constant(grid, &flat, None).map_err(|e| invalid(key, e.to_string()))
            }
            other => {
                let a = other.sample(key, grid, &self.base_dir)?;
                MatrixField::isotropic(&a).map_err(|e| invalid(key, e.to_string()))
            }
        }
    }

    fn build_coupling(&self, grid: Grid) -> Result<GradientCoupling, ConfigError> {
        let key = "coefficients.mu";
        let c = &self.coefficients;
        if let Coefficient::Constant { value } = c.mu {
            return Ok(GradientCoupling::Constant(value));
        }
        let values = c.mu.sample(key, grid, &self.base_dir)?.into_values();
        let [lo, hi] = c.mu_bounds.unwrap_or_else(|| {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            [lo, hi]
        });
        GradientCoupling::field(values, lo, hi).map_err(|e| invalid(key, e.to_string()))
    }

    pub fn build_problem(&self) -> Result<ProblemData, ConfigError> {
        let grid = self.build_grid()?;
        let c = &self.coefficients;
        let a = self.build_a(grid)?;
        let c0 = c.c0.sample("coefficients.c0", grid, &self.base_dir)?;
        let f = c.f.sample("coefficients.f", grid, &self.base_dir)?;
        let coupling = self.build_coupling(grid)?;
        ProblemData::new(a, c0, f, coupling, self.p)
            .map_err(|e| invalid("coefficients", e.to_string()))
    }

    /// Diagonal of the constant `A` used by the manufactured solutions.
    pub fn mms_diagonal(&self) -> Result<Vec<f64>, ConfigError> {
        let dim = self.grid.counts.len();
        match &self.coefficients.a {
            Coefficient::Constant { value } => Ok(vec![*value; dim]),
            Coefficient::Matrix { rows } => {
                let off = (0..dim).any(|i| (0..dim).any(|j| i != j && rows[i][j] != 0.0));
                if off {
                    return Err(invalid("coefficients.a", "mms needs a diagonal A"));
                }
                Ok((0..dim).map(|i| rows[i][i]).collect())
            }
            _ => Err(invalid("coefficients.a", "mms needs a constant A")),
        }
    }

    /// Refinement grids of the manufactured-solution study.
    pub fn mms_grids(&self) -> Result<Vec<Grid>, ConfigError> {
        let lengths = self.grid.lengths();
        self.mms
            .levels
            .iter()
            .map(|&n| {
                Grid::from_lengths(&vec![n; lengths.len()], &lengths)
                    .map_err(|e| invalid("mms.levels", e.to_string()))
            })
            .collect()
    }
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let cfg = ExperimentConfig::parse(text, Path::new("test.toml"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse("mode = \"check\"\n[grid]\ncounts = [31]\n").unwrap();
        assert_eq!(cfg.mode, Mode::Check);
        assert_eq!(cfg.coefficients, Coefficients::default());
        assert_eq!(cfg.p, 2.0);
        assert_eq!(cfg.solver, SolverSpec::default());
        assert_eq!(cfg.solver.path_nodes, 21);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.grid.lengths(), vec![1.0]);
    }

    #[test]
    fn zero_coupling_is_rejected_for_multiplicity() {
        let text = "mode = \"solve-both\"\n[grid]\ncounts = [9, 9]\n[coefficients]\nmu = { kind = \"constant\", value = 0.0 }\n";
        let err = parse(text).unwrap_err();
        assert!(
            err.to_string().contains("multiplicity requires μ ≠ 0"),
            "{err}"
        );
    }

    #[test]
    fn unknown_key_is_named_with_location() {
        let text = "mode = \"check\"\nmu_typo = 1.0\n[grid]\ncounts = [9]\n";
        let err = parse(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mu_typo"), "{msg}");
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{msg}");
    }

    #[test]
    fn shipped_fixture_is_valid() {
        let cfg = ExperimentConfig::multiplicity_fixture();
        cfg.validate().unwrap();
        assert_eq!(cfg.mode, Mode::SolveBoth);
        assert_eq!(cfg.grid.counts, vec![65, 65]);
        let data = cfg.build_problem().unwrap();
        assert_eq!(data.coupling, GradientCoupling::Constant(1.0));
    }

    #[test]
    fn line_column_counts_from_one() {
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
        assert_eq!(line_column("ab", 0), (1, 1));
    }
}
