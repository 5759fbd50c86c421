//! Mode dispatch and output emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use noncoercive_core::energy::check_hypotheses;
use noncoercive_core::grid::io::{save_field, write_field_csv};
use noncoercive_core::nonlinearity::sign_normalize;
use noncoercive_core::solvers::{
    mms_convergence, props, solve_general, solve_model_both, solve_model_min, FailureClass,
    IterationRecord, SolverError,
};
use noncoercive_core::{Grid, HypothesisReport, ProblemData, ScalarField};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, Mode};
use crate::manifest::{Artifact, RunManifest, Status};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const HYPOTHESIS: i32 = 3;
    pub const GEOMETRY: i32 = 4;
    pub const SOLVER: i32 = 5;
    pub const CERTIFICATE: i32 = 6;
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("hypotheses failed: {0}")]
    Hypotheses(String),
    #[error("property checks failed: {0}")]
    Props(String),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl RunError {
    /// The message without the stage prefix, which is reported separately.
    pub fn detail(&self) -> String {
        match self {
            Self::Solver(SolverError::Stage { source, .. }) => source.to_string(),
            other => other.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => exit::INPUT,
            Self::Hypotheses(_) => exit::HYPOTHESIS,
            Self::Props(_) => exit::SOLVER,
            Self::Output { .. } => exit::OTHER,
            Self::Solver(e) => match e.class() {
                FailureClass::Hypothesis => exit::HYPOTHESIS,
                FailureClass::Geometry => exit::GEOMETRY,
                FailureClass::Solver => exit::SOLVER,
                FailureClass::Certificate => exit::CERTIFICATE,
                FailureClass::Input => exit::INPUT,
            },
        }
    }
}

/// Result of [`run`]; the manifest is on disk in either case.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub error: Option<RunError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code
    }
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    out: &'a Path,
    manifest: RunManifest,
    stage: &'static str,
    files: Vec<String>,
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

impl<'a> Runner<'a> {
    fn timed<T>(
        &mut self,
        stage: &'static str,
        f: impl FnOnce(&mut Self) -> Result<T, RunError>,
    ) -> Result<T, RunError> {
        self.stage = stage;
        let clock = Instant::now();
        let out = f(self);
        let seconds = clock.elapsed().as_secs_f64();
        *self
            .manifest
            .wall_times
            .entry(stage.to_string())
            .or_insert(0.0) += seconds;
        log::info!("{stage}: {seconds:.3} s");
        out
    }

    fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.out.join(name)
    }

    fn field(&mut self, name: &str, field: &ScalarField) -> Result<(), RunError> {
        let bin = self.path(&format!("{name}.field"));
        save_field(&bin, field).map_err(|e| output_error(&bin, e))?;
        let csv = self.path(&format!("{name}.csv"));
        let file = File::create(&csv).map_err(|e| output_error(&csv, e))?;
        let mut w = BufWriter::new(file);
        write_field_csv(&mut w, field)
            .and_then(|_| w.flush())
            .map_err(|e| output_error(&csv, e))
    }

    fn csv<R: IntoIterator<Item = Vec<String>>>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: R,
    ) -> Result<(), RunError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| output_error(&path, e))?;
        w.write_record(header).map_err(|e| output_error(&path, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| output_error(&path, e))?;
        }
        w.flush().map_err(|e| output_error(&path, e))
    }

    fn log(&mut self, name: &str, log: &[IterationRecord]) -> Result<(), RunError> {
        let rows = log.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                num(r.residual),
                num(r.energy),
                num(r.cerami),
            ]
        });
        self.csv(name, &["iteration", "residual", "energy", "cerami"], rows)
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| output_error(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| output_error(&path, e))
    }

    fn summary(&mut self, key: &str, value: impl Serialize) {
        self.manifest
            .summary
            .insert(key.to_string(), to_value(&value));
    }

    fn problem(&mut self) -> Result<ProblemData, RunError> {
        let config = self.config;
        self.timed("build", |_| Ok(config.build_problem()?))
    }

    /// Hypothesis check on the sign-normalized problem; writes
    /// `report.json` and fails when any hypothesis is violated.
    fn check(&mut self, data: &ProblemData) -> Result<HypothesisReport, RunError> {
        self.timed("check", |r| {
            let (normalized, flip) = sign_normalize(data).map_err(SolverError::from)?;
            let report = check_hypotheses(&normalized).map_err(SolverError::from)?;
            r.summary("flip", flip);
            r.manifest.report = Some(to_value(&report));
            r.json("report.json", &report)?;
            let failed: Vec<&str> = [
                ("h1", report.h1_ok),
                ("h2", report.h2_ok),
                ("h2prime", report.h2prime_ok),
                ("coercive", report.coercive_ok),
            ]
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(name, _)| *name)
            .collect();
            if failed.is_empty() {
                Ok(report)
            } else {
                Err(RunError::Hypotheses(failed.join(", ")))
            }
        })
    }

    fn dispatch(&mut self) -> Result<(), RunError> {
        match self.config.mode {
            Mode::Check => {
                let data = self.problem()?;
                self.check(&data).map(|_| ())
            }
            Mode::SolveMin => self.solve_min(),
            Mode::SolveMp | Mode::SolveBoth => self.solve_both(),
            Mode::SolveGeneral => self.solve_general(),
            Mode::Mms => self.mms(),
            Mode::Props => self.props(),
        }
    }

    fn solve_min(&mut self) -> Result<(), RunError> {
        let data = self.problem()?;
        self.check(&data)?;
        let opts = self.config.solver_options();
        let sol = self.timed("solve", |_| Ok(solve_model_min(&data, &opts)?))?;
        self.timed("write", |r| {
            r.manifest.results.insert("min".into(), to_value(&sol.min));
            r.summary("rho", sol.rho);
            r.summary("sup_u_min", sol.sup_u);
            r.field("v_min", sol.min.v())?;
            r.field("u_min", sol.min.u())?;
            r.log("log_min.csv", &sol.min.log)
        })
    }

    fn solve_both(&mut self) -> Result<(), RunError> {
        let data = self.problem()?;
        self.check(&data)?;
        let opts = self.config.solver_options();
        let both = self.timed("solve", |_| Ok(solve_model_both(&data, &opts)?))?;
        let with_min = self.config.mode == Mode::SolveBoth;
        self.timed("write", |r| {
            r.manifest.results.insert("min".into(), to_value(&both.min));
            r.manifest.results.insert("mp".into(), to_value(&both.mp));
            r.summary("rho", both.rho);
            r.summary("sphere_min", both.sphere_min);
            r.summary("v0", &both.v0);
            r.summary("separation", both.separation);
            r.summary("distinct", true);
            r.summary("sup_u_min", both.sup_u_min);
            r.summary("sup_u_mp", both.sup_u_mp);
            if with_min {
                r.field("v_min", both.min.v())?;
                r.field("u_min", both.min.u())?;
                r.log("log_min.csv", &both.min.log)?;
            }
            r.field("v_mp", both.mp.v())?;
            r.field("u_mp", both.mp.u())?;
            r.log("log_mp.csv", &both.mp.log)?;
            let ray = both.ray.iter().map(|(t, e)| vec![num(*t), num(*e)]);
            r.csv("ray.csv", &["t", "energy"], ray)?;
            let mut profiles = both.profiles.clone();
            profiles.push(both.path.energies.clone());
            let rows = profiles.iter().enumerate().flat_map(|(sweep, energies)| {
                energies
                    .iter()
                    .enumerate()
                    .map(move |(node, e)| vec![sweep.to_string(), node.to_string(), num(*e)])
            });
            r.csv("path_profiles.csv", &["sweep", "node", "energy"], rows)?;
            let fields = [
                ("u_min", both.min.u()),
                ("u_mp", both.mp.u()),
                ("v_min", both.min.v()),
                ("v_mp", both.mp.v()),
            ];
            cross_section(r, &fields)
        })
    }

    fn solve_general(&mut self) -> Result<(), RunError> {
        let data = self.problem()?;
        let opts = self.config.solver_options();
        let choice = self.config.general.h;
        let (result, bracket) =
            self.timed("solve", |_| Ok(solve_general(&data, choice, &opts)?))?;
        self.timed("write", |r| {
            r.manifest
                .results
                .insert("general".into(), to_value(&result));
            r.manifest
                .results
                .insert("extremal".into(), to_value(&bracket.extremal));
            r.summary("slope", bracket.slope);
            r.summary("bracket_ok", result.bracket_ok);
            r.summary("sup_u", result.u().max_abs());
            r.field("u_general", result.u())?;
            r.field("u_upper", &bracket.upper)?;
            r.field("u_lower", &bracket.lower)?;
            r.log("log_general.csv", &result.log)
        })
    }

    fn mms(&mut self) -> Result<(), RunError> {
        let config = self.config;
        let grids = config.mms_grids()?;
        let a_diag = config.mms_diagonal()?;
        let mu = match config.coefficients.mu {
            crate::config::Coefficient::Constant { value } => value,
            _ => unreachable!("validated"),
        };
        let lengths = config.grid.lengths();
        let c0 = config.coefficients.c0.clone();
        let levels = self.timed("solve", |_| {
            let c0 = |x: &[f64]| c0.eval(x, &lengths).unwrap_or(f64::NAN);
            Ok(mms_convergence(
                &config.mms.solution,
                mu,
                &a_diag,
                c0,
                &grids,
            )?)
        })?;
        self.timed("write", |r| {
            let min_order = levels
                .iter()
                .filter_map(|l| l.order)
                .fold(f64::INFINITY, f64::min);
            r.summary(
                "min_order",
                if min_order.is_finite() {
                    Some(min_order)
                } else {
                    None
                },
            );
            r.manifest.results.insert("mms".into(), to_value(&levels));
            let rows = levels.iter().map(|l| {
                vec![
                    l.n.to_string(),
                    num(l.h),
                    num(l.error),
                    l.order.map(num).unwrap_or_default(),
                    l.newton_iterations.to_string(),
                ]
            });
            r.csv(
                "mms.csv",
                &["n", "h", "error", "order", "newton_iterations"],
                rows,
            )
        })
    }

    fn props(&mut self) -> Result<(), RunError> {
        let seed = self.config.seed;
        let checks = self.timed("solve", |_| Ok(props::run_all(seed)))?;
        self.timed("write", |r| {
            let rows = checks.iter().map(|c| {
                vec![
                    c.name.to_string(),
                    if c.passed { "pass" } else { "fail" }.to_string(),
                    c.detail.clone(),
                ]
            });
            r.csv("props.csv", &["property", "status", "detail"], rows)?;
            let failed: Vec<&str> = checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name)
                .collect();
            r.summary("checks", checks.len());
            r.summary("failed", &failed);
            if failed.is_empty() {
                Ok(())
            } else {
                Err(RunError::Props(failed.join(", ")))
            }
        })
    }

    fn finish(mut self, result: Result<(), RunError>) -> RunOutcome {
        let error = match result {
            Ok(()) => None,
            Err(e) => {
                let stage = match &e {
                    RunError::Solver(s) => s.stage().map(|st| st.to_string()),
                    _ => None,
                };
                self.manifest.status = Status::Failed;
                self.manifest.exit_code = e.exit_code();
                self.manifest.failed_stage = Some(stage.unwrap_or_else(|| self.stage.to_string()));
                self.manifest.error = Some(e.detail());
                Some(e)
            }
        };
        for name in &self.files {
            if let Ok(a) = Artifact::of(self.out, name) {
                self.manifest.artifacts.push(a);
            }
        }
        let error = match (self.manifest.write(self.out), error) {
            (Err(e), None) => {
                let e = output_error(self.out, e);
                self.manifest.status = Status::Failed;
                self.manifest.exit_code = e.exit_code();
                Some(e)
            }
            (_, error) => error,
        };
        RunOutcome {
            manifest: self.manifest,
            error,
        }
    }
}

/// Shortest round-tripping scientific notation.
fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Values along the line through the domain centre parallel to the first
/// axis.
fn cross_section(r: &mut Runner, fields: &[(&str, &ScalarField)]) -> Result<(), RunError> {
    let grid: Grid = *fields[0].1.grid();
    let mid: Vec<usize> = (0..grid.dim()).map(|d| grid.count(d) / 2).collect();
    let mut header = vec!["x"];
    header.extend(fields.iter().map(|(name, _)| *name));
    let rows: Vec<Vec<String>> = (0..grid.count(0))
        .map(|i| {
            let mut multi = mid.clone();
            multi[0] = i;
            let node = grid.index(&multi);
            let mut row = vec![num(grid.coords(node)[0])];
            row.extend(fields.iter().map(|(_, f)| num(f.values()[node])));
            row
        })
        .collect();
    r.csv("cross_section.csv", &header, rows)
}

/// Runs the configured mode, writing every output and the manifest under
/// `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> RunOutcome {
    let mut runner = Runner {
        config,
        out,
        manifest: RunManifest::new(config.mode, Some(config.clone())),
        stage: "setup",
        files: Vec::new(),
    };
    let result = std::fs::create_dir_all(out)
        .map_err(|e| output_error(out, e))
        .and_then(|_| runner.dispatch());
    runner.finish(result)
}

/// Records a run that failed before a config was available.
pub fn fail_early(mode: Mode, out: &Path, error: RunError) -> RunOutcome {
    let mut manifest = RunManifest::new(mode, None);
    manifest.status = Status::Failed;
    manifest.exit_code = error.exit_code();
    manifest.failed_stage = Some("config".to_string());
    manifest.error = Some(error.detail());
    if let Err(e) = manifest.write(out) {
        log::warn!("cannot write manifest to {}: {e}", out.display());
    }
    RunOutcome {
        manifest,
        error: Some(error),
    }
}
