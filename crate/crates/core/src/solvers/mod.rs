//! Linear solves, the two variational solvers, Newton polishing, the
//! two-solution pipeline, the bracketed solver for the general equation and
//! the manufactured-solution harness.

mod descent;
mod general;
mod linear;
mod mms;
mod mountain;
mod newton;
mod pipeline;
pub mod props;
mod uequation;

pub use descent::{default_rho, minimize_local};
pub use general::{build_bracket, solve_general, Bracket, HChoice};
pub use linear::solve_linear;
pub use mms::{mms_convergence, ManufacturedSolution, MmsLevel};
pub use mountain::{mountain_pass, MountainPassRun, PathState};
pub use newton::newton_transformed;
pub use pipeline::{solve_model_both, solve_model_min, BothSolutions, MinSolution};
pub use uequation::{u_residual, u_residual_centered, u_residual_norm};

use serde::Serialize;
use thiserror::Error;

use crate::energy::EnergyError;
use crate::grid::{GridError, ScalarField};
use crate::linalg::LinalgError;
use crate::nonlinearity::NonlinearityError;
use crate::problem::ProblemError;

/// Which solver produced a [`SolveResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveKind {
    LocalMin,
    MountainPass,
    Newton,
    Bracketed,
    Linear,
}

/// One line of a convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub energy: f64,
    /// `(1 + |v|) * residual`.
    pub cerami: f64,
}

/// A computed field together with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub kind: SolveKind,
    /// Transformed unknown, when the solver works on it.
    #[serde(skip)]
    pub v: Option<ScalarField>,
    /// Original unknown; set only after the lower-bound certificate held.
    #[serde(skip)]
    pub u: Option<ScalarField>,
    pub iterations: usize,
    pub residual_norm: f64,
    pub energy: Option<f64>,
    pub min_v: Option<f64>,
    pub converged: bool,
    pub lower_bound_ok: Option<bool>,
    pub bracket_ok: Option<bool>,
    #[serde(skip)]
    pub log: Vec<IterationRecord>,
}

impl SolveResult {
    pub(crate) fn new(kind: SolveKind) -> Self {
        Self {
            kind,
            v: None,
            u: None,
            iterations: 0,
            residual_norm: f64::NAN,
            energy: None,
            min_v: None,
            converged: false,
            lower_bound_ok: None,
            bracket_ok: None,
            log: Vec::new(),
        }
    }

    /// The transformed field; panics for results that carry none.
    pub fn v(&self) -> &ScalarField {
        self.v.as_ref().expect("result carries no v field")
    }

    /// The original unknown; panics for results that carry none.
    pub fn u(&self) -> &ScalarField {
        self.u.as_ref().expect("result carries no u field")
    }
}

/// Tunables shared by the solvers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Acceptance threshold on the scaled residual.
    pub tol: f64,
    /// Target of the final Newton polish.
    pub polish_tol: f64,
    /// Descent iterations (local minimization) or sweeps (mountain pass).
    pub max_iter: usize,
    pub newton_max_iter: usize,
    /// Path resolution `P` of the mountain-pass search.
    pub path_nodes: usize,
    /// Radius of the ball around 0; `None` selects [`default_rho`].
    pub rho: Option<f64>,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            polish_tol: 1e-12,
            max_iter: 20_000,
            newton_max_iter: 100,
            path_nodes: 21,
            rho: None,
            seed: 0,
        }
    }
}

/// Pipeline stage a failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Normalize,
    Check,
    Rho,
    LocalMin,
    FindV0,
    MountainPass,
    Certificate,
    Transform,
    Bracket,
    General,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Normalize => "normalize",
            Self::Check => "check",
            Self::Rho => "rho",
            Self::LocalMin => "local-min",
            Self::FindV0 => "find-v0",
            Self::MountainPass => "mountain-pass",
            Self::Certificate => "certificate",
            Self::Transform => "transform",
            Self::Bracket => "bracket",
            Self::General => "general",
        };
        f.write_str(s)
    }
}

/// Coarse failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureClass {
    Hypothesis,
    Geometry,
    Solver,
    Certificate,
    Input,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error("operator is not coercive: lambda = {lambda:.6e} <= 0")]
    NotCoercive { lambda: f64 },
    #[error("hypotheses failed: {0}")]
    Hypotheses(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("line search failed at iteration {iteration} (residual {residual:.3e})")]
    LineSearch { iteration: usize, residual: f64 },
    #[error("ball constraint |v| <= {rho:.6e} is active at termination; rho is too small")]
    ProjectionActive { rho: f64 },
    #[error("path collapsed: highest energy sits at an endpoint (sweep {sweep})")]
    PathCollapse { sweep: usize },
    #[error("mountain-pass point coincides with the minimizer (separation {separation:.3e})")]
    NotDistinct { separation: f64 },
    #[error("energy on the sampled sphere |v| = {rho:.6e} is not positive (min {min:.6e})")]
    SphereNotPositive { rho: f64, min: f64 },
    #[error("postcondition failed: {0}")]
    Postcondition(String),
    #[error("lower-bound certificate failed: min v = {min_v:.6e} <= -1/(2 mu) = {bound:.6e}")]
    Certificate { min_v: f64, bound: f64 },
    #[error("{which} inequality violated at node {node} (residual {residual:.3e})")]
    BracketViolation {
        which: &'static str,
        node: usize,
        residual: f64,
    },
    #[error("manufactured solution needs {0}")]
    Mms(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<SolverError>,
    },
}

impl SolverError {
    pub(crate) fn at(self, stage: Stage) -> Self {
        match self {
            Self::Stage { .. } => self,
            other => Self::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Self::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    pub fn class(&self) -> FailureClass {
        match self {
            Self::Stage { source, .. } => source.class(),
            Self::Hypotheses(_) | Self::NotCoercive { .. } => FailureClass::Hypothesis,
            Self::Energy(EnergyError::GeometryNotFound { .. }) => FailureClass::Geometry,
            Self::PathCollapse { .. } | Self::SphereNotPositive { .. } => FailureClass::Geometry,
            Self::Certificate { .. } => FailureClass::Certificate,
            Self::Nonlinearity(NonlinearityError::DomainViolation { .. }) => {
                FailureClass::Certificate
            }
            Self::Problem(_) | Self::Grid(_) | Self::Mms(_) => FailureClass::Input,
            Self::Energy(EnergyError::Problem(_)) => FailureClass::Input,
            _ => FailureClass::Solver,
        }
    }
}

pub(crate) fn l2_slice(v: &[f64], vol: f64) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * vol).sqrt()
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
