//! Window-by-window construction of solutions to Volterra operator equations.
//!
//! An operator `Ψ` acting on grid-sampled trajectories is solved on
//! successive windows `[t_k, t_k + δ_k]`. Each window length comes from a
//! contraction estimate (`lipschitz_bound(r) · kernel_mass(window) ≤ q`),
//! each window is solved by Picard iteration with all earlier values frozen,
//! and the loop stops when the horizon is reached, the step collapses or the
//! solution norm crosses the blow-up threshold.
//!
//! All norms are sup-over-time of sup-over-space of the component max-norm.

mod causality;
mod extend;
mod picard;
mod step;
mod trajectory;

use std::ops::Range;

use thiserror::Error;

pub use causality::{check_volterra_property, CausalityCheck, CausalityReport, LookaheadIntegral};
pub use extend::extend_solution;
pub use picard::{picard_solve_window, WindowSolution};
pub use step::{estimate_step, ContractionEstimate, StepLadder};
pub use trajectory::{extend_window, restrict_window, FieldState, TimeGrid, Trajectory};

use crate::field::ModelError;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("window [{start}, {end}] lies outside the trajectory span [{span_start}, {span_end}]")]
    OutOfRange {
        start: f64,
        end: f64,
        span_start: f64,
        span_end: f64,
    },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("step collapse at t = {at}: smallest step {delta} still gives q = {q}")]
    StepCollapse { at: f64, delta: f64, q: f64 },
    #[error("Picard iteration on the window starting at t = {start} did not converge after {iterations} iterations (last difference {last_difference:e})")]
    NonConvergence {
        start: f64,
        iterations: usize,
        last_difference: f64,
    },
    #[error("non-finite value produced by the operator near t = {at}")]
    NonFinite { at: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A time interval `[start, start + length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub length: f64,
}

impl TimeWindow {
    pub fn new(start: f64, length: f64) -> Self {
        Self { start, length }
    }

    pub fn end(&self) -> f64 {
        self.start + self.length
    }
}

/// Operator handle consumed by the extension loop.
///
/// `apply` evaluates `(Ψy)(t_j)` for every node `j` in `nodes`, writing
/// `state_len()` values per node into `out`. The trajectory `y` always holds
/// at least `nodes.end` states. Nodes below `frozen` are guaranteed not to
/// change for the lifetime of `cache`, so implementations may memoise work
/// that depends only on them.
pub trait VolterraOperator: Sync {
    type Cache: Send;

    /// Left end `a` of the solution interval.
    fn origin(&self) -> f64;

    fn state_len(&self) -> usize;

    fn new_cache(&self) -> Self::Cache;

    fn apply(
        &self,
        y: &Trajectory,
        frozen: usize,
        nodes: Range<usize>,
        cache: &mut Self::Cache,
        out: &mut [f64],
    ) -> Result<(), SolverError>;

    /// Local Lipschitz constant of the nonlinearity on the ball of radius `r`.
    fn lipschitz_bound(&self, radius: f64) -> f64;

    /// Sup over `t` in the window of `∫_{start}^{t} ∫ |W| dy ds`.
    fn kernel_mass(&self, window: TimeWindow) -> f64;

    /// Positive lower bound on the delay, when the operator is τ-Volterra.
    fn delay_floor(&self) -> Option<f64> {
        None
    }
}

/// Evaluates the operator on every node of `y` with a fresh cache.
pub fn apply_full<O: VolterraOperator + ?Sized>(op: &O, y: &Trajectory) -> Result<Trajectory, SolverError> {
    let mut out = vec![0.0; y.len() * y.width()];
    let mut cache = op.new_cache();
    op.apply(y, 0, 0..y.len(), &mut cache, &mut out)?;
    Ok(Trajectory::from_raw(y.origin(), y.step(), y.width(), out))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub q_target: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub delta_max: f64,
    pub delta_min: f64,
    pub blowup_norm_threshold: f64,
    pub time_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            q_target: 0.5,
            tol: 1e-8,
            max_iter: 200,
            delta_max: 1.0,
            delta_min: 2f64.powi(-20),
            blowup_norm_threshold: 1e4,
            time_step: 1e-2,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: &str| Err(SolverError::InvalidConfig(msg.to_string()));
        if !(self.q_target > 0.0 && self.q_target < 1.0) {
            return bad("q_target must lie in (0, 1)");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.delta_max > 0.0 && self.delta_max.is_finite()) {
            return bad("delta_max must be positive");
        }
        if !(self.delta_min > 0.0 && self.delta_min <= self.delta_max) {
            return bad("delta_min must lie in (0, delta_max]");
        }
        if !(self.blowup_norm_threshold > 0.0) {
            return bad("blowup_norm_threshold must be positive");
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return bad("time_step must be positive");
        }
        Ok(())
    }

    /// Candidate ladder for a grid with spacing `step`; candidates shorter
    /// than one grid step cannot be represented and are dropped.
    pub fn ladder(&self, step: f64) -> StepLadder {
        StepLadder::new(self.delta_max, self.delta_min.max(step))
    }
}

/// Grid-sampled solution restricted to one window.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSegment {
    pub window: TimeWindow,
    pub step: f64,
    pub samples: Vec<FieldState>,
    pub sup_norm: f64,
}

impl SolutionSegment {
    pub fn new(window: TimeWindow, step: f64, samples: Vec<FieldState>) -> Self {
        let sup_norm = samples.iter().map(FieldState::norm).fold(0.0, f64::max);
        Self {
            window,
            step,
            samples,
            sup_norm,
        }
    }

    pub fn last(&self) -> Option<&FieldState> {
        self.samples.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StallReason {
    /// Picard iteration kept failing after the step was halved to the floor.
    NonConvergence { at: f64 },
    /// The operator produced NaN or infinity.
    NonFinite { at: f64 },
    /// No admissible step, but the norm was not growing.
    StepCollapse { at: f64, q: f64 },
}

impl std::fmt::Display for StallReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StallReason::NonConvergence { at } => write!(f, "non-convergence at t={at}"),
            StallReason::NonFinite { at } => write!(f, "non-finite values at t={at}"),
            StallReason::StepCollapse { at, q } => {
                write!(f, "step collapse without norm growth at t={at} (q={q})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeKind {
    Global { t_end: f64 },
    /// `zeta_hat` is the end of the last completed window: a lower estimate
    /// of the true blow-up time.
    MaximallyExtended { zeta_hat: f64, final_norm: f64 },
    Stalled { reason: StallReason },
}

impl OutcomeKind {
    pub fn label(&self) -> &'static str {
        match self {
            OutcomeKind::Global { .. } => "global",
            OutcomeKind::MaximallyExtended { .. } => "maximally_extended",
            OutcomeKind::Stalled { .. } => "stalled",
        }
    }

    pub fn is_global(&self) -> bool {
        matches!(self, OutcomeKind::Global { .. })
    }

    pub fn zeta_hat(&self) -> Option<f64> {
        match self {
            OutcomeKind::MaximallyExtended { zeta_hat, .. } => Some(*zeta_hat),
            _ => None,
        }
    }
}

/// Per-window record of the extension loop.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDiagnostics {
    pub start: f64,
    pub delta: f64,
    pub q: f64,
    pub radius: f64,
    pub iterations: usize,
    /// Largest observed `‖u_{k+1} − u_k‖ / ‖u_k − u_{k−1}‖`.
    pub max_ratio: f64,
    /// Number of times the step was halved before the window was accepted.
    pub retries: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionOutcome {
    pub kind: OutcomeKind,
    pub segments: Vec<SolutionSegment>,
    pub diagnostics: Vec<WindowDiagnostics>,
    /// Human-readable log of rejected windows and step halvings.
    pub events: Vec<String>,
}

impl SolutionOutcome {
    /// Concatenates the segments, dropping the duplicated shared endpoints.
    pub fn trajectory(&self) -> Option<Trajectory> {
        let first = self.segments.first()?.samples.first()?;
        let step = self.segments[0].step;
        let mut traj = Trajectory::new(first.time, step, first.values.len());
        for (k, seg) in self.segments.iter().enumerate() {
            let skip = usize::from(k > 0);
            for s in seg.samples.iter().skip(skip) {
                traj.push(&s.values);
            }
        }
        Some(traj)
    }

    pub fn end_time(&self) -> Option<f64> {
        self.segments.last().map(|s| s.window.end())
    }

    pub fn sup_norm(&self) -> f64 {
        self.segments.iter().map(|s| s.sup_norm).fold(0.0, f64::max)
    }

    pub fn max_ratio(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.max_ratio).fold(0.0, f64::max)
    }

    pub fn max_iterations(&self) -> usize {
        self.diagnostics.iter().map(|d| d.iterations).max().unwrap_or(0)
    }
}
