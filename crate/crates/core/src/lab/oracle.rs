use std::f64::consts::PI;
use std::sync::Arc;

use super::example21::{secant_squared, three_piece, SquaredIntegral, StepsSolution};
use crate::field::{
    normal_density, DelayField, FieldModel, FieldOperator, FiringRate, Kernel, ModelError, Prehistory,
    QuadratureRule, SpatialGrid, SpatialKernel, TemporalKernel,
};
use crate::volterra::{
    apply_full, extend_solution, OutcomeKind, SolutionOutcome, SolverConfig, SolverError, Trajectory,
};

/// Scenarios with a known solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioOracle {
    /// `y = Φ(y, λ)`; `sec² t` for `λ = 0`, method-of-steps polynomials otherwise.
    Example21 { lambda: f64 },
    /// The first three explicit pieces of the delayed solution.
    PiecewiseExample21 { lambda: f64 },
    /// Memory equation with `u = V exp(−e^{−t}) g(x)` for every `V`.
    Example31 { amplitude: f64 },
    /// `u ≡ value`: zero kernel for `value ≠ 0`, Hill rate with zero history otherwise.
    ZeroField { value: f64 },
}

impl ScenarioOracle {
    pub fn name(&self) -> String {
        match self {
            Self::Example21 { lambda } => format!("example21(lambda={lambda})"),
            Self::PiecewiseExample21 { lambda } => format!("piecewise_example21(lambda={lambda})"),
            Self::Example31 { amplitude } => format!("example31(V={amplitude})"),
            Self::ZeroField { value } => format!("zero_field(value={value})"),
        }
    }

    /// Known blow-up time.
    pub fn blow_up_time(&self) -> Option<f64> {
        match self {
            Self::Example21 { lambda } if *lambda == 0.0 => Some(PI / 2.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub scenario: String,
    /// Solver outcome for scenarios that are solved.
    pub outcome: Option<SolutionOutcome>,
    /// Named measurements, in report order.
    pub metrics: Vec<(String, f64)>,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Closed-form solution of the memory scenario.
pub fn example31_solution(amplitude: f64, width: f64, t: f64, x: f64) -> f64 {
    amplitude * (-(-t).exp()).exp() * normal_density(x, width)
}

/// Resolution of the memory scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example31Setup {
    pub width: f64,
    /// Time window `[start, end]` on which the residual is measured.
    pub start: f64,
    pub end: f64,
    pub time_step: f64,
    pub spatial_step: f64,
    /// Ω is truncated to `|x| ≤ truncation · width`.
    pub truncation: f64,
}

impl Default for Example31Setup {
    fn default() -> Self {
        Self {
            width: 1.0,
            start: -3.0,
            end: 3.0,
            time_step: 0.05,
            spatial_step: 0.2,
            truncation: 6.0,
        }
    }
}

impl Example31Setup {
    pub fn refined(&self) -> Self {
        Self {
            time_step: self.time_step / 2.0,
            spatial_step: self.spatial_step / 2.0,
            ..*self
        }
    }

    /// `W = e^{−s} g(x)`, `f = id`, `τ = 0`, history given by the closed form.
    pub fn model(&self, amplitude: f64) -> Result<FieldModel, ModelError> {
        let radius = self.truncation * self.width;
        let count = (2.0 * radius / self.spatial_step).round() as usize + 1;
        let grid = SpatialGrid::truncated_line(radius, count, QuadratureRule::Trapezoid)?;
        let width = self.width;
        let phi = Prehistory::from_fn(
            1,
            "closed form",
            Arc::new(move |xi, x, out: &mut [f64]| out[0] = example31_solution(amplitude, width, xi, x[0])),
        )
        .with_decay(true);
        FieldModel::new(
            self.start,
            grid,
            Kernel::scalar(TemporalKernel::TimeDecay { rate: 1.0 }, SpatialKernel::Profile { amplitude: 1.0, width }),
            vec![FiringRate::Identity],
            DelayField::Zero,
            phi,
        )
    }

    /// `sup |F(u) − u|` for the closed form `u` with amplitude `V`.
    pub fn residual(&self, amplitude: f64) -> Result<f64, SolverError> {
        let model = self.model(amplitude)?;
        let op = FieldOperator::new(model, self.time_step, self.end)?;
        let grid = *op.time_grid();
        let sg = op.model().grid().clone();
        let u = Trajectory::from_fn(&grid, sg.len(), |t, state| {
            for (k, v) in state.iter_mut().enumerate() {
                *v = example31_solution(amplitude, self.width, t, sg.point_at(k)[0]);
            }
        });
        let image = apply_full(&op, &u)?;
        Ok(image
            .as_slice()
            .iter()
            .zip(u.as_slice())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

fn zero_field_model(value: f64) -> Result<FieldModel, ModelError> {
    let grid = SpatialGrid::interval(-2.0, 2.0, 41, QuadratureRule::Trapezoid)?;
    let hill = FiringRate::Hill { steepness: 2.0, threshold: 0.5 };
    if value == 0.0 {
        FieldModel::new(
            0.0,
            grid,
            Kernel::scalar(TemporalKernel::Exponential { rate: 1.0 }, SpatialKernel::mexican_hat(2.0, 1.0, 2.0, 1.0)?),
            vec![hill],
            DelayField::Transmission { velocity: 2.0 },
            Prehistory::zero(1),
        )
    } else {
        FieldModel::new(0.0, grid, Kernel::zero(1), vec![hill], DelayField::Zero, Prehistory::constant(vec![value]))
    }
}

fn relative_error(outcome: &SolutionOutcome, exact: impl Fn(f64) -> Option<f64>, until: f64) -> f64 {
    let Some(traj) = outcome.trajectory() else {
        return f64::INFINITY;
    };
    (0..traj.len())
        .map(|j| (traj.time(j), traj.state(j)[0]))
        .take_while(|(t, _)| *t <= until + 1e-12)
        .filter_map(|(t, v)| exact(t).map(|e| (v - e).abs() / e.abs().max(1.0)))
        .fold(0.0, f64::max)
}

/// Solves or evaluates `oracle` and compares against its closed form.
pub fn verify_oracle(oracle: &ScenarioOracle, cfg: &SolverConfig) -> Result<OracleReport, SolverError> {
    let mut metrics = Vec::new();
    let report = |outcome, metrics, max_error, tolerance, passed| OracleReport {
        scenario: oracle.name(),
        outcome,
        metrics,
        max_error,
        tolerance,
        passed,
    };
    match *oracle {
        ScenarioOracle::Example21 { lambda: 0.0 } => {
            let outcome = extend_solution(&SquaredIntegral::new(0.0), PI, cfg)?;
            let err = relative_error(&outcome, |t| Some(secant_squared(t)), 1.2);
            let zeta = outcome.kind.zeta_hat();
            metrics.push(("max_relative_error_0_1.2".into(), err));
            metrics.push(("zeta_hat".into(), zeta.unwrap_or(f64::NAN)));
            metrics.push(("max_ratio".into(), outcome.max_ratio()));
            let passed = err <= 1e-3 && zeta.is_some_and(|z| (1.45..=PI / 2.0).contains(&z));
            Ok(report(Some(outcome), metrics, err, 1e-3, passed))
        }
        ScenarioOracle::Example21 { lambda } => {
            if !(lambda > 0.0 && lambda <= PI) {
                return Err(SolverError::InvalidConfig(format!("lambda {lambda} outside [0, pi]")));
            }
            let outcome = extend_solution(&SquaredIntegral::new(lambda), PI, cfg)?;
            let exact = StepsSolution::new(lambda, PI, 1 << 14);
            let err = match &exact {
                Some(sol) => relative_error(&outcome, |t| sol.value(t), PI),
                None => f64::NAN,
            };
            let traj = outcome.trajectory();
            if let Some(v) = traj.as_ref().and_then(|t| t.value_at(1.2, 0)) {
                metrics.push(("y(1.2)".into(), v));
            }
            metrics.push(("max_relative_error".into(), err));
            metrics.push(("max_iterations".into(), outcome.max_iterations() as f64));
            let passed = outcome.kind.is_global() && err <= 1e-3 && outcome.max_iterations() <= 2;
            Ok(report(Some(outcome), metrics, err, 1e-3, passed))
        }
        ScenarioOracle::PiecewiseExample21 { lambda } => {
            if !(lambda > 0.0) {
                return Err(SolverError::InvalidConfig("piecewise scenario needs lambda > 0".into()));
            }
            let horizon = (3.0 * lambda).min(PI);
            let outcome = extend_solution(&SquaredIntegral::new(lambda), horizon, cfg)?;
            let traj = outcome.trajectory();
            let err = traj.as_ref().map_or(f64::INFINITY, |traj| {
                (0..traj.len())
                    .filter_map(|j| three_piece(lambda, traj.time(j)).map(|e| (traj.state(j)[0] - e).abs()))
                    .fold(0.0, f64::max)
            });
            metrics.push(("max_abs_error".into(), err));
            metrics.push(("max_iterations".into(), outcome.max_iterations() as f64));
            // the jump at t = λ costs about h/2 in the integral
            let tol = 4.0 * lambda * cfg.time_step + 1e-9;
            let passed = outcome.kind.is_global() && err <= tol;
            Ok(report(Some(outcome), metrics, err, tol, passed))
        }
        ScenarioOracle::Example31 { amplitude } => {
            let setup = Example31Setup::default();
            let r1 = setup.residual(amplitude)?;
            let r2 = setup.residual(2.0 * amplitude)?;
            let fine = setup.refined().residual(amplitude)?;
            let shrink = r1 / fine;
            metrics.push(("residual_V".into(), r1));
            metrics.push(("residual_2V".into(), r2));
            metrics.push(("residual_V_refined".into(), fine));
            metrics.push(("refinement_ratio".into(), shrink));
            let v = amplitude.abs();
            let passed = r1 <= 5e-3 * v && r2 <= 1e-2 * v && shrink >= 3.0;
            Ok(report(None, metrics, r1.max(r2 / 2.0), 5e-3 * v, passed))
        }
        ScenarioOracle::ZeroField { value } => {
            let model = zero_field_model(value)?;
            let op = FieldOperator::new(model, cfg.time_step, 1.0)?;
            let outcome = extend_solution(&op, 1.0, cfg)?;
            let err = outcome
                .trajectory()
                .map_or(f64::INFINITY, |t| t.as_slice().iter().fold(0.0, |m, v| m.max((v - value).abs())));
            metrics.push(("max_abs_error".into(), err));
            let passed = matches!(outcome.kind, OutcomeKind::Global { .. }) && err == 0.0;
            Ok(report(Some(outcome), metrics, err, 0.0, passed))
        }
    }
}
