//! Configuration, dispatch and output for the `nfield` command.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nfield_core::field::{validate_assumptions, AssumptionReport, FieldOperator, ModelError, ValidationOptions};
use nfield_core::lab::{
    run_dependence_sweep, verify_oracle, FamilyParameter, OperatorBuilder, PerturbationFamily, ScenarioOracle,
};
use nfield_core::volterra::{check_volterra_property, extend_solution, CausalityCheck, OutcomeKind, SolverError};
use toml::{Table, Value};

pub use config::{parse_config, Command, ConfigError, RunConfig, Scenario, Severity};

/// Process exit status. Every command path ends in one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    /// Global solution, passing oracle, passing validation or finished sweep.
    Success = 0,
    /// Error or failed check.
    Failure = 1,
    MaximallyExtended = 2,
    Stalled = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }

    fn of(kind: &OutcomeKind) -> Self {
        match kind {
            OutcomeKind::Global { .. } => Self::Success,
            OutcomeKind::MaximallyExtended { .. } => Self::MaximallyExtended,
            OutcomeKind::Stalled { .. } => Self::Stalled,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("validation failed with severity fatal:\n{0}")]
    Validation(AssumptionReport),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Files written by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub status: ExitStatus,
    pub summary: PathBuf,
    pub trajectory: Option<PathBuf>,
    pub dependence: Option<PathBuf>,
}

struct Writer<'a> {
    dir: &'a Path,
}

impl Writer<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn io<T>(&self, name: &str, r: std::io::Result<T>) -> Result<T, RunError> {
        r.map_err(|source| RunError::Io {
            path: self.path(name),
            source,
        })
    }
}

fn validation_options(config: &RunConfig) -> ValidationOptions {
    ValidationOptions {
        samples: config.validation.samples,
        decay_tol: config.validation.decay_tol,
    }
}

fn validation_entries(report: &AssumptionReport, into: &mut Table) {
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            let mut t = Table::new();
            t.insert("assumption".into(), c.assumption.label().into());
            t.insert("passed".into(), c.passed.into());
            t.insert("applicable".into(), c.applicable.into());
            t.insert("worst".into(), c.worst.into());
            t.insert("detail".into(), c.detail.clone().into());
            Value::Table(t)
        })
        .collect();
    into.insert("validation_passed".into(), report.passed().into());
    into.insert("assumption".into(), Value::Array(checks));
}

fn field_family(config: &RunConfig) -> Result<PerturbationFamily<FieldOperator>, RunError> {
    let parameter = config.family_parameter();
    let model = config.model.clone();
    let builder: OperatorBuilder<FieldOperator> = Arc::new(move |lambda, time_step, horizon| {
        let m = model
            .with_parameter(parameter, lambda)
            .map_err(|e| ModelError::InvalidParameter(e.to_string()))?
            .build()
            .map_err(|e| ModelError::InvalidParameter(e.to_string()))?;
        FieldOperator::new(m, time_step, horizon)
    });
    let family =
        PerturbationFamily::new(parameter, config.sweep.lambda0, config.sweep_sequence(), config.model.origin, builder)?;
    Ok(match parameter {
        FamilyParameter::FiringSteepness | FamilyParameter::FiringThreshold => {
            let model = config.model.clone();
            family.with_rate_probe(Arc::new(move |lambda, u| {
                model
                    .with_parameter(parameter, lambda)
                    .map_or(f64::NAN, |m| m.rate[0].build().eval(u))
            }))
        }
        _ => family,
    })
}

fn oracle_of(config: &RunConfig) -> ScenarioOracle {
    let o = &config.oracle;
    match o.scenario {
        Scenario::Example21 => ScenarioOracle::Example21 { lambda: o.lambda },
        Scenario::PiecewiseExample21 => ScenarioOracle::PiecewiseExample21 { lambda: o.lambda },
        Scenario::Example31 => ScenarioOracle::Example31 { amplitude: o.amplitude },
        Scenario::ZeroField => ScenarioOracle::ZeroField { value: o.value },
    }
}

/// Runs `config` and writes its artifacts under `config.output.directory`.
pub fn run(config: &RunConfig) -> Result<RunArtifacts, RunError> {
    let started = Instant::now();
    let dir = config.output.directory.as_path();
    let out = Writer { dir };
    out.io("", fs::create_dir_all(dir))?;
    let precision = config.output.precision;
    let cfg = config.solver.solver_config();
    let mut summary = Table::new();
    summary.insert("command".into(), config.command.label().into());
    summary.insert("seed".into(), (config.seed as i64).into());
    let mut trajectory = None;
    let mut dependence = None;

    let status = match config.command {
        Command::Solve => {
            let model = config.model.build()?;
            let report = validate_assumptions(&model, config.solver.horizon, &validation_options(config));
            validation_entries(&report, &mut summary);
            if config.validation.severity == Severity::Fatal && !report.passed() {
                return Err(RunError::Validation(report));
            }
            let grid = model.grid().clone();
            let populations = model.populations();
            let op = FieldOperator::new(model, cfg.time_step, config.solver.horizon)?;
            let outcome = extend_solution(&op, config.solver.horizon, &cfg)?;
            output::outcome_entries(&outcome, &mut summary);
            if let Some(traj) = outcome.trajectory() {
                let path = out.path("trajectory.csv");
                out.io("trajectory.csv", output::write_trajectory(&path, &traj, Some(&grid), populations, precision))?;
                trajectory = Some(path);
            }
            ExitStatus::of(&outcome.kind)
        }
        Command::Sweep => {
            let family = field_family(config)?;
            let report = run_dependence_sweep(&family, Some(config.sweep.gamma), &cfg)?;
            let path = out.path("dependence.csv");
            out.io("dependence.csv", output::write_dependence(&path, &report, precision))?;
            dependence = Some(path);
            summary.insert("family".into(), report.parameter.label().into());
            summary.insert("baseline".into(), report.baseline.label().into());
            summary.insert("gamma".into(), report.gamma.into());
            summary.insert("final_ratio".into(), report.final_ratio().into());
            summary.insert("max_ratio".into(), report.max_ratio().into());
            if let Some(order) = report.empirical_order {
                summary.insert("empirical_order".into(), order.into());
            }
            summary.insert("monotone_last_5".into(), report.monotone_tail(5).into());
            let hypotheses: Vec<Value> = report
                .hypotheses
                .iter()
                .map(|h| {
                    let mut t = Table::new();
                    t.insert("name".into(), h.name.clone().into());
                    t.insert("passed".into(), h.passed.into());
                    t.insert("proxy".into(), h.proxy.into());
                    t.insert("detail".into(), h.detail.clone().into());
                    Value::Table(t)
                })
                .collect();
            summary.insert("hypothesis".into(), Value::Array(hypotheses));
            if !report.events.is_empty() {
                summary.insert("events".into(), report.events.clone().into());
            }
            ExitStatus::Success
        }
        Command::Oracle => {
            let oracle = oracle_of(config);
            let report = verify_oracle(&oracle, &cfg)?;
            summary.insert("scenario".into(), report.scenario.clone().into());
            summary.insert("passed".into(), report.passed.into());
            summary.insert("max_error".into(), report.max_error.into());
            summary.insert("tolerance".into(), report.tolerance.into());
            let metrics: Table = report.metrics.iter().map(|(k, v)| (k.clone(), Value::from(*v))).collect();
            summary.insert("metrics".into(), Value::Table(metrics));
            let scalar = matches!(oracle, ScenarioOracle::Example21 { .. } | ScenarioOracle::PiecewiseExample21 { .. });
            if let Some(outcome) = &report.outcome {
                output::outcome_entries(outcome, &mut summary);
                if let (true, Some(traj)) = (scalar, outcome.trajectory()) {
                    let path = out.path("trajectory.csv");
                    out.io("trajectory.csv", output::write_trajectory(&path, &traj, None, 1, precision))?;
                    trajectory = Some(path);
                }
            }
            match (&report.outcome, report.passed) {
                (_, false) => ExitStatus::Failure,
                (Some(outcome), true) => ExitStatus::of(&outcome.kind),
                (None, true) => ExitStatus::Success,
            }
        }
        Command::Validate => {
            let model = config.model.build()?;
            let report = validate_assumptions(&model, config.solver.horizon, &validation_options(config));
            validation_entries(&report, &mut summary);
            let op = FieldOperator::new(model, cfg.time_step, config.solver.horizon)?;
            let check = CausalityCheck {
                trials: config.validation.causality_trials,
                seed: config.seed,
                xi: 0.5 * (config.solver.horizon - config.model.origin),
                ..CausalityCheck::default()
            };
            let causal = if check.trials > 0 {
                let c = check_volterra_property(&op, op.time_grid(), &check)?;
                summary.insert("causality_trials".into(), (c.trials as i64).into());
                summary.insert("causality_max_violation".into(), c.max_violation.into());
                c.is_causal()
            } else {
                true
            };
            summary.insert("causal".into(), causal.into());
            if report.passed() && causal {
                ExitStatus::Success
            } else {
                ExitStatus::Failure
            }
        }
    };

    summary.insert("exit_status".into(), i64::from(status.code()).into());
    summary.insert("wall_time_s".into(), started.elapsed().as_secs_f64().into());
    let summary_path = out.path("summary.toml");
    out.io("summary.toml", output::write_summary(&summary_path, config.to_table(), summary))?;
    Ok(RunArtifacts {
        status,
        summary: summary_path,
        trajectory,
        dependence,
    })
}
