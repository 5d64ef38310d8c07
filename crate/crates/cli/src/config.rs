//! Run configuration: TOML text with dotted sections, strict keys and
//! range checks that name the offending field.

use std::fmt;
use std::path::{Path, PathBuf};

use nfield_core::field::{
    DelayField, FieldModel, FiringRate, Kernel, ModelError, Prehistory, QuadratureRule, SpatialGrid, SpatialKernel,
    TemporalKernel,
};
use nfield_core::lab::FamilyParameter;
use nfield_core::volterra::SolverConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// Top-level table of a run summary; stripped when a summary is read back
/// as a configuration.
pub const SUMMARY_KEY: &str = "summary";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn field_err(path: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Field {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    #[default]
    Solve,
    Sweep,
    Oracle,
    Validate,
}

impl Command {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Sweep => "sweep",
            Self::Oracle => "oracle",
            Self::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub model: ModelConfig,
    pub solver: SolverSection,
    pub sweep: SweepSection,
    pub oracle: OracleSection,
    pub validation: ValidationSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub populations: usize,
    pub origin: f64,
    pub grid: GridConfig,
    /// One entry per population.
    pub temporal: Vec<TemporalConfig>,
    /// `populations²` entries, row-major: entry `p·n + q` couples `q` into `p`.
    pub spatial: Vec<SpatialConfig>,
    /// One entry shared by all populations, or one per population.
    pub rate: Vec<RateConfig>,
    pub delay: DelayConfig,
    pub prehistory: PrehistoryConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            populations: 1,
            origin: 0.0,
            grid: GridConfig::default(),
            temporal: vec![TemporalConfig::Exponential { rate: 1.0 }],
            spatial: vec![SpatialConfig::MexicanHat {
                excitation: 2.0,
                inhibition: 1.0,
                excitation_decay: 2.0,
                inhibition_decay: 1.0,
            }],
            rate: vec![RateConfig::Logistic {
                steepness: 4.0,
                threshold: 0.3,
            }],
            delay: DelayConfig::Zero,
            prehistory: PrehistoryConfig::GaussianBump {
                amplitude: 1.0,
                width: 1.0,
                center: vec![0.0],
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    #[default]
    Trapezoid,
    Uniform,
}

/// Symmetric box `[−radius, radius]^dimension` with `points` per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dimension: usize,
    pub radius: f64,
    pub points: usize,
    pub quadrature: Quadrature,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dimension: 1,
            radius: 10.0,
            points: 101,
            quadrature: Quadrature::Trapezoid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemporalConfig {
    Exponential { rate: f64 },
    Alpha { rate: f64 },
    TimeDecay { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialConfig {
    MexicanHat {
        excitation: f64,
        inhibition: f64,
        excitation_decay: f64,
        inhibition_decay: f64,
    },
    WizardHat {
        amplitude: f64,
        decay: f64,
    },
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    Profile {
        amplitude: f64,
        width: f64,
    },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateConfig {
    Hill { steepness: f64, threshold: f64 },
    Tanh { steepness: f64, threshold: f64 },
    Logistic { steepness: f64, threshold: f64 },
    Square,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayConfig {
    Zero,
    Constant { value: f64 },
    Transmission { velocity: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrehistoryConfig {
    Zero,
    /// One value per population.
    Constant { values: Vec<f64> },
    GaussianBump { amplitude: f64, width: f64, center: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub q_target: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub delta_max: f64,
    pub delta_min: f64,
    pub blowup_norm_threshold: f64,
    pub horizon: f64,
    pub time_step: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            q_target: d.q_target,
            tol: d.tol,
            max_iter: d.max_iter,
            delta_max: d.delta_max,
            delta_min: d.delta_min,
            blowup_norm_threshold: d.blowup_norm_threshold,
            horizon: 1.0,
            time_step: d.time_step,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            q_target: self.q_target,
            tol: self.tol,
            max_iter: self.max_iter,
            delta_max: self.delta_max,
            delta_min: self.delta_min,
            blowup_norm_threshold: self.blowup_norm_threshold,
            time_step: self.time_step,
        }
    }
}

/// `λᵢ = lambda0 + scale · 2^{−i}` for `i = first..first + count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub family: String,
    pub lambda0: f64,
    pub scale: f64,
    pub first: i32,
    pub count: usize,
    pub gamma: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            family: FamilyParameter::DelayVelocity.label().into(),
            lambda0: 1.0,
            scale: 1.0,
            first: 1,
            count: 8,
            gamma: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Example21,
    PiecewiseExample21,
    Example31,
    ZeroField,
}

impl Scenario {
    pub fn parse(label: &str) -> Option<Self> {
        match label {
            "example21" => Some(Self::Example21),
            "piecewise_example21" => Some(Self::PiecewiseExample21),
            "example31" => Some(Self::Example31),
            "zero_field" => Some(Self::ZeroField),
            _ => None,
        }
    }

    /// Time step that meets the scenario's error budget.
    pub fn default_time_step(&self, lambda: f64) -> f64 {
        match self {
            Self::Example21 if lambda > 0.0 => 1e-4,
            Self::Example21 | Self::PiecewiseExample21 => 1e-3,
            Self::Example31 | Self::ZeroField => 5e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub scenario: Scenario,
    pub lambda: f64,
    pub amplitude: f64,
    pub value: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            scenario: Scenario::Example21,
            lambda: 0.0,
            amplitude: 1.0,
            value: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Fatal,
    #[default]
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSection {
    /// `fatal` refuses to solve a model that fails a check.
    pub severity: Severity,
    pub samples: usize,
    pub decay_tol: f64,
    pub causality_trials: usize,
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self {
            severity: Severity::Warn,
            samples: 16,
            decay_tol: 1e-6,
            causality_trials: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Significant digits in CSV output.
    pub precision: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            precision: 12,
        }
    }
}

/// Parses configuration text into its raw table. Summaries are accepted:
/// their `summary` table is dropped.
pub fn parse_table(text: &str) -> Result<Table, ConfigError> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    table.remove(SUMMARY_KEY);
    if table.is_empty() {
        return Err(ConfigError::Parse("configuration sets no keys".into()));
    }
    Ok(table)
}

fn split_segment(segment: &str) -> Result<(&str, Option<usize>), String> {
    match segment.split_once('[') {
        None => Ok((segment, None)),
        Some((name, rest)) => {
            let index = rest
                .strip_suffix(']')
                .and_then(|i| i.parse().ok())
                .ok_or_else(|| format!("bad index in '{segment}'"))?;
            Ok((name, Some(index)))
        }
    }
}

fn parse_override_value(raw: &str) -> Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Sets a dotted key such as `model.rate[0].steepness` in `table`.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Parse(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    let value = parse_override_value(raw.trim());
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(ConfigError::Parse(format!("override key '{key}' is malformed")));
    }
    let mut current = table;
    for (pos, segment) in segments.iter().enumerate() {
        let (name, index) = split_segment(segment).map_err(|m| field_err(key, m))?;
        let last = pos + 1 == segments.len();
        match index {
            None if last => {
                current.insert(name.into(), value);
                return Ok(());
            }
            None => {
                let slot = current.entry(name).or_insert_with(|| Value::Table(Table::new()));
                current = slot
                    .as_table_mut()
                    .ok_or_else(|| field_err(key, format!("'{name}' is not a section")))?;
            }
            Some(i) => {
                let array = current
                    .get_mut(name)
                    .and_then(Value::as_array_mut)
                    .ok_or_else(|| field_err(key, format!("'{name}' is not a list")))?;
                let len = array.len();
                let slot = array
                    .get_mut(i)
                    .ok_or_else(|| field_err(key, format!("index {i} out of range for {len} entries")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                current = slot
                    .as_table_mut()
                    .ok_or_else(|| field_err(key, format!("'{name}[{i}]' is not a table")))?;
            }
        }
    }
    Ok(())
}

/// Deserializes and validates a raw table.
pub fn from_table(table: Table) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    from_table(parse_table(text)?)
}

pub fn read_table(path: &Path) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_table(&text).map_err(|e| match e {
        ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(path, format!("must be positive and finite, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(field_err(path, format!("must be finite, got {v}")))
    }
}

impl TemporalConfig {
    fn build(&self) -> TemporalKernel {
        match *self {
            Self::Exponential { rate } => TemporalKernel::Exponential { rate },
            Self::Alpha { rate } => TemporalKernel::Alpha { rate },
            Self::TimeDecay { rate } => TemporalKernel::TimeDecay { rate },
        }
    }
}

impl SpatialConfig {
    fn build(&self) -> Result<SpatialKernel, ModelError> {
        Ok(match *self {
            Self::MexicanHat {
                excitation,
                inhibition,
                excitation_decay,
                inhibition_decay,
            } => SpatialKernel::mexican_hat(excitation, inhibition, excitation_decay, inhibition_decay)?,
            Self::WizardHat { amplitude, decay } => SpatialKernel::WizardHat { amplitude, decay },
            Self::Gaussian { amplitude, width } => SpatialKernel::Gaussian { amplitude, width },
            Self::Profile { amplitude, width } => SpatialKernel::Profile { amplitude, width },
            Self::Zero => SpatialKernel::Zero,
        })
    }
}

impl RateConfig {
    pub fn build(&self) -> FiringRate {
        match *self {
            Self::Hill { steepness, threshold } => FiringRate::Hill { steepness, threshold },
            Self::Tanh { steepness, threshold } => FiringRate::TanhSigmoid { steepness, threshold },
            Self::Logistic { steepness, threshold } => FiringRate::Logistic { steepness, threshold },
            Self::Square => FiringRate::Square,
            Self::Identity => FiringRate::Identity,
        }
    }
}

impl ModelConfig {
    fn grid(&self) -> Result<SpatialGrid, ModelError> {
        let g = &self.grid;
        let rule = match g.quadrature {
            Quadrature::Trapezoid => QuadratureRule::Trapezoid,
            Quadrature::Uniform => QuadratureRule::Uniform,
        };
        let axes = vec![(-g.radius, g.radius, g.points); g.dimension];
        Ok(SpatialGrid::tensor(&axes, rule)?.with_truncation(g.radius))
    }

    /// Builds the core model, prefixing errors with the field path.
    pub fn build(&self) -> Result<FieldModel, ConfigError> {
        let n = self.populations;
        let grid = self.grid().map_err(|e| field_err("model.grid", e))?;
        let temporal = self.temporal.iter().map(TemporalConfig::build).collect();
        let spatial = self
            .spatial
            .iter()
            .enumerate()
            .map(|(i, s)| s.build().map_err(|e| field_err(format!("model.spatial[{i}]"), e)))
            .collect::<Result<Vec<_>, _>>()?;
        let kernel = Kernel::Separable { temporal, spatial };
        let delay = match self.delay {
            DelayConfig::Zero => DelayField::Zero,
            DelayConfig::Constant { value } => DelayField::Constant(value),
            DelayConfig::Transmission { velocity } => DelayField::Transmission { velocity },
        };
        let prehistory = match &self.prehistory {
            PrehistoryConfig::Zero => Prehistory::zero(n),
            PrehistoryConfig::Constant { values } => Prehistory::constant(values.clone()),
            PrehistoryConfig::GaussianBump { amplitude, width, center } => {
                Prehistory::gaussian_bump(n, *amplitude, *width, center.clone())
            }
        };
        let rates = self.rate.iter().map(RateConfig::build).collect();
        FieldModel::new(self.origin, grid, kernel, rates, delay, prehistory).map_err(|e| field_err("model", e))
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let n = self.populations;
        if n == 0 {
            return Err(field_err("model.populations", "must be at least 1"));
        }
        finite("model.origin", self.origin)?;
        if !(1..=3).contains(&self.grid.dimension) {
            return Err(field_err("model.grid.dimension", "must be 1, 2 or 3"));
        }
        positive("model.grid.radius", self.grid.radius)?;
        if self.grid.points < 2 {
            return Err(field_err("model.grid.points", "must be at least 2"));
        }
        if self.temporal.len() != n {
            return Err(field_err(
                "model.temporal",
                format!("needs {n} entries, one per population, found {}", self.temporal.len()),
            ));
        }
        for (i, t) in self.temporal.iter().enumerate() {
            let (TemporalConfig::Exponential { rate } | TemporalConfig::Alpha { rate } | TemporalConfig::TimeDecay { rate }) = t;
            positive(&format!("model.temporal[{i}].rate"), *rate)?;
        }
        if self.spatial.len() != n * n {
            return Err(field_err(
                "model.spatial",
                format!("needs {} entries (populations squared), found {}", n * n, self.spatial.len()),
            ));
        }
        for (i, s) in self.spatial.iter().enumerate() {
            let path = format!("model.spatial[{i}]");
            match *s {
                SpatialConfig::MexicanHat {
                    excitation,
                    inhibition,
                    excitation_decay,
                    inhibition_decay,
                } => {
                    positive(&format!("{path}.excitation"), excitation)?;
                    positive(&format!("{path}.inhibition"), inhibition)?;
                    positive(&format!("{path}.excitation_decay"), excitation_decay)?;
                    positive(&format!("{path}.inhibition_decay"), inhibition_decay)?;
                }
                SpatialConfig::WizardHat { amplitude, decay } => {
                    finite(&format!("{path}.amplitude"), amplitude)?;
                    positive(&format!("{path}.decay"), decay)?;
                }
                SpatialConfig::Gaussian { amplitude, width } | SpatialConfig::Profile { amplitude, width } => {
                    finite(&format!("{path}.amplitude"), amplitude)?;
                    positive(&format!("{path}.width"), width)?;
                }
                SpatialConfig::Zero => {}
            }
            s.build().map_err(|e| field_err(&path, e))?;
        }
        if self.rate.len() != 1 && self.rate.len() != n {
            return Err(field_err("model.rate", format!("needs 1 or {n} entries, found {}", self.rate.len())));
        }
        for (i, r) in self.rate.iter().enumerate() {
            if let RateConfig::Hill { steepness, threshold }
            | RateConfig::Tanh { steepness, threshold }
            | RateConfig::Logistic { steepness, threshold } = *r
            {
                positive(&format!("model.rate[{i}].steepness"), steepness)?;
                match r {
                    RateConfig::Hill { .. } => positive(&format!("model.rate[{i}].threshold"), threshold)?,
                    _ => finite(&format!("model.rate[{i}].threshold"), threshold)?,
                }
            }
            r.build().validate().map_err(|e| field_err(format!("model.rate[{i}]"), e))?;
        }
        match self.delay {
            DelayConfig::Zero => {}
            DelayConfig::Constant { value } => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(field_err("model.delay.value", format!("must be non-negative, got {value}")));
                }
            }
            DelayConfig::Transmission { velocity } => positive("model.delay.velocity", velocity)?,
        }
        match &self.prehistory {
            PrehistoryConfig::Zero => {}
            PrehistoryConfig::Constant { values } => {
                if values.len() != n {
                    return Err(field_err("model.prehistory.values", format!("needs {n} entries")));
                }
                for (i, v) in values.iter().enumerate() {
                    finite(&format!("model.prehistory.values[{i}]"), *v)?;
                }
            }
            PrehistoryConfig::GaussianBump { amplitude, width, center } => {
                finite("model.prehistory.amplitude", *amplitude)?;
                positive("model.prehistory.width", *width)?;
                if center.len() != self.grid.dimension {
                    return Err(field_err(
                        "model.prehistory.center",
                        format!("needs {} coordinates to match the grid", self.grid.dimension),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Copy with the family parameter set to `lambda`. Kernel amplitude
    /// scales every spatial kernel; kernel range stretches them.
    pub fn with_parameter(&self, parameter: FamilyParameter, lambda: f64) -> Result<Self, ConfigError> {
        let mut m = self.clone();
        let path = "sweep.family";
        match parameter {
            FamilyParameter::KernelAmplitude => {
                for s in &mut m.spatial {
                    match s {
                        SpatialConfig::MexicanHat { excitation, inhibition, .. } => {
                            *excitation *= lambda;
                            *inhibition *= lambda;
                        }
                        SpatialConfig::WizardHat { amplitude, .. }
                        | SpatialConfig::Gaussian { amplitude, .. }
                        | SpatialConfig::Profile { amplitude, .. } => *amplitude *= lambda,
                        SpatialConfig::Zero => {}
                    }
                }
            }
            FamilyParameter::KernelRange => {
                for s in &mut m.spatial {
                    match s {
                        SpatialConfig::MexicanHat {
                            excitation_decay,
                            inhibition_decay,
                            ..
                        } => {
                            *excitation_decay /= lambda;
                            *inhibition_decay /= lambda;
                        }
                        SpatialConfig::WizardHat { decay, .. } => *decay /= lambda,
                        SpatialConfig::Gaussian { width, .. } | SpatialConfig::Profile { width, .. } => *width *= lambda,
                        SpatialConfig::Zero => {}
                    }
                }
            }
            FamilyParameter::DelayVelocity => match &mut m.delay {
                DelayConfig::Transmission { velocity } => *velocity = lambda,
                _ => return Err(field_err(path, "delay_velocity needs model.delay.kind = \"transmission\"")),
            },
            FamilyParameter::FiringSteepness | FamilyParameter::FiringThreshold => {
                let mut touched = false;
                for r in &mut m.rate {
                    if let RateConfig::Hill { steepness, threshold }
                    | RateConfig::Tanh { steepness, threshold }
                    | RateConfig::Logistic { steepness, threshold } = r
                    {
                        touched = true;
                        if parameter == FamilyParameter::FiringSteepness {
                            *steepness = lambda;
                        } else {
                            *threshold = lambda;
                        }
                    }
                }
                if !touched {
                    return Err(field_err(path, "no firing rate has a steepness or threshold"));
                }
            }
            FamilyParameter::PrehistoryShift => match &mut m.prehistory {
                PrehistoryConfig::GaussianBump { center, .. } => center[0] = lambda,
                _ => return Err(field_err(path, "prehistory_shift needs a gaussian_bump prehistory")),
            },
            FamilyParameter::Custom => {
                return Err(field_err(path, "custom families cannot be described in a configuration"))
            }
        }
        m.validate()?;
        Ok(m)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate()?;
        let s = &self.solver;
        if !(s.q_target > 0.0 && s.q_target < 1.0) {
            return Err(field_err("solver.q_target", format!("must lie in (0, 1), got {}", s.q_target)));
        }
        positive("solver.tol", s.tol)?;
        if s.max_iter == 0 {
            return Err(field_err("solver.max_iter", "must be at least 1"));
        }
        positive("solver.delta_max", s.delta_max)?;
        positive("solver.delta_min", s.delta_min)?;
        if s.delta_min > s.delta_max {
            return Err(field_err("solver.delta_min", "must not exceed solver.delta_max"));
        }
        positive("solver.blowup_norm_threshold", s.blowup_norm_threshold)?;
        positive("solver.time_step", s.time_step)?;
        finite("solver.horizon", s.horizon)?;
        if s.horizon <= self.model.origin {
            return Err(field_err("solver.horizon", "must lie after model.origin"));
        }

        let w = &self.sweep;
        let parameter = FamilyParameter::parse(&w.family)
            .ok_or_else(|| field_err("sweep.family", format!("unknown family '{}'", w.family)))?;
        finite("sweep.lambda0", w.lambda0)?;
        finite("sweep.scale", w.scale)?;
        if w.scale == 0.0 {
            return Err(field_err("sweep.scale", "must be non-zero"));
        }
        if w.count < 2 {
            return Err(field_err("sweep.count", "must be at least 2"));
        }
        positive("sweep.gamma", w.gamma)?;
        if self.command == Command::Sweep {
            self.model.with_parameter(parameter, w.lambda0)?;
        }

        let o = &self.oracle;
        finite("oracle.amplitude", o.amplitude)?;
        finite("oracle.value", o.value)?;
        if !(o.lambda >= 0.0 && o.lambda <= std::f64::consts::PI) {
            return Err(field_err("oracle.lambda", format!("must lie in [0, pi], got {}", o.lambda)));
        }
        if o.scenario == Scenario::PiecewiseExample21 && o.lambda == 0.0 {
            return Err(field_err("oracle.lambda", "piecewise_example21 needs lambda > 0"));
        }

        let v = &self.validation;
        if v.samples < 2 {
            return Err(field_err("validation.samples", "must be at least 2"));
        }
        positive("validation.decay_tol", v.decay_tol)?;
        if !(1..=17).contains(&self.output.precision) {
            return Err(field_err("output.precision", "must lie in 1..=17"));
        }
        Ok(())
    }

    pub fn family_parameter(&self) -> FamilyParameter {
        FamilyParameter::parse(&self.sweep.family).expect("validated family")
    }

    pub fn sweep_sequence(&self) -> Vec<f64> {
        let w = &self.sweep;
        nfield_core::lab::geometric_sequence(w.lambda0, w.scale, w.first, w.count)
    }

    /// Fully defaulted configuration as a TOML table.
    pub fn to_table(&self) -> Table {
        match Value::try_from(self).expect("configuration serializes") {
            Value::Table(t) => t,
            _ => unreachable!("struct serializes to a table"),
        }
    }
}
