use std::fmt;
use std::sync::Arc;

use super::example21::SquaredIntegral;
use crate::field::{
    DelayField, FieldModel, FieldOperator, FiringRate, Kernel, ModelError, Prehistory, QuadratureRule, SpatialGrid,
    SpatialKernel, TemporalKernel,
};

/// Which model ingredient a family varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyParameter {
    KernelAmplitude,
    KernelRange,
    DelayVelocity,
    FiringSteepness,
    FiringThreshold,
    PrehistoryShift,
    Custom,
}

impl FamilyParameter {
    pub fn label(&self) -> &'static str {
        match self {
            Self::KernelAmplitude => "kernel_amplitude",
            Self::KernelRange => "kernel_range",
            Self::DelayVelocity => "delay_velocity",
            Self::FiringSteepness => "firing_steepness",
            Self::FiringThreshold => "firing_threshold",
            Self::PrehistoryShift => "prehistory_shift",
            Self::Custom => "custom",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        [
            Self::KernelAmplitude,
            Self::KernelRange,
            Self::DelayVelocity,
            Self::FiringSteepness,
            Self::FiringThreshold,
            Self::PrehistoryShift,
            Self::Custom,
        ]
        .into_iter()
        .find(|p| p.label() == label)
    }
}

/// Builds the operator for `(λ, time_step, horizon)`.
pub type OperatorBuilder<O> = Arc<dyn Fn(f64, f64, f64) -> Result<O, ModelError> + Send + Sync>;
/// `(λ, u) ↦ f_λ(u)` for families that vary the firing rate.
pub type RateProbe = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Parameter sequence `λᵢ → λ₀` together with the model map `λ ↦ Ψ_λ`.
#[derive(Clone)]
pub struct PerturbationFamily<O> {
    pub parameter: FamilyParameter,
    pub lambda0: f64,
    pub sequence: Vec<f64>,
    /// Common origin `a` of every member.
    pub origin: f64,
    builder: OperatorBuilder<O>,
    rate_probe: Option<RateProbe>,
}

impl<O> fmt::Debug for PerturbationFamily<O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbationFamily")
            .field("parameter", &self.parameter)
            .field("lambda0", &self.lambda0)
            .field("sequence", &self.sequence)
            .field("origin", &self.origin)
            .finish_non_exhaustive()
    }
}

impl<O> PerturbationFamily<O> {
    pub fn new(
        parameter: FamilyParameter,
        lambda0: f64,
        sequence: Vec<f64>,
        origin: f64,
        builder: OperatorBuilder<O>,
    ) -> Result<Self, ModelError> {
        if sequence.is_empty() {
            return Err(ModelError::InvalidParameter("family sequence is empty".into()));
        }
        let gaps: Vec<f64> = sequence.iter().map(|l| (l - lambda0).abs()).collect();
        if gaps.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::InvalidParameter("family sequence must be finite".into()));
        }
        if let Some(w) = gaps.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(ModelError::InvalidParameter(format!(
                "|lambda_i - lambda_0| must decrease strictly; entries {} and {} do not",
                w + 1,
                w + 2
            )));
        }
        Ok(Self {
            parameter,
            lambda0,
            sequence,
            origin,
            builder,
            rate_probe: None,
        })
    }

    pub fn with_rate_probe(mut self, probe: RateProbe) -> Self {
        self.rate_probe = Some(probe);
        self
    }

    pub fn rate_probe(&self) -> Option<&RateProbe> {
        self.rate_probe.as_ref()
    }

    pub fn build(&self, lambda: f64, time_step: f64, horizon: f64) -> Result<O, ModelError> {
        (self.builder)(lambda, time_step, horizon)
    }
}

/// `λᵢ = λ₀ + scale · 2^{−i}` for `i = first..first + count`.
pub fn geometric_sequence(lambda0: f64, scale: f64, first: i32, count: usize) -> Vec<f64> {
    (0..count as i32).map(|i| lambda0 + scale * 2f64.powi(-(first + i))).collect()
}

/// Scalar Amari field with Mexican-hat connectivity, exponential memory,
/// logistic rate, transmission delay and a Gaussian bump history.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedAmari {
    pub excitation: f64,
    pub inhibition: f64,
    pub excitation_decay: f64,
    pub inhibition_decay: f64,
    pub memory_rate: f64,
    pub steepness: f64,
    pub threshold: f64,
    /// `None` gives zero delay.
    pub velocity: Option<f64>,
    pub bump_amplitude: f64,
    pub bump_width: f64,
    pub bump_center: f64,
    pub radius: f64,
    pub points: usize,
    pub origin: f64,
}

impl Default for DelayedAmari {
    fn default() -> Self {
        Self {
            excitation: 2.0,
            inhibition: 1.0,
            excitation_decay: 2.0,
            inhibition_decay: 1.0,
            memory_rate: 1.0,
            steepness: 4.0,
            threshold: 0.3,
            velocity: Some(1.0),
            bump_amplitude: 1.0,
            bump_width: 1.0,
            bump_center: 0.0,
            radius: 10.0,
            points: 101,
            origin: 0.0,
        }
    }
}

impl DelayedAmari {
    pub fn model(&self) -> Result<FieldModel, ModelError> {
        let grid = SpatialGrid::truncated_line(self.radius, self.points, QuadratureRule::Trapezoid)?;
        let spatial = SpatialKernel::mexican_hat(
            self.excitation,
            self.inhibition,
            self.excitation_decay,
            self.inhibition_decay,
        )?;
        let delay = match self.velocity {
            Some(velocity) => DelayField::Transmission { velocity },
            None => DelayField::Zero,
        };
        FieldModel::new(
            self.origin,
            grid,
            Kernel::scalar(TemporalKernel::Exponential { rate: self.memory_rate }, spatial),
            vec![FiringRate::Logistic {
                steepness: self.steepness,
                threshold: self.threshold,
            }],
            delay,
            Prehistory::gaussian_bump(1, self.bump_amplitude, self.bump_width, vec![self.bump_center]),
        )
    }

    /// Copy with the family parameter set to `lambda`. Kernel amplitude
    /// scales both exponentials; kernel range divides both decay rates.
    pub fn with_parameter(&self, parameter: FamilyParameter, lambda: f64) -> Result<Self, ModelError> {
        let mut m = self.clone();
        match parameter {
            FamilyParameter::KernelAmplitude => {
                m.excitation *= lambda;
                m.inhibition *= lambda;
            }
            FamilyParameter::KernelRange => {
                m.excitation_decay /= lambda;
                m.inhibition_decay /= lambda;
            }
            FamilyParameter::DelayVelocity => m.velocity = Some(lambda),
            FamilyParameter::FiringSteepness => m.steepness = lambda,
            FamilyParameter::FiringThreshold => m.threshold = lambda,
            FamilyParameter::PrehistoryShift => m.bump_center = lambda,
            FamilyParameter::Custom => {
                return Err(ModelError::Unsupported("custom families need their own builder".into()))
            }
        }
        Ok(m)
    }

    pub fn family(
        &self,
        parameter: FamilyParameter,
        lambda0: f64,
        sequence: Vec<f64>,
    ) -> Result<PerturbationFamily<FieldOperator>, ModelError> {
        // fail early on the baseline
        self.with_parameter(parameter, lambda0)?.model()?;
        let base = self.clone();
        let builder: OperatorBuilder<FieldOperator> = Arc::new(move |lambda, time_step, horizon| {
            FieldOperator::new(base.with_parameter(parameter, lambda)?.model()?, time_step, horizon)
        });
        let family = PerturbationFamily::new(parameter, lambda0, sequence, self.origin, builder)?;
        Ok(match parameter {
            FamilyParameter::FiringSteepness | FamilyParameter::FiringThreshold => {
                let base = self.clone();
                family.with_rate_probe(Arc::new(move |lambda, u| {
                    let m = base.with_parameter(parameter, lambda).expect("validated parameter");
                    FiringRate::Logistic {
                        steepness: m.steepness,
                        threshold: m.threshold,
                    }
                    .eval(u)
                }))
            }
            _ => family,
        })
    }
}

/// `λ ↦ Φ(·, λ)` with `λ₀ = 0` and `λᵢ = 2^{−i}`.
pub fn example21_family(first: i32, count: usize) -> Result<PerturbationFamily<SquaredIntegral>, ModelError> {
    PerturbationFamily::new(
        FamilyParameter::Custom,
        0.0,
        geometric_sequence(0.0, 1.0, first, count),
        0.0,
        Arc::new(|lambda, _, _| Ok(SquaredIntegral::new(lambda))),
    )
}
