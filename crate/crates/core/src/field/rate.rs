use std::fmt;
use std::sync::Arc;

use super::ModelError;

pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Firing-rate nonlinearity `f`.
#[derive(Clone)]
pub enum FiringRate {
    /// `u^κ / (θ^κ + u^κ)` for `u ≥ 0`, zero below.
    Hill { steepness: f64, threshold: f64 },
    /// `½ (1 + tanh(κ (u − θ)))`.
    TanhSigmoid { steepness: f64, threshold: f64 },
    /// `1 / (1 + e^{−κ (u − θ)})`.
    Logistic { steepness: f64, threshold: f64 },
    /// `u²`.
    Square,
    Identity,
    /// User-supplied rate with an optional Lipschitz provider `r ↦ f̃_r`.
    Custom { rate: RateFn, lipschitz: Option<RateFn> },
}

impl fmt::Debug for FiringRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hill { steepness, threshold } => write!(f, "Hill({steepness}, {threshold})"),
            Self::TanhSigmoid { steepness, threshold } => write!(f, "TanhSigmoid({steepness}, {threshold})"),
            Self::Logistic { steepness, threshold } => write!(f, "Logistic({steepness}, {threshold})"),
            Self::Square => f.write_str("Square"),
            Self::Identity => f.write_str("Identity"),
            Self::Custom { lipschitz, .. } => write!(f, "Custom(lipschitz: {})", lipschitz.is_some()),
        }
    }
}

/// Samples used by the finite-difference Lipschitz estimate.
const CUSTOM_SAMPLES: usize = 4001;
const CUSTOM_SAFETY: f64 = 1.25;

impl FiringRate {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::Hill { steepness, threshold }
            | Self::TanhSigmoid { steepness, threshold }
            | Self::Logistic { steepness, threshold } => {
                if !(*steepness > 0.0 && steepness.is_finite()) {
                    return Err(ModelError::InvalidParameter(format!("steepness {steepness} must be positive")));
                }
                if !threshold.is_finite() || (matches!(self, Self::Hill { .. }) && *threshold <= 0.0) {
                    return Err(ModelError::InvalidParameter(format!("threshold {threshold} is out of range")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Self::Hill { steepness, threshold } => {
                if u <= 0.0 {
                    0.0
                } else {
                    // ratio form avoids overflow of u^κ
                    1.0 / (1.0 + (threshold / u).powf(*steepness))
                }
            }
            Self::TanhSigmoid { steepness, threshold } => 0.5 * (1.0 + (steepness * (u - threshold)).tanh()),
            Self::Logistic { steepness, threshold } => 1.0 / (1.0 + (-steepness * (u - threshold)).exp()),
            Self::Square => u * u,
            Self::Identity => u,
            Self::Custom { rate, .. } => rate(u),
        }
    }

    /// `f̃_r` with `|f(u₁) − f(u₂)| ≤ f̃_r |u₁ − u₂|` whenever `|u₁|, |u₂| ≤ r`.
    pub fn lipschitz_bound(&self, radius: f64) -> f64 {
        match self {
            Self::Hill { steepness: k, threshold: th } => {
                if *k < 1.0 {
                    f64::INFINITY
                } else {
                    (k + 1.0).powi(2) / (4.0 * k * th) * ((k - 1.0) / (k + 1.0)).powf((k - 1.0) / k)
                }
            }
            Self::TanhSigmoid { steepness, .. } => steepness / 2.0,
            Self::Logistic { steepness, .. } => steepness / 4.0,
            Self::Square => 2.0 * radius,
            Self::Identity => 1.0,
            Self::Custom { lipschitz: Some(l), .. } => l(radius),
            Self::Custom { rate, lipschitz: None } => {
                let h = 2.0 * radius / (CUSTOM_SAMPLES - 1) as f64;
                let mut prev = rate(-radius);
                let mut worst: f64 = 0.0;
                for i in 1..CUSTOM_SAMPLES {
                    let next = rate(-radius + i as f64 * h);
                    worst = worst.max(((next - prev) / h).abs());
                    prev = next;
                }
                CUSTOM_SAFETY * worst
            }
        }
    }

    /// `sup |f|` over `[−r, r]` when known in closed form.
    pub fn bound(&self, radius: f64) -> Option<f64> {
        match self {
            Self::Hill { .. } | Self::TanhSigmoid { .. } | Self::Logistic { .. } => Some(1.0),
            Self::Square => Some(radius * radius),
            Self::Identity => Some(radius),
            Self::Custom { .. } => None,
        }
    }
}
