use std::fmt;
use std::sync::Arc;

use super::grid::{euclidean, SpatialGrid};
use super::ModelError;

pub type MetricFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type DelayFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>;

/// Delay `τ(t, x, y) ≥ 0`.
#[derive(Clone)]
pub enum DelayField {
    Zero,
    Constant(f64),
    /// `|x − y| / v`.
    Transmission { velocity: f64 },
    /// `τ = d(x, y)`.
    Metric(MetricFn),
    General(DelayFn),
}

impl fmt::Debug for DelayField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("Zero"),
            Self::Constant(tau) => write!(f, "Constant({tau})"),
            Self::Transmission { velocity } => write!(f, "Transmission({velocity})"),
            Self::Metric(_) => f.write_str("Metric(..)"),
            Self::General(_) => f.write_str("General(..)"),
        }
    }
}

/// Time samples used when a delay depends on `t`.
const TIME_SAMPLES: usize = 33;

impl DelayField {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::Constant(tau) if !(*tau >= 0.0 && tau.is_finite()) => {
                Err(ModelError::InvalidParameter(format!("constant delay {tau} must be non-negative")))
            }
            Self::Transmission { velocity } if !(*velocity > 0.0 && velocity.is_finite()) => {
                Err(ModelError::InvalidParameter(format!("velocity {velocity} must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn depends_on_time(&self) -> bool {
        matches!(self, Self::General(_))
    }

    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(tau) => *tau,
            Self::Transmission { velocity } => euclidean(x, y) / velocity,
            Self::Metric(d) => d(x, y),
            Self::General(tau) => tau(t, x, y),
        }
    }

    fn sample<F: FnMut(f64)>(&self, grid: &SpatialGrid, origin: f64, horizon: f64, mut visit: F) {
        let times: Vec<f64> = if self.depends_on_time() {
            (0..TIME_SAMPLES)
                .map(|i| origin + (horizon - origin) * i as f64 / (TIME_SAMPLES - 1) as f64)
                .collect()
        } else {
            vec![origin]
        };
        for &t in &times {
            for i in 0..grid.len() {
                for k in 0..grid.len() {
                    visit(self.eval(t, grid.point_at(i), grid.point_at(k)));
                }
            }
        }
    }

    /// Largest sampled delay over grid pairs and `[origin, horizon]`.
    pub fn tau_max_over(&self, grid: &SpatialGrid, origin: f64, horizon: f64) -> Result<f64, ModelError> {
        let mut worst: f64 = 0.0;
        let mut bad = None;
        self.sample(grid, origin, horizon, |tau| {
            if !(tau >= 0.0 && tau.is_finite()) {
                bad.get_or_insert(tau);
            }
            worst = worst.max(tau);
        });
        match bad {
            Some(tau) => Err(ModelError::InvalidParameter(format!("delay value {tau} is negative or not finite"))),
            None => Ok(worst),
        }
    }

    /// Smallest sampled delay.
    pub fn tau_min_over(&self, grid: &SpatialGrid, origin: f64, horizon: f64) -> f64 {
        let mut least = f64::INFINITY;
        self.sample(grid, origin, horizon, |tau| least = least.min(tau));
        least
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::QuadratureRule;

    #[test]
    fn transmission_delay_is_distance_over_velocity() {
        let d = DelayField::Transmission { velocity: 2.0 };
        assert_eq!(d.eval(0.0, &[1.0], &[0.0]), 0.5);
        let grid = SpatialGrid::interval(-1.0, 1.0, 5, QuadratureRule::Trapezoid).unwrap();
        assert_eq!(d.tau_max_over(&grid, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(d.tau_min_over(&grid, 0.0, 1.0), 0.0);
    }

    #[test]
    fn negative_delays_are_reported() {
        let d = DelayField::General(Arc::new(|t, _, _| 0.5 - t));
        let grid = SpatialGrid::point();
        assert!(d.tau_max_over(&grid, 0.0, 1.0).is_err());
        assert!(DelayField::Constant(-1.0).validate().is_err());
        assert!(DelayField::Transmission { velocity: 0.0 }.validate().is_err());
    }
}
