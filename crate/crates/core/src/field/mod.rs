//! Neural field operator `(Fu)(t,x) = φ(a,x) + ∫ₐᵗ∫_Ω W(t,s,x,y) f(u(s − τ(s,x,y), y)) dy ds`
//! and its model zoo.
//!
//! Values are stored point-major: the state at one time is `m` blocks of
//! `n` population values.

mod delay;
mod grid;
mod kernel;
mod memory;
mod operator;
mod prehistory;
mod rate;
mod validate;

use thiserror::Error;

use crate::volterra::Trajectory;

pub use delay::{DelayFn, DelayField, MetricFn};
pub use grid::{QuadratureRule, SpatialGrid};
pub use kernel::{Kernel, KernelFn, SpatialKernel, TemporalKernel};
pub use memory::{build_memory_truncation, solve_truncated_memory};
pub use operator::{FieldCache, FieldOperator};
pub use prehistory::{HistoryFn, Prehistory};
pub use rate::{FiringRate, RateFn};
pub use validate::{validate_assumptions, Assumption, AssumptionCheck, AssumptionReport, ValidationOptions};

pub(crate) use kernel::normal_density;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("kernel is not finite at t={t}, s={s}, x={x:?}, y={y:?}")]
    NonFiniteKernel { t: f64, s: f64, x: Vec<f64>, y: Vec<f64> },
    #[error("delay is negative or not finite at t={t}, x={x:?}, y={y:?}")]
    InvalidDelay { t: f64, x: Vec<f64>, y: Vec<f64> },
    #[error("unsupported model: {0}")]
    Unsupported(String),
}

/// A fully specified instance of the field equation.
#[derive(Debug, Clone)]
pub struct FieldModel {
    origin: f64,
    grid: SpatialGrid,
    kernel: Kernel,
    rates: Vec<FiringRate>,
    delay: DelayField,
    prehistory: Prehistory,
}

impl FieldModel {
    /// `rates` holds one rate per population, or a single rate shared by all.
    pub fn new(
        origin: f64,
        grid: SpatialGrid,
        kernel: Kernel,
        rates: Vec<FiringRate>,
        delay: DelayField,
        prehistory: Prehistory,
    ) -> Result<Self, ModelError> {
        if !origin.is_finite() {
            return Err(ModelError::InvalidParameter(format!("origin {origin} is not finite")));
        }
        kernel.validate()?;
        let n = kernel.populations();
        if rates.len() != 1 && rates.len() != n {
            return Err(ModelError::Dimension(format!("{} firing rates for {n} populations", rates.len())));
        }
        rates.iter().try_for_each(FiringRate::validate)?;
        delay.validate()?;
        if prehistory.populations() != n {
            return Err(ModelError::Dimension(format!(
                "prehistory has {} populations, kernel has {n}",
                prehistory.populations()
            )));
        }
        Ok(Self {
            origin,
            grid,
            kernel,
            rates,
            delay,
            prehistory,
        })
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn delay(&self) -> &DelayField {
        &self.delay
    }

    pub fn prehistory(&self) -> &Prehistory {
        &self.prehistory
    }

    pub fn populations(&self) -> usize {
        self.kernel.populations()
    }

    pub fn rate(&self, p: usize) -> &FiringRate {
        if self.rates.len() == 1 {
            &self.rates[0]
        } else {
            &self.rates[p]
        }
    }

    pub fn with_origin(&self, origin: f64) -> Self {
        Self {
            origin,
            ..self.clone()
        }
    }

    pub fn with_prehistory(&self, prehistory: Prehistory) -> Result<Self, ModelError> {
        Self::new(
            self.origin,
            self.grid.clone(),
            self.kernel.clone(),
            self.rates.clone(),
            self.delay.clone(),
            prehistory,
        )
    }

    /// Largest per-population Lipschitz bound on the ball of radius `r`.
    pub fn lipschitz_bound(&self, radius: f64) -> f64 {
        (0..self.populations())
            .map(|p| self.rate(p).lipschitz_bound(radius))
            .fold(0.0, f64::max)
    }

    /// Width of one state: grid points times populations.
    pub fn state_len(&self) -> usize {
        self.grid.len() * self.populations()
    }
}

/// `(S_τ^φ u)(t, x, y)`: the delayed value of `u` at grid point `y` as seen
/// from `x` at time `t`, taken from the prehistory when the delayed time
/// precedes the origin and linearly interpolated in time otherwise.
pub fn shift_lookup(
    model: &FieldModel,
    trajectory: &Trajectory,
    t: f64,
    x: usize,
    y: usize,
) -> Result<Vec<f64>, ModelError> {
    let grid = model.grid();
    let (xp, yp) = (grid.point_at(x), grid.point_at(y));
    let tau = model.delay().eval(t, xp, yp);
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(ModelError::InvalidDelay {
            t,
            x: xp.to_vec(),
            y: yp.to_vec(),
        });
    }
    let s = t - tau;
    let n = model.populations();
    let pos = trajectory.position(s);
    if pos < 0.0 {
        return Ok(model.prehistory().value(s, yp));
    }
    (0..n)
        .map(|q| {
            trajectory.value_at(s, y * n + q).ok_or_else(|| {
                ModelError::InvalidParameter(format!(
                    "lookup time {s} lies beyond the trajectory end {}",
                    trajectory.end_time()
                ))
            })
        })
        .collect()
}
