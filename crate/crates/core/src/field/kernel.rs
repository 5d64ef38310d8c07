use std::fmt;
use std::sync::Arc;

use super::grid::euclidean;
use super::ModelError;

/// Time factor `η(t, s)` of a separable kernel. Every form vanishes for `s > t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporalKernel {
    /// `κ e^{−κ(t−s)}`.
    Exponential { rate: f64 },
    /// `κ (t−s) e^{−κ(t−s)}`.
    Alpha { rate: f64 },
    /// `e^{−κ s}`, independent of `t`.
    TimeDecay { rate: f64 },
}

impl TemporalKernel {
    pub fn rate(&self) -> f64 {
        match *self {
            Self::Exponential { rate } | Self::Alpha { rate } | Self::TimeDecay { rate } => rate,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let rate = self.rate();
        if rate > 0.0 && rate.is_finite() {
            Ok(())
        } else {
            Err(ModelError::InvalidParameter(format!("temporal rate {rate} must be positive")))
        }
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        if s > t {
            return 0.0;
        }
        match *self {
            Self::Exponential { rate } => rate * (-rate * (t - s)).exp(),
            Self::Alpha { rate } => rate * (t - s) * (-rate * (t - s)).exp(),
            Self::TimeDecay { rate } => (-rate * s).exp(),
        }
    }

    /// Depends on `t − s` only.
    pub fn is_stationary(&self) -> bool {
        !matches!(self, Self::TimeDecay { .. })
    }

    /// `sup_{t ∈ [t0, t0+δ]} ∫_{t0}^{t} |η(t, s)| ds`.
    pub fn window_mass(&self, t0: f64, delta: f64) -> f64 {
        if !(delta > 0.0) {
            return 0.0;
        }
        match *self {
            Self::Exponential { rate } => -(-rate * delta).exp_m1(),
            Self::Alpha { rate } => {
                let x = rate * delta;
                (1.0 - (-x).exp() * (1.0 + x)) / rate
            }
            Self::TimeDecay { rate } => ((-rate * t0).exp() - (-rate * (t0 + delta)).exp()) / rate,
        }
    }

    /// `∫_{−∞}^{t−D} |η(t, s)| ds`, when it is finite and independent of `t`.
    pub fn tail_mass(&self, depth: f64) -> Option<f64> {
        let d = depth.max(0.0);
        match *self {
            Self::Exponential { rate } => Some((-rate * d).exp()),
            Self::Alpha { rate } => Some((-rate * d).exp() * (d + 1.0 / rate)),
            Self::TimeDecay { .. } => None,
        }
    }
}

/// Connectivity `ω(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialKernel {
    /// `M e^{−m|x−y|} − K e^{−k|x−y|}` with `M > K > 0`, `m > k > 0`.
    MexicanHat {
        excitation: f64,
        inhibition: f64,
        excitation_decay: f64,
        inhibition_decay: f64,
    },
    /// `M (1 − |x−y|) e^{−m|x−y|}`.
    WizardHat { amplitude: f64, decay: f64 },
    /// `A e^{−|x−y|²/(2σ²)}`.
    Gaussian { amplitude: f64, width: f64 },
    /// `A g(x)` with `g` the unit-mass one dimensional Gaussian of width `σ`,
    /// applied to the first coordinate of `x`; independent of `y`.
    Profile { amplitude: f64, width: f64 },
    Zero,
    Scaled { factor: f64, kernel: Box<SpatialKernel> },
}

pub(crate) fn normal_density(x: f64, width: f64) -> f64 {
    (-0.5 * (x / width).powi(2)).exp() / (width * (2.0 * std::f64::consts::PI).sqrt())
}

impl SpatialKernel {
    pub fn mexican_hat(
        excitation: f64,
        inhibition: f64,
        excitation_decay: f64,
        inhibition_decay: f64,
    ) -> Result<Self, ModelError> {
        let k = Self::MexicanHat {
            excitation,
            inhibition,
            excitation_decay,
            inhibition_decay,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParameter(msg));
        match self {
            Self::MexicanHat {
                excitation: big_m,
                inhibition: big_k,
                excitation_decay: m,
                inhibition_decay: k,
            } => {
                if !(big_m > big_k && *big_k > 0.0) {
                    return bad(format!("mexican hat needs M > K > 0, got M={big_m}, K={big_k}"));
                }
                if !(m > k && *k > 0.0) {
                    return bad(format!("mexican hat needs m > k > 0, got m={m}, k={k}"));
                }
                Ok(())
            }
            Self::WizardHat { amplitude, decay } => {
                if amplitude.is_finite() && *decay > 0.0 {
                    Ok(())
                } else {
                    bad(format!("wizard hat needs finite M and m > 0, got M={amplitude}, m={decay}"))
                }
            }
            Self::Gaussian { amplitude, width } | Self::Profile { amplitude, width } => {
                if amplitude.is_finite() && *width > 0.0 {
                    Ok(())
                } else {
                    bad(format!("gaussian needs finite amplitude and width > 0, got {amplitude}, {width}"))
                }
            }
            Self::Zero => Ok(()),
            Self::Scaled { factor, kernel } => {
                if factor.is_finite() {
                    kernel.validate()
                } else {
                    bad(format!("kernel scale {factor} is not finite"))
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Self::Profile { amplitude, width } => amplitude * normal_density(x[0], *width),
            Self::Zero => 0.0,
            Self::Scaled { factor, kernel } => factor * kernel.eval(x, y),
            _ => self.radial(euclidean(x, y)),
        }
    }

    fn radial(&self, z: f64) -> f64 {
        match *self {
            Self::MexicanHat {
                excitation,
                inhibition,
                excitation_decay,
                inhibition_decay,
            } => excitation * (-excitation_decay * z).exp() - inhibition * (-inhibition_decay * z).exp(),
            Self::WizardHat { amplitude, decay } => amplitude * (1.0 - z) * (-decay * z).exp(),
            Self::Gaussian { amplitude, width } => amplitude * (-0.5 * (z / width).powi(2)).exp(),
            _ => unreachable!("not a radial kernel"),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Scaled { factor, kernel } => *factor == 0.0 || kernel.is_zero(),
            _ => false,
        }
    }

    /// Closed-form bound on `∫_R |ω(x, y)| dy` for one dimensional radial kernels.
    pub fn line_mass_bound(&self) -> Option<f64> {
        match *self {
            Self::MexicanHat {
                excitation,
                inhibition,
                excitation_decay,
                inhibition_decay,
            } => Some(2.0 * excitation / excitation_decay + 2.0 * inhibition / inhibition_decay),
            // |1 − z| ≤ 1 + z
            Self::WizardHat { amplitude, decay } => Some(2.0 * amplitude.abs() * (1.0 / decay + 1.0 / (decay * decay))),
            Self::Gaussian { amplitude, width } => Some(amplitude.abs() * width * (2.0 * std::f64::consts::PI).sqrt()),
            Self::Zero => Some(0.0),
            _ => None,
        }
    }
}

/// Callable kernel `W(t, s, x, y)` writing an `n × n` row-major block.
pub type KernelFn = Arc<dyn Fn(f64, f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Spatiotemporal weight `W(t, s, x, y)` for `n` populations.
#[derive(Clone)]
pub enum Kernel {
    /// `W_pq(t, s, x, y) = η_p(t, s) ω_pq(x, y)`.
    Separable {
        temporal: Vec<TemporalKernel>,
        spatial: Vec<SpatialKernel>,
    },
    General { populations: usize, w: KernelFn },
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Separable { temporal, spatial } => f
                .debug_struct("Separable")
                .field("temporal", temporal)
                .field("spatial", spatial)
                .finish(),
            Self::General { populations, .. } => {
                f.debug_struct("General").field("populations", populations).finish_non_exhaustive()
            }
        }
    }
}

impl Kernel {
    pub fn scalar(temporal: TemporalKernel, spatial: SpatialKernel) -> Self {
        Self::Separable {
            temporal: vec![temporal],
            spatial: vec![spatial],
        }
    }

    pub fn zero(populations: usize) -> Self {
        Self::Separable {
            temporal: vec![TemporalKernel::Exponential { rate: 1.0 }; populations],
            spatial: vec![SpatialKernel::Zero; populations * populations],
        }
    }

    pub fn populations(&self) -> usize {
        match self {
            Self::Separable { temporal, .. } => temporal.len(),
            Self::General { populations, .. } => *populations,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::Separable { temporal, spatial } => {
                let n = temporal.len();
                if n == 0 || spatial.len() != n * n {
                    return Err(ModelError::Dimension(format!(
                        "{n} temporal factors need {} spatial blocks, got {}",
                        n * n,
                        spatial.len()
                    )));
                }
                temporal.iter().try_for_each(TemporalKernel::validate)?;
                spatial.iter().try_for_each(SpatialKernel::validate)
            }
            Self::General { populations, .. } if *populations == 0 => {
                Err(ModelError::Dimension("kernel needs at least one population".into()))
            }
            Self::General { .. } => Ok(()),
        }
    }

    /// Writes the `n × n` block `W(t, s, x, y)` into `out`.
    pub fn eval(&self, t: f64, s: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
        match self {
            Self::Separable { temporal, spatial } => {
                let n = temporal.len();
                for p in 0..n {
                    let eta = temporal[p].eval(t, s);
                    for q in 0..n {
                        out[p * n + q] = eta * spatial[p * n + q].eval(x, y);
                    }
                }
            }
            Self::General { w, .. } => w(t, s, x, y, out),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Separable { spatial, .. } => spatial.iter().all(SpatialKernel::is_zero),
            Self::General { .. } => false,
        }
    }

    /// The same kernel behind the general callable interface.
    pub fn to_general(&self) -> Self {
        let n = self.populations();
        let inner = self.clone();
        Self::General {
            populations: n,
            w: Arc::new(move |t, s, x, y, out| inner.eval(t, s, x, y, out)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * f(lo + i as f64 * h)
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn exponential_window_mass_matches_closed_form() {
        let eta = TemporalKernel::Exponential { rate: 1.5 };
        let delta = 0.4;
        assert!((eta.window_mass(2.0, delta) - (1.0 - (-1.5 * delta).exp())).abs() < 1e-15);
        let numeric = quad(|s| eta.eval(2.0 + delta, s), 2.0, 2.0 + delta, 4000);
        assert!((numeric - eta.window_mass(2.0, delta)).abs() < 1e-7);
    }

    #[test]
    fn alpha_and_decay_masses_match_quadrature() {
        let alpha = TemporalKernel::Alpha { rate: 2.0 };
        let numeric = quad(|s| alpha.eval(1.3, s), 0.3, 1.3, 4000);
        assert!((numeric - alpha.window_mass(0.3, 1.0)).abs() < 1e-7);
        let decay = TemporalKernel::TimeDecay { rate: 1.0 };
        let numeric = quad(|s| decay.eval(0.0, s), -1.0, 0.0, 4000);
        assert!((numeric - decay.window_mass(-1.0, 1.0)).abs() < 1e-7);
    }

    #[test]
    fn temporal_kernels_are_causal() {
        for eta in [
            TemporalKernel::Exponential { rate: 1.0 },
            TemporalKernel::Alpha { rate: 1.0 },
            TemporalKernel::TimeDecay { rate: 1.0 },
        ] {
            assert_eq!(eta.eval(1.0, 1.0 + 1e-12), 0.0);
        }
    }

    #[test]
    fn tails_follow_closed_forms() {
        let eta = TemporalKernel::Exponential { rate: 1.0 };
        assert!((eta.tail_mass(-(1e-8f64).ln()).unwrap() - 1e-8).abs() < 1e-20);
        assert!(TemporalKernel::TimeDecay { rate: 1.0 }.tail_mass(3.0).is_none());
        let alpha = TemporalKernel::Alpha { rate: 0.5 };
        let numeric = quad(|u| 0.5 * u * (-0.5 * u).exp(), 3.0, 200.0, 200_000);
        assert!((alpha.tail_mass(3.0).unwrap() - numeric).abs() < 1e-6);
    }

    #[test]
    fn mexican_hat_constraints() {
        assert!(SpatialKernel::mexican_hat(2.0, 1.0, 2.0, 1.0).is_ok());
        assert!(SpatialKernel::mexican_hat(1.0, 2.0, 2.0, 1.0).is_err());
        assert!(SpatialKernel::mexican_hat(2.0, 1.0, 1.0, 2.0).is_err());
        let w = SpatialKernel::mexican_hat(2.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(w.line_mass_bound(), Some(4.0));
        assert_eq!(w.eval(&[0.3], &[0.3]), 1.0);
    }

    #[test]
    fn general_wrapper_agrees_with_separable() {
        let k = Kernel::Separable {
            temporal: vec![TemporalKernel::Exponential { rate: 1.0 }, TemporalKernel::Alpha { rate: 2.0 }],
            spatial: vec![
                SpatialKernel::Gaussian { amplitude: 1.0, width: 0.5 },
                SpatialKernel::Zero,
                SpatialKernel::WizardHat { amplitude: 1.0, decay: 1.0 },
                SpatialKernel::Scaled {
                    factor: -0.5,
                    kernel: Box::new(SpatialKernel::Gaussian { amplitude: 1.0, width: 1.0 }),
                },
            ],
        };
        k.validate().unwrap();
        let g = k.to_general();
        let (mut a, mut b) = ([0.0; 4], [0.0; 4]);
        k.eval(1.0, 0.4, &[0.1], &[-0.7], &mut a);
        g.eval(1.0, 0.4, &[0.1], &[-0.7], &mut b);
        assert_eq!(a, b);
    }
}
