use std::fmt;
use std::sync::Arc;

use super::grid::euclidean;

pub type HistoryFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// Initial history `φ(ξ, x)` for `ξ ≤ a`, one value per population.
#[derive(Clone)]
pub struct Prehistory {
    populations: usize,
    func: HistoryFn,
    /// Declares `φ(ξ, ·) → 0` as `ξ → −∞`.
    decays: bool,
    label: String,
}

impl fmt::Debug for Prehistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Prehistory")
            .field("populations", &self.populations)
            .field("decays", &self.decays)
            .field("label", &self.label)
            .finish()
    }
}

impl Prehistory {
    pub fn from_fn(populations: usize, label: impl Into<String>, func: HistoryFn) -> Self {
        Self {
            populations,
            func,
            decays: false,
            label: label.into(),
        }
    }

    pub fn zero(populations: usize) -> Self {
        Self {
            decays: true,
            ..Self::from_fn(populations, "zero", Arc::new(|_, _, out: &mut [f64]| out.fill(0.0)))
        }
    }

    pub fn constant(values: Vec<f64>) -> Self {
        let n = values.len();
        Self::from_fn(n, "constant", Arc::new(move |_, _, out: &mut [f64]| out.copy_from_slice(&values)))
    }

    /// `A e^{−|x − c|²/(2σ²)}` in every population, constant in time.
    pub fn gaussian_bump(populations: usize, amplitude: f64, width: f64, center: Vec<f64>) -> Self {
        Self::from_fn(
            populations,
            "gaussian bump",
            Arc::new(move |_, x, out: &mut [f64]| {
                let z = euclidean(x, &center[..x.len().min(center.len())]);
                out.fill(amplitude * (-0.5 * (z / width).powi(2)).exp());
            }),
        )
    }

    pub fn with_decay(mut self, decays: bool) -> Self {
        self.decays = decays;
        self
    }

    pub fn populations(&self) -> usize {
        self.populations
    }

    pub fn decays(&self) -> bool {
        self.decays
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, xi: f64, x: &[f64], out: &mut [f64]) {
        (self.func)(xi, x, out)
    }

    pub fn value(&self, xi: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.populations];
        self.eval(xi, x, &mut out);
        out
    }
}
