//! Randomised check of the Volterra (causality) property.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{apply_full, SolverError, TimeGrid, TimeWindow, Trajectory, VolterraOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalityCheck {
    pub trials: usize,
    /// Length of the shared prefix `[a, a + ξ]`.
    pub xi: f64,
    pub seed: u64,
    /// Violations at or below this level are attributed to quadrature.
    pub tolerance: f64,
    /// Sampled trajectory values are uniform in `[-amplitude, amplitude]`.
    pub amplitude: f64,
}

impl Default for CausalityCheck {
    fn default() -> Self {
        Self {
            trials: 100,
            xi: 0.5,
            seed: 0,
            tolerance: 1e-10,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalityReport {
    pub trials: usize,
    /// Largest output difference on the shared prefix.
    pub max_violation: f64,
    /// Trials whose prefix difference exceeded the tolerance.
    pub violating_trials: usize,
    /// Delay floor used for the extended τ-Volterra comparison, if any.
    pub delay_floor: Option<f64>,
    /// Largest output difference on `[a, a + ξ + τ_min]`.
    pub max_extended_violation: Option<f64>,
    pub extended_violating_trials: usize,
}

impl CausalityReport {
    pub fn is_causal(&self) -> bool {
        self.violating_trials == 0
    }
}

fn random_pair(
    rng: &mut ChaCha8Rng,
    grid: &TimeGrid,
    width: usize,
    prefix_nodes: usize,
    amplitude: f64,
) -> (Trajectory, Trajectory) {
    let first = Trajectory::from_fn(grid, width, |_, s| {
        s.iter_mut().for_each(|v| *v = rng.gen_range(-amplitude..=amplitude))
    });
    let mut second = first.clone();
    // a single-signed shift makes every later integral differ
    let shift = rng.gen_range(0.1..=1.0) * amplitude;
    for j in prefix_nodes..grid.nodes {
        for v in second.state_mut(j) {
            *v += shift * rng.gen_range(0.5..=1.0);
        }
    }
    (first, second)
}

fn max_difference(a: &Trajectory, b: &Trajectory, nodes: Range<usize>) -> f64 {
    a.states(nodes.clone())
        .iter()
        .zip(b.states(nodes))
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Feeds random trajectory pairs that agree on `[a, a + ξ]` to `op` and
/// measures how much the outputs differ on that prefix. τ-Volterra operators
/// are additionally compared on `[a, a + ξ + τ_min]`.
pub fn check_volterra_property<O: VolterraOperator + ?Sized>(
    op: &O,
    grid: &TimeGrid,
    check: &CausalityCheck,
) -> Result<CausalityReport, SolverError> {
    if !(check.xi > 0.0) || grid.origin + check.xi > grid.end() {
        return Err(SolverError::OutOfRange {
            start: grid.origin,
            end: grid.origin + check.xi,
            span_start: grid.origin,
            span_end: grid.end(),
        });
    }
    let prefix = TimeWindow::new(grid.origin, check.xi);
    let prefix_last = ((prefix.length / grid.step) + 1e-9).floor() as usize;
    let floor = op.delay_floor().filter(|t| *t > 0.0);
    let extended_last = floor.map(|tau| {
        let nodes = (((check.xi + tau) / grid.step) + 1e-9).floor() as usize;
        nodes.min(grid.nodes - 1)
    });

    let mut rng = ChaCha8Rng::seed_from_u64(check.seed);
    let mut report = CausalityReport {
        trials: check.trials,
        max_violation: 0.0,
        violating_trials: 0,
        delay_floor: floor,
        max_extended_violation: floor.map(|_| 0.0),
        extended_violating_trials: 0,
    };
    for _ in 0..check.trials {
        let (a, b) = random_pair(&mut rng, grid, op.state_len(), prefix_last + 1, check.amplitude);
        let fa = apply_full(op, &a)?;
        let fb = apply_full(op, &b)?;
        let v = max_difference(&fa, &fb, 0..prefix_last + 1);
        report.max_violation = report.max_violation.max(v);
        if !(v <= check.tolerance) {
            report.violating_trials += 1;
        }
        if let (Some(last), Some(worst)) = (extended_last, report.max_extended_violation.as_mut()) {
            let v = max_difference(&fa, &fb, 0..last + 1);
            *worst = worst.max(v);
            if !(v <= check.tolerance) {
                report.extended_violating_trials += 1;
            }
        }
    }
    Ok(report)
}

/// Deliberately anticausal operator `(Ψy)(t) = ∫ₐ^{t + lead} y ds`, used as
/// a counterexample for the causality check.
#[derive(Debug, Clone, Copy)]
pub struct LookaheadIntegral {
    pub origin: f64,
    pub lead: f64,
}

impl VolterraOperator for LookaheadIntegral {
    type Cache = ();

    fn origin(&self) -> f64 {
        self.origin
    }

    fn state_len(&self) -> usize {
        1
    }

    fn new_cache(&self) {}

    fn apply(&self, y: &Trajectory, _: usize, nodes: Range<usize>, _: &mut (), out: &mut [f64]) -> Result<(), SolverError> {
        let h = y.step();
        let mut cumulative = vec![0.0; y.len()];
        for l in 1..y.len() {
            cumulative[l] = cumulative[l - 1] + 0.5 * h * (y.state(l - 1)[0] + y.state(l)[0]);
        }
        let lead_nodes = (self.lead / h).round() as usize;
        for (slot, j) in out.iter_mut().zip(nodes) {
            *slot = cumulative[(j + lead_nodes).min(y.len() - 1)];
        }
        Ok(())
    }

    fn lipschitz_bound(&self, _: f64) -> f64 {
        1.0
    }

    fn kernel_mass(&self, window: TimeWindow) -> f64 {
        window.length + self.lead
    }
}
