use super::{SolverError, TimeWindow, VolterraOperator};

/// Geometric step candidates `δ_max, δ_max/2, …` down to `δ_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLadder {
    pub delta_max: f64,
    pub delta_min: f64,
}

impl StepLadder {
    pub fn new(delta_max: f64, delta_min: f64) -> Self {
        Self { delta_max, delta_min }
    }

    /// Halvings of `δ_max`, closed by `δ_min` itself when the halvings miss it.
    pub fn candidates(&self) -> impl Iterator<Item = f64> + '_ {
        let halvings = std::iter::successors(Some(self.delta_max), |d| Some(d / 2.0))
            .take_while(move |d| *d >= self.delta_min);
        let last = halvings.clone().last().unwrap_or(self.delta_max);
        halvings.chain((last > self.delta_min).then_some(self.delta_min))
    }

    /// Smallest candidate on the ladder.
    pub fn floor(&self) -> f64 {
        self.candidates().last().unwrap_or(self.delta_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionEstimate {
    /// Achieved contraction factor `lipschitz_bound(r) · kernel_mass`.
    pub q: f64,
    pub radius: f64,
    pub delta: f64,
}

fn contraction_factor<O: VolterraOperator + ?Sized>(op: &O, lipschitz: f64, window: TimeWindow) -> f64 {
    let mass = op.kernel_mass(window);
    if mass == 0.0 {
        0.0
    } else {
        lipschitz * mass
    }
}

/// Largest ladder step whose window is certified as a `q_target` contraction
/// on the ball of radius `radius`.
pub fn estimate_step<O: VolterraOperator + ?Sized>(
    op: &O,
    window_start: f64,
    radius: f64,
    q_target: f64,
    ladder: &StepLadder,
) -> Result<ContractionEstimate, SolverError> {
    if !(q_target > 0.0 && q_target < 1.0) {
        return Err(SolverError::InvalidConfig("q_target must lie in (0, 1)".into()));
    }
    if !(radius > 0.0) {
        return Err(SolverError::InvalidConfig("radius must be positive".into()));
    }
    let lipschitz = op.lipschitz_bound(radius);
    let mut best = None;
    for delta in ladder.candidates() {
        let q = contraction_factor(op, lipschitz, TimeWindow::new(window_start, delta));
        if q <= q_target {
            return Ok(ContractionEstimate { q, radius, delta });
        }
        best = Some((delta, q));
    }
    let (delta, q) = best.unwrap_or((ladder.delta_max, f64::INFINITY));
    Err(SolverError::StepCollapse {
        at: window_start,
        delta,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volterra::Trajectory;
    use std::ops::Range;

    /// Mass `scale·δ`, Lipschitz `2r`: the shape of the squared-integral operator.
    struct Linear {
        scale: f64,
    }

    impl VolterraOperator for Linear {
        type Cache = ();
        fn origin(&self) -> f64 {
            0.0
        }
        fn state_len(&self) -> usize {
            1
        }
        fn new_cache(&self) {}
        fn apply(&self, _: &Trajectory, _: usize, _: Range<usize>, _: &mut (), out: &mut [f64]) -> Result<(), SolverError> {
            out.fill(0.0);
            Ok(())
        }
        fn lipschitz_bound(&self, radius: f64) -> f64 {
            2.0 * radius
        }
        fn kernel_mass(&self, window: TimeWindow) -> f64 {
            self.scale * window.length
        }
    }

    #[test]
    fn ladder_stops_at_first_certified_step() {
        let op = Linear { scale: 1.0 };
        let ladder = StepLadder::new(1.0, 2f64.powi(-20));
        let est = estimate_step(&op, 0.3, 2.0, 0.5, &ladder).unwrap();
        assert_eq!(est.delta, 0.125);
        assert_eq!(est.q, 0.5);
    }

    #[test]
    fn zero_mass_gives_full_step() {
        let op = Linear { scale: 0.0 };
        let ladder = StepLadder::new(1.0, 1e-6);
        let est = estimate_step(&op, 0.0, 5.0, 0.5, &ladder).unwrap();
        assert_eq!(est.delta, 1.0);
        assert_eq!(est.q, 0.0);
    }

    #[test]
    fn collapse_reports_best_pair() {
        let op = Linear { scale: 1.0 };
        let ladder = StepLadder::new(1.0, 0.25);
        match estimate_step(&op, 1.0, 10.0, 0.5, &ladder) {
            Err(SolverError::StepCollapse { delta, q, .. }) => {
                assert_eq!(delta, 0.25);
                assert_eq!(q, 5.0);
            }
            other => panic!("expected collapse, got {other:?}"),
        }
    }

    #[test]
    fn doubling_radius_never_lengthens_step() {
        let op = Linear { scale: 1.0 };
        let ladder = StepLadder::new(1.0, 2f64.powi(-20));
        // brute force over the ladder for each radius
        for k in 0..30 {
            let r = 0.05 * 1.3f64.powi(k);
            let d1 = estimate_step(&op, 0.0, r, 0.5, &ladder).unwrap().delta;
            let d2 = estimate_step(&op, 0.0, 2.0 * r, 0.5, &ladder).unwrap().delta;
            let brute = ladder
                .candidates()
                .find(|d| 2.0 * (2.0 * r) * d <= 0.5)
                .unwrap();
            assert_eq!(d2, brute);
            assert!(d2 <= d1);
            assert!(d2 == d1 || d2 == d1 / 2.0);
        }
    }

    #[test]
    fn ladder_floor_respects_minimum() {
        let ladder = StepLadder::new(1.0, 0.1);
        assert_eq!(ladder.floor(), 0.1);
        assert_eq!(ladder.candidates().count(), 5);
    }
}
