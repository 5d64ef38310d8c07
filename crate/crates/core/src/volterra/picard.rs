use super::trajectory::max_abs;
use super::{SolutionSegment, SolverError, TimeWindow, Trajectory, VolterraOperator};

/// Converged window together with its iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSolution {
    pub segment: SolutionSegment,
    pub iterations: usize,
    /// Successive-difference ratios `‖u_{k+1} − u_k‖ / ‖u_k − u_{k−1}‖`.
    pub ratios: Vec<f64>,
    /// `prior` extended by the converged window values.
    pub trajectory: Trajectory,
}

impl WindowSolution {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Solves the fixed-point problem on `window` with every value of `prior`
/// frozen.
///
/// `prior` holds the accepted nodes; the window must start at its last node
/// (or at its origin when it is empty) and its length is rounded to a whole
/// number of grid steps. The first iterate holds the last accepted state
/// constant. Iteration stops when successive iterates differ by at most
/// `tol·(1 − q)` in the sup norm.
#[allow(clippy::too_many_arguments)]
pub fn picard_solve_window<O: VolterraOperator + ?Sized>(
    op: &O,
    prior: &Trajectory,
    window: TimeWindow,
    q: f64,
    tol: f64,
    max_iter: usize,
    cache: &mut O::Cache,
) -> Result<WindowSolution, SolverError> {
    let h = prior.step();
    let width = prior.width();
    let accepted = prior.len();
    let start_node = accepted.saturating_sub(1);
    let expected_start = prior.time(start_node);
    if (window.start - expected_start).abs() > 1e-9 * h.max(1.0) {
        return Err(SolverError::OutOfRange {
            start: window.start,
            end: window.end(),
            span_start: prior.origin(),
            span_end: expected_start,
        });
    }
    let steps = ((window.length / h) + 1e-9).floor() as usize;
    if steps == 0 {
        return Err(SolverError::InvalidConfig(format!(
            "window length {} is shorter than the grid step {h}",
            window.length
        )));
    }
    let last_node = start_node + steps;
    let first_new = accepted;
    let nodes = first_new..last_node + 1;

    let mut iterate = prior.clone();
    let hold = if accepted > 0 {
        prior.state(accepted - 1).to_vec()
    } else {
        vec![0.0; width]
    };
    while iterate.len() <= last_node {
        iterate.push(&hold);
    }

    let threshold = tol * (1.0 - q.clamp(0.0, 1.0));
    let mut next = vec![0.0; nodes.len() * width];
    let mut ratios = Vec::new();
    let mut previous: Option<f64> = None;
    let mut diff = f64::INFINITY;
    for iteration in 1..=max_iter {
        op.apply(&iterate, accepted, nodes.clone(), cache, &mut next)?;
        if let Some(pos) = next.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite {
                at: iterate.time(first_new + pos / width),
            });
        }
        let current = iterate.states_mut(nodes.clone());
        diff = current
            .iter()
            .zip(&next)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        current.copy_from_slice(&next);
        if let Some(prev) = previous {
            ratios.push(diff / prev);
        }
        if diff <= threshold {
            let samples = (start_node..=last_node).map(|j| iterate.field_state(j)).collect();
            let actual = TimeWindow::new(window.start, steps as f64 * h);
            return Ok(WindowSolution {
                segment: SolutionSegment::new(actual, h, samples),
                iterations: iteration,
                ratios,
                trajectory: iterate,
            });
        }
        previous = Some(diff);
    }
    Err(SolverError::NonConvergence {
        start: window.start,
        iterations: max_iter,
        last_difference: diff,
    })
}

/// Sup norm of `(Ψ P y)` over the `steps` nodes following the accepted prefix.
pub(crate) fn lookahead_norm<O: VolterraOperator + ?Sized>(
    op: &O,
    prior: &Trajectory,
    steps: usize,
    cache: &mut O::Cache,
) -> Result<f64, SolverError> {
    let width = prior.width();
    let accepted = prior.len();
    let last_node = accepted.saturating_sub(1) + steps;
    let mut extended = prior.clone();
    let hold = if accepted > 0 {
        prior.state(accepted - 1).to_vec()
    } else {
        vec![0.0; width]
    };
    while extended.len() <= last_node {
        extended.push(&hold);
    }
    let nodes = accepted..last_node + 1;
    let mut out = vec![0.0; nodes.len() * width];
    op.apply(&extended, accepted, nodes, cache, &mut out)?;
    Ok(max_abs(&out))
}
