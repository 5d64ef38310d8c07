use super::{SolutionSegment, SolverError, TimeWindow};

/// Relative slack used when matching times against grid nodes.
const NODE_SLACK: f64 = 1e-9;

/// Uniform time grid `t_j = origin + j·step`, `j = 0..nodes`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub origin: f64,
    pub step: f64,
    pub nodes: usize,
}

impl TimeGrid {
    /// Grid from `origin` to exactly `horizon` whose spacing is the largest
    /// value not exceeding `max_step` that divides the interval evenly.
    pub fn covering(origin: f64, horizon: f64, max_step: f64) -> Result<Self, SolverError> {
        if !(horizon > origin) || !horizon.is_finite() || !origin.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "horizon {horizon} must exceed origin {origin}"
            )));
        }
        if !(max_step > 0.0) {
            return Err(SolverError::InvalidConfig("time step must be positive".into()));
        }
        let span = horizon - origin;
        let intervals = ((span / max_step) - NODE_SLACK).ceil().max(1.0) as usize;
        Ok(Self {
            origin,
            step: span / intervals as f64,
            nodes: intervals + 1,
        })
    }

    pub fn time(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.time(self.nodes - 1)
    }
}

/// Field values at one instant, flattened as `point × population`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub time: f64,
    pub values: Vec<f64>,
}

impl FieldState {
    pub fn norm(&self) -> f64 {
        max_abs(&self.values)
    }
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Grid-sampled series of field states.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    origin: f64,
    step: f64,
    width: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(origin: f64, step: f64, width: usize) -> Self {
        Self {
            origin,
            step,
            width,
            data: Vec::new(),
        }
    }

    pub fn zeros(origin: f64, step: f64, width: usize, nodes: usize) -> Self {
        Self {
            origin,
            step,
            width,
            data: vec![0.0; width * nodes],
        }
    }

    pub fn from_raw(origin: f64, step: f64, width: usize, data: Vec<f64>) -> Self {
        assert!(width > 0 && data.len().is_multiple_of(width), "ragged trajectory data");
        Self {
            origin,
            step,
            width,
            data,
        }
    }

    /// Samples `f(t, &mut state)` on every node of `grid`.
    pub fn from_fn(grid: &TimeGrid, width: usize, mut f: impl FnMut(f64, &mut [f64])) -> Self {
        let mut traj = Self::zeros(grid.origin, grid.step, width, grid.nodes);
        for j in 0..grid.nodes {
            let t = grid.time(j);
            f(t, traj.state_mut(j));
        }
        traj
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.step
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn state(&self, j: usize) -> &[f64] {
        &self.data[j * self.width..(j + 1) * self.width]
    }

    pub fn state_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.width..(j + 1) * self.width]
    }

    pub fn states(&self, nodes: std::ops::Range<usize>) -> &[f64] {
        &self.data[nodes.start * self.width..nodes.end * self.width]
    }

    pub fn states_mut(&mut self, nodes: std::ops::Range<usize>) -> &mut [f64] {
        &mut self.data[nodes.start * self.width..nodes.end * self.width]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn push(&mut self, state: &[f64]) {
        assert_eq!(state.len(), self.width, "state width mismatch");
        self.data.extend_from_slice(state);
    }

    pub fn truncate(&mut self, nodes: usize) {
        self.data.truncate(nodes * self.width);
    }

    pub fn sup_norm(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn field_state(&self, j: usize) -> FieldState {
        FieldState {
            time: self.time(j),
            values: self.state(j).to_vec(),
        }
    }

    /// Fractional node position of time `t`, snapped to the nearest node
    /// when within rounding distance of it.
    pub fn position(&self, t: f64) -> f64 {
        let pos = (t - self.origin) / self.step;
        let nearest = pos.round();
        if (pos - nearest).abs() <= NODE_SLACK {
            nearest
        } else {
            pos
        }
    }

    /// Linear interpolation of component `c` at time `t`; `None` outside
    /// the sampled span.
    pub fn value_at(&self, t: f64, c: usize) -> Option<f64> {
        let pos = self.position(t);
        if pos < 0.0 || pos > (self.len() as f64 - 1.0) || self.is_empty() {
            return None;
        }
        let j0 = pos.floor() as usize;
        let frac = pos - j0 as f64;
        let v0 = self.state(j0)[c];
        if frac == 0.0 {
            Some(v0)
        } else {
            let v1 = self.state(j0 + 1)[c];
            Some(v0 + frac * (v1 - v0))
        }
    }
}

/// Restriction `E_ξ`: the samples of `trajectory` with timestamps in the window.
pub fn restrict_window(trajectory: &Trajectory, w: TimeWindow) -> Result<SolutionSegment, SolverError> {
    let out_of_range = || SolverError::OutOfRange {
        start: w.start,
        end: w.end(),
        span_start: trajectory.origin(),
        span_end: trajectory.end_time(),
    };
    if trajectory.is_empty() || !(w.length > 0.0) {
        return Err(out_of_range());
    }
    let first = trajectory.position(w.start);
    let last = trajectory.position(w.end());
    if first < 0.0 || last > trajectory.len() as f64 - 1.0 {
        return Err(out_of_range());
    }
    let j0 = first.ceil() as usize;
    let j1 = last.floor() as usize;
    let samples = (j0..=j1).map(|j| trajectory.field_state(j)).collect();
    Ok(SolutionSegment::new(w, trajectory.step(), samples))
}

/// Extension `P_ξ`: holds the final state of `segment` constant up to `horizon`.
pub fn extend_window(segment: &SolutionSegment, horizon: f64) -> Trajectory {
    let width = segment.samples.first().map_or(1, |s| s.values.len());
    let origin = segment.samples.first().map_or(segment.window.start, |s| s.time);
    let mut traj = Trajectory::new(origin, segment.step, width);
    for s in &segment.samples {
        traj.push(&s.values);
    }
    let Some(last) = segment.samples.last() else {
        return traj;
    };
    let extra = ((horizon - last.time) / segment.step - NODE_SLACK).ceil().max(0.0) as usize;
    for _ in 0..extra {
        traj.push(&last.values);
    }
    traj
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(origin: f64, step: f64, values: &[f64]) -> Trajectory {
        Trajectory::from_raw(origin, step, 1, values.to_vec())
    }

    #[test]
    fn restriction_picks_samples_inside_window() {
        let traj = line(0.0, 0.5, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let seg = restrict_window(&traj, TimeWindow::new(0.0, 1.0)).unwrap();
        let times: Vec<f64> = seg.samples.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![0.0, 0.5, 1.0]);
        assert_eq!(seg.sup_norm, 2.0);
    }

    #[test]
    fn restriction_to_full_span_is_identity() {
        let traj = line(0.0, 0.5, &[1.0, -2.0, 3.0, 0.5, 4.0]);
        let seg = restrict_window(&traj, TimeWindow::new(0.0, 2.0)).unwrap();
        let values: Vec<f64> = seg.samples.iter().map(|s| s.values[0]).collect();
        assert_eq!(values, traj.as_slice());
    }

    #[test]
    fn constant_trajectory_has_constant_norm() {
        let traj = line(0.0, 0.25, &[3.0; 9]);
        let seg = restrict_window(&traj, TimeWindow::new(0.5, 0.75)).unwrap();
        assert_eq!(seg.sup_norm, 3.0);
    }

    #[test]
    fn restriction_outside_span_is_range_error() {
        let traj = line(0.0, 0.5, &[0.0, 1.0, 2.0]);
        let err = restrict_window(&traj, TimeWindow::new(0.5, 2.0)).unwrap_err();
        assert!(matches!(err, SolverError::OutOfRange { .. }));
        assert!(restrict_window(&traj, TimeWindow::new(-0.5, 1.0)).is_err());
    }

    #[test]
    fn extension_holds_last_state() {
        let traj = line(0.0, 0.5, &[1.0, 7.0, 5.0]);
        let seg = restrict_window(&traj, TimeWindow::new(0.0, 1.0)).unwrap();
        let ext = extend_window(&seg, 2.0);
        assert_eq!(ext.len(), 5);
        assert_eq!(&ext.as_slice()[3..], &[5.0, 5.0]);
        assert_eq!(ext.sup_norm(), seg.sup_norm);
        assert_eq!(ext.sup_norm(), 7.0);
    }

    #[test]
    fn zero_segment_extends_to_zero() {
        let traj = line(0.0, 0.5, &[0.0; 3]);
        let seg = restrict_window(&traj, TimeWindow::new(0.0, 1.0)).unwrap();
        assert_eq!(extend_window(&seg, 3.0).sup_norm(), 0.0);
    }

    #[test]
    fn covering_grid_ends_on_horizon() {
        let g = TimeGrid::covering(0.0, std::f64::consts::PI, 1e-3).unwrap();
        assert!((g.end() - std::f64::consts::PI).abs() < 1e-12);
        assert!(g.step <= 1e-3);
        let g = TimeGrid::covering(0.0, 2.0, 0.5).unwrap();
        assert_eq!(g.nodes, 5);
        assert_eq!(g.step, 0.5);
        assert!(TimeGrid::covering(1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let traj = line(1.0, 0.5, &[0.0, 1.0, 3.0]);
        assert_eq!(traj.value_at(1.25, 0), Some(0.5));
        assert_eq!(traj.value_at(2.0, 0), Some(3.0));
        assert_eq!(traj.value_at(2.1, 0), None);
    }
}
