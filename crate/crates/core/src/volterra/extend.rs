use super::picard::lookahead_norm;
use super::{
    estimate_step, picard_solve_window, ContractionEstimate, OutcomeKind, SolutionOutcome,
    SolutionSegment, SolverConfig, SolverError, StallReason, StepLadder, TimeGrid, TimeWindow,
    Trajectory, VolterraOperator, WindowDiagnostics,
};

/// Slack allowed on top of `q_target` for measured Picard ratios.
pub(crate) const RATIO_SLACK: f64 = 0.1;

struct Extension<'a, O: VolterraOperator + ?Sized> {
    op: &'a O,
    cfg: &'a SolverConfig,
    grid: TimeGrid,
    ladder: StepLadder,
    cache: O::Cache,
    accepted: Trajectory,
    accepted_norm: f64,
    segments: Vec<SolutionSegment>,
    diagnostics: Vec<WindowDiagnostics>,
    events: Vec<String>,
}

enum Step {
    Accepted,
    Finished(OutcomeKind),
}

impl<'a, O: VolterraOperator + ?Sized> Extension<'a, O> {
    fn current_time(&self) -> f64 {
        if self.accepted.is_empty() {
            self.grid.origin
        } else {
            self.accepted.end_time()
        }
    }

    fn current_node(&self) -> usize {
        self.accepted.len().saturating_sub(1)
    }

    fn remaining_steps(&self) -> usize {
        self.grid.nodes - 1 - self.current_node()
    }

    fn steps_for(&self, delta: f64) -> usize {
        (((delta / self.grid.step) + 1e-9).floor() as usize).min(self.remaining_steps())
    }

    /// `r = ‖Ψ P y‖ / (1 − q) + 1` over the accepted prefix plus `delta`.
    fn radius_for(&mut self, delta: f64) -> Result<f64, SolverError> {
        let steps = self.steps_for(delta).max(1);
        let ahead = lookahead_norm(self.op, &self.accepted, steps, &mut self.cache)?;
        let norm = ahead.max(self.accepted_norm);
        Ok(norm / (1.0 - self.cfg.q_target) + 1.0)
    }

    /// Largest ladder step certified with the radius measured over that
    /// same step. Rungs that fail even with the accepted norm alone are
    /// skipped without a lookahead.
    fn choose_step(&mut self, start: f64) -> Result<ContractionEstimate, SolverError> {
        let floor_radius = self.accepted_norm / (1.0 - self.cfg.q_target) + 1.0;
        let first = estimate_step(self.op, start, floor_radius, self.cfg.q_target, &self.ladder)?.delta;
        let mut last = (first, f64::INFINITY);
        let rungs: Vec<f64> = self.ladder.candidates().skip_while(|d| *d > first).collect();
        for trial in rungs {
            let radius = self.radius_for(trial)?;
            if !radius.is_finite() {
                return Err(SolverError::NonFinite { at: start });
            }
            let q = self.q_for(radius, start, trial);
            if q <= self.cfg.q_target {
                return Ok(ContractionEstimate { q, radius, delta: trial });
            }
            last = (trial, q);
        }
        Err(SolverError::StepCollapse {
            at: start,
            delta: last.0,
            q: last.1,
        })
    }

    fn q_for(&self, radius: f64, start: f64, delta: f64) -> f64 {
        let mass = self.op.kernel_mass(TimeWindow::new(start, delta));
        if mass == 0.0 {
            0.0
        } else {
            self.op.lipschitz_bound(radius) * mass
        }
    }

    fn record(&mut self, estimate: ContractionEstimate, sol: super::WindowSolution, retries: usize) {
        self.diagnostics.push(WindowDiagnostics {
            start: sol.segment.window.start,
            delta: sol.segment.window.length,
            q: estimate.q,
            radius: estimate.radius,
            iterations: sol.iterations,
            max_ratio: sol.max_ratio(),
            retries,
        });
        self.accepted_norm = self.accepted_norm.max(sol.segment.sup_norm);
        self.accepted = sol.trajectory;
        self.segments.push(sol.segment);
    }

    fn norms_growing(&self) -> bool {
        let n = self.segments.len();
        n >= 3 && {
            let tail = &self.segments[n - 3..];
            tail[0].sup_norm < tail[1].sup_norm && tail[1].sup_norm < tail[2].sup_norm
        }
    }

    /// One window of the τ-Volterra path: the window length is the delay
    /// floor, independent of the solution norm.
    fn fast_step(&mut self, tau_steps: usize) -> Step {
        let start = self.current_time();
        let steps = tau_steps.min(self.remaining_steps());
        let window = TimeWindow::new(start, steps as f64 * self.grid.step);
        let estimate = ContractionEstimate {
            q: 0.0,
            radius: self.accepted_norm,
            delta: window.length,
        };
        match picard_solve_window(self.op, &self.accepted, window, 0.0, self.cfg.tol, self.cfg.max_iter, &mut self.cache) {
            Ok(sol) => {
                self.record(estimate, sol, 0);
                Step::Accepted
            }
            Err(SolverError::NonFinite { at }) => Step::Finished(OutcomeKind::Stalled {
                reason: StallReason::NonFinite { at },
            }),
            Err(_) => Step::Finished(OutcomeKind::Stalled {
                reason: StallReason::NonConvergence { at: start },
            }),
        }
    }

    fn contracting_step(&mut self) -> Result<Step, SolverError> {
        let start = self.current_time();
        let mut estimate = match self.choose_step(start) {
            Ok(est) => est,
            Err(SolverError::StepCollapse { q, .. }) => {
                let kind = if self.norms_growing() {
                    OutcomeKind::MaximallyExtended {
                        zeta_hat: start,
                        final_norm: self.accepted_norm,
                    }
                } else {
                    OutcomeKind::Stalled {
                        reason: StallReason::StepCollapse { at: start, q },
                    }
                };
                return Ok(Step::Finished(kind));
            }
            Err(SolverError::NonFinite { at }) => {
                return Ok(Step::Finished(OutcomeKind::Stalled {
                    reason: StallReason::NonFinite { at },
                }))
            }
            Err(e) => return Err(e),
        };

        let mut retries = 0;
        loop {
            let steps = self.steps_for(estimate.delta);
            if steps == 0 {
                return Ok(Step::Finished(OutcomeKind::Stalled {
                    reason: StallReason::NonConvergence { at: start },
                }));
            }
            let window = TimeWindow::new(start, steps as f64 * self.grid.step);
            let attempt = picard_solve_window(
                self.op,
                &self.accepted,
                window,
                estimate.q,
                self.cfg.tol,
                self.cfg.max_iter,
                &mut self.cache,
            );
            let failure = match attempt {
                Ok(sol) if sol.max_ratio() <= self.cfg.q_target + RATIO_SLACK => {
                    self.record(estimate, sol, retries);
                    return Ok(Step::Accepted);
                }
                Ok(sol) => format!("measured ratio {:.4} above q_target + {RATIO_SLACK}", sol.max_ratio()),
                Err(SolverError::NonConvergence { iterations, .. }) => {
                    format!("no convergence in {iterations} iterations")
                }
                Err(SolverError::NonFinite { at }) => format!("non-finite values at t={at}"),
                Err(e) => return Err(e),
            };
            retries += 1;
            self.events.push(format!(
                "window at t={start} with delta={}: {failure}; halving",
                window.length
            ));
            let halved = estimate.delta / 2.0;
            if halved < self.ladder.delta_min {
                let reason = if failure.starts_with("non-finite") {
                    StallReason::NonFinite { at: start }
                } else {
                    StallReason::NonConvergence { at: start }
                };
                return Ok(Step::Finished(OutcomeKind::Stalled { reason }));
            }
            estimate.delta = halved;
            estimate.q = self.q_for(estimate.radius, start, halved);
        }
    }
}

/// Grows the solution from the operator's origin towards `horizon`.
///
/// Each window follows the radius schedule `r_k = ‖Ψ P y‖/(1 − q_target) + 1`,
/// a ladder step certified by [`estimate_step`] and a Picard solve. Operators
/// with a positive delay floor take windows of exactly that length and skip
/// both the contraction estimate and the blow-up threshold. Numerical
/// failures are reported through [`OutcomeKind`]; only invalid input is an
/// error.
pub fn extend_solution<O: VolterraOperator + ?Sized>(
    op: &O,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<SolutionOutcome, SolverError> {
    cfg.validate()?;
    let grid = TimeGrid::covering(op.origin(), horizon, cfg.time_step)?;
    let mut ext = Extension {
        op,
        cfg,
        grid,
        ladder: cfg.ladder(grid.step),
        cache: op.new_cache(),
        accepted: Trajectory::new(grid.origin, grid.step, op.state_len()),
        accepted_norm: 0.0,
        segments: Vec::new(),
        diagnostics: Vec::new(),
        events: Vec::new(),
    };
    let tau_steps = op
        .delay_floor()
        .filter(|tau| *tau > 0.0)
        .map(|tau| ((tau / grid.step) + 1e-9).floor() as usize)
        .filter(|steps| *steps >= 1);

    let kind = loop {
        if !ext.accepted.is_empty() && ext.remaining_steps() == 0 {
            break OutcomeKind::Global { t_end: horizon };
        }
        let step = match tau_steps {
            Some(steps) => ext.fast_step(steps),
            None => ext.contracting_step()?,
        };
        match step {
            Step::Finished(kind) => break kind,
            Step::Accepted => {
                let last = ext.segments.last().expect("accepted window");
                if tau_steps.is_none() && last.sup_norm >= cfg.blowup_norm_threshold {
                    break OutcomeKind::MaximallyExtended {
                        zeta_hat: last.window.end(),
                        final_norm: last.sup_norm,
                    };
                }
            }
        }
    };

    Ok(SolutionOutcome {
        kind,
        segments: ext.segments,
        diagnostics: ext.diagnostics,
        events: ext.events,
    })
}
