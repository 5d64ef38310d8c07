use rayon::prelude::*;

use super::family::{FamilyParameter, PerturbationFamily};
use crate::volterra::{
    apply_full, extend_solution, OutcomeKind, SolutionOutcome, SolverConfig, SolverError, Trajectory,
    VolterraOperator,
};

/// Default length of the comparison interval.
pub const DEFAULT_GAMMA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DependenceRow {
    pub lambda: f64,
    /// `‖u(λᵢ) − u(λ₀)‖` on the common interval.
    pub d: f64,
    pub outcome: OutcomeKind,
    pub matches_baseline: bool,
    /// End of the interval on which `d` was measured.
    pub compared_until: f64,
    pub max_ratio: f64,
    /// `‖Ψ_{λᵢ}(u₀) − u₀‖`: how far the baseline is from solving the perturbed equation.
    pub consistency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// Sampled stand-in rather than a structural guarantee.
    pub proxy: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependenceReport {
    pub parameter: FamilyParameter,
    pub lambda0: f64,
    pub gamma: f64,
    pub baseline: OutcomeKind,
    pub baseline_max_ratio: f64,
    pub rows: Vec<DependenceRow>,
    /// Least-squares slope of `log d` against `log |λᵢ − λ₀|` over the last half.
    pub empirical_order: Option<f64>,
    pub hypotheses: Vec<HypothesisCheck>,
    pub events: Vec<String>,
}

impl DependenceReport {
    /// `d` strictly decreasing over the last `count` rows.
    pub fn monotone_tail(&self, count: usize) -> bool {
        let start = self.rows.len().saturating_sub(count);
        self.rows[start..].windows(2).all(|w| w[1].d < w[0].d)
    }

    /// `d(λ_last) / d(λ_first)`.
    pub fn final_ratio(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.d / a.d,
            _ => f64::NAN,
        }
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.max_ratio).fold(self.baseline_max_ratio, f64::max)
    }

    /// Every run in the last half shares the baseline's outcome kind.
    pub fn stable_tail(&self) -> bool {
        let half = self.rows.len() / 2;
        self.rows[half..].iter().all(|r| r.matches_baseline)
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn covered_until(outcome: &SolutionOutcome, origin: f64) -> f64 {
    match outcome.kind {
        OutcomeKind::Global { t_end } => t_end,
        _ => outcome.end_time().unwrap_or(origin),
    }
}

fn sup_difference(a: &Trajectory, b: &Trajectory) -> (f64, usize) {
    let nodes = a.len().min(b.len());
    let d = a
        .states(0..nodes)
        .iter()
        .zip(b.states(0..nodes))
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    (d, nodes)
}

/// Solves every member of `family` on `[a, a + γ]` and measures its
/// distance from the baseline.
///
/// When the baseline does not reach `a + γ`, `γ` shrinks to 90% of the
/// span it covered and the adjustment is recorded in `events`.
pub fn run_dependence_sweep<O: VolterraOperator + Send>(
    family: &PerturbationFamily<O>,
    gamma: Option<f64>,
    cfg: &SolverConfig,
) -> Result<DependenceReport, SolverError> {
    let a = family.origin;
    let mut gamma = gamma.unwrap_or(DEFAULT_GAMMA);
    let mut events = Vec::new();
    if !(gamma > 0.0) {
        return Err(SolverError::InvalidConfig(format!("gamma {gamma} must be positive")));
    }
    let solve = |lambda: f64, gamma: f64| -> Result<(O, SolutionOutcome), SolverError> {
        let op = family.build(lambda, cfg.time_step, a + gamma)?;
        let outcome = extend_solution(&op, a + gamma, cfg)?;
        Ok((op, outcome))
    };

    let (_, mut baseline) = solve(family.lambda0, gamma)?;
    if !baseline.kind.is_global() {
        let reached = covered_until(&baseline, a) - a;
        let adjusted = 0.9 * reached;
        if !(adjusted >= cfg.time_step) {
            return Err(SolverError::InvalidConfig(format!(
                "baseline ({}) covers no usable interval",
                baseline.kind.label()
            )));
        }
        events.push(format!(
            "baseline {} at t={:.6}; gamma reduced from {gamma} to {adjusted:.6}",
            baseline.kind.label(),
            a + reached
        ));
        gamma = adjusted;
        baseline = solve(family.lambda0, gamma)?.1;
    }
    let base_traj = baseline
        .trajectory()
        .ok_or_else(|| SolverError::InvalidConfig("baseline produced no samples".into()))?;

    let rows = family
        .sequence
        .par_iter()
        .map(|&lambda| -> Result<DependenceRow, SolverError> {
            let (op, outcome) = solve(lambda, gamma)?;
            let traj = outcome.trajectory();
            let (d, nodes) = traj.as_ref().map_or((f64::NAN, 0), |t| sup_difference(t, &base_traj));
            let image = apply_full(&op, &base_traj)?;
            let (consistency, _) = sup_difference(&image, &base_traj);
            Ok(DependenceRow {
                lambda,
                d,
                matches_baseline: outcome.kind.label() == baseline.kind.label(),
                outcome: outcome.kind.clone(),
                compared_until: base_traj.time(nodes.saturating_sub(1)),
                max_ratio: outcome.max_ratio(),
                consistency,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let half = rows.len() / 2;
    let fit: Vec<(f64, f64)> = rows[half..]
        .iter()
        .filter(|r| r.d > 0.0 && r.lambda != family.lambda0)
        .map(|r| ((r.lambda - family.lambda0).abs().ln(), r.d.ln()))
        .collect();
    let empirical_order = least_squares_slope(&fit);

    let mut hypotheses = Vec::new();
    let custom = family.parameter == FamilyParameter::Custom;
    let consistency: Vec<f64> = rows.iter().map(|r| r.consistency).collect();
    let shrinking = consistency.last() <= consistency.first();
    hypotheses.push(HypothesisCheck {
        name: "operator convergence".into(),
        passed: shrinking,
        proxy: custom,
        detail: if custom {
            format!("sampled |Psi_i(u0) - u0| from {:.3e} to {:.3e}", consistency[0], consistency[rows.len() - 1])
        } else {
            format!(
                "holds by construction for {}; |Psi_i(u0) - u0| from {:.3e} to {:.3e}",
                family.parameter.label(),
                consistency[0],
                consistency[rows.len() - 1]
            )
        },
    });
    if let Some(probe) = family.rate_probe() {
        let gaps: Vec<f64> = family
            .sequence
            .iter()
            .map(|&lambda| {
                (0..=400)
                    .map(|i| -5.0 + 10.0 * i as f64 / 400.0)
                    .map(|u| (probe(lambda, u) - probe(family.lambda0, u)).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        hypotheses.push(HypothesisCheck {
            name: "pointwise rate convergence".into(),
            passed: gaps.windows(2).all(|w| w[1] <= w[0]),
            proxy: true,
            detail: format!("sup_u |f_i(u) - f_0(u)| from {:.3e} to {:.3e}", gaps[0], gaps[gaps.len() - 1]),
        });
    }
    hypotheses.push(HypothesisCheck {
        name: "outcome stability".into(),
        passed: rows[half..].iter().all(|r| r.matches_baseline),
        proxy: false,
        detail: format!("baseline {}; last half compared", baseline.kind.label()),
    });

    Ok(DependenceReport {
        parameter: family.parameter,
        lambda0: family.lambda0,
        gamma,
        baseline_max_ratio: baseline.max_ratio(),
        baseline: baseline.kind,
        rows,
        empirical_order,
        hypotheses,
        events,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupRow {
    pub lambda: f64,
    pub outcome: OutcomeKind,
    /// End of the computed solution.
    pub reached: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupTable {
    pub baseline: BlowupRow,
    pub rows: Vec<BlowupRow>,
    /// Smallest `ζ̂` among the blow-up runs, baseline included.
    pub min_zeta: f64,
    /// Whether the `ζ̂` of the last members is closer to the baseline than
    /// that of the first. Observational only.
    pub approaching_baseline: Option<bool>,
}

/// Classifies the baseline and every member of `family` on `[a, horizon]`.
pub fn compare_blowup_windows<O: VolterraOperator + Send>(
    family: &PerturbationFamily<O>,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<BlowupTable, SolverError> {
    let a = family.origin;
    let run = |lambda: f64| -> Result<BlowupRow, SolverError> {
        let op = family.build(lambda, cfg.time_step, horizon)?;
        let outcome = extend_solution(&op, horizon, cfg)?;
        Ok(BlowupRow {
            lambda,
            reached: covered_until(&outcome, a),
            outcome: outcome.kind,
        })
    };
    let baseline = run(family.lambda0)?;
    let Some(base_zeta) = baseline.outcome.zeta_hat() else {
        return Err(SolverError::InvalidConfig(format!(
            "baseline is {}, not maximally extended",
            baseline.outcome.label()
        )));
    };
    let rows = family.sequence.par_iter().map(|&l| run(l)).collect::<Result<Vec<_>, _>>()?;
    let zetas: Vec<f64> = rows.iter().filter_map(|r| r.outcome.zeta_hat()).collect();
    let min_zeta = zetas.iter().copied().fold(base_zeta, f64::min);
    let approaching_baseline = match (zetas.first(), zetas.last()) {
        (Some(first), Some(last)) if zetas.len() >= 2 => Some((last - base_zeta).abs() <= (first - base_zeta).abs()),
        _ => None,
    };
    Ok(BlowupTable {
        baseline,
        rows,
        min_zeta,
        approaching_baseline,
    })
}
