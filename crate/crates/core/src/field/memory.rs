use super::{FieldModel, FieldOperator, Kernel, ModelError};
use crate::volterra::{extend_solution, SolutionOutcome, SolverConfig, SolverError};

/// `sup_i Σ_k w_k Σ_q |ω_pq(x_i, y_k)|` for each population `p`.
fn spatial_masses(model: &FieldModel) -> Result<Vec<f64>, ModelError> {
    let Kernel::Separable { spatial, .. } = model.kernel() else {
        return Err(ModelError::Unsupported("memory truncation needs a separable kernel".into()));
    };
    let g = model.grid();
    let n = model.populations();
    let mut out = vec![0.0f64; n];
    for i in 0..g.len() {
        for (p, slot) in out.iter_mut().enumerate() {
            let row: f64 = (0..g.len())
                .map(|k| {
                    g.weights()[k]
                        * (0..n)
                            .map(|q| spatial[p * n + q].eval(g.point_at(i), g.point_at(k)).abs())
                            .sum::<f64>()
                })
                .sum();
            *slot = slot.max(row);
        }
    }
    Ok(out)
}

/// Effective start `a_eff = b − D` for a model with memory on `(−∞, b]`.
///
/// `D` is the smallest depth for which the kernel mass older than `D`, times
/// the rate's Lipschitz bound at `radius`, is at most `eps`.
pub fn build_memory_truncation(model: &FieldModel, b: f64, radius: f64, eps: f64) -> Result<f64, ModelError> {
    if !(eps > 0.0) || !(radius > 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "memory truncation needs eps > 0 and radius > 0, got {eps} and {radius}"
        )));
    }
    let Kernel::Separable { temporal, .. } = model.kernel() else {
        return Err(ModelError::Unsupported("memory truncation needs a separable kernel".into()));
    };
    if let Some(eta) = temporal.iter().find(|eta| eta.tail_mass(0.0).is_none()) {
        return Err(ModelError::Unsupported(format!("temporal kernel {eta:?} has no tail bound")));
    }
    let masses = spatial_masses(model)?;
    let lipschitz = model.lipschitz_bound(radius);
    let tail = |depth: f64| {
        temporal
            .iter()
            .zip(&masses)
            .map(|(eta, s)| if *s == 0.0 { 0.0 } else { lipschitz * s * eta.tail_mass(depth).unwrap_or(f64::INFINITY) })
            .fold(0.0, f64::max)
    };
    if tail(0.0) <= eps {
        return Ok(b);
    }
    let mut hi = 1.0;
    while tail(hi) > eps {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(ModelError::Unsupported("kernel tail does not fall below eps".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if tail(mid) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(b - hi)
}

/// Solves a model with memory on `(−∞, b]` from the truncated start,
/// taking the model's prehistory as the history before `a_eff`.
/// Returns `a_eff` with the outcome.
pub fn solve_truncated_memory(
    model: &FieldModel,
    b: f64,
    radius: f64,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<(f64, SolutionOutcome), SolverError> {
    let a_eff = build_memory_truncation(model, b, radius, eps)?.min(b - cfg.time_step);
    let op = FieldOperator::new(model.with_origin(a_eff), cfg.time_step, b)?;
    let outcome = extend_solution(&op, b, cfg)?;
    Ok((a_eff, outcome))
}
