use std::fmt;

use super::FieldModel;

/// Hypotheses on the model data checked by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Kernel finite off the diagonal `s = t`.
    KernelMeasurable,
    /// Kernel continuous in `t`.
    KernelContinuity,
    /// `∫ sup_x ∫ |W| dy ds` finite.
    KernelIntegrability,
    /// Firing rates locally bounded.
    RateBounded,
    /// Delay non-negative and continuous.
    DelayContinuous,
    /// Prehistory continuous.
    PrehistoryContinuous,
    /// Kernel decays towards the truncation boundary.
    Localization,
}

impl Assumption {
    pub fn label(&self) -> &'static str {
        match self {
            Self::KernelMeasurable => "A1",
            Self::KernelContinuity => "A2",
            Self::KernelIntegrability => "A3",
            Self::RateBounded => "A4",
            Self::DelayContinuous => "A5",
            Self::PrehistoryContinuous => "A6",
            Self::Localization => "A'7",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub passed: bool,
    /// `false` when the check does not apply to this model.
    pub applicable: bool,
    /// The worst sampled quantity backing the verdict.
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.applicable)
    }

    pub fn check(&self, assumption: Assumption) -> &AssumptionCheck {
        self.checks
            .iter()
            .find(|c| c.assumption == assumption)
            .expect("every assumption is checked")
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| c.applicable && !c.passed)
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let verdict = match (c.applicable, c.passed) {
                (false, _) => "n/a",
                (true, true) => "pass",
                (true, false) => "FAIL",
            };
            writeln!(f, "{:<4} {verdict:<5} worst={:.3e}  {} (sampled proxy)", c.assumption.label(), c.worst, c.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Time samples across `[a, horizon]`.
    pub samples: usize,
    /// Largest admissible `|W|` at the truncation boundary relative to its peak.
    pub decay_tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            samples: 16,
            decay_tol: 1e-6,
        }
    }
}

/// Up to `count` evenly spread grid indices plus the center and boundary.
fn spread_indices(model: &FieldModel, count: usize) -> Vec<usize> {
    let m = model.grid().len();
    let mut out: Vec<usize> = (0..count.min(m)).map(|i| i * (m - 1) / (count.min(m) - 1).max(1)).collect();
    out.push(model.grid().center_index());
    out.extend(model.grid().boundary_indices());
    out.sort_unstable();
    out.dedup();
    out
}

struct Sampler<'a> {
    model: &'a FieldModel,
    block: Vec<f64>,
}

impl Sampler<'_> {
    /// `max_pq |W_pq(t, s, x_i, y_k)|`, NaN-propagating.
    fn abs(&mut self, t: f64, s: f64, i: usize, k: usize) -> f64 {
        let g = self.model.grid();
        self.model.kernel().eval(t, s, g.point_at(i), g.point_at(k), &mut self.block);
        self.block.iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v.abs()) })
    }

    /// `sup_i Σ_k w_k Σ_pq |W_pq(t, s, x_i, y_k)|`.
    fn g(&mut self, t: f64, s: f64, rows: &[usize]) -> f64 {
        let grid = self.model.grid();
        let mut best: f64 = 0.0;
        for &i in rows {
            let mut total = 0.0;
            for k in 0..grid.len() {
                self.model.kernel().eval(t, s, grid.point_at(i), grid.point_at(k), &mut self.block);
                total += grid.weights()[k] * self.block.iter().map(|v| v.abs()).sum::<f64>();
            }
            if total.is_nan() {
                return f64::NAN;
            }
            best = best.max(total);
        }
        best
    }
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    values
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 || i == n - 1 { 0.5 * v } else { *v })
        .sum::<f64>()
        * h
}

/// Spot-checks the model hypotheses on `[origin, horizon]` by sampling.
///
/// Continuity and integrability cannot be decided from callables; every
/// verdict is a sampled proxy.
pub fn validate_assumptions(model: &FieldModel, horizon: f64, options: &ValidationOptions) -> AssumptionReport {
    let a = model.origin();
    let span = (horizon - a).max(f64::MIN_POSITIVE);
    let samples = options.samples.max(3);
    let times: Vec<f64> = (0..samples).map(|i| a + span * i as f64 / (samples - 1) as f64).collect();
    let rows = spread_indices(model, 12);
    let n = model.populations();
    let mut sampler = Sampler {
        model,
        block: vec![0.0; n * n],
    };
    let mut checks = Vec::new();

    // A1: finite off the diagonal
    let mut worst: f64 = 0.0;
    let mut finite = true;
    for (j, &t) in times.iter().enumerate() {
        for &s in &times[..j] {
            for &i in &rows {
                for &k in &rows {
                    let v = sampler.abs(t, s, i, k);
                    finite &= v.is_finite();
                    worst = worst.max(v);
                }
            }
        }
    }
    checks.push(AssumptionCheck {
        assumption: Assumption::KernelMeasurable,
        passed: finite,
        applicable: true,
        worst,
        detail: "max |W| at sampled s < t".into(),
    });
    let peak = worst;

    // A2: modulus of continuity in t
    let eps = 1e-6 * span;
    let mut modulus: f64 = 0.0;
    for (j, &t) in times.iter().enumerate().take(samples - 1) {
        for &s in &times[..j] {
            for &i in &rows {
                for &k in &rows {
                    let g = model.grid();
                    let mut lo = vec![0.0; n * n];
                    let mut hi = vec![0.0; n * n];
                    model.kernel().eval(t, s, g.point_at(i), g.point_at(k), &mut lo);
                    model.kernel().eval(t + eps, s, g.point_at(i), g.point_at(k), &mut hi);
                    let d = lo.iter().zip(&hi).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                    modulus = if d.is_nan() { f64::NAN } else { modulus.max(d) };
                }
            }
        }
    }
    checks.push(AssumptionCheck {
        assumption: Assumption::KernelContinuity,
        passed: modulus <= 1e-3 * (1.0 + peak),
        applicable: true,
        worst: modulus,
        detail: format!("max |W(t+{eps:.1e}) - W(t)|"),
    });

    // A3: G(s) integrability at three resolutions; a convergent quadrature
    // has shrinking increments, a singular one does not
    let mut integral = |factor: usize| {
        let n = factor * (samples - 1) + 1;
        let values: Vec<f64> = (0..n)
            .map(|i| sampler.g(horizon, a + span * i as f64 / (n - 1) as f64, &rows))
            .collect();
        trapezoid(&values, span / (n - 1) as f64)
    };
    let levels = [integral(1), integral(4), integral(16)];
    let (d1, d2) = (levels[1] - levels[0], levels[2] - levels[1]);
    let stable = levels.iter().all(|v| v.is_finite()) && d2.abs() <= 0.5 * d1.abs() + 1e-9 * (1.0 + levels[2].abs());
    checks.push(AssumptionCheck {
        assumption: Assumption::KernelIntegrability,
        passed: stable,
        applicable: true,
        worst: levels[2],
        detail: format!(
            "int sup_x int |W| dy ds = {:.4e}, {:.4e}, {:.4e} at 1x, 4x, 16x samples",
            levels[0], levels[1], levels[2]
        ),
    });

    // A4: local boundedness of the rates
    let phi_peak = (0..model.grid().len())
        .map(|k| model.prehistory().value(a, model.grid().point_at(k)).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(0.0f64, f64::max);
    let r = 10.0f64.max(10.0 * phi_peak);
    let mut rate_max: f64 = 0.0;
    let mut rate_finite = true;
    let mut lipschitz: f64 = 0.0;
    for p in 0..n {
        let f = model.rate(p);
        for i in 0..=2000 {
            let v = f.eval(-r + 2.0 * r * i as f64 / 2000.0);
            rate_finite &= v.is_finite();
            rate_max = rate_max.max(v.abs());
        }
        lipschitz = lipschitz.max(f.lipschitz_bound(r));
    }
    checks.push(AssumptionCheck {
        assumption: Assumption::RateBounded,
        passed: rate_finite,
        applicable: true,
        worst: rate_max,
        detail: format!("max |f(u)| for |u| <= {r}; lipschitz bound {lipschitz:.4e}"),
    });

    // A5: delay sign and continuity
    let g = model.grid();
    let mut tau_ok = true;
    let mut tau_mod: f64 = 0.0;
    let mut tau_max: f64 = 0.0;
    for &t in &times {
        for &i in &rows {
            for &k in &rows {
                let tau = model.delay().eval(t, g.point_at(i), g.point_at(k));
                let next = model.delay().eval(t + eps, g.point_at(i), g.point_at(k));
                tau_ok &= tau >= 0.0 && tau.is_finite();
                tau_max = tau_max.max(tau);
                tau_mod = tau_mod.max((next - tau).abs());
            }
        }
    }
    checks.push(AssumptionCheck {
        assumption: Assumption::DelayContinuous,
        passed: tau_ok && tau_mod <= 1e-3 * (1.0 + tau_max),
        applicable: true,
        worst: tau_mod,
        detail: format!("tau in [0, {tau_max:.4}], max |tau(t+eps) - tau(t)|"),
    });

    // A6: prehistory continuity on the buffered interval
    let depth = tau_max + span / (samples - 1) as f64;
    let history_n = 8 * samples;
    let mut jump: f64 = 0.0;
    let mut phi_ok = true;
    let mut previous: Option<Vec<Vec<f64>>> = None;
    for b in 0..=history_n {
        let xi = a - depth * b as f64 / history_n as f64;
        let states: Vec<Vec<f64>> = rows.iter().map(|&k| model.prehistory().value(xi, g.point_at(k))).collect();
        phi_ok &= states.iter().flatten().all(|v| v.is_finite());
        if let Some(prev) = &previous {
            for (u, v) in prev.iter().flatten().zip(states.iter().flatten()) {
                jump = jump.max((u - v).abs());
            }
        }
        previous = Some(states);
    }
    let mut detail = format!("max jump between samples {:.3e} apart", depth / history_n as f64);
    if model.prehistory().decays() {
        let far = (0..g.len())
            .map(|k| model.prehistory().value(a - depth, g.point_at(k)).iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .fold(0.0f64, f64::max);
        phi_ok &= far <= phi_peak + 1e-6 * (1.0 + phi_peak);
        detail.push_str(&format!("; decaying, |phi(a - tau_max)| = {far:.3e}"));
    }
    checks.push(AssumptionCheck {
        assumption: Assumption::PrehistoryContinuous,
        passed: phi_ok && jump <= 0.5 * (1.0 + phi_peak),
        applicable: true,
        worst: jump,
        detail,
    });

    // A'7: decay at the truncation boundary
    let check = match g.truncation_radius() {
        None => AssumptionCheck {
            assumption: Assumption::Localization,
            passed: true,
            applicable: false,
            worst: 0.0,
            detail: "domain not truncated".into(),
        },
        Some(radius) => {
            let center = g.center_index();
            let boundary = g.boundary_indices();
            let mut edge: f64 = 0.0;
            let mut top: f64 = 0.0;
            for (j, &t) in times.iter().enumerate() {
                for &s in &times[..=j] {
                    for &b in &boundary {
                        edge = edge.max(sampler.abs(t, s, b, center));
                    }
                    for &i in &rows {
                        for &k in &rows {
                            top = top.max(sampler.abs(t, s, i, k));
                        }
                    }
                }
            }
            let ratio = if top > 0.0 { edge / top } else { 0.0 };
            AssumptionCheck {
                assumption: Assumption::Localization,
                passed: ratio <= options.decay_tol,
                applicable: true,
                worst: ratio,
                detail: format!("|W| at radius {radius} relative to peak (tolerance {:.1e})", options.decay_tol),
            }
        }
    };
    checks.push(check);

    AssumptionReport { checks }
}
