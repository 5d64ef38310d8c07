use std::ops::Range;

use rayon::prelude::*;

use super::{FieldModel, Kernel, ModelError, TemporalKernel};
use crate::volterra::{SolverError, TimeGrid, TimeWindow, Trajectory, VolterraOperator};

/// Snap distance, in grid steps, for delayed lookups.
const NODE_SLACK: f64 = 1e-9;
/// Time samples per window for kernel masses of general kernels.
const MASS_SAMPLES: usize = 16;

/// `η_p(t_j, s_l)` indexed by `j − l` or by `l`.
#[derive(Debug, Clone)]
enum EtaTable {
    Lag(Vec<f64>),
    Source(Vec<f64>),
}

impl EtaTable {
    fn build(eta: &TemporalKernel, grid: &TimeGrid) -> Self {
        if eta.is_stationary() {
            Self::Lag((0..grid.nodes).map(|d| eta.eval(d as f64 * grid.step, 0.0)).collect())
        } else {
            Self::Source((0..grid.nodes).map(|l| eta.eval(grid.end() + 1.0, grid.time(l))).collect())
        }
    }

    fn at(&self, j: usize, l: usize) -> f64 {
        match self {
            Self::Lag(v) => v[j - l],
            Self::Source(v) => v[l],
        }
    }
}

#[derive(Debug, Clone)]
enum Evaluation {
    Separable {
        eta: Vec<EtaTable>,
        /// `w_k ω_pq(x_i, y_k)` laid out as `[i][k][p][q]`.
        omega: Vec<f64>,
    },
    General,
}

#[derive(Debug, Clone)]
enum DelayTable {
    Zero,
    /// `τ(x_i, y_k) / h` laid out as `[i][k]`.
    Static(Vec<f64>),
    Dynamic,
}

/// Memoised spatial sums for nodes whose inputs are frozen.
#[derive(Debug, Clone, Default)]
pub struct FieldCache {
    rows: Vec<f64>,
    valid: usize,
}

/// Discretised field operator on a fixed time grid.
///
/// Time integrals use the composite trapezoid rule on the grid, space
/// integrals the grid weights, and delayed values between nodes are
/// linearly interpolated.
#[derive(Debug, Clone)]
pub struct FieldOperator {
    model: FieldModel,
    grid: TimeGrid,
    n: usize,
    m: usize,
    base: Vec<f64>,
    eval: Evaluation,
    delays: DelayTable,
    /// `φ(a − b h, y_k)` for `b = 0..depth`, one state per row.
    history: Vec<f64>,
    depth: usize,
    /// `sup_i Σ_k w_k Σ_q |ω_pq(x_i, y_k)|` per population.
    spatial_mass: Vec<f64>,
    tau_min: f64,
}

impl FieldOperator {
    pub fn new(model: FieldModel, time_step: f64, horizon: f64) -> Result<Self, ModelError> {
        let grid = TimeGrid::covering(model.origin(), horizon, time_step)
            .map_err(|e| ModelError::InvalidParameter(e.to_string()))?;
        let n = model.populations();
        let sg = model.grid();
        let m = sg.len();
        let width = n * m;
        let h = grid.step;

        let mut base = vec![0.0; width];
        for k in 0..m {
            model.prehistory().eval(grid.origin, sg.point_at(k), &mut base[k * n..(k + 1) * n]);
        }
        if base.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParameter("prehistory is not finite at the origin".into()));
        }

        let tau_max = model.delay().tau_max_over(sg, grid.origin, grid.end())?;
        let tau_min = model.delay().tau_min_over(sg, grid.origin, grid.end());
        let delays = if model.delay().depends_on_time() {
            DelayTable::Dynamic
        } else if tau_max == 0.0 {
            DelayTable::Zero
        } else {
            let mut lags = vec![0.0; m * m];
            for i in 0..m {
                for k in 0..m {
                    lags[i * m + k] = model.delay().eval(grid.origin, sg.point_at(i), sg.point_at(k)) / h;
                }
            }
            DelayTable::Static(lags)
        };

        let depth = (tau_max / h).ceil() as usize + 2;
        let mut history = vec![0.0; depth * width];
        for b in 0..depth {
            let xi = grid.origin - b as f64 * h;
            for k in 0..m {
                let slot = &mut history[b * width + k * n..b * width + (k + 1) * n];
                model.prehistory().eval(xi, sg.point_at(k), slot);
            }
        }

        let (eval, spatial_mass) = match model.kernel() {
            Kernel::Separable { temporal, spatial } => {
                let eta: Vec<EtaTable> = temporal.iter().map(|e| EtaTable::build(e, &grid)).collect();
                let mut omega = vec![0.0; m * m * n * n];
                let mut mass = vec![0.0f64; n];
                for i in 0..m {
                    let mut row = vec![0.0; n];
                    for k in 0..m {
                        let w = sg.weights()[k];
                        for p in 0..n {
                            for q in 0..n {
                                let v = spatial[p * n + q].eval(sg.point_at(i), sg.point_at(k));
                                if !v.is_finite() {
                                    return Err(ModelError::NonFiniteKernel {
                                        t: grid.origin,
                                        s: grid.origin,
                                        x: sg.point_at(i).to_vec(),
                                        y: sg.point_at(k).to_vec(),
                                    });
                                }
                                omega[((i * m + k) * n + p) * n + q] = w * v;
                                row[p] += w * v.abs();
                            }
                        }
                    }
                    for p in 0..n {
                        mass[p] = mass[p].max(row[p]);
                    }
                }
                (Evaluation::Separable { eta, omega }, mass)
            }
            Kernel::General { .. } => (Evaluation::General, vec![]),
        };

        Ok(Self {
            model,
            grid,
            n,
            m,
            base,
            eval,
            delays,
            history,
            depth,
            spatial_mass,
            tau_min,
        })
    }

    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn populations(&self) -> usize {
        self.n
    }

    /// `φ(a, x)` laid out as one state.
    pub fn base_state(&self) -> &[f64] {
        &self.base
    }

    /// `max_p sup_i Σ_k w_k Σ_q |ω_pq(x_i, y_k)|` for separable kernels.
    pub fn spatial_mass(&self) -> Option<f64> {
        match self.eval {
            Evaluation::Separable { .. } => Some(self.spatial_mass.iter().copied().fold(0.0, f64::max)),
            Evaluation::General => None,
        }
    }

    fn width(&self) -> usize {
        self.n * self.m
    }

    /// Writes `u(s, y_k)` for the fractional node position `pos` into `out`.
    fn lookup(&self, y: &Trajectory, pos: f64, k: usize, out: &mut [f64]) {
        let n = self.n;
        let nearest = pos.round();
        let snapped = (pos - nearest).abs() <= NODE_SLACK;
        if pos < -NODE_SLACK {
            if snapped && ((-nearest) as usize) < self.depth {
                let b = (-nearest) as usize;
                let start = b * self.width() + k * n;
                out.copy_from_slice(&self.history[start..start + n]);
            } else {
                let s = self.grid.origin + pos * self.grid.step;
                self.model.prehistory().eval(s, self.model.grid().point_at(k), out);
            }
            return;
        }
        if snapped {
            let j = nearest.max(0.0) as usize;
            out.copy_from_slice(&y.state(j)[k * n..(k + 1) * n]);
            return;
        }
        let j0 = pos.floor() as usize;
        let frac = pos - j0 as f64;
        let (a, b) = (&y.state(j0)[k * n..(k + 1) * n], &y.state(j0 + 1)[k * n..(k + 1) * n]);
        for q in 0..n {
            out[q] = a[q] + frac * (b[q] - a[q]);
        }
    }

    fn delay_position(&self, l: usize, i: usize, k: usize) -> Result<f64, ModelError> {
        match &self.delays {
            DelayTable::Zero => Ok(l as f64),
            DelayTable::Static(lags) => Ok(l as f64 - lags[i * self.m + k]),
            DelayTable::Dynamic => {
                let sg = self.model.grid();
                let s = self.grid.time(l);
                let tau = self.model.delay().eval(s, sg.point_at(i), sg.point_at(k));
                if !(tau >= 0.0 && tau.is_finite()) {
                    return Err(ModelError::InvalidDelay {
                        t: s,
                        x: sg.point_at(i).to_vec(),
                        y: sg.point_at(k).to_vec(),
                    });
                }
                Ok(l as f64 - tau / self.grid.step)
            }
        }
    }

    /// `f(S_τ^φ u)(s_l, x_i, y_k)` for every population.
    fn rate_values(&self, y: &Trajectory, l: usize, i: usize, k: usize, out: &mut [f64]) -> Result<(), ModelError> {
        let pos = self.delay_position(l, i, k)?;
        self.lookup(y, pos, k, out);
        for (q, v) in out.iter_mut().enumerate() {
            *v = self.model.rate(q).eval(*v);
        }
        Ok(())
    }

    /// `S_l[i, p] = Σ_k w_k Σ_q ω_pq(x_i, y_k) f_q(…)` for one source node.
    fn spatial_row(&self, y: &Trajectory, l: usize, omega: &[f64], row: &mut [f64]) -> Result<(), ModelError> {
        let (n, m) = (self.n, self.m);
        row.fill(0.0);
        let mut f = vec![0.0; n];
        if matches!(self.delays, DelayTable::Zero) {
            let mut shared = vec![0.0; m * n];
            for k in 0..m {
                self.rate_values(y, l, 0, k, &mut shared[k * n..(k + 1) * n])?;
            }
            for i in 0..m {
                let acc = &mut row[i * n..(i + 1) * n];
                for k in 0..m {
                    let block = &omega[(i * m + k) * n * n..(i * m + k + 1) * n * n];
                    let fv = &shared[k * n..(k + 1) * n];
                    for p in 0..n {
                        acc[p] += block[p * n..(p + 1) * n].iter().zip(fv).map(|(w, v)| w * v).sum::<f64>();
                    }
                }
            }
            return Ok(());
        }
        for i in 0..m {
            for k in 0..m {
                self.rate_values(y, l, i, k, &mut f)?;
                let block = &omega[(i * m + k) * n * n..(i * m + k + 1) * n * n];
                for p in 0..n {
                    row[i * n + p] += block[p * n..(p + 1) * n].iter().zip(&f).map(|(w, v)| w * v).sum::<f64>();
                }
            }
        }
        Ok(())
    }

    fn trapezoid_weight(&self, j: usize, l: usize) -> f64 {
        let h = self.grid.step;
        if l == 0 || l == j {
            0.5 * h
        } else {
            h
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_separable(
        &self,
        y: &Trajectory,
        frozen: usize,
        nodes: Range<usize>,
        cache: &mut FieldCache,
        out: &mut [f64],
        eta: &[EtaTable],
        omega: &[f64],
    ) -> Result<(), ModelError> {
        let width = self.width();
        let last = nodes.end - 1;
        let trusted = cache.valid.min(last + 1);
        cache.rows.resize((last + 1) * width, 0.0);
        cache.rows[trusted * width..]
            .par_chunks_mut(width)
            .enumerate()
            .try_for_each(|(offset, row)| self.spatial_row(y, trusted + offset, omega, row))?;
        cache.valid = cache.valid.max(frozen.min(last + 1));

        let rows = &cache.rows;
        out.par_chunks_mut(width).enumerate().for_each(|(offset, slot)| {
            let j = nodes.start + offset;
            slot.copy_from_slice(&self.base);
            if j == 0 {
                return;
            }
            for l in 0..=j {
                let c = self.trapezoid_weight(j, l);
                let row = &rows[l * width..(l + 1) * width];
                for (p, table) in eta.iter().enumerate() {
                    let factor = c * table.at(j, l);
                    if factor == 0.0 {
                        continue;
                    }
                    for i in 0..self.m {
                        slot[i * self.n + p] += factor * row[i * self.n + p];
                    }
                }
            }
        });
        Ok(())
    }

    fn apply_general(&self, y: &Trajectory, nodes: Range<usize>, out: &mut [f64]) -> Result<(), ModelError> {
        let (n, m) = (self.n, self.m);
        let width = self.width();
        let sg = self.model.grid();
        out.par_chunks_mut(width).enumerate().try_for_each(|(offset, slot)| {
            let j = nodes.start + offset;
            slot.copy_from_slice(&self.base);
            if j == 0 {
                return Ok(());
            }
            let t = self.grid.time(j);
            let mut w = vec![0.0; n * n];
            let mut f = vec![0.0; n];
            for l in 0..=j {
                let s = self.grid.time(l);
                let c = self.trapezoid_weight(j, l);
                for i in 0..m {
                    for k in 0..m {
                        self.model.kernel().eval(t, s, sg.point_at(i), sg.point_at(k), &mut w);
                        if w.iter().any(|v| !v.is_finite()) {
                            return Err(ModelError::NonFiniteKernel {
                                t,
                                s,
                                x: sg.point_at(i).to_vec(),
                                y: sg.point_at(k).to_vec(),
                            });
                        }
                        self.rate_values(y, l, i, k, &mut f)?;
                        let cw = c * sg.weights()[k];
                        for p in 0..n {
                            slot[i * n + p] += cw * w[p * n..(p + 1) * n].iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                }
            }
            Ok(())
        })
    }

    fn general_mass(&self, window: TimeWindow) -> f64 {
        let (n, m) = (self.n, self.m);
        let sg = self.model.grid();
        let samples = MASS_SAMPLES;
        let h = window.length / (samples - 1) as f64;
        let times: Vec<f64> = (0..samples).map(|i| window.start + i as f64 * h).collect();
        let mut w = vec![0.0; n * n];
        // sup over x of ∫|W| dy at each (t, s) pair
        let mut best: f64 = 0.0;
        for j in 1..samples {
            let mut total = 0.0;
            for l in 0..=j {
                let c = if l == 0 || l == j { 0.5 * h } else { h };
                let mut sup_x: f64 = 0.0;
                for i in 0..m {
                    let mut row = vec![0.0; n];
                    for k in 0..m {
                        self.model.kernel().eval(times[j], times[l], sg.point_at(i), sg.point_at(k), &mut w);
                        for p in 0..n {
                            row[p] += sg.weights()[k] * w[p * n..(p + 1) * n].iter().map(|v| v.abs()).sum::<f64>();
                        }
                    }
                    sup_x = row.iter().copied().fold(sup_x, f64::max);
                }
                total += c * sup_x;
            }
            best = best.max(total);
        }
        if best.is_nan() {
            f64::INFINITY
        } else {
            best
        }
    }
}

impl VolterraOperator for FieldOperator {
    type Cache = FieldCache;

    fn origin(&self) -> f64 {
        self.grid.origin
    }

    fn state_len(&self) -> usize {
        self.width()
    }

    fn new_cache(&self) -> FieldCache {
        FieldCache::default()
    }

    fn apply(
        &self,
        y: &Trajectory,
        frozen: usize,
        nodes: Range<usize>,
        cache: &mut FieldCache,
        out: &mut [f64],
    ) -> Result<(), SolverError> {
        if nodes.is_empty() {
            return Ok(());
        }
        let h = self.grid.step;
        if (y.step() - h).abs() > 1e-12 * h || (y.origin() - self.grid.origin).abs() > 1e-12 * h.max(1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "trajectory grid (origin {}, step {}) differs from the operator grid (origin {}, step {h})",
                y.origin(),
                y.step(),
                self.grid.origin
            )));
        }
        if nodes.end > self.grid.nodes || nodes.end > y.len() || y.width() != self.width() {
            return Err(SolverError::OutOfRange {
                start: self.grid.time(nodes.start),
                end: self.grid.time(nodes.end - 1),
                span_start: self.grid.origin,
                span_end: self.grid.end().min(y.end_time()),
            });
        }
        match &self.eval {
            Evaluation::Separable { eta, omega } => self.apply_separable(y, frozen, nodes, cache, out, eta, omega)?,
            Evaluation::General => self.apply_general(y, nodes, out)?,
        }
        Ok(())
    }

    fn lipschitz_bound(&self, radius: f64) -> f64 {
        self.model.lipschitz_bound(radius)
    }

    fn kernel_mass(&self, window: TimeWindow) -> f64 {
        match (self.model.kernel(), &self.eval) {
            (Kernel::Separable { temporal, .. }, Evaluation::Separable { .. }) => temporal
                .iter()
                .zip(&self.spatial_mass)
                .map(|(eta, s)| if *s == 0.0 { 0.0 } else { eta.window_mass(window.start, window.length) * s })
                .fold(0.0, f64::max),
            _ => self.general_mass(window),
        }
    }

    fn delay_floor(&self) -> Option<f64> {
        match self.delays {
            DelayTable::Static(_) if self.tau_min > 0.0 => Some(self.tau_min),
            _ => None,
        }
    }
}
