use std::ops::Range;

use crate::volterra::{SolverError, TimeWindow, Trajectory, VolterraOperator};

/// `(Φ(y, λ))(t) = (∫₀^{t−λ} y ds)² + 1` for `t ≥ λ`, zero before.
///
/// Integrals use the trapezoid rule on the trajectory grid and the delayed
/// upper limit is linearly interpolated between nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaredIntegral {
    pub lambda: f64,
}

/// Cumulative integrals of the frozen prefix.
#[derive(Debug, Clone, Default)]
pub struct IntegralCache {
    cumulative: Vec<f64>,
}

impl SquaredIntegral {
    pub fn new(lambda: f64) -> Self {
        Self { lambda }
    }
}

impl VolterraOperator for SquaredIntegral {
    type Cache = IntegralCache;

    fn origin(&self) -> f64 {
        0.0
    }

    fn state_len(&self) -> usize {
        1
    }

    fn new_cache(&self) -> IntegralCache {
        IntegralCache::default()
    }

    fn apply(
        &self,
        y: &Trajectory,
        frozen: usize,
        nodes: Range<usize>,
        cache: &mut IntegralCache,
        out: &mut [f64],
    ) -> Result<(), SolverError> {
        if nodes.is_empty() {
            return Ok(());
        }
        let h = y.step();
        let last = nodes.end - 1;
        // entries 0..keep depend on frozen nodes only
        let keep = cache.cumulative.len().min(frozen.max(1));
        cache.cumulative.truncate(keep);
        if cache.cumulative.is_empty() {
            cache.cumulative.push(0.0);
        }
        for l in cache.cumulative.len()..=last {
            let next = cache.cumulative[l - 1] + 0.5 * h * (y.state(l - 1)[0] + y.state(l)[0]);
            cache.cumulative.push(next);
        }
        let lag = self.lambda / h;
        for (slot, j) in out.iter_mut().zip(nodes) {
            let pos = j as f64 - lag;
            let nearest = pos.round();
            *slot = if pos < -1e-9 {
                0.0
            } else {
                let z = if (pos - nearest).abs() <= 1e-9 {
                    cache.cumulative[nearest as usize]
                } else {
                    let j0 = pos.floor() as usize;
                    let frac = pos - j0 as f64;
                    // integral up to a point between nodes follows the linear interpolant of y
                    let (a, b) = (y.state(j0)[0], y.state(j0 + 1)[0]);
                    cache.cumulative[j0] + h * frac * (a + 0.5 * frac * (b - a))
                };
                z * z + 1.0
            };
        }
        Ok(())
    }

    fn lipschitz_bound(&self, radius: f64) -> f64 {
        2.0 * radius
    }

    fn kernel_mass(&self, window: TimeWindow) -> f64 {
        window.length
    }

    fn delay_floor(&self) -> Option<f64> {
        (self.lambda > 0.0).then_some(self.lambda)
    }
}

/// `sec² t`, the solution for `λ = 0`.
pub fn secant_squared(t: f64) -> f64 {
    1.0 / t.cos().powi(2)
}

/// The first three pieces of the delayed solution:
/// `0` on `[0, λ)`, `1` on `[λ, 2λ)` and `(t − 2λ)² + 1` on `[2λ, 3λ)`.
pub fn three_piece(lambda: f64, t: f64) -> Option<f64> {
    if t < lambda {
        Some(0.0)
    } else if t < 2.0 * lambda {
        Some(1.0)
    } else if t < 3.0 * lambda {
        Some((t - 2.0 * lambda).powi(2) + 1.0)
    } else {
        None
    }
}

type Poly = Vec<f64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(p: &Poly, x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Exact solution for `λ > 0` by the method of steps.
///
/// On `[kλ, (k+1)λ)` write `σ = t − kλ`. Then `y_k(σ) = Z_{k−1}(σ)² + 1`
/// and `Z_k(σ) = Z_{k−1}(λ) + ∫₀^σ y_k`, with `y_0 = Z_0 = 0`. Each piece is
/// a polynomial in `σ`.
#[derive(Debug, Clone)]
pub struct StepsSolution {
    lambda: f64,
    pieces: Vec<Poly>,
}

impl StepsSolution {
    /// Pieces covering `[0, horizon]`; `None` when the polynomial degree
    /// would exceed `max_degree`.
    pub fn new(lambda: f64, horizon: f64, max_degree: usize) -> Option<Self> {
        assert!(lambda > 0.0);
        let count = (horizon / lambda).floor() as usize + 1;
        let mut pieces = vec![Vec::new()];
        let mut z: Poly = Vec::new();
        for _ in 1..count {
            let mut y = poly_mul(&z, &z);
            if y.is_empty() {
                y.push(0.0);
            }
            y[0] += 1.0;
            if y.len() > max_degree + 1 {
                return None;
            }
            let start = poly_eval(&z, lambda);
            let mut next = vec![start];
            next.extend(y.iter().enumerate().map(|(i, c)| c / (i + 1) as f64));
            pieces.push(y);
            z = next;
        }
        Some(Self { lambda, pieces })
    }

    pub fn value(&self, t: f64) -> Option<f64> {
        if t < 0.0 {
            return None;
        }
        let k = (t / self.lambda).floor() as usize;
        let piece = self.pieces.get(k)?;
        Some(poly_eval(piece, t - k as f64 * self.lambda))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_solution_matches_hand_pieces() {
        let sol = StepsSolution::new(0.5, std::f64::consts::PI, 512).unwrap();
        for t in [0.1, 0.49, 0.5, 0.9, 1.0, 1.2, 1.49] {
            let expect = three_piece(0.5, t).unwrap();
            assert!((sol.value(t).unwrap() - expect).abs() < 1e-14, "{t}");
        }
        assert!((sol.value(1.2).unwrap() - 1.04).abs() < 1e-14);
        // [1.5, 2): Z(t - 0.5) = 0.5 + σ + σ³/3 with σ = t − 1.5
        let s: f64 = 0.25;
        let z = 0.5 + s + s.powi(3) / 3.0;
        assert!((sol.value(1.75).unwrap() - (z * z + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn discrete_operator_reproduces_secant_fixed_point() {
        let h = 1e-3;
        let grid = crate::volterra::TimeGrid::covering(0.0, 1.0, h).unwrap();
        let y = Trajectory::from_fn(&grid, 1, |t, s| s[0] = secant_squared(t));
        let out = crate::volterra::apply_full(&SquaredIntegral::new(0.0), &y).unwrap();
        for j in 0..grid.nodes {
            let rel = (out.state(j)[0] - y.state(j)[0]).abs() / y.state(j)[0];
            assert!(rel < 1e-5, "{j}: {rel}");
        }
    }
}
