use super::ModelError;

/// Weighting used along each axis of a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    /// Composite trapezoid: end points carry half weight.
    #[default]
    Trapezoid,
    /// Every point carries the full spacing.
    Uniform,
}

/// Quadrature nodes and weights on the spatial domain `Ω ⊂ Rᵐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    dimension: usize,
    /// Flattened coordinates, `dimension` entries per point.
    points: Vec<f64>,
    weights: Vec<f64>,
    truncation_radius: Option<f64>,
}

fn axis(lo: f64, hi: f64, count: usize, rule: QuadratureRule) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(ModelError::InvalidParameter(format!("grid interval [{lo}, {hi}] is empty")));
    }
    if count < 2 {
        return Err(ModelError::InvalidParameter("grid axis needs at least two points".into()));
    }
    let h = (hi - lo) / (count - 1) as f64;
    // symmetric placement so that even kernels integrate symmetrically
    let coords = (0..count)
        .map(|i| {
            if 2 * i < count {
                lo + i as f64 * h
            } else {
                hi - (count - 1 - i) as f64 * h
            }
        })
        .collect();
    let weights = (0..count)
        .map(|i| match rule {
            QuadratureRule::Trapezoid if i == 0 || i == count - 1 => 0.5 * h,
            _ => h,
        })
        .collect();
    Ok((coords, weights))
}

impl SpatialGrid {
    pub fn from_parts(
        dimension: usize,
        points: Vec<f64>,
        weights: Vec<f64>,
        truncation_radius: Option<f64>,
    ) -> Result<Self, ModelError> {
        if dimension == 0 {
            return Err(ModelError::InvalidParameter("grid dimension must be positive".into()));
        }
        if points.len() != dimension * weights.len() || weights.is_empty() {
            return Err(ModelError::Dimension(format!(
                "{} coordinates do not match {} weights in dimension {dimension}",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(ModelError::InvalidParameter(format!("quadrature weight {w} is not positive")));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::InvalidParameter("grid coordinates must be finite".into()));
        }
        if let Some(r) = truncation_radius {
            if !(r > 0.0) {
                return Err(ModelError::InvalidParameter(format!("truncation radius {r} must be positive")));
            }
        }
        Ok(Self {
            dimension,
            points,
            weights,
            truncation_radius,
        })
    }

    /// `count` equally spaced points on `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64, count: usize, rule: QuadratureRule) -> Result<Self, ModelError> {
        let (points, weights) = axis(lo, hi, count, rule)?;
        Self::from_parts(1, points, weights, None)
    }

    /// The real line truncated to `[-radius, radius]`.
    pub fn truncated_line(radius: f64, count: usize, rule: QuadratureRule) -> Result<Self, ModelError> {
        let (points, weights) = axis(-radius, radius, count, rule)?;
        Self::from_parts(1, points, weights, Some(radius))
    }

    /// Tensor product of uniform axes `(lo, hi, count)`.
    pub fn tensor(axes: &[(f64, f64, usize)], rule: QuadratureRule) -> Result<Self, ModelError> {
        if axes.is_empty() {
            return Err(ModelError::InvalidParameter("tensor grid needs at least one axis".into()));
        }
        let built = axes
            .iter()
            .map(|&(lo, hi, n)| axis(lo, hi, n, rule))
            .collect::<Result<Vec<_>, _>>()?;
        let total: usize = built.iter().map(|(c, _)| c.len()).product();
        let mut points = Vec::with_capacity(total * axes.len());
        let mut weights = Vec::with_capacity(total);
        let mut index = vec![0usize; axes.len()];
        for _ in 0..total {
            let mut w = 1.0;
            for (d, (coords, ws)) in built.iter().enumerate() {
                points.push(coords[index[d]]);
                w *= ws[index[d]];
            }
            weights.push(w);
            for d in (0..axes.len()).rev() {
                index[d] += 1;
                if index[d] < built[d].0.len() {
                    break;
                }
                index[d] = 0;
            }
        }
        Self::from_parts(axes.len(), points, weights, None)
    }

    /// Single node of unit weight; reduces the field to a delay equation.
    pub fn point() -> Self {
        Self {
            dimension: 1,
            points: vec![0.0],
            weights: vec![1.0],
            truncation_radius: None,
        }
    }

    pub fn with_truncation(mut self, radius: f64) -> Self {
        self.truncation_radius = Some(radius);
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point_at(&self, i: usize) -> &[f64] {
        &self.points[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }

    pub fn distance(&self, i: usize, k: usize) -> f64 {
        euclidean(self.point_at(i), self.point_at(k))
    }

    /// Index of the node nearest to the origin.
    pub fn center_index(&self) -> usize {
        (0..self.len())
            .min_by(|&a, &b| norm(self.point_at(a)).total_cmp(&norm(self.point_at(b))))
            .unwrap_or(0)
    }

    /// Nodes lying on the outer boundary of the truncated domain.
    pub fn boundary_indices(&self) -> Vec<usize> {
        let outer = (0..self.len()).map(|i| norm(self.point_at(i))).fold(0.0, f64::max);
        (0..self.len())
            .filter(|&i| norm(self.point_at(i)) >= outer * (1.0 - 1e-9))
            .collect()
    }
}

pub(crate) fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_weights_integrate_constants_exactly() {
        let g = SpatialGrid::interval(-1.0, 3.0, 41, QuadratureRule::Trapezoid).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 4.0).abs() < 1e-12);
        let u = SpatialGrid::interval(0.0, 1.0, 11, QuadratureRule::Uniform).unwrap();
        assert!((u.weights().iter().sum::<f64>() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn symmetric_domain_gives_mirrored_points() {
        let g = SpatialGrid::truncated_line(6.0, 121, QuadratureRule::Trapezoid).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.point_at(i)[0], -g.point_at(g.len() - 1 - i)[0]);
        }
        assert_eq!(g.point_at(g.center_index())[0], 0.0);
        assert_eq!(g.boundary_indices(), vec![0, 120]);
    }

    #[test]
    fn tensor_weights_are_products() {
        let g = SpatialGrid::tensor(&[(0.0, 1.0, 3), (0.0, 2.0, 5)], QuadratureRule::Trapezoid).unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g.dimension(), 2);
        assert!((g.weights().iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert_eq!(g.point_at(7), &[0.5, 1.0]);
    }

    #[test]
    fn bad_weights_are_rejected() {
        assert!(SpatialGrid::from_parts(1, vec![0.0, 1.0], vec![1.0, 0.0], None).is_err());
        assert!(SpatialGrid::from_parts(2, vec![0.0, 1.0], vec![1.0, 1.0], None).is_err());
        assert!(SpatialGrid::interval(1.0, 1.0, 5, QuadratureRule::Uniform).is_err());
    }
}
