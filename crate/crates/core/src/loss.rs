//! Training objective over predicted points: Chamfer alignment, repulsion
//! (inverse mean pairwise distance) and an airfoil-interior penalty, each
//! with its analytic gradient per predicted point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AirfoilLoop, Point2, PointSet};

pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub chamfer: f64,
    pub repulsion: f64,
    pub interior: f64,
    /// Added under the square root of every distinct pair distance in the repulsion term.
    pub epsilon: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            chamfer: 1.0,
            repulsion: 0.0,
            interior: 0.0,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl LossWeights {
    pub fn new(chamfer: f64, repulsion: f64, interior: f64) -> Self {
        LossWeights {
            chamfer,
            repulsion,
            interior,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.chamfer, self.repulsion, self.interior];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!(
                "loss weights must be finite and non-negative: {self:?}"
            )));
        }
        if ws.iter().all(|&w| w == 0.0) {
            return Err(Error::Config(
                "at least one loss weight must be positive".into(),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// A loss value with its gradient per predicted point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointLoss {
    pub value: f64,
    pub grad: Vec<Point2>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    pub chamfer: f64,
    pub repulsion: f64,
    pub interior: f64,
    pub total: f64,
    pub grad: Vec<Point2>,
}

impl LossBreakdown {
    /// Gradient interleaved as `[dx0, dy0, dx1, dy1, ...]`.
    pub fn flat_grad(&self) -> Vec<f64> {
        self.grad.iter().flat_map(|g| [g.x, g.y]).collect()
    }

    pub fn is_finite(&self) -> bool {
        [self.chamfer, self.repulsion, self.interior, self.total]
            .iter()
            .all(|v| v.is_finite())
            && self.grad.iter().all(Point2::is_finite)
    }
}

/// Sum-form Chamfer distance with gradient with respect to `pred`.
///
/// Nearest-neighbour ties go to the lowest index.
pub fn chamfer(pred: &PointSet, truth: &PointSet) -> Result<PointLoss> {
    let p = pred.points();
    let g = truth.points();
    let mut row_best = vec![f64::INFINITY; p.len()];
    let mut row_arg = vec![0usize; p.len()];
    let mut col_best = vec![f64::INFINITY; g.len()];
    let mut col_arg = vec![0usize; g.len()];

    for (i, pi) in p.iter().enumerate() {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (j, gj) in g.iter().enumerate() {
            let d = pi.dist_sq(gj);
            if d < best {
                best = d;
                arg = j;
            }
            if d < col_best[j] {
                col_best[j] = d;
                col_arg[j] = i;
            }
        }
        row_best[i] = best;
        row_arg[i] = arg;
    }

    let value = row_best.iter().sum::<f64>() + col_best.iter().sum::<f64>();
    let mut grad: Vec<Point2> = p
        .iter()
        .zip(&row_arg)
        .map(|(pi, &j)| Point2::new(2.0 * (pi.x - g[j].x), 2.0 * (pi.y - g[j].y)))
        .collect();
    for (gj, &i) in g.iter().zip(&col_arg) {
        grad[i].x += 2.0 * (p[i].x - gj.x);
        grad[i].y += 2.0 * (p[i].y - gj.y);
    }
    Ok(PointLoss { value, grad })
}

/// Inverse of the mean pairwise distance over all `N^2` ordered pairs.
///
/// Self-pairs are counted with distance zero; `epsilon` is added under the
/// square root of every distinct pair.
pub fn repulsion(pred: &PointSet, epsilon: f64) -> Result<PointLoss> {
    let p = pred.points();
    let n = p.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "repulsion needs at least 2 points, got {n}"
        )));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let nf = n as f64;
    let mut pair_sum = 0.0;
    // d(sum over ordered pairs)/d p_i, before the 1/N^2 factor
    let mut d_sum = vec![Point2::default(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = p[i].x - p[j].x;
            let dy = p[i].y - p[j].y;
            let s = (dx * dx + dy * dy + epsilon).sqrt();
            pair_sum += s;
            let (gx, gy) = (2.0 * dx / s, 2.0 * dy / s);
            d_sum[i].x += gx;
            d_sum[i].y += gy;
            d_sum[j].x -= gx;
            d_sum[j].y -= gy;
        }
    }
    let mean = 2.0 * pair_sum / (nf * nf);
    let value = 1.0 / mean;
    let k = -1.0 / (mean * mean * nf * nf);
    let grad = d_sum
        .into_iter()
        .map(|g| Point2::new(k * g.x, k * g.y))
        .collect();
    Ok(PointLoss { value, grad })
}

/// Mean squared distance-to-boundary over points strictly inside the loop,
/// normalised by the total number of predicted points.
pub fn interior_penalty(pred: &PointSet, boundary: &AirfoilLoop) -> PointLoss {
    let nf = pred.len() as f64;
    let mut value = 0.0;
    let grad = pred
        .points()
        .iter()
        .map(|&p| {
            if !boundary.contains(p) {
                return Point2::default();
            }
            let c = boundary.nearest_boundary_point(p);
            value += p.dist_sq(&c) / nf;
            Point2::new(2.0 * (p.x - c.x) / nf, 2.0 * (p.y - c.y) / nf)
        })
        .collect();
    PointLoss { value, grad }
}

/// Weighted sum of all three terms and its gradient.
pub fn composite(
    pred: &PointSet,
    truth: &PointSet,
    boundary: &AirfoilLoop,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    weights.validate()?;
    if pred.frame() != truth.frame() || pred.frame() != boundary.frame() {
        return Err(Error::FrameMismatch {
            expected: pred.frame(),
            found: if pred.frame() != truth.frame() {
                truth.frame()
            } else {
                boundary.frame()
            },
        });
    }
    let c = chamfer(pred, truth)?;
    let r = repulsion(pred, weights.epsilon)?;
    let i = interior_penalty(pred, boundary);

    let total =
        weights.chamfer * c.value + weights.repulsion * r.value + weights.interior * i.value;
    let grad = c
        .grad
        .iter()
        .zip(&r.grad)
        .zip(&i.grad)
        .map(|((gc, gr), gi)| {
            Point2::new(
                weights.chamfer * gc.x + weights.repulsion * gr.x + weights.interior * gi.x,
                weights.chamfer * gc.y + weights.repulsion * gr.y + weights.interior * gi.y,
            )
        })
        .collect();
    Ok(LossBreakdown {
        chamfer: c.value,
        repulsion: r.value,
        interior: i.value,
        total,
        grad,
    })
}

/// Mean Euclidean distance over distinct pairs; 0 for a single point.
pub fn mean_pairwise_distance(ps: &PointSet) -> f64 {
    let p = ps.points();
    let n = p.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += p[i].dist(&p[j]);
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointSet;

    fn ps(xy: &[(f64, f64)]) -> PointSet {
        PointSet::from_xy(xy).unwrap()
    }

    #[test]
    fn chamfer_identical_sets() {
        let a = ps(&[(0.0, 0.0), (1.0, 2.0), (-3.0, 0.5)]);
        let c = chamfer(&a, &a).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(c.grad.iter().all(|g| *g == Point2::default()));
    }

    #[test]
    fn chamfer_single_pair() {
        let c = chamfer(&ps(&[(0.0, 0.0)]), &ps(&[(1.0, 0.0)])).unwrap();
        assert_eq!(c.value, 2.0);
        assert_eq!(c.grad, vec![Point2::new(-4.0, 0.0)]);
    }

    #[test]
    fn chamfer_tie_goes_to_lowest_index() {
        // both predictions are equidistant from the single truth point
        let c = chamfer(&ps(&[(-1.0, 0.0), (1.0, 0.0)]), &ps(&[(0.0, 0.0)])).unwrap();
        assert_eq!(c.value, 3.0);
        assert_eq!(c.grad[0], Point2::new(-4.0, 0.0));
        assert_eq!(c.grad[1], Point2::new(2.0, 0.0));
    }

    #[test]
    fn repulsion_two_points() {
        for d in [0.1, 1.0, 10.0] {
            let r = repulsion(&ps(&[(0.0, 0.0), (d, 0.0)]), 1e-12).unwrap();
            assert!(((r.value - 2.0 / d) / (2.0 / d)).abs() < 1e-6);
        }
    }

    #[test]
    fn repulsion_coincident_points_stay_finite() {
        // 20 distinct ordered pairs at sqrt(eps) = 1e-6 over 25
        let r = repulsion(&ps(&[(0.3, 0.3); 5]), 1e-12).unwrap();
        assert!((r.value - 1.25e6).abs() / 1.25e6 < 1e-9);
        assert!(r.grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn repulsion_rejects_single_point() {
        assert!(repulsion(&ps(&[(0.0, 0.0)]), 1e-8).is_err());
        assert!(repulsion(&ps(&[(0.0, 0.0), (1.0, 0.0)]), 0.0).is_err());
    }

    #[test]
    fn repulsion_scaling_halves_value() {
        let a = ps(&[(0.0, 0.0), (1.0, 0.5), (-0.3, 2.0), (0.7, -1.1)]);
        let b = PointSet::new(
            a.points()
                .iter()
                .map(|p| Point2::new(2.0 * p.x, 2.0 * p.y))
                .collect(),
        )
        .unwrap();
        let ra = repulsion(&a, 1e-14).unwrap().value;
        let rb = repulsion(&b, 1e-14).unwrap().value;
        assert!((rb - ra / 2.0).abs() < 1e-9);
    }

    fn square_loop() -> AirfoilLoop {
        AirfoilLoop::new(ps(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])).unwrap()
    }

    #[test]
    fn interior_penalty_inactive_outside() {
        let p = ps(&[(2.0, 0.5), (-1.0, -1.0), (0.5, 0.0)]);
        let r = interior_penalty(&p, &square_loop());
        assert_eq!(r.value, 0.0);
        assert!(r.grad.iter().all(|g| *g == Point2::default()));
    }

    #[test]
    fn interior_penalty_single_depth() {
        // (0.5, 0.2) sits 0.2 from the bottom edge
        let p = ps(&[(0.5, 0.2), (3.0, 3.0), (4.0, 4.0), (5.0, 5.0)]);
        let r = interior_penalty(&p, &square_loop());
        assert!((r.value - 0.04 / 4.0).abs() < 1e-15);
        assert!((r.grad[0].x).abs() < 1e-15);
        assert!((r.grad[0].y - 2.0 * 0.2 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn composite_projection() {
        let p = ps(&[(0.0, 0.0), (0.5, 1.5), (2.0, 2.0)]);
        let g = ps(&[(0.1, 0.0), (2.0, 1.0)]);
        let lp = square_loop();
        let b = composite(&p, &g, &lp, &LossWeights::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(b.total, b.chamfer);
        assert_eq!(b.grad, chamfer(&p, &g).unwrap().grad);
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::new(0.0, 0.0, 0.0).validate().is_err());
        assert!(LossWeights::new(1.0, -1.0, 0.0).validate().is_err());
        let mut w = LossWeights::new(1.0, 0.0, 0.0);
        w.epsilon = 0.0;
        assert!(w.validate().is_err());
    }

    #[test]
    fn mean_pairwise() {
        let p = ps(&[(0.0, 0.0), (3.0, 4.0), (0.0, 4.0)]);
        assert!((mean_pairwise_distance(&p) - (5.0 + 4.0 + 3.0) / 3.0).abs() < 1e-15);
    }
}
